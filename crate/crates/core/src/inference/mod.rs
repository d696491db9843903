//! Priors, the posterior kernel, random-walk Metropolis sampling and
//! posterior summaries of the risk premium coefficient `α + E(z)`.

mod chain;
mod prior;
mod risk;
mod sampler;
mod transform;

use thiserror::Error;

use crate::data::ExcessReturnSeries;
use crate::distributions::{DistributionError, MechanismKind, SkewMechanism, SkewedStudentT};
use crate::garch::{log_likelihood_with, GarchError, GarchParams, InitPolicy};

pub use chain::{ChainSummary, ParameterSummary, PosteriorChain};
pub use prior::{Prior, PriorSpec};
pub use risk::{risk_coefficients, risk_premium_summary, RiskPremiumSummary};
pub use sampler::{curvature_covariance, find_mode, rwm, Adaptation, LogDensity, RawChain, SamplerConfig};
pub use transform::ParamSpace;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid prior for {name}: {reason}")]
    Prior { name: &'static str, reason: String },
    #[error("expected a parameter vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("log posterior at the initial point is {0}; choose a different start")]
    InitialKernel(f64),
    #[error("chain has no draws")]
    EmptyChain,
    #[error("draw {index}: {reason}")]
    InvalidDraw { index: usize, reason: String },
    #[error("chain file {path}: {reason}")]
    ChainFile { path: String, reason: String },
    #[error(transparent)]
    Garch(#[from] GarchError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Posterior of one model given the data, on both parameter scales.
#[derive(Debug, Clone)]
pub struct GarchPosterior<'a> {
    y: &'a [f64],
    space: ParamSpace,
    prior: PriorSpec,
    init: InitPolicy,
    ln_norm: f64,
}

impl<'a> GarchPosterior<'a> {
    pub fn new(y: &'a ExcessReturnSeries, kind: MechanismKind, prior: PriorSpec, init: InitPolicy) -> Result<Self, InferenceError> {
        prior.validate()?;
        if y.is_empty() {
            return Err(GarchError::Empty.into());
        }
        if let InitPolicy::SampleVariance = init {
            let v = crate::stats::variance(y.values());
            if !(v > 0.0 && v.is_finite()) {
                return Err(GarchError::BadInitialVariance(v).into());
            }
        }
        let ln_norm = prior.ln_normalizer()?;
        Ok(Self {
            y: y.values(),
            space: ParamSpace::new(kind),
            prior,
            init,
            ln_norm,
        })
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    /// Log prior + log likelihood at a constrained point; `−∞` off-support.
    pub fn ln_kernel(&self, theta: &[f64]) -> f64 {
        let Ok((p, mech)) = self.space.split(theta) else {
            return f64::NEG_INFINITY;
        };
        self.ln_kernel_at(&p, &mech)
    }

    pub fn ln_kernel_at(&self, p: &GarchParams, mech: &SkewMechanism) -> f64 {
        if p.validate(self.prior.stationary).is_err() {
            return f64::NEG_INFINITY;
        }
        let lp = self.prior.ln_density(p, mech, self.ln_norm);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        let Ok(dist) = SkewedStudentT::new(p.nu, *mech) else {
            return f64::NEG_INFINITY;
        };
        match log_likelihood_with(self.y, p, &dist, self.init) {
            Ok(ll) if !ll.is_nan() => lp + ll,
            _ => f64::NEG_INFINITY,
        }
    }
}

impl LogDensity for GarchPosterior<'_> {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Kernel on the unconstrained scale, Jacobian included.
    fn ln_density(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let Ok(theta) = self.space.to_constrained(x) else {
            return f64::NEG_INFINITY;
        };
        let k = self.ln_kernel(&theta);
        if k.is_finite() {
            k + self.space.ln_jacobian(x)
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// `ln p(θ, η) + ln p(y | θ, η)` with the default `h₁` policy.
pub fn log_posterior_kernel(y: &ExcessReturnSeries, params: &GarchParams, mech: &SkewMechanism, prior: &PriorSpec) -> f64 {
    match GarchPosterior::new(y, mech.kind(), prior.clone(), InitPolicy::default()) {
        Ok(post) => post.ln_kernel_at(params, mech),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Random-walk Metropolis on the posterior of `kind`, started at the prior
/// centre with the default `h₁` policy.
pub fn rwm_sample(
    y: &ExcessReturnSeries,
    kind: MechanismKind,
    prior: &PriorSpec,
    config: &SamplerConfig,
) -> Result<PosteriorChain, InferenceError> {
    rwm_sample_from(y, kind, prior, config, InitPolicy::default(), None)
}

/// As [`rwm_sample`] with an explicit `h₁` policy and optional constrained
/// starting point.
pub fn rwm_sample_from(
    y: &ExcessReturnSeries,
    kind: MechanismKind,
    prior: &PriorSpec,
    config: &SamplerConfig,
    init: InitPolicy,
    start: Option<&[f64]>,
) -> Result<PosteriorChain, InferenceError> {
    let post = GarchPosterior::new(y, kind, prior.clone(), init)?;
    let space = *post.space();
    let x0 = match start {
        Some(theta) => space.to_unconstrained(theta)?,
        None => space.prior_center(prior),
    };
    let raw = rwm(&post, &x0, config)?;
    let mut draws = Vec::with_capacity(raw.draws.len());
    let mut log_posterior = Vec::with_capacity(raw.draws.len());
    for (x, ld) in raw.draws.iter().zip(&raw.ln_density) {
        draws.push(space.to_constrained(x)?);
        log_posterior.push(ld - space.ln_jacobian(x));
    }
    Ok(PosteriorChain {
        mechanism: kind,
        names: space.names(),
        draws,
        log_posterior,
        acceptance_rate: raw.acceptance_rate,
        burn_in_acceptance_rate: raw.burn_in_acceptance_rate,
        seed: config.seed,
        iterations: config.iterations,
        burn_in: config.burn_in,
        thinning: config.thinning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garch::{log_likelihood, simulate};

    fn data() -> ExcessReturnSeries {
        let p = GarchParams::new(0.1, 0.05, 0.08, 0.9, 8.0).unwrap();
        simulate(&p, &SkewMechanism::HiddenTruncation { gamma: 1.0 }, 300, 4, InitPolicy::Unconditional).unwrap()
    }

    fn flat() -> PriorSpec {
        let u = |lower, upper| Prior::Uniform { lower, upper };
        PriorSpec {
            alpha: u(-10.0, 10.0),
            alpha0: u(0.0, 100.0),
            alpha1: u(0.0, 10.0),
            beta1: u(0.0, 10.0),
            nu_minus_one: u(0.0, 100.0),
            gamma2: u(-10.0, 10.0),
            ..PriorSpec::default()
        }
    }

    #[test]
    fn flat_prior_kernel_is_shifted_likelihood() {
        let y = data();
        let prior = flat();
        let pts = [
            (GarchParams::new(0.1, 0.05, 0.08, 0.9, 8.0).unwrap(), SkewMechanism::HiddenTruncation { gamma: 1.0 }),
            (GarchParams::new(-0.3, 0.5, 0.2, 0.3, 3.0).unwrap(), SkewMechanism::HiddenTruncation { gamma: -2.0 }),
            (GarchParams::new(0.0, 1.5, 0.0, 0.0, 40.0).unwrap(), SkewMechanism::HiddenTruncation { gamma: 0.0 }),
        ];
        let diffs: Vec<f64> = pts
            .iter()
            .map(|(p, m)| log_posterior_kernel(&y, p, m, &prior) - log_likelihood(&y, p, m, InitPolicy::default()).unwrap())
            .collect();
        for d in &diffs {
            assert!((d - diffs[0]).abs() < 1e-9, "{diffs:?}");
        }
    }

    #[test]
    fn off_support_is_minus_infinity() {
        let y = data();
        let p = GarchParams {
            alpha: 0.0,
            alpha0: -1.0,
            alpha1: 0.1,
            beta1: 0.8,
            nu: 5.0,
        };
        let k = log_posterior_kernel(&y, &p, &SkewMechanism::Symmetric, &PriorSpec::default());
        assert_eq!(k, f64::NEG_INFINITY);
        let q = GarchParams { alpha0: 0.1, ..p };
        let stationary = PriorSpec {
            stationary: true,
            ..PriorSpec::default()
        };
        let explosive = GarchParams { alpha1: 0.5, beta1: 0.6, ..q };
        assert_eq!(log_posterior_kernel(&y, &explosive, &SkewMechanism::Symmetric, &stationary), f64::NEG_INFINITY);
        assert!(log_posterior_kernel(&y, &q, &SkewMechanism::Symmetric, &stationary).is_finite());
    }

    #[test]
    fn symmetric_prob_positive_is_fraction_of_positive_alpha() {
        let y = data();
        let cfg = SamplerConfig {
            iterations: 1500,
            burn_in: 500,
            seed: 9,
            ..SamplerConfig::default()
        };
        let chain = rwm_sample(&y, MechanismKind::Symmetric, &PriorSpec::default(), &cfg).unwrap();
        let s = risk_premium_summary(&chain, &SkewMechanism::Symmetric).unwrap();
        let frac = chain.draws.iter().filter(|d| d[0] > 0.0).count() as f64 / chain.len() as f64;
        assert_eq!(s.prob_positive, frac);
        for d in &chain.draws {
            let (p, m) = ParamSpace::new(MechanismKind::Symmetric).split(d).unwrap();
            assert!(p.validate(false).is_ok() && m.validate().is_ok());
        }
    }

    #[test]
    fn counting_and_constant_chains() {
        let s = RiskPremiumSummary::from_values(&[-1.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.prob_positive, 0.75);
        let chain = PosteriorChain {
            mechanism: MechanismKind::Symmetric,
            names: ParamSpace::new(MechanismKind::Symmetric).names(),
            draws: vec![vec![1.0, 0.1, 0.1, 0.8, 5.0]; 10],
            log_posterior: vec![0.0; 10],
            acceptance_rate: 0.0,
            burn_in_acceptance_rate: 0.0,
            seed: 0,
            iterations: 10,
            burn_in: 0,
            thinning: 1,
        };
        assert_eq!(risk_premium_summary(&chain, &SkewMechanism::Symmetric).unwrap().prob_positive, 1.0);
        let mut bad = chain.clone();
        bad.draws[3][4] = 1.0;
        assert!(matches!(
            risk_premium_summary(&bad, &SkewMechanism::Symmetric),
            Err(InferenceError::InvalidDraw { index: 3, .. })
        ));
    }

    #[test]
    fn chain_csv_round_trip() {
        let y = data();
        let cfg = SamplerConfig {
            iterations: 300,
            burn_in: 100,
            seed: 1,
            find_mode: false,
            ..SamplerConfig::default()
        };
        let chain = rwm_sample(&y, MechanismKind::BetaTwo, &PriorSpec::default(), &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.csv");
        std::fs::write(&path, format!("# comment\n{}", chain.to_csv_string())).unwrap();
        let back = PosteriorChain::read_csv(&path, MechanismKind::BetaTwo).unwrap();
        assert_eq!(back.draws, chain.draws);
        assert_eq!(back.log_posterior, chain.log_posterior);
    }
}
