//! Marginal data densities and posterior model probabilities.
//!
//! Evidence is reported as decimal logarithms; everything internal works
//! with natural logs and converts at the boundary.

use std::f64::consts::{LN_10, PI};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::ExcessReturnSeries;
use crate::distributions::MechanismKind;
use crate::garch::InitPolicy;
use crate::inference::{GarchPosterior, InferenceError, LogDensity, ParamSpace, PosteriorChain, PriorSpec};
use crate::special::ln_gamma;
use crate::stats;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("bridge sampling did not converge after {iterations} iterations (last change in ln r {change:e})")]
    NonConvergence { iterations: usize, change: f64 },
    #[error("need at least {needed} posterior draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },
    #[error("posterior draws have a singular covariance; cannot fit a proposal")]
    SingularCovariance,
    #[error("no finite log density among the {0} evaluation points")]
    Degenerate(&'static str),
    #[error("evidence list is empty")]
    Empty,
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("prior model probabilities must be nonnegative and sum to 1, got {0:?}")]
    BadPriorProbs(Vec<f64>),
    #[error("log10 marginal for {0} is not finite")]
    NonFiniteEvidence(String),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceMethod {
    /// Meng–Wong bridge sampling with a moment-matched Gaussian.
    #[default]
    Bridge,
    /// Importance sampling from a moment-matched multivariate t.
    ImportanceSampling,
}

impl EvidenceMethod {
    pub fn tag(self) -> &'static str {
        match self {
            EvidenceMethod::Bridge => "bridge_sampling",
            EvidenceMethod::ImportanceSampling => "importance_sampling",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvidenceConfig {
    pub method: EvidenceMethod,
    /// Switch to importance sampling when bridge sampling fails; the
    /// estimator tag records the switch.
    pub fallback: bool,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Proposal draws for importance sampling (0: as many as posterior draws).
    pub is_draws: usize,
    pub t_df: f64,
}

impl Default for EvidenceConfig {
    fn default() -> Self {
        Self {
            method: EvidenceMethod::Bridge,
            fallback: true,
            seed: 0,
            max_iterations: 1000,
            tolerance: 1e-10,
            is_draws: 0,
            t_df: 4.0,
        }
    }
}

/// A natural-log evidence estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LnEvidence {
    pub ln_marginal: f64,
    /// Standard error of `ln_marginal`.
    pub ln_se: f64,
    pub estimator: String,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvidence {
    pub model_id: MechanismKind,
    pub log10_marginal: f64,
    pub estimator: String,
    pub mc_se: f64,
}

impl ModelEvidence {
    pub fn from_ln(model_id: MechanismKind, e: &LnEvidence) -> Self {
        Self {
            model_id,
            log10_marginal: e.ln_marginal / LN_10,
            estimator: e.estimator.clone(),
            mc_se: e.ln_se / LN_10,
        }
    }
}

struct Gaussian {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    ln_norm: f64,
}

impl Gaussian {
    fn fit(draws: &[Vec<f64>], inflate: f64) -> Result<Self, SelectionError> {
        let d = draws[0].len();
        let n = draws.len() as f64;
        let mut mean = DVector::zeros(d);
        for x in draws {
            mean += DVector::from_column_slice(x);
        }
        mean /= n;
        let mut cov = DMatrix::zeros(d, d);
        for x in draws {
            let c = DVector::from_column_slice(x) - &mean;
            cov += &c * c.transpose();
        }
        cov *= inflate / (n - 1.0);
        let chol = cov.cholesky().ok_or(SelectionError::SingularCovariance)?.l();
        let ln_det: f64 = chol.diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        if !ln_det.is_finite() {
            return Err(SelectionError::SingularCovariance);
        }
        Ok(Self {
            mean,
            chol,
            ln_norm: -0.5 * (d as f64 * (2.0 * PI).ln() + ln_det),
        })
    }

    // squared Mahalanobis distance
    fn mahalanobis(&self, x: &[f64]) -> f64 {
        let c = DVector::from_column_slice(x) - &self.mean;
        let z = self.chol.solve_lower_triangular(&c).expect("nonsingular factor");
        z.norm_squared()
    }

    fn ln_pdf(&self, x: &[f64]) -> f64 {
        self.ln_norm - 0.5 * self.mahalanobis(x)
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.mean + &self.chol * z).iter().copied().collect()
    }
}

/// Bridge sampling estimate of `ln ∫ q(x) dx`.
///
/// `draws` are posterior draws on the sampler's scale with `ln_q` the
/// matching values of `target`. The first half fits a Gaussian proposal;
/// the second half and an equal number of proposal draws enter the
/// Meng–Wong iteration. The standard error uses the relative mean squared
/// error of the two sample averages, with the posterior-side term inflated
/// by its integrated autocorrelation time.
pub fn bridge_sampling<T: LogDensity + ?Sized>(
    target: &T,
    draws: &[Vec<f64>],
    ln_q: &[f64],
    config: &EvidenceConfig,
) -> Result<LnEvidence, SelectionError> {
    check_draws(draws, ln_q, 4)?;
    let half = draws.len() / 2;
    let g = Gaussian::fit(&draws[..half], 1.0)?;
    let post = &draws[half..];
    let l1: Vec<f64> = post.iter().zip(&ln_q[half..]).map(|(x, q)| q - g.ln_pdf(x)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n1 = l1.len();
    let n2 = n1;
    let l2: Vec<f64> = (0..n2)
        .map(|_| {
            let x = g.draw(&mut rng);
            target.ln_density(&x) - g.ln_pdf(&x)
        })
        .collect();

    let mut finite: Vec<f64> = l1.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(SelectionError::Degenerate("posterior"));
    }
    finite.sort_by(f64::total_cmp);
    let lstar = stats::quantile_sorted(&finite, 0.5);
    let s1 = n1 as f64 / (n1 + n2) as f64;
    let s2 = n2 as f64 / (n1 + n2) as f64;
    // f1 over proposal draws, f2 over posterior draws, for a given r
    let f1 = |l: f64, r: f64| 1.0 / (s1 + s2 * r * (lstar - l).exp());
    let f2 = |l: f64, r: f64| 1.0 / (s1 * (l - lstar).exp() + s2 * r);

    let mut r: f64 = 1.0;
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let num = l2.iter().map(|l| f1(*l, r)).sum::<f64>() / n2 as f64;
        let den = l1.iter().map(|l| f2(*l, r)).sum::<f64>() / n1 as f64;
        let next = num / den;
        if !(next.is_finite() && next > 0.0) {
            return Err(SelectionError::Degenerate("bridge"));
        }
        change = (next.ln() - r.ln()).abs();
        r = next;
        if change < config.tolerance {
            break;
        }
    }
    if change >= config.tolerance {
        return Err(SelectionError::NonConvergence { iterations, change });
    }

    let a: Vec<f64> = l2.iter().map(|l| f1(*l, r)).collect();
    let b: Vec<f64> = l1.iter().map(|l| f2(*l, r)).collect();
    let (ma, mb) = (stats::mean(&a), stats::mean(&b));
    let re2 = stats::variance(&a) / (n2 as f64 * ma * ma)
        + stats::integrated_autocorr_time(&b) * stats::variance(&b) / (n1 as f64 * mb * mb);
    Ok(LnEvidence {
        ln_marginal: r.ln() + lstar,
        ln_se: re2.sqrt(),
        estimator: EvidenceMethod::Bridge.tag().to_string(),
        iterations,
    })
}

/// Importance sampling estimate of `ln ∫ q(x) dx` with a multivariate t
/// proposal whose covariance matches the posterior draws.
pub fn importance_sampling<T: LogDensity + ?Sized>(
    target: &T,
    draws: &[Vec<f64>],
    config: &EvidenceConfig,
) -> Result<LnEvidence, SelectionError> {
    let placeholder = vec![0.0; draws.len()];
    check_draws(draws, &placeholder, 2)?;
    let df = config.t_df;
    let d = draws[0].len() as f64;
    // scale matrix S with S df/(df−2) equal to the sample covariance
    let g = Gaussian::fit(draws, if df > 2.0 { (df - 2.0) / df } else { 1.0 })?;
    let ln_det = -2.0 * g.ln_norm - d * (2.0 * PI).ln();
    let ln_t_norm = ln_gamma(0.5 * (df + d)) - ln_gamma(0.5 * df) - 0.5 * d * (df * PI).ln() - 0.5 * ln_det;
    let chi = ChiSquared::new(df).map_err(|_| SelectionError::Degenerate("proposal"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = if config.is_draws == 0 { draws.len() } else { config.is_draws };
    let w: Vec<f64> = (0..n)
        .map(|_| {
            let z = g.draw(&mut rng);
            let s = (rng.sample(chi) / df).sqrt();
            let x: Vec<f64> = z.iter().zip(g.mean.iter()).map(|(zi, m)| m + (zi - m) / s).collect();
            let ln_g = ln_t_norm - 0.5 * (df + d) * (g.mahalanobis(&x) / df).ln_1p();
            target.ln_density(&x) - ln_g
        })
        .collect();
    let lse = stats::log_sum_exp(&w);
    if !lse.is_finite() {
        return Err(SelectionError::Degenerate("importance"));
    }
    let m = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = w.iter().map(|v| (v - m).exp()).collect();
    let re = stats::std_dev(&scaled) / (stats::mean(&scaled) * (n as f64).sqrt());
    Ok(LnEvidence {
        ln_marginal: lse - (n as f64).ln(),
        ln_se: re,
        estimator: EvidenceMethod::ImportanceSampling.tag().to_string(),
        iterations: n,
    })
}

fn check_draws(draws: &[Vec<f64>], ln_q: &[f64], needed: usize) -> Result<(), SelectionError> {
    if draws.len() < needed {
        return Err(SelectionError::TooFewDraws {
            needed,
            got: draws.len(),
        });
    }
    if ln_q.len() != draws.len() {
        return Err(SelectionError::LengthMismatch {
            what: "log densities",
            expected: draws.len(),
            got: ln_q.len(),
        });
    }
    Ok(())
}

/// Runs the configured estimator, falling back to importance sampling
/// when allowed.
pub fn estimate_ln_marginal<T: LogDensity + ?Sized>(
    target: &T,
    draws: &[Vec<f64>],
    ln_q: &[f64],
    config: &EvidenceConfig,
) -> Result<LnEvidence, SelectionError> {
    match config.method {
        EvidenceMethod::ImportanceSampling => importance_sampling(target, draws, config),
        EvidenceMethod::Bridge => match bridge_sampling(target, draws, ln_q, config) {
            Ok(e) => Ok(e),
            Err(err) if config.fallback && !matches!(err, SelectionError::TooFewDraws { .. }) => {
                let mut e = importance_sampling(target, draws, config)?;
                e.estimator = format!("{} (fallback: {err})", e.estimator);
                Ok(e)
            }
            Err(err) => Err(err),
        },
    }
}

/// log₁₀ p(y | M) for a GARCH-M model from its posterior chain.
pub fn estimate_log_marginal(
    y: &ExcessReturnSeries,
    kind: MechanismKind,
    prior: &PriorSpec,
    chain: &PosteriorChain,
    init: InitPolicy,
    config: &EvidenceConfig,
) -> Result<ModelEvidence, SelectionError> {
    if chain.mechanism != kind {
        return Err(InferenceError::InvalidConfig(format!("chain is for {} not {kind}", chain.mechanism)).into());
    }
    let post = GarchPosterior::new(y, kind, prior.clone(), init)?;
    let space = ParamSpace::new(kind);
    let draws = chain.unconstrained()?;
    let ln_q: Vec<f64> = draws
        .iter()
        .zip(&chain.log_posterior)
        .map(|(x, lp)| lp + space.ln_jacobian(x))
        .collect();
    let e = estimate_ln_marginal(&post, &draws, &ln_q, config)?;
    Ok(ModelEvidence::from_ln(kind, &e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub entries: Vec<ModelEvidence>,
    pub prior_probs: Vec<f64>,
    pub posterior_probs: Vec<f64>,
}

/// `P(M_i | y) ∝ prior_i 10^{L_i − max L}`, shifted by the largest
/// evidence among models with positive prior mass.
pub fn posterior_probs_from_log10(log10: &[f64], prior_probs: &[f64]) -> Result<Vec<f64>, SelectionError> {
    if log10.is_empty() {
        return Err(SelectionError::Empty);
    }
    if prior_probs.len() != log10.len() {
        return Err(SelectionError::LengthMismatch {
            what: "prior probabilities",
            expected: log10.len(),
            got: prior_probs.len(),
        });
    }
    let sum: f64 = prior_probs.iter().sum();
    if prior_probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(SelectionError::BadPriorProbs(prior_probs.to_vec()));
    }
    if let Some(i) = log10.iter().position(|l| !l.is_finite()) {
        return Err(SelectionError::NonFiniteEvidence(format!("entry {i}")));
    }
    let max = log10
        .iter()
        .zip(prior_probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log10
        .iter()
        .zip(prior_probs)
        .map(|(l, p)| if *p > 0.0 { p * ((l - max) * LN_10).exp() } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    Ok(w.iter().map(|v| v / total).collect())
}

pub fn posterior_model_probs(evidence: &[ModelEvidence], prior_probs: &[f64]) -> Result<ModelComparison, SelectionError> {
    let log10: Vec<f64> = evidence.iter().map(|e| e.log10_marginal).collect();
    let posterior_probs = posterior_probs_from_log10(&log10, prior_probs)?;
    Ok(ModelComparison {
        entries: evidence.to_vec(),
        prior_probs: prior_probs.to_vec(),
        posterior_probs,
    })
}

pub fn equal_priors(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

impl ModelComparison {
    /// Comparison restricted to models accepted by `keep`, prior
    /// probabilities renormalized. `None` if nothing is kept.
    pub fn restricted(&self, keep: impl Fn(MechanismKind) -> bool) -> Option<Result<ModelComparison, SelectionError>> {
        let idx: Vec<usize> = (0..self.entries.len()).filter(|i| keep(self.entries[*i].model_id)).collect();
        if idx.is_empty() {
            return None;
        }
        let entries: Vec<ModelEvidence> = idx.iter().map(|i| self.entries[*i].clone()).collect();
        let mass: f64 = idx.iter().map(|i| self.prior_probs[*i]).sum();
        let priors: Vec<f64> = idx.iter().map(|i| self.prior_probs[*i] / mass).collect();
        // renormalized priors can miss 1 by an ulp or two
        let s: f64 = priors.iter().sum();
        let priors: Vec<f64> = priors.iter().map(|p| p / s).collect();
        Some(posterior_model_probs(&entries, &priors))
    }

    /// Probability of model `kind`, if present.
    pub fn prob(&self, kind: MechanismKind) -> Option<f64> {
        self.entries
            .iter()
            .position(|e| e.model_id == kind)
            .map(|i| self.posterior_probs[i])
    }

    /// Models ordered by decreasing posterior probability.
    pub fn ranking(&self) -> Vec<MechanismKind> {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        idx.sort_by(|a, b| self.posterior_probs[*b].total_cmp(&self.posterior_probs[*a]));
        idx.into_iter().map(|i| self.entries[i].model_id).collect()
    }
}

/// Table-style report: one column per model (skewed models first, the
/// symmetric model last), rows for evidence, both probability rows and the
/// risk premium sign probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub models: Vec<MechanismKind>,
    pub labels: Vec<String>,
    pub log10_marginal: Vec<f64>,
    pub mc_se: Vec<f64>,
    pub estimator: Vec<String>,
    pub prior_probs: Vec<f64>,
    pub posterior_probs: Vec<f64>,
    /// Probabilities among the skewed models only (`None` for the symmetric
    /// model or when no skewed model is present).
    pub posterior_probs_skewed: Vec<Option<f64>>,
    pub prob_positive: Vec<Option<f64>>,
}

impl ComparisonReport {
    pub fn new(comparison: &ModelComparison, prob_positive: &[Option<f64>]) -> Result<Self, SelectionError> {
        let n = comparison.entries.len();
        if prob_positive.len() != n {
            return Err(SelectionError::LengthMismatch {
                what: "prob_positive",
                expected: n,
                got: prob_positive.len(),
            });
        }
        let skewed = comparison.restricted(|k| k != MechanismKind::Symmetric).transpose()?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|i| {
            let k = comparison.entries[*i].model_id;
            (k == MechanismKind::Symmetric, MechanismKind::ALL.iter().position(|m| *m == k))
        });
        let e = |i: usize| &comparison.entries[i];
        Ok(Self {
            models: order.iter().map(|i| e(*i).model_id).collect(),
            labels: order.iter().map(|i| e(*i).model_id.model_label().to_string()).collect(),
            log10_marginal: order.iter().map(|i| e(*i).log10_marginal).collect(),
            mc_se: order.iter().map(|i| e(*i).mc_se).collect(),
            estimator: order.iter().map(|i| e(*i).estimator.clone()).collect(),
            prior_probs: order.iter().map(|i| comparison.prior_probs[*i]).collect(),
            posterior_probs: order.iter().map(|i| comparison.posterior_probs[*i]).collect(),
            posterior_probs_skewed: order
                .iter()
                .map(|i| skewed.as_ref().and_then(|s| s.prob(e(*i).model_id)))
                .collect(),
            prob_positive: order.iter().map(|i| prob_positive[*i]).collect(),
        })
    }

    /// CSV with a `quantity` column followed by one column per model label.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("quantity");
        for l in &self.labels {
            let _ = write!(s, ",{l}");
        }
        s.push('\n');
        let mut row = |name: &str, vals: Vec<String>| {
            let _ = writeln!(s, "{name},{}", vals.join(","));
        };
        let fmt = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let fmt_opt = |v: &[Option<f64>]| v.iter().map(|x| x.map(|x| x.to_string()).unwrap_or_default()).collect();
        row("mechanism", self.models.iter().map(|m| m.name().to_string()).collect());
        row("log10_marginal", fmt(&self.log10_marginal));
        row("mc_se", fmt(&self.mc_se));
        row("prior_prob", fmt(&self.prior_probs));
        row("posterior_prob_all", fmt(&self.posterior_probs));
        row("posterior_prob_skewed", fmt_opt(&self.posterior_probs_skewed));
        row("prob_positive", fmt_opt(&self.prob_positive));
        row("estimator", self.estimator.iter().map(|e| format!("\"{}\"", e.replace('"', "'"))).collect());
        s
    }
}
