//! GARCH(1,1)-in-Mean observation model.
//!
//! ```text
//! y_j = [α + E(z)] √h_j + u_j,      u_j = [z_j − E(z)] √h_j
//! h_j = α₀ + α₁ u_{j−1}² + β₁ h_{j−1}
//! ```
//!
//! with `z_j` i.i.d. skewed Student-t. The conditional density of `y_j` is
//! `h_j^{−1/2} s(z_j)` where `z_j = z*_j + E(z)` and
//! `z*_j = h_j^{−1/2}(y_j − μ_j)`, `μ_j = [α + E(z)] √h_j`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, ExcessReturnSeries};
use crate::distributions::{DistributionError, SkewMechanism, SkewedStudentT};

#[derive(Debug, Error)]
pub enum GarchError {
    #[error("invalid parameter {name} = {value}: requires {rule}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("non-finite intermediate at observation {index}")]
    NonFinite { index: usize },
    #[error("initial inverse precision must be positive and finite, got {0}")]
    BadInitialVariance(f64),
    #[error("unconditional variance needs alpha1 + beta1 < 1, got {0}")]
    NotStationary(f64),
    #[error("series is empty")]
    Empty,
}

/// θ = (α, α₀, α₁, β₁, ν).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub alpha: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub nu: f64,
}

impl GarchParams {
    pub const NAMES: [&'static str; 5] = ["alpha", "alpha0", "alpha1", "beta1", "nu"];

    pub fn new(alpha: f64, alpha0: f64, alpha1: f64, beta1: f64, nu: f64) -> Result<Self, GarchError> {
        let p = Self {
            alpha,
            alpha0,
            alpha1,
            beta1,
            nu,
        };
        p.validate(false)?;
        Ok(p)
    }

    /// Checks the parameter region; with `stationary` also `α₁ + β₁ < 1`.
    pub fn validate(&self, stationary: bool) -> Result<(), GarchError> {
        let bad = |name, value, rule| Err(GarchError::InvalidParameter { name, value, rule });
        if !self.alpha.is_finite() {
            return bad("alpha", self.alpha, "finite");
        }
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return bad("alpha0", self.alpha0, "alpha0 > 0");
        }
        if !(self.alpha1.is_finite() && self.alpha1 >= 0.0) {
            return bad("alpha1", self.alpha1, "alpha1 >= 0");
        }
        if !(self.beta1.is_finite() && self.beta1 >= 0.0) {
            return bad("beta1", self.beta1, "beta1 >= 0");
        }
        if !(self.nu.is_finite() && self.nu > 1.0) {
            return bad("nu", self.nu, "nu > 1");
        }
        if stationary && self.persistence() >= 1.0 {
            return bad("alpha1 + beta1", self.persistence(), "alpha1 + beta1 < 1");
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.beta1
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.alpha, self.alpha0, self.alpha1, self.beta1, self.nu]
    }
}

/// How `h₁` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum InitPolicy {
    /// Sample variance of the observed series (`n − 1` denominator).
    #[default]
    SampleVariance,
    /// `α₀ / (1 − α₁ − β₁)`; requires covariance stationarity.
    Unconditional,
    Fixed(f64),
}

impl InitPolicy {
    fn initial_h(&self, y: &[f64], params: &GarchParams) -> Result<f64, GarchError> {
        let h = match *self {
            InitPolicy::SampleVariance => {
                if y.len() < 2 {
                    return Err(GarchError::BadInitialVariance(f64::NAN));
                }
                let n = y.len() as f64;
                let mean = y.iter().sum::<f64>() / n;
                y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
            }
            InitPolicy::Unconditional => unconditional(params)?,
            InitPolicy::Fixed(v) => v,
        };
        if !(h.is_finite() && h > 0.0) {
            return Err(GarchError::BadInitialVariance(h));
        }
        Ok(h)
    }
}

fn unconditional(params: &GarchParams) -> Result<f64, GarchError> {
    let p = params.persistence();
    if p >= 1.0 {
        return Err(GarchError::NotStationary(p));
    }
    Ok(params.alpha0 / (1.0 - p))
}

/// Output of [`garch_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    /// Conditional inverse precisions h_j.
    pub h: Vec<f64>,
    /// Mean-corrected innovations u_j = y_j − μ_j.
    pub u: Vec<f64>,
    /// Conditional means μ_j = [α + E(z)] √h_j.
    pub mu: Vec<f64>,
    /// z*_j = h_j^{−1/2} (y_j − μ_j).
    pub zstar: Vec<f64>,
    /// z_j = z*_j + E(z), the argument of the skewed density.
    pub z: Vec<f64>,
    /// E(z) at this parameter point.
    pub mean_z: f64,
}

impl FilterState {
    /// α + E(z).
    pub fn risk_coefficient(&self, params: &GarchParams) -> f64 {
        params.alpha + self.mean_z
    }
}

/// Runs the volatility recursion with a pre-built conditional distribution.
/// `dist` must have `ν` equal to `params.nu`.
pub fn filter_with(y: &[f64], params: &GarchParams, dist: &SkewedStudentT, init: InitPolicy) -> Result<FilterState, GarchError> {
    if y.is_empty() {
        return Err(GarchError::Empty);
    }
    let mean_z = dist.mean()?;
    let coef = params.alpha + mean_z;
    let n = y.len();
    let mut st = FilterState {
        h: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        mu: Vec::with_capacity(n),
        zstar: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        mean_z,
    };
    let mut h = init.initial_h(y, params)?;
    for (j, &yj) in y.iter().enumerate() {
        let sd = h.sqrt();
        let mu = coef * sd;
        let u = yj - mu;
        let zs = u / sd;
        if !(h > 0.0 && h.is_finite() && zs.is_finite()) {
            return Err(GarchError::NonFinite { index: j });
        }
        st.h.push(h);
        st.u.push(u);
        st.mu.push(mu);
        st.zstar.push(zs);
        st.z.push(zs + mean_z);
        h = params.alpha0 + params.alpha1 * u * u + params.beta1 * h;
    }
    Ok(st)
}

/// Volatility recursion, conditional means and standardized residuals.
pub fn garch_filter(
    y: &ExcessReturnSeries,
    params: &GarchParams,
    mech: &SkewMechanism,
    init: InitPolicy,
) -> Result<FilterState, GarchError> {
    params.validate(false)?;
    let dist = SkewedStudentT::new(params.nu, *mech)?;
    filter_with(y.values(), params, &dist, init)
}

/// Per-observation log densities `−½ ln h_j + ln s(z_j)`.
pub fn log_likelihood_terms(
    y: &[f64],
    params: &GarchParams,
    dist: &SkewedStudentT,
    init: InitPolicy,
) -> Result<Vec<f64>, GarchError> {
    let st = filter_with(y, params, dist, init)?;
    Ok(st.h.iter().zip(&st.z).map(|(h, z)| -0.5 * h.ln() + dist.ln_pdf(*z)).collect())
}

/// Log-likelihood with a pre-built conditional distribution. Returns
/// `−∞` when a density factor underflows to zero.
pub fn log_likelihood_with(y: &[f64], params: &GarchParams, dist: &SkewedStudentT, init: InitPolicy) -> Result<f64, GarchError> {
    let st = filter_with(y, params, dist, init)?;
    let mut total = 0.0;
    for (j, (h, z)) in st.h.iter().zip(&st.z).enumerate() {
        let term = -0.5 * h.ln() + dist.ln_pdf(*z);
        if term == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        if term.is_nan() {
            return Err(GarchError::NonFinite { index: j });
        }
        total += term;
    }
    Ok(total)
}

/// `Σ_j [−½ ln h_j + ln f_t(z_j) + ln p(F_t(z_j) | η)]`.
pub fn log_likelihood(
    y: &ExcessReturnSeries,
    params: &GarchParams,
    mech: &SkewMechanism,
    init: InitPolicy,
) -> Result<f64, GarchError> {
    params.validate(false)?;
    let dist = SkewedStudentT::new(params.nu, *mech)?;
    log_likelihood_with(y.values(), params, &dist, init)
}

/// Simulates `n` observations. `h₁` comes from `init`; `SampleVariance`
/// has no data to look at here and falls back to the unconditional variance.
pub fn simulate(
    params: &GarchParams,
    mech: &SkewMechanism,
    n: usize,
    seed: u64,
    init: InitPolicy,
) -> Result<ExcessReturnSeries, GarchError> {
    params.validate(false)?;
    if n == 0 {
        return Err(GarchError::Empty);
    }
    let dist = SkewedStudentT::new(params.nu, *mech)?;
    let mean_z = dist.mean()?;
    let mut h = match init {
        InitPolicy::SampleVariance | InitPolicy::Unconditional => unconditional(params)?,
        InitPolicy::Fixed(v) if v.is_finite() && v > 0.0 => v,
        InitPolicy::Fixed(v) => return Err(GarchError::BadInitialVariance(v)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::with_capacity(n);
    for j in 0..n {
        let sd = h.sqrt();
        let z = dist.draw(&mut rng);
        let u = (z - mean_z) * sd;
        let yj = (params.alpha + mean_z) * sd + u;
        if !yj.is_finite() {
            return Err(GarchError::NonFinite { index: j });
        }
        y.push(yj);
        h = params.alpha0 + params.alpha1 * u * u + params.beta1 * h;
    }
    Ok(ExcessReturnSeries::from_values(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(v: &[f64]) -> ExcessReturnSeries {
        ExcessReturnSeries::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn intercept_only_recursion() {
        let p = GarchParams::new(0.3, 1.0, 0.0, 0.0, 5.0).unwrap();
        let y = series(&[2.0, -7.0, 0.1, 40.0]);
        let st = garch_filter(&y, &p, &SkewMechanism::BetaTwo { a: 2.0, b: 1.5 }, InitPolicy::Unconditional).unwrap();
        assert!(st.h.iter().all(|h| *h == 1.0));
    }

    #[test]
    fn zero_alpha_symmetric_passes_data_through() {
        let p = GarchParams::new(0.0, 0.2, 0.1, 0.7, 4.0).unwrap();
        let y = series(&[0.4, -1.1, 2.5]);
        let st = garch_filter(&y, &p, &SkewMechanism::Symmetric, InitPolicy::SampleVariance).unwrap();
        assert!(st.mu.iter().all(|m| *m == 0.0));
        assert_eq!(st.u, y.values());
        assert_eq!(st.mean_z, 0.0);
    }

    #[test]
    fn hand_recursion() {
        let p = GarchParams::new(0.0, 0.1, 0.1, 0.8, 6.0).unwrap();
        let y = series(&[1.0, -2.0, 0.5]);
        let st = garch_filter(&y, &p, &SkewMechanism::Symmetric, InitPolicy::Fixed(1.0)).unwrap();
        assert_eq!(st.h[0], 1.0);
        assert!((st.h[1] - 1.0).abs() < 1e-15);
        assert!((st.h[2] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn single_cauchy_term() {
        // ν = 1 is outside GarchParams, so evaluate through the raw pieces
        let dist = SkewedStudentT::new(1.0, SkewMechanism::Symmetric).unwrap();
        assert!((dist.ln_pdf(0.0) - (1.0 / std::f64::consts::PI).ln()).abs() < 1e-15);
        // and the same single-term structure at ν = 1 + 1e-12 via the public API
        let p = GarchParams::new(0.0, 1.0, 0.0, 0.0, 1.0 + 1e-12).unwrap();
        let ll = log_likelihood(&series(&[0.0]), &p, &SkewMechanism::Symmetric, InitPolicy::Unconditional).unwrap();
        assert!((ll - (1.0 / std::f64::consts::PI).ln()).abs() < 1e-11);
    }

    #[test]
    fn symmetric_equals_hidden_truncation_at_zero() {
        let p = GarchParams::new(0.1, 0.05, 0.1, 0.85, 7.0).unwrap();
        let y = simulate(&p, &SkewMechanism::Symmetric, 300, 3, InitPolicy::Unconditional).unwrap();
        let a = log_likelihood(&y, &p, &SkewMechanism::Symmetric, InitPolicy::SampleVariance).unwrap();
        let b = log_likelihood(&y, &p, &SkewMechanism::HiddenTruncation { gamma: 0.0 }, InitPolicy::SampleVariance).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn mean_proportional_to_scale() {
        let p = GarchParams::new(0.2, 0.05, 0.1, 0.85, 7.0).unwrap();
        let m = SkewMechanism::BetaTwo { a: 2.0, b: 1.0 };
        let y = simulate(&p, &m, 200, 9, InitPolicy::Unconditional).unwrap();
        let st = garch_filter(&y, &p, &m, InitPolicy::SampleVariance).unwrap();
        let c = st.risk_coefficient(&p);
        assert!(st.mean_z > 0.0);
        for (mu, h) in st.mu.iter().zip(&st.h) {
            assert!((mu / h.sqrt() - c).abs() < 1e-12);
        }
    }

    #[test]
    fn stationarity_and_init_errors() {
        let p = GarchParams::new(0.0, 0.1, 0.5, 0.6, 5.0).unwrap();
        assert!(p.validate(true).is_err());
        assert!(matches!(
            simulate(&p, &SkewMechanism::Symmetric, 10, 1, InitPolicy::Unconditional),
            Err(GarchError::NotStationary(_))
        ));
        assert!(simulate(&p, &SkewMechanism::Symmetric, 10, 1, InitPolicy::Fixed(1.0)).is_ok());
        assert!(GarchParams::new(0.0, -1.0, 0.1, 0.1, 5.0).is_err());
        assert!(GarchParams::new(0.0, 1.0, 0.1, 0.1, 1.0).is_err());
        let y = series(&[1.0, 1.0, 1.0]);
        assert!(matches!(
            garch_filter(&y, &p, &SkewMechanism::Symmetric, InitPolicy::SampleVariance),
            Err(GarchError::BadInitialVariance(_))
        ));
    }

    #[test]
    fn simulation_deterministic() {
        let p = GarchParams::new(0.1, 0.05, 0.1, 0.85, 7.0).unwrap();
        let m = SkewMechanism::HiddenTruncation { gamma: 1.0 };
        let a = simulate(&p, &m, 500, 42, InitPolicy::Unconditional).unwrap();
        let b = simulate(&p, &m, 500, 42, InitPolicy::Unconditional).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_scale_variance_identity() {
        // α₁ = β₁ = 0 ⇒ h_j = α₀ and Var(y) = α₀ ν / (ν − 2)
        let nu = 30.0;
        let alpha0 = 0.7;
        let p = GarchParams::new(0.0, alpha0, 0.0, 0.0, nu).unwrap();
        let n = 1_000_000;
        let y = simulate(&p, &SkewMechanism::Symmetric, n, 11, InitPolicy::Unconditional).unwrap();
        let v = y.values();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sigma2 = alpha0 * nu / (nu - 2.0);
        let kurt = 3.0 + 6.0 / (nu - 4.0);
        let se = sigma2 * ((kurt - 1.0) / n as f64).sqrt();
        assert!((var - sigma2).abs() < 3.0 * se, "{var} vs {sigma2} (se {se})");
    }

    #[test]
    fn likelihood_prefers_truth_over_doubled_intercept() {
        let truth = GarchParams::new(0.1, 0.05, 0.08, 0.9, 8.0).unwrap();
        let doubled = GarchParams {
            alpha0: 2.0 * truth.alpha0,
            ..truth
        };
        let m = SkewMechanism::BetaTwo { a: 2.0, b: 1.0 };
        let dist = SkewedStudentT::new(truth.nu, m).unwrap();
        let mut wins = 0;
        for seed in 0..100 {
            let y = simulate(&truth, &m, 5000, seed, InitPolicy::Unconditional).unwrap();
            let a = log_likelihood_with(y.values(), &truth, &dist, InitPolicy::SampleVariance).unwrap();
            let b = log_likelihood_with(y.values(), &doubled, &dist, InitPolicy::SampleVariance).unwrap();
            if a > b {
                wins += 1;
            }
        }
        assert!(wins >= 95, "{wins}/100");
    }

    #[test]
    fn right_skewed_residuals_have_positive_skewness() {
        let p = GarchParams::new(0.1, 0.05, 0.08, 0.9, 8.0).unwrap();
        let m = SkewMechanism::BetaTwo { a: 3.0, b: 1.0 };
        let mut positive = 0;
        for seed in 0..100 {
            let y = simulate(&p, &m, 10_000, 1000 + seed, InitPolicy::Unconditional).unwrap();
            let st = garch_filter(&y, &p, &m, InitPolicy::SampleVariance).unwrap();
            let n = st.zstar.len() as f64;
            let mean = st.zstar.iter().sum::<f64>() / n;
            let m2 = st.zstar.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
            let m3 = st.zstar.iter().map(|z| (z - mean).powi(3)).sum::<f64>() / n;
            if m3 / m2.powf(1.5) > 0.0 {
                positive += 1;
            }
        }
        assert!(positive >= 99, "{positive}/100");
    }

    proptest! {
        #[test]
        fn filter_keeps_h_positive(
            alpha in -2.0f64..2.0,
            alpha0 in 1e-6f64..5.0,
            alpha1 in 0.0f64..2.0,
            beta1 in 0.0f64..1.5,
            y in prop::collection::vec(-50.0f64..50.0, 2..80),
        ) {
            let p = GarchParams::new(alpha, alpha0, alpha1, beta1, 4.0).unwrap();
            let y = ExcessReturnSeries::from_values(y).unwrap();
            if let Ok(st) = garch_filter(&y, &p, &SkewMechanism::Symmetric, InitPolicy::Fixed(1.0)) {
                prop_assert!(st.h.iter().all(|h| *h > 0.0));
                prop_assert_eq!(st.h.len(), y.len());
            }
        }
    }
}
