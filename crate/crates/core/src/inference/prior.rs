use serde::{Deserialize, Serialize};

use crate::distributions::SkewMechanism;
use crate::garch::GarchParams;
use crate::quadrature::gauss_kronrod;
use crate::special::ln_gamma;

use super::InferenceError;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A univariate prior family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Prior {
    Normal { mean: f64, sd: f64 },
    LogNormal { meanlog: f64, sdlog: f64 },
    Exponential { mean: f64 },
    Uniform { lower: f64, upper: f64 },
}

impl Prior {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Prior::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - LN_SQRT_2PI
            }
            Prior::LogNormal { meanlog, sdlog } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (x.ln() - meanlog) / sdlog;
                -0.5 * z * z - sdlog.ln() - LN_SQRT_2PI - x.ln()
            }
            Prior::Exponential { mean } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                -x / mean - mean.ln()
            }
            Prior::Uniform { lower, upper } => {
                if x < lower || x > upper {
                    return f64::NEG_INFINITY;
                }
                -(upper - lower).ln()
            }
        }
    }

    fn check(&self, name: &'static str, positive: bool) -> Result<(), InferenceError> {
        let bad = |reason: &str| {
            Err(InferenceError::Prior {
                name,
                reason: reason.to_string(),
            })
        };
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Prior::Normal { mean, sd } => {
                if positive {
                    return bad("a normal prior puts mass outside the positive half-line");
                }
                if !(mean.is_finite() && finite_pos(sd)) {
                    return bad("normal prior needs finite mean and sd > 0");
                }
            }
            Prior::LogNormal { meanlog, sdlog } => {
                if !(meanlog.is_finite() && finite_pos(sdlog)) {
                    return bad("log-normal prior needs finite meanlog and sdlog > 0");
                }
            }
            Prior::Exponential { mean } => {
                if !finite_pos(mean) {
                    return bad("exponential prior needs mean > 0");
                }
            }
            Prior::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return bad("uniform prior needs finite lower < upper");
                }
                if positive && lower < 0.0 {
                    return bad("uniform prior for a positive parameter needs lower >= 0");
                }
            }
        }
        Ok(())
    }

    /// Prior mean of `x` (identity) or of `ln x` (log scale).
    pub(crate) fn transformed_mean(&self, log: bool) -> f64 {
        match (*self, log) {
            (Prior::Normal { mean, .. }, _) => mean,
            (Prior::LogNormal { meanlog, .. }, true) => meanlog,
            (Prior::LogNormal { meanlog, sdlog }, false) => (meanlog + 0.5 * sdlog * sdlog).exp(),
            (Prior::Exponential { mean }, true) => mean.ln() - EULER_GAMMA,
            (Prior::Exponential { mean }, false) => mean,
            (Prior::Uniform { lower, upper }, false) => 0.5 * (lower + upper),
            (Prior::Uniform { lower, upper }, true) => {
                let xlnx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
                (xlnx(upper) - xlnx(lower)) / (upper - lower) - 1.0
            }
        }
    }
}

/// Priors for every parameter of every mechanism. Unused entries are
/// ignored. All families are proper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSpec {
    pub alpha: Prior,
    pub alpha0: Prior,
    pub alpha1: Prior,
    pub beta1: Prior,
    /// Prior on `ν − 1`.
    pub nu_minus_one: Prior,
    pub gamma1: Prior,
    pub gamma2: Prior,
    pub gamma3: Prior,
    pub a: Prior,
    pub b: Prior,
    /// Dirichlet concentrations for `(ω₁, ω₂, ω₃)`.
    pub omega: [f64; 3],
    pub gamma4: Prior,
    /// Restrict the prior to `α₁ + β₁ < 1` (renormalized).
    pub stationary: bool,
}

impl Default for PriorSpec {
    fn default() -> Self {
        let std_normal = Prior::Normal { mean: 0.0, sd: 1.0 };
        let std_lognormal = Prior::LogNormal {
            meanlog: 0.0,
            sdlog: 1.0,
        };
        let unit = Prior::Uniform { lower: 0.0, upper: 1.0 };
        Self {
            alpha: std_normal,
            alpha0: Prior::Exponential { mean: 1.0 },
            alpha1: unit,
            beta1: unit,
            nu_minus_one: Prior::Exponential { mean: 9.0 },
            gamma1: std_lognormal,
            gamma2: std_normal,
            gamma3: std_lognormal,
            a: Prior::Exponential { mean: 1.0 },
            b: Prior::Exponential { mean: 1.0 },
            omega: [1.0; 3],
            gamma4: std_normal,
            stationary: false,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<(), InferenceError> {
        self.alpha.check("alpha", false)?;
        self.alpha0.check("alpha0", true)?;
        self.alpha1.check("alpha1", true)?;
        self.beta1.check("beta1", true)?;
        self.nu_minus_one.check("nu_minus_one", true)?;
        self.gamma1.check("gamma1", true)?;
        self.gamma2.check("gamma2", false)?;
        self.gamma3.check("gamma3", true)?;
        self.a.check("a", true)?;
        self.b.check("b", true)?;
        self.gamma4.check("gamma4", false)?;
        if !self.omega.iter().all(|c| c.is_finite() && *c > 0.0) {
            return Err(InferenceError::Prior {
                name: "omega",
                reason: "Dirichlet concentrations must be positive".into(),
            });
        }
        Ok(())
    }

    /// Log prior density of the mechanism parameters.
    pub fn ln_mechanism(&self, mech: &SkewMechanism) -> f64 {
        match *mech {
            SkewMechanism::Symmetric => 0.0,
            SkewMechanism::InverseScale { gamma } => self.gamma1.ln_pdf(gamma),
            SkewMechanism::HiddenTruncation { gamma } => self.gamma2.ln_pdf(gamma),
            SkewMechanism::BetaOne { gamma } => self.gamma3.ln_pdf(gamma),
            SkewMechanism::BetaTwo { a, b } => self.a.ln_pdf(a) + self.b.ln_pdf(b),
            SkewMechanism::Bernstein2 { omega1, omega2 } => {
                let w = [omega1, omega2, 1.0 - omega1 - omega2];
                if w.iter().any(|v| *v <= 0.0) {
                    return f64::NEG_INFINITY;
                }
                let c = &self.omega;
                let norm = ln_gamma(c.iter().sum()) - c.iter().map(|v| ln_gamma(*v)).sum::<f64>();
                norm + w.iter().zip(c).map(|(wi, ci)| (ci - 1.0) * wi.ln()).sum::<f64>()
            }
            SkewMechanism::FerreiraSteel { gamma } => self.gamma4.ln_pdf(gamma),
        }
    }

    /// Log prior density of θ, without the stationarity renormalization.
    pub fn ln_garch(&self, p: &GarchParams) -> f64 {
        if self.stationary && p.persistence() >= 1.0 {
            return f64::NEG_INFINITY;
        }
        self.alpha.ln_pdf(p.alpha)
            + self.alpha0.ln_pdf(p.alpha0)
            + self.alpha1.ln_pdf(p.alpha1)
            + self.beta1.ln_pdf(p.beta1)
            + self.nu_minus_one.ln_pdf(p.nu - 1.0)
    }

    /// `P(α₁ + β₁ < 1)` under the unrestricted priors.
    pub fn stationary_mass(&self) -> Result<f64, InferenceError> {
        let inner = |a: f64| -> f64 {
            let upper = 1.0 - a;
            if upper <= 0.0 {
                return 0.0;
            }
            gauss_kronrod(|b| self.beta1.ln_pdf(b).exp(), 0.0, upper, 1e-13, 1e-11, 200)
                .map(|r| r.value)
                .unwrap_or(f64::NAN)
        };
        let outer = gauss_kronrod(|a| self.alpha1.ln_pdf(a).exp() * inner(a), 0.0, 1.0, 1e-12, 1e-10, 200)
            .map_err(|e| InferenceError::Prior {
                name: "alpha1 + beta1",
                reason: format!("stationary mass quadrature failed: {e}"),
            })?;
        Ok(outer.value)
    }

    /// Full log prior density; `ln_norm` is `−ln P(stationary)` when the
    /// restriction is on and 0 otherwise.
    pub fn ln_density(&self, p: &GarchParams, mech: &SkewMechanism, ln_norm: f64) -> f64 {
        self.ln_garch(p) + self.ln_mechanism(mech) + ln_norm
    }

    pub(crate) fn ln_normalizer(&self) -> Result<f64, InferenceError> {
        if self.stationary {
            Ok(-self.stationary_mass()?.ln())
        } else {
            Ok(0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_kronrod_real_line;

    #[test]
    fn families_integrate_to_one() {
        let priors = [
            Prior::Normal { mean: 0.3, sd: 2.0 },
            Prior::LogNormal {
                meanlog: -0.5,
                sdlog: 0.7,
            },
            Prior::Exponential { mean: 9.0 },
            Prior::Uniform { lower: -1.0, upper: 3.0 },
        ];
        for p in priors {
            let r = gauss_kronrod_real_line(|x| p.ln_pdf(x).exp(), 1e-12, 1e-10, 2000).unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "{p:?}: {}", r.value);
        }
    }

    #[test]
    fn uniform_square_stationary_mass_is_half() {
        let spec = PriorSpec::default();
        assert!((spec.stationary_mass().unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_flat_density() {
        let spec = PriorSpec::default();
        let v = spec.ln_mechanism(&SkewMechanism::Bernstein2 { omega1: 0.2, omega2: 0.5 });
        assert!((v - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn normal_rejected_for_positive_parameter() {
        let spec = PriorSpec {
            alpha0: Prior::Normal { mean: 1.0, sd: 1.0 },
            ..PriorSpec::default()
        };
        assert!(spec.validate().is_err());
        assert!(PriorSpec::default().validate().is_ok());
    }

    #[test]
    fn json_partial_override() {
        let spec: PriorSpec = serde_json::from_str(r#"{"alpha": {"family": "normal", "mean": 0.0, "sd": 10.0}}"#).unwrap();
        assert_eq!(spec.alpha, Prior::Normal { mean: 0.0, sd: 10.0 });
        assert_eq!(spec.alpha0, PriorSpec::default().alpha0);
    }
}
