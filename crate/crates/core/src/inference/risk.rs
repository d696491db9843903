use serde::{Deserialize, Serialize};

use crate::distributions::{SkewMechanism, SkewedStudentT};
use crate::stats;

use super::{InferenceError, ParamSpace, PosteriorChain};

/// Posterior summary of the relative risk aversion coefficient `α + E(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskPremiumSummary {
    /// `P(α + E(z) > 0 | M, y)`.
    pub prob_positive: f64,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub q975: f64,
    pub draws: usize,
}

impl RiskPremiumSummary {
    /// Summary of already computed coefficient values.
    pub fn from_values(values: &[f64]) -> Result<Self, InferenceError> {
        if values.is_empty() {
            return Err(InferenceError::EmptyChain);
        }
        let positive = values.iter().filter(|v| **v > 0.0).count();
        let q = stats::quantiles(values, &[0.025, 0.05, 0.5, 0.95, 0.975]);
        Ok(Self {
            prob_positive: positive as f64 / values.len() as f64,
            mean: stats::mean(values),
            sd: stats::std_dev(values),
            q025: q[0],
            q05: q[1],
            q50: q[2],
            q95: q[3],
            q975: q[4],
            draws: values.len(),
        })
    }
}

/// `α + E(z)` at every draw. Runs of repeated draws (rejected proposals)
/// reuse the previous mean.
pub fn risk_coefficients(chain: &PosteriorChain) -> Result<Vec<f64>, InferenceError> {
    let space = ParamSpace::new(chain.mechanism);
    let mut out = Vec::with_capacity(chain.len());
    let mut last: Option<(&[f64], f64)> = None;
    for (i, d) in chain.draws.iter().enumerate() {
        let nu = d[4];
        if nu.is_nan() || nu <= 1.0 {
            return Err(InferenceError::InvalidDraw {
                index: i,
                reason: format!("nu = {nu} is not above 1"),
            });
        }
        let e = match last {
            Some((prev, e)) if prev[4..] == d[4..] => e,
            _ => {
                let (_, mech) = space.split(d)?;
                if mech.is_symmetric() {
                    0.0
                } else {
                    SkewedStudentT::new(nu, mech)?.mean()?
                }
            }
        };
        last = Some((&d[..], e));
        out.push(d[0] + e);
    }
    Ok(out)
}

/// Posterior summary of `α + E(z)`. `mech` only fixes the mechanism kind;
/// its parameter values come from the chain.
pub fn risk_premium_summary(chain: &PosteriorChain, mech: &SkewMechanism) -> Result<RiskPremiumSummary, InferenceError> {
    if mech.kind() != chain.mechanism {
        return Err(InferenceError::InvalidConfig(format!(
            "chain is for {} but summary requested for {}",
            chain.mechanism,
            mech.kind()
        )));
    }
    RiskPremiumSummary::from_values(&risk_coefficients(chain)?)
}
