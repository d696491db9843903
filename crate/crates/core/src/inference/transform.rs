use crate::distributions::{MechanismKind, SkewMechanism};
use crate::garch::GarchParams;

use super::{InferenceError, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Map {
    Identity,
    Log,
    /// `ν = 1 + eˣ`
    LogShifted,
}

/// Layout and unconstrained reparameterisation of `(θ, η)`.
///
/// The constrained vector is `(α, α₀, α₁, β₁, ν, η…)`. Positive parameters
/// go through `ln`, `ν` through `ln(ν − 1)`, Bernstein weights through the
/// additive log-ratio `(ln ω₁/ω₃, ln ω₂/ω₃)`, everything else is left alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpace {
    kind: MechanismKind,
}

const GARCH_MAPS: [Map; 5] = [Map::Identity, Map::Log, Map::Log, Map::Log, Map::LogShifted];

impl ParamSpace {
    pub fn new(kind: MechanismKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        5 + self.kind.dim()
    }

    pub fn names(&self) -> Vec<String> {
        GarchParams::NAMES
            .iter()
            .chain(self.kind.parameter_names())
            .map(|s| s.to_string())
            .collect()
    }

    fn eta_maps(&self) -> &'static [Map] {
        match self.kind {
            MechanismKind::Symmetric => &[],
            MechanismKind::InverseScale | MechanismKind::BetaOne => &[Map::Log],
            MechanismKind::HiddenTruncation | MechanismKind::FerreiraSteel => &[Map::Identity],
            MechanismKind::BetaTwo => &[Map::Log, Map::Log],
            // handled jointly
            MechanismKind::Bernstein2 => &[],
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<(), InferenceError> {
        if v.len() != self.dim() {
            return Err(InferenceError::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn to_unconstrained(&self, theta: &[f64]) -> Result<Vec<f64>, InferenceError> {
        self.check_len(theta)?;
        let mut x: Vec<f64> = GARCH_MAPS.iter().zip(theta).map(|(m, v)| forward(*m, *v)).collect();
        if self.kind == MechanismKind::Bernstein2 {
            let w3 = 1.0 - theta[5] - theta[6];
            x.push((theta[5] / w3).ln());
            x.push((theta[6] / w3).ln());
        } else {
            x.extend(self.eta_maps().iter().zip(&theta[5..]).map(|(m, v)| forward(*m, *v)));
        }
        Ok(x)
    }

    pub fn to_constrained(&self, x: &[f64]) -> Result<Vec<f64>, InferenceError> {
        self.check_len(x)?;
        let mut theta: Vec<f64> = GARCH_MAPS.iter().zip(x).map(|(m, v)| backward(*m, *v)).collect();
        if self.kind == MechanismKind::Bernstein2 {
            // softmax with the third logit fixed at 0
            let m = x[5].max(x[6]).max(0.0);
            let (e1, e2, e3) = ((x[5] - m).exp(), (x[6] - m).exp(), (-m).exp());
            let s = e1 + e2 + e3;
            theta.push(e1 / s);
            theta.push(e2 / s);
        } else {
            theta.extend(self.eta_maps().iter().zip(&x[5..]).map(|(m, v)| backward(*m, *v)));
        }
        Ok(theta)
    }

    /// `ln |∂θ/∂x|`.
    pub fn ln_jacobian(&self, x: &[f64]) -> f64 {
        let mut j: f64 = GARCH_MAPS.iter().zip(x).map(|(m, v)| ln_jac(*m, *v)).sum();
        if self.kind == MechanismKind::Bernstein2 {
            // ω₁ ω₂ ω₃
            let m = x[5].max(x[6]).max(0.0);
            let ln_s = ((x[5] - m).exp() + (x[6] - m).exp() + (-m).exp()).ln() + m;
            j += x[5] + x[6] - 3.0 * ln_s;
        } else {
            j += self.eta_maps().iter().zip(&x[5..]).map(|(m, v)| ln_jac(*m, *v)).sum::<f64>();
        }
        j
    }

    /// Splits a constrained vector into model objects.
    pub fn split(&self, theta: &[f64]) -> Result<(GarchParams, SkewMechanism), InferenceError> {
        self.check_len(theta)?;
        let p = GarchParams {
            alpha: theta[0],
            alpha0: theta[1],
            alpha1: theta[2],
            beta1: theta[3],
            nu: theta[4],
        };
        let mech = SkewMechanism::from_params(self.kind, &theta[5..])?;
        Ok((p, mech))
    }

    pub fn join(&self, p: &GarchParams, mech: &SkewMechanism) -> Vec<f64> {
        let mut v = p.to_vec();
        v.extend(mech.params());
        v
    }

    /// Prior means on the unconstrained scale, the default starting point.
    pub fn prior_center(&self, prior: &PriorSpec) -> Vec<f64> {
        let mut x = vec![
            prior.alpha.transformed_mean(false),
            prior.alpha0.transformed_mean(true),
            prior.alpha1.transformed_mean(true),
            prior.beta1.transformed_mean(true),
            prior.nu_minus_one.transformed_mean(true),
        ];
        match self.kind {
            MechanismKind::Symmetric => {}
            MechanismKind::InverseScale => x.push(prior.gamma1.transformed_mean(true)),
            MechanismKind::HiddenTruncation => x.push(prior.gamma2.transformed_mean(false)),
            MechanismKind::BetaOne => x.push(prior.gamma3.transformed_mean(true)),
            MechanismKind::BetaTwo => {
                x.push(prior.a.transformed_mean(true));
                x.push(prior.b.transformed_mean(true));
            }
            MechanismKind::Bernstein2 => {
                // E[ln ω_i − ln ω₃] = ψ(c_i) − ψ(c₃); concentrations are
                // usually equal, so use the log-ratio of the means instead
                let c = prior.omega;
                x.push((c[0] / c[2]).ln());
                x.push((c[1] / c[2]).ln());
            }
            MechanismKind::FerreiraSteel => x.push(prior.gamma4.transformed_mean(false)),
        }
        x
    }
}

fn forward(m: Map, v: f64) -> f64 {
    match m {
        Map::Identity => v,
        Map::Log => v.ln(),
        Map::LogShifted => (v - 1.0).ln(),
    }
}

fn backward(m: Map, x: f64) -> f64 {
    match m {
        Map::Identity => x,
        Map::Log => x.exp(),
        Map::LogShifted => 1.0 + x.exp(),
    }
}

fn ln_jac(m: Map, x: f64) -> f64 {
    match m {
        Map::Identity => 0.0,
        Map::Log | Map::LogShifted => x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(kind: MechanismKind) -> Vec<f64> {
        let mut v = vec![0.2, 0.05, 0.1, 0.85, 7.0];
        v.extend(match kind {
            MechanismKind::Symmetric => vec![],
            MechanismKind::InverseScale | MechanismKind::BetaOne => vec![1.4],
            MechanismKind::HiddenTruncation | MechanismKind::FerreiraSteel => vec![-0.6],
            MechanismKind::BetaTwo => vec![3.0, 1.0],
            MechanismKind::Bernstein2 => vec![0.2, 0.5],
        });
        v
    }

    #[test]
    fn round_trip() {
        for kind in MechanismKind::ALL {
            let s = ParamSpace::new(kind);
            let th = point(kind);
            let back = s.to_constrained(&s.to_unconstrained(&th).unwrap()).unwrap();
            for (a, b) in th.iter().zip(&back) {
                assert!((a - b).abs() < 1e-14, "{kind}: {th:?} vs {back:?}");
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_difference_determinant() {
        for kind in MechanismKind::ALL {
            let s = ParamSpace::new(kind);
            let x = s.to_unconstrained(&point(kind)).unwrap();
            let d = s.dim();
            let h = 1e-6;
            let mut jac = nalgebra::DMatrix::zeros(d, d);
            for k in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let (tp, tm) = (s.to_constrained(&xp).unwrap(), s.to_constrained(&xm).unwrap());
                for i in 0..d {
                    jac[(i, k)] = (tp[i] - tm[i]) / (2.0 * h);
                }
            }
            let want = jac.determinant().abs().ln();
            assert!((s.ln_jacobian(&x) - want).abs() < 1e-6, "{kind}");
        }
    }

    #[test]
    fn names_follow_layout() {
        let s = ParamSpace::new(MechanismKind::BetaTwo);
        assert_eq!(s.names(), vec!["alpha", "alpha0", "alpha1", "beta1", "nu", "a", "b"]);
    }
}
