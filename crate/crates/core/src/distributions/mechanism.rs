use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DistributionError;

/// Margin kept from the boundary of each parameter region.
pub const BOUNDARY_MARGIN: f64 = 1e-8;

/// Identity of a skewing mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Symmetric,
    InverseScale,
    HiddenTruncation,
    BetaOne,
    BetaTwo,
    Bernstein2,
    FerreiraSteel,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 7] = [
        MechanismKind::Symmetric,
        MechanismKind::InverseScale,
        MechanismKind::HiddenTruncation,
        MechanismKind::BetaOne,
        MechanismKind::BetaTwo,
        MechanismKind::Bernstein2,
        MechanismKind::FerreiraSteel,
    ];

    /// Model label: `M0` for the symmetric model, `M1`..`M6` otherwise.
    pub fn model_label(self) -> &'static str {
        match self {
            MechanismKind::Symmetric => "M0",
            MechanismKind::InverseScale => "M1",
            MechanismKind::HiddenTruncation => "M2",
            MechanismKind::BetaOne => "M3",
            MechanismKind::BetaTwo => "M4",
            MechanismKind::Bernstein2 => "M5",
            MechanismKind::FerreiraSteel => "M6",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Symmetric => "symmetric",
            MechanismKind::InverseScale => "inverse_scale",
            MechanismKind::HiddenTruncation => "hidden_truncation",
            MechanismKind::BetaOne => "beta_one",
            MechanismKind::BetaTwo => "beta_two",
            MechanismKind::Bernstein2 => "bernstein2",
            MechanismKind::FerreiraSteel => "ferreira_steel",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            MechanismKind::Symmetric => &[],
            MechanismKind::InverseScale => &["gamma1"],
            MechanismKind::HiddenTruncation => &["gamma2"],
            MechanismKind::BetaOne => &["gamma3"],
            MechanismKind::BetaTwo => &["a", "b"],
            MechanismKind::Bernstein2 => &["omega1", "omega2"],
            MechanismKind::FerreiraSteel => &["gamma4"],
        }
    }

    pub fn dim(self) -> usize {
        self.parameter_names().len()
    }

    /// Parameter values at which the weight is identically one.
    pub fn symmetry_point(self) -> SkewMechanism {
        match self {
            MechanismKind::Symmetric => SkewMechanism::Symmetric,
            MechanismKind::InverseScale => SkewMechanism::InverseScale { gamma: 1.0 },
            MechanismKind::HiddenTruncation => SkewMechanism::HiddenTruncation { gamma: 0.0 },
            MechanismKind::BetaOne => SkewMechanism::BetaOne { gamma: 1.0 },
            MechanismKind::BetaTwo => SkewMechanism::BetaTwo { a: 1.0, b: 1.0 },
            MechanismKind::Bernstein2 => SkewMechanism::Bernstein2 {
                omega1: 1.0 / 3.0,
                omega2: 1.0 / 3.0,
            },
            MechanismKind::FerreiraSteel => SkewMechanism::FerreiraSteel { gamma: 0.0 },
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let lowered = name.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == lowered || k.model_label().eq_ignore_ascii_case(&lowered))
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A skewing weight `p(u | η)` on the unit interval together with its
/// parameters.
///
/// | kind | weight | symmetric at |
/// |---|---|---|
/// | `InverseScale` | `C [f(γF⁻¹(u)) 1{u<½} + f(F⁻¹(u)/γ) 1{u≥½}] / f(F⁻¹(u))`, `C = 2/(γ+γ⁻¹)` | γ = 1 |
/// | `HiddenTruncation` | `2 F(γ F⁻¹(u))` | γ = 0 |
/// | `BetaOne` | `Be(u \| γ, 1/γ)` | γ = 1 |
/// | `BetaTwo` | `Be(u \| a, b)` | a = b = 1 |
/// | `Bernstein2` | `Σⱼ ωⱼ Be(u \| j, 4−j)`, `ω₃ = 1 − ω₁ − ω₂` | ω₁ = ω₂ = ⅓ |
/// | `FerreiraSteel` | `1 + l(γ)[g(u \| γ) − 1]` | γ = 0 |
///
/// For `FerreiraSteel`, `l(γ) = tanh|γ|` and `g(u | γ)` is the linear
/// density `2u` for γ > 0 and `2(1 − u)` for γ < 0, so the weight reduces to
/// `1 + tanh(γ)(2u − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MechanismSpec", into = "MechanismSpec")]
pub enum SkewMechanism {
    Symmetric,
    InverseScale { gamma: f64 },
    HiddenTruncation { gamma: f64 },
    BetaOne { gamma: f64 },
    BetaTwo { a: f64, b: f64 },
    Bernstein2 { omega1: f64, omega2: f64 },
    FerreiraSteel { gamma: f64 },
}

impl SkewMechanism {
    /// Builds and validates a mechanism from its parameter vector, ordered
    /// as in [`MechanismKind::parameter_names`].
    pub fn from_params(kind: MechanismKind, eta: &[f64]) -> Result<Self, DistributionError> {
        if eta.len() != kind.dim() {
            return Err(DistributionError::WrongParameterCount {
                kind,
                expected: kind.dim(),
                got: eta.len(),
            });
        }
        let mech = match kind {
            MechanismKind::Symmetric => SkewMechanism::Symmetric,
            MechanismKind::InverseScale => SkewMechanism::InverseScale { gamma: eta[0] },
            MechanismKind::HiddenTruncation => SkewMechanism::HiddenTruncation { gamma: eta[0] },
            MechanismKind::BetaOne => SkewMechanism::BetaOne { gamma: eta[0] },
            MechanismKind::BetaTwo => SkewMechanism::BetaTwo { a: eta[0], b: eta[1] },
            MechanismKind::Bernstein2 => SkewMechanism::Bernstein2 {
                omega1: eta[0],
                omega2: eta[1],
            },
            MechanismKind::FerreiraSteel => SkewMechanism::FerreiraSteel { gamma: eta[0] },
        };
        mech.validate()?;
        Ok(mech)
    }

    pub fn kind(&self) -> MechanismKind {
        match self {
            SkewMechanism::Symmetric => MechanismKind::Symmetric,
            SkewMechanism::InverseScale { .. } => MechanismKind::InverseScale,
            SkewMechanism::HiddenTruncation { .. } => MechanismKind::HiddenTruncation,
            SkewMechanism::BetaOne { .. } => MechanismKind::BetaOne,
            SkewMechanism::BetaTwo { .. } => MechanismKind::BetaTwo,
            SkewMechanism::Bernstein2 { .. } => MechanismKind::Bernstein2,
            SkewMechanism::FerreiraSteel { .. } => MechanismKind::FerreiraSteel,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            SkewMechanism::Symmetric => vec![],
            SkewMechanism::InverseScale { gamma }
            | SkewMechanism::HiddenTruncation { gamma }
            | SkewMechanism::BetaOne { gamma }
            | SkewMechanism::FerreiraSteel { gamma } => vec![gamma],
            SkewMechanism::BetaTwo { a, b } => vec![a, b],
            SkewMechanism::Bernstein2 { omega1, omega2 } => vec![omega1, omega2],
        }
    }

    pub fn validate(&self) -> Result<(), DistributionError> {
        let bad = |name: &'static str, value: f64, rule: &'static str| {
            Err(DistributionError::InvalidSkewParameter { kind: self.kind(), name, value, rule })
        };
        let m = BOUNDARY_MARGIN;
        match *self {
            SkewMechanism::Symmetric => Ok(()),
            SkewMechanism::InverseScale { gamma } if !(gamma.is_finite() && gamma > m) => {
                bad("gamma1", gamma, "gamma1 > 0")
            }
            SkewMechanism::HiddenTruncation { gamma } if !gamma.is_finite() => bad("gamma2", gamma, "finite"),
            SkewMechanism::BetaOne { gamma } if !(gamma.is_finite() && gamma > m) => {
                bad("gamma3", gamma, "gamma3 > 0")
            }
            SkewMechanism::BetaTwo { a, .. } if !(a.is_finite() && a > m) => bad("a", a, "a > 0"),
            SkewMechanism::BetaTwo { b, .. } if !(b.is_finite() && b > m) => bad("b", b, "b > 0"),
            SkewMechanism::Bernstein2 { omega1, .. } if !(omega1 > m && omega1 < 1.0 - m) => {
                bad("omega1", omega1, "0 < omega1 < 1")
            }
            SkewMechanism::Bernstein2 { omega2, .. } if !(omega2 > m && omega2 < 1.0 - m) => {
                bad("omega2", omega2, "0 < omega2 < 1")
            }
            SkewMechanism::Bernstein2 { omega1, omega2 } if omega1 + omega2 >= 1.0 - m => {
                bad("omega2", omega2, "omega1 + omega2 < 1")
            }
            SkewMechanism::FerreiraSteel { gamma } if !gamma.is_finite() => bad("gamma4", gamma, "finite"),
            _ => Ok(()),
        }
    }

    /// True when the weight is identically one.
    pub fn is_symmetric(&self) -> bool {
        *self == self.kind().symmetry_point()
    }

    /// Smallest degrees of freedom for which the skewed mean exists.
    ///
    /// A Beta weight behaves like `u^{a−1}` at zero and `(1−u)^{b−1}` at one,
    /// while `|F⁻¹(u)|` grows like `u^{−1/ν}`, so the mean needs `ν·min(a, b) > 1`.
    pub fn min_nu_for_mean(&self) -> f64 {
        match *self {
            SkewMechanism::BetaOne { gamma } => 1.0 / gamma.min(1.0 / gamma),
            SkewMechanism::BetaTwo { a, b } => 1.0 / a.min(b),
            _ => 1.0,
        }
    }
}

impl fmt::Display for SkewMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind())?;
        let names = self.kind().parameter_names();
        if !names.is_empty() {
            let parts: Vec<String> = names
                .iter()
                .zip(self.params())
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            write!(f, "({})", parts.join(", "))?;
        }
        Ok(())
    }
}

/// JSON shape of a mechanism: `{"kind": "beta_two", "eta": {"a": 3.0, "b": 1.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    #[serde(default)]
    pub eta: BTreeMap<String, f64>,
}

impl From<SkewMechanism> for MechanismSpec {
    fn from(m: SkewMechanism) -> Self {
        let kind = m.kind();
        let eta = kind
            .parameter_names()
            .iter()
            .map(|n| n.to_string())
            .zip(m.params())
            .collect();
        MechanismSpec { kind, eta }
    }
}

impl TryFrom<MechanismSpec> for SkewMechanism {
    type Error = DistributionError;

    fn try_from(spec: MechanismSpec) -> Result<Self, Self::Error> {
        let names = spec.kind.parameter_names();
        if let Some(extra) = spec.eta.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(DistributionError::UnknownParameter {
                kind: spec.kind,
                name: extra.clone(),
            });
        }
        let mut eta = Vec::with_capacity(names.len());
        for name in names {
            match spec.eta.get(*name) {
                Some(v) => eta.push(*v),
                None => {
                    return Err(DistributionError::MissingParameter {
                        kind: spec.kind,
                        name: name.to_string(),
                    })
                }
            }
        }
        SkewMechanism::from_params(spec.kind, &eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_round_trip() {
        let m = SkewMechanism::BetaTwo { a: 3.0, b: 1.0 };
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"kind":"beta_two","eta":{"a":3.0,"b":1.0}}"#);
        let back: SkewMechanism = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let sym: SkewMechanism = serde_json::from_str(r#"{"kind":"symmetric"}"#).unwrap();
        assert_eq!(sym, SkewMechanism::Symmetric);
    }

    #[test]
    fn json_rejects_bad_eta() {
        let r: Result<SkewMechanism, _> = serde_json::from_str(r#"{"kind":"beta_one","eta":{"gamma3":0.0}}"#);
        assert!(r.is_err());
        let r: Result<SkewMechanism, _> = serde_json::from_str(r#"{"kind":"beta_one","eta":{"gamma":2.0}}"#);
        assert!(r.is_err());
        let r: Result<SkewMechanism, _> = serde_json::from_str(r#"{"kind":"bernstein2","eta":{"omega1":0.6}}"#);
        assert!(r.is_err());
    }

    #[test]
    fn invariant_violations_rejected() {
        use MechanismKind::*;
        assert!(SkewMechanism::from_params(InverseScale, &[0.0]).is_err());
        assert!(SkewMechanism::from_params(InverseScale, &[1e-9]).is_err());
        assert!(SkewMechanism::from_params(BetaOne, &[-1.0]).is_err());
        assert!(SkewMechanism::from_params(BetaTwo, &[1.0, 0.0]).is_err());
        assert!(SkewMechanism::from_params(Bernstein2, &[0.5, 0.5]).is_err());
        assert!(SkewMechanism::from_params(Bernstein2, &[0.0, 0.5]).is_err());
        assert!(SkewMechanism::from_params(HiddenTruncation, &[f64::NAN]).is_err());
        assert!(SkewMechanism::from_params(FerreiraSteel, &[1.0, 2.0]).is_err());
        assert!(SkewMechanism::from_params(HiddenTruncation, &[-3.0]).is_ok());
    }

    #[test]
    fn symmetry_points_are_symmetric() {
        for k in MechanismKind::ALL {
            assert!(k.symmetry_point().is_symmetric());
            assert_eq!(k.symmetry_point().kind(), k);
            assert!(k.symmetry_point().validate().is_ok());
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!(MechanismKind::from_name("beta_two"), Some(MechanismKind::BetaTwo));
        assert_eq!(MechanismKind::from_name("M2"), Some(MechanismKind::HiddenTruncation));
        assert_eq!(MechanismKind::from_name("nope"), None);
    }
}
