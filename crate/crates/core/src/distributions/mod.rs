//! Standardized Student-t base and its skewed versions.

mod mechanism;
mod skewed;
mod student_t;

use thiserror::Error;

use crate::quadrature::QuadratureError;

pub use mechanism::{MechanismKind, MechanismSpec, SkewMechanism, BOUNDARY_MARGIN};
pub use skewed::{sample, skew_weight, skewed_mean, skewed_pdf, SkewedStudentT};
pub use student_t::{t_cdf, t_pdf, t_quantile, StudentT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("degrees of freedom must be positive and finite, got {0}")]
    InvalidDegreesOfFreedom(f64),
    #[error("probability must lie in (0, 1), got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("{kind} takes {expected} skewness parameters, got {got}")]
    WrongParameterCount {
        kind: MechanismKind,
        expected: usize,
        got: usize,
    },
    #[error("{kind}: {name} = {value} violates {rule}")]
    InvalidSkewParameter {
        kind: MechanismKind,
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
    #[error("{kind} has no parameter named {name:?}")]
    UnknownParameter { kind: MechanismKind, name: String },
    #[error("{kind} requires parameter {name:?}")]
    MissingParameter { kind: MechanismKind, name: String },
    #[error("mean does not exist: nu = {nu} must exceed {min_nu}")]
    MeanUndefined { nu: f64, min_nu: f64 },
    #[error("mean quadrature failed: {0}")]
    MeanQuadrature(#[from] QuadratureError),
    #[error("sample size must be at least 1")]
    EmptySample,
}
