//! Bayesian estimation and comparison of GARCH(1,1)-in-Mean models whose
//! innovations follow skewed versions of the standardized Student-t.
//!
//! Module map:
//!
//! - [`data`]: price / risk-free ingestion and excess returns.
//! - [`distributions`]: Student-t base, the seven skewing mechanisms, the
//!   skewed density, its mean and a sampler.
//! - [`garch`]: volatility filter, log-likelihood and simulation.
//! - [`inference`]: priors, posterior kernel, random-walk Metropolis and
//!   risk-premium summaries.
//! - [`model_selection`]: marginal likelihood estimation and posterior
//!   model probabilities.

pub mod data;
pub mod distributions;
pub mod garch;
pub mod inference;
pub mod model_selection;
pub mod quadrature;
pub mod special;
pub mod stats;

pub use distributions::{MechanismKind, SkewMechanism, SkewedStudentT, StudentT};
