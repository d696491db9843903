//! Brute-force reference implementation of the skewed GARCH-M likelihood.
//!
//! Deliberately shares nothing with the library's density code: the
//! Student-t pieces come from `statrs`, the weights are written straight
//! from their definitions, and `E(z)` is integrated in z-space as
//! `∫ z s(z) dz` instead of through the quantile function.
#![allow(dead_code)]

pub mod conjugate;
pub mod instances;

use skewgarch::quadrature::gauss_kronrod_real_line;
use skewgarch::SkewMechanism;
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};
use statrs::function::beta::ln_beta;

pub struct Oracle {
    t: StudentsT,
    mech: SkewMechanism,
}

impl Oracle {
    pub fn new(nu: f64, mech: SkewMechanism) -> Self {
        Self {
            t: StudentsT::new(0.0, 1.0, nu).unwrap(),
            mech,
        }
    }

    // u^{a−1} (1−u)^{b−1} / B(a, b) with 1 − u passed separately so the
    // upper tail keeps its relative precision
    fn beta_pdf(a: f64, b: f64, u: f64, v: f64) -> f64 {
        ((a - 1.0) * u.ln() + (b - 1.0) * v.ln() - ln_beta(a, b)).exp()
    }

    /// Skewed density s(z).
    pub fn density(&self, z: f64) -> f64 {
        let f = |x: f64| self.t.pdf(x);
        let (u, v) = (self.t.cdf(z), self.t.cdf(-z));
        match self.mech {
            SkewMechanism::Symmetric => f(z),
            SkewMechanism::InverseScale { gamma } => {
                let c = 2.0 / (gamma + 1.0 / gamma);
                if z < 0.0 {
                    c * f(gamma * z)
                } else {
                    c * f(z / gamma)
                }
            }
            SkewMechanism::HiddenTruncation { gamma } => 2.0 * f(z) * self.t.cdf(gamma * z),
            SkewMechanism::BetaOne { gamma } => f(z) * Self::beta_pdf(gamma, 1.0 / gamma, u, v),
            SkewMechanism::BetaTwo { a, b } => f(z) * Self::beta_pdf(a, b, u, v),
            SkewMechanism::Bernstein2 { omega1, omega2 } => {
                let omega3 = 1.0 - omega1 - omega2;
                let w = omega1 * Self::beta_pdf(1.0, 3.0, u, v)
                    + omega2 * Self::beta_pdf(2.0, 2.0, u, v)
                    + omega3 * Self::beta_pdf(3.0, 1.0, u, v);
                f(z) * w
            }
            SkewMechanism::FerreiraSteel { gamma } => f(z) * (1.0 + gamma.tanh() * (u - v)),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.mech.is_symmetric() {
            return 0.0;
        }
        // each half-line through z = e^s so power-law tails become
        // exponential ones; nodes where u rounds to 0 or 1 can give 0 · ∞
        // and the true integrand there is negligible
        let half = |sign: f64| {
            let integrand = |s: f64| {
                let z = s.exp();
                let v = z * z * self.density(sign * z);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            gauss_kronrod_real_line(integrand, 1e-13, 1e-13, 100_000)
                .unwrap_or_else(|e| panic!("{:?} nu={}: {e:?}", self.mech, self.t.freedom()))
                .value
        };
        half(1.0) - half(-1.0)
    }

    /// Log-likelihood recomputed observation by observation.
    pub fn log_likelihood(&self, y: &[f64], alpha: f64, alpha0: f64, alpha1: f64, beta1: f64, h1: f64) -> f64 {
        let e = self.mean();
        let mut h = h1;
        let mut total = 0.0;
        for &yj in y {
            let mu = (alpha + e) * h.sqrt();
            let u = yj - mu;
            let zstar = u / h.sqrt();
            total += (self.density(zstar + e) / h.sqrt()).ln();
            h = alpha0 + alpha1 * u * u + beta1 * h;
        }
        total
    }
}
