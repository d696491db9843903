use std::f64::consts::LN_2;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01};

use crate::quadrature::{tanh_sinh, Integral};
use crate::special::ln_beta;

use super::{DistributionError, MechanismKind, SkewMechanism, StudentT};

const MEAN_TOL: f64 = 1e-11;
const MEAN_MAX_LEVEL: u32 = 9;

/// Skewed Student-t density `s(z) = f(z) · p(F(z) | η)`.
///
/// Mechanism constants (`ln C`, `ln B(a, b)`, `tanh γ`) are evaluated at
/// construction. The mean is computed on first use and cached.
#[derive(Debug, Clone)]
pub struct SkewedStudentT {
    base: StudentT,
    mech: SkewMechanism,
    konst: f64,
    mean: OnceLock<Result<f64, DistributionError>>,
}

impl PartialEq for SkewedStudentT {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.mech == other.mech
    }
}

impl SkewedStudentT {
    pub fn new(nu: f64, mech: SkewMechanism) -> Result<Self, DistributionError> {
        let base = StudentT::new(nu)?;
        mech.validate()?;
        let konst = match mech {
            SkewMechanism::InverseScale { gamma } => LN_2 - (gamma + 1.0 / gamma).ln(),
            SkewMechanism::BetaOne { gamma } => ln_beta(gamma, 1.0 / gamma),
            SkewMechanism::BetaTwo { a, b } => ln_beta(a, b),
            SkewMechanism::FerreiraSteel { gamma } => gamma.tanh(),
            _ => 0.0,
        };
        Ok(Self {
            base,
            mech,
            konst,
            mean: OnceLock::new(),
        })
    }

    pub fn base(&self) -> &StudentT {
        &self.base
    }

    pub fn mechanism(&self) -> &SkewMechanism {
        &self.mech
    }

    pub fn nu(&self) -> f64 {
        self.base.nu()
    }

    fn needs_cdf(&self) -> bool {
        matches!(
            self.mech.kind(),
            MechanismKind::BetaOne | MechanismKind::BetaTwo | MechanismKind::Bernstein2 | MechanismKind::FerreiraSteel
        )
    }

    /// `ln p(u | η)` where `u = F(z)`; `lower = u` and `upper = 1 − u` must
    /// both be supplied (only the mechanisms that need them read them).
    pub fn ln_weight_at(&self, z: f64, lower: f64, upper: f64) -> f64 {
        let nu = self.base.nu();
        match self.mech {
            SkewMechanism::Symmetric => 0.0,
            SkewMechanism::InverseScale { gamma } => {
                let s = if z < 0.0 { gamma } else { 1.0 / gamma };
                let z2 = z * z / nu;
                self.konst - 0.5 * (nu + 1.0) * ((s * s * z2).ln_1p() - z2.ln_1p())
            }
            SkewMechanism::HiddenTruncation { gamma } => LN_2 + self.base.cdf_pair(gamma * z).0.ln(),
            SkewMechanism::BetaOne { gamma } => {
                xlny(gamma - 1.0, lower) + xlny(1.0 / gamma - 1.0, upper) - self.konst
            }
            SkewMechanism::BetaTwo { a, b } => xlny(a - 1.0, lower) + xlny(b - 1.0, upper) - self.konst,
            SkewMechanism::Bernstein2 { omega1, omega2 } => {
                let omega3 = 1.0 - omega1 - omega2;
                (3.0 * (omega1 * upper * upper + 2.0 * omega2 * lower * upper + omega3 * lower * lower)).ln()
            }
            SkewMechanism::FerreiraSteel { .. } => (self.konst * (lower - upper)).ln_1p(),
        }
    }

    /// Skewing weight `p(u | η)` for `u ∈ (0, 1)`.
    pub fn weight(&self, u: f64) -> Result<f64, DistributionError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(DistributionError::ProbabilityOutOfRange(u));
        }
        Ok(self.weight_pair(u, 1.0 - u))
    }

    /// Weight at `u` given as the pair `(u, 1 − u)`.
    pub fn weight_pair(&self, lower: f64, upper: f64) -> f64 {
        let z = match self.mech.kind() {
            MechanismKind::InverseScale | MechanismKind::HiddenTruncation => self.base.quantile_pair(lower, upper),
            _ => 0.0,
        };
        self.ln_weight_at(z, lower, upper).exp()
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        let (lower, upper) = if self.needs_cdf() { self.base.cdf_pair(z) } else { (0.5, 0.5) };
        self.base.ln_pdf(z) + self.ln_weight_at(z, lower, upper)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        if let SkewMechanism::Symmetric = self.mech {
            return self.base.pdf(z);
        }
        let (lower, upper) = if self.needs_cdf() { self.base.cdf_pair(z) } else { (0.5, 0.5) };
        self.base.pdf(z) * self.ln_weight_at(z, lower, upper).exp()
    }

    /// `E(z)`, cached after the first successful or failed evaluation.
    pub fn mean(&self) -> Result<f64, DistributionError> {
        self.mean.get_or_init(|| self.mean_integral().map(|r| r.value)).clone()
    }

    /// `E(z) = ∫₀¹ F⁻¹(u) p(u | η) du` by double-exponential quadrature on
    /// each half of the unit interval.
    pub fn mean_integral(&self) -> Result<Integral, DistributionError> {
        let nu = self.base.nu();
        let min_nu = self.mech.min_nu_for_mean();
        if nu <= min_nu {
            return Err(DistributionError::MeanUndefined { nu, min_nu });
        }
        if self.mech.is_symmetric() {
            return Ok(Integral {
                value: 0.0,
                abs_error: 0.0,
                evaluations: 0,
            });
        }
        let integrand = |lower: f64, upper: f64| {
            let z = self.base.quantile_pair(lower, upper);
            z * self.ln_weight_at(z, lower, upper).exp()
        };
        let left = tanh_sinh(|_, dl, _| integrand(dl, 1.0 - dl), 0.0, 0.5, MEAN_TOL, MEAN_TOL, MEAN_MAX_LEVEL)?;
        let right = tanh_sinh(|_, _, dr| integrand(1.0 - dr, dr), 0.5, 1.0, MEAN_TOL, MEAN_TOL, MEAN_MAX_LEVEL)?;
        Ok(Integral {
            value: left.value + right.value,
            abs_error: left.abs_error + right.abs_error,
            evaluations: left.evaluations + right.evaluations,
        })
    }

    /// One draw. `U` is drawn from `p(u | η)` and mapped through `F⁻¹`:
    /// Beta and Bernstein weights via Gamma ratios (which keep `1 − U`
    /// exact), the `FerreiraSteel` weight as a uniform/linear mixture, hidden
    /// truncation by rejection under its bound of 2. The inverse-scale
    /// weight has unbounded ratio for small γ, so it uses the inverse cdf of
    /// `U` in closed form: `P(Z < 0) = 1/(1+γ²)`, `Z = −|T|/γ` or `γ|T|`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let base = &self.base;
        match self.mech {
            SkewMechanism::Symmetric => {
                let u: f64 = rng.sample(Open01);
                base.quantile_pair(u, 1.0 - u)
            }
            SkewMechanism::InverseScale { gamma } => {
                let u: f64 = rng.sample(Open01);
                let t = base.quantile_pair(0.5 * u, 1.0 - 0.5 * u).abs();
                let v: f64 = rng.sample(Open01);
                if v * (1.0 + gamma * gamma) < 1.0 {
                    -t / gamma
                } else {
                    gamma * t
                }
            }
            SkewMechanism::HiddenTruncation { .. } => loop {
                let u: f64 = rng.sample(Open01);
                let z = base.quantile_pair(u, 1.0 - u);
                let w = self.ln_weight_at(z, u, 1.0 - u).exp();
                let v: f64 = rng.sample(Open01);
                if 2.0 * v < w {
                    break z;
                }
            },
            SkewMechanism::BetaOne { gamma } => beta_quantile_draw(base, gamma, 1.0 / gamma, rng),
            SkewMechanism::BetaTwo { a, b } => beta_quantile_draw(base, a, b, rng),
            SkewMechanism::Bernstein2 { omega1, omega2 } => {
                let v: f64 = rng.sample(Open01);
                let (a, b) = if v < omega1 {
                    (1.0, 3.0)
                } else if v < omega1 + omega2 {
                    (2.0, 2.0)
                } else {
                    (3.0, 1.0)
                };
                beta_quantile_draw(base, a, b, rng)
            }
            SkewMechanism::FerreiraSteel { .. } => {
                let v: f64 = rng.sample(Open01);
                let l = self.konst.abs();
                if v < l {
                    let (a, b) = if self.konst > 0.0 { (2.0, 1.0) } else { (1.0, 2.0) };
                    beta_quantile_draw(base, a, b, rng)
                } else {
                    let u: f64 = rng.sample(Open01);
                    base.quantile_pair(u, 1.0 - u)
                }
            }
        }
    }

    /// `n` i.i.d. draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>, DistributionError> {
        if n == 0 {
            return Err(DistributionError::EmptySample);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n).map(|_| self.draw(&mut rng)).collect())
    }
}

// x · ln(y) with the convention 0 · ln(0) = 0.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn beta_quantile_draw<R: Rng + ?Sized>(base: &StudentT, a: f64, b: f64, rng: &mut R) -> f64 {
    let ga = Gamma::new(a, 1.0).expect("validated shape");
    let gb = Gamma::new(b, 1.0).expect("validated shape");
    loop {
        let x: f64 = ga.sample(rng);
        let y: f64 = gb.sample(rng);
        let s = x + y;
        let (lower, upper) = (x / s, y / s);
        if lower > 0.0 && upper > 0.0 && s.is_finite() {
            return base.quantile_pair(lower, upper);
        }
    }
}

/// `p(u | η)` for the mechanism on a Student-t base with `nu` degrees of
/// freedom (`nu` is only read by the inverse-scale and hidden-truncation
/// weights).
pub fn skew_weight(u: f64, mech: SkewMechanism, nu: f64) -> Result<f64, DistributionError> {
    SkewedStudentT::new(nu, mech)?.weight(u)
}

pub fn skewed_pdf(z: f64, dist: &SkewedStudentT) -> f64 {
    dist.pdf(z)
}

pub fn skewed_mean(dist: &SkewedStudentT) -> Result<f64, DistributionError> {
    dist.mean()
}

pub fn sample(dist: &SkewedStudentT, n: usize, seed: u64) -> Result<Vec<f64>, DistributionError> {
    dist.sample(n, seed)
}
