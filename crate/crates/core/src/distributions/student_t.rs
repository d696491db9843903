use std::f64::consts::PI;

use crate::special::{beta_reg_pair, ln_beta, ln_gamma, normal_quantile};

use super::DistributionError;

/// Standardized Student-t with zero mode and unit inverse precision.
///
/// The normalizing constant and `ln B(ν/2, 1/2)` are computed once at
/// construction; every cdf call reuses them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    nu: f64,
    ln_norm: f64,
    ln_beta_half: f64,
}

impl StudentT {
    pub fn new(nu: f64) -> Result<Self, DistributionError> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(DistributionError::InvalidDegreesOfFreedom(nu));
        }
        let ln_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (PI * nu).ln();
        Ok(Self {
            nu,
            ln_norm,
            ln_beta_half: ln_beta(0.5 * nu, 0.5),
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        self.ln_norm - 0.5 * (self.nu + 1.0) * (z * z / self.nu).ln_1p()
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.ln_pdf(z).exp()
    }

    /// `(F(z), 1 − F(z))`, each accurate in its own tail.
    pub fn cdf_pair(&self, z: f64) -> (f64, f64) {
        if z.is_nan() {
            return (f64::NAN, f64::NAN);
        }
        let z2 = z * z;
        let (x, y) = if z2.is_finite() {
            let d = self.nu + z2;
            (self.nu / d, z2 / d)
        } else {
            (0.0, 1.0)
        };
        let tail = 0.5 * beta_reg_pair(0.5 * self.nu, 0.5, x, y, self.ln_beta_half).0;
        if z < 0.0 {
            (tail, 1.0 - tail)
        } else {
            (1.0 - tail, tail)
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        self.cdf_pair(z).0
    }

    /// Quantile function for `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64, DistributionError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(DistributionError::ProbabilityOutOfRange(u));
        }
        Ok(self.quantile_pair(u, 1.0 - u))
    }

    /// Quantile given both `u` and `1 − u`; the smaller of the two is used
    /// so that the far tails keep full relative precision.
    pub fn quantile_pair(&self, lower: f64, upper: f64) -> f64 {
        if lower == upper {
            return 0.0;
        }
        if lower < upper {
            -self.tail_root(lower)
        } else {
            self.tail_root(upper)
        }
    }

    // P(T > w) for w ≥ 0.
    fn upper_tail(&self, w: f64) -> f64 {
        self.cdf_pair(-w).0
    }

    // Solves P(T > w) = p for w ≥ 0, p ∈ (0, 1/2), by Newton steps kept inside
    // a bracket that is tightened with every evaluation.
    fn tail_root(&self, p: f64) -> f64 {
        if p >= 0.5 {
            return 0.0;
        }
        let nu = self.nu;
        let ln_p = p.ln();

        // two starting values: Cornish–Fisher from the normal quantile, and
        // the power-law tail F(−w) ≈ K ν^{(ν−1)/2} w^{−ν}
        let x = -normal_quantile(p);
        let x3 = x * x * x;
        let cf = x + (x3 + x) / (4.0 * nu) + (5.0 * x3 * x * x + 16.0 * x3 + 3.0 * x) / (96.0 * nu * nu);
        let power = ((self.ln_norm + 0.5 * (nu - 1.0) * nu.ln() - ln_p) / nu).exp();
        let mut lo = 0.0_f64; // upper_tail(lo) > p
        let mut hi = f64::INFINITY; // upper_tail(hi) < p
        let mut best = (f64::INFINITY, cf);
        for guess in [cf, power] {
            if !(guess.is_finite() && guess > 0.0) {
                continue;
            }
            let g = self.upper_tail(guess);
            if g > p {
                lo = lo.max(guess);
            } else {
                hi = hi.min(guess);
            }
            let miss = (g.ln() - ln_p).abs();
            if miss < best.0 {
                best = (miss, guess);
            }
        }
        if !hi.is_finite() {
            // both guesses undershoot; grow geometrically
            let mut w = lo.max(1.0);
            loop {
                w *= 4.0;
                if self.upper_tail(w) < p || !w.is_finite() {
                    hi = w;
                    break;
                }
                lo = w;
            }
        }

        let mut w = best.1.clamp(lo, hi);
        for _ in 0..200 {
            let g = self.upper_tail(w);
            if g == p {
                return w;
            }
            if g > p {
                lo = w;
            } else {
                hi = w;
            }
            let dens = self.pdf(w);
            // Newton on ln P(T > w) in ln w; exact for a pure power-law tail
            // and well behaved near the centre as well.
            let step = if w > 1.0 && dens > 0.0 && g > 0.0 {
                let slope = w * dens / g;
                w * ((g.ln() - ln_p) / slope).exp()
            } else if dens > 0.0 {
                w + (g - p) / dens
            } else {
                f64::NAN
            };
            let next = if step.is_finite() && step > lo && step < hi {
                step
            } else if lo > 0.0 && hi > 4.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
                return next;
            }
            w = next;
        }
        w
    }
}

/// Density of the standardized Student-t at `z`.
pub fn t_pdf(z: f64, nu: f64) -> Result<f64, DistributionError> {
    Ok(StudentT::new(nu)?.pdf(z))
}

/// Cumulative distribution function of the standardized Student-t.
pub fn t_cdf(z: f64, nu: f64) -> Result<f64, DistributionError> {
    Ok(StudentT::new(nu)?.cdf(z))
}

/// Inverse of [`t_cdf`].
pub fn t_quantile(u: f64, nu: f64) -> Result<f64, DistributionError> {
    StudentT::new(nu)?.quantile(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_closed_forms() {
        assert!((t_pdf(0.0, 1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((t_cdf(1.0, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((t_quantile(0.75, 1.0).unwrap() - 1.0).abs() < 1e-13);
        // arctan closed form in the far tail
        let z: f64 = -1e6;
        let exact = 0.5 + z.atan() / PI;
        let got = t_cdf(z, 1.0).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn pdf_symmetric_and_peaked() {
        let t = StudentT::new(5.0).unwrap();
        assert_eq!(t.pdf(1.7), t.pdf(-1.7));
        assert!(t.pdf(0.0) > t.pdf(0.01));
    }

    #[test]
    fn pdf_matches_high_precision_value() {
        // mpmath at 50 digits: gamma(2)/(gamma(1.5)*sqrt(3*pi)) * (4/3)^(-2)
        let expected = 0.206_748_335_783_172_1_f64;
        assert!((t_pdf(1.0, 3.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn cdf_at_zero_is_half() {
        for nu in [0.5, 1.0, 2.3, 30.0, 1e4] {
            assert_eq!(t_cdf(0.0, nu).unwrap(), 0.5);
        }
    }

    #[test]
    fn quantile_median_is_zero() {
        assert_eq!(t_quantile(0.5, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn quantile_rejects_boundary() {
        assert!(matches!(t_quantile(0.0, 3.0), Err(DistributionError::ProbabilityOutOfRange(_))));
        assert!(matches!(t_quantile(1.0, 3.0), Err(DistributionError::ProbabilityOutOfRange(_))));
        assert!(matches!(t_pdf(0.0, 0.0), Err(DistributionError::InvalidDegreesOfFreedom(_))));
        assert!(matches!(t_cdf(0.0, -2.0), Err(DistributionError::InvalidDegreesOfFreedom(_))));
    }

    #[test]
    fn quantile_inverts_cdf_over_grid() {
        let mut us = vec![1e-6, 1.0 - 1e-6];
        us.extend((1..100).map(|k| k as f64 / 100.0));
        for nu in [0.7, 1.0, 1.5, 2.0, 5.0, 30.0, 300.0] {
            let t = StudentT::new(nu).unwrap();
            for &u in &us {
                let z = t.quantile(u).unwrap();
                assert!((t.cdf(z) - u).abs() < 1e-10, "nu={nu} u={u}");
            }
        }
    }

    #[test]
    fn quantile_deep_tail_relative_accuracy() {
        let t = StudentT::new(2.5).unwrap();
        for p in [1e-30, 1e-100, 1e-250] {
            let z = t.quantile_pair(p, 1.0);
            let back = t.cdf_pair(z).0;
            assert!(((back - p) / p).abs() < 1e-10, "p={p}: {back}");
        }
    }
}
