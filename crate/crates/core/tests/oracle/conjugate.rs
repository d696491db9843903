//! Normal mean with known unit variance and a standard normal prior: the
//! marginal likelihood is available in closed form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use skewgarch::inference::LogDensity;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub struct NormalMean {
    pub y: Vec<f64>,
}

impl NormalMean {
    pub fn simulate(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
        let noise = Normal::new(mu, 1.0).unwrap();
        Self {
            y: (0..n).map(|_| noise.sample(&mut rng)).collect(),
        }
    }

    /// y ~ N(0, I + 11ᵀ): |I + 11ᵀ| = 1 + n, (I + 11ᵀ)⁻¹ = I − 11ᵀ/(1 + n).
    pub fn exact_ln_marginal(&self) -> f64 {
        let n = self.y.len() as f64;
        let s: f64 = self.y.iter().sum();
        let ss: f64 = self.y.iter().map(|v| v * v).sum();
        -0.5 * n * LN_2PI - 0.5 * (1.0 + n).ln() - 0.5 * (ss - s * s / (1.0 + n))
    }
}

impl LogDensity for NormalMean {
    fn dim(&self) -> usize {
        1
    }

    fn ln_density(&self, x: &[f64]) -> f64 {
        let lik: f64 = self.y.iter().map(|v| -0.5 * (v - x[0]).powi(2) - 0.5 * LN_2PI).sum();
        lik - 0.5 * x[0] * x[0] - 0.5 * LN_2PI
    }
}
