//! Random GARCH-M instances for the brute-force likelihood comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skewgarch::garch::{log_likelihood, simulate, GarchParams, InitPolicy};
use skewgarch::{MechanismKind, SkewMechanism};

use super::Oracle;

pub fn random_mechanism(kind: MechanismKind, rng: &mut ChaCha8Rng) -> SkewMechanism {
    let eta: Vec<f64> = match kind {
        MechanismKind::Symmetric => vec![],
        MechanismKind::InverseScale | MechanismKind::BetaOne => vec![rng.random_range(0.5..2.0)],
        MechanismKind::HiddenTruncation | MechanismKind::FerreiraSteel => vec![rng.random_range(-2.0..2.0)],
        MechanismKind::BetaTwo => vec![rng.random_range(0.6..4.0), rng.random_range(0.6..4.0)],
        MechanismKind::Bernstein2 => {
            let w1: f64 = rng.random_range(0.01..0.9);
            let w2: f64 = rng.random_range(0.01..(0.99 - w1));
            vec![w1, w2]
        }
    };
    SkewMechanism::from_params(kind, &eta).unwrap()
}

pub struct Comparison {
    pub instance: usize,
    pub mechanism: SkewMechanism,
    pub params: GarchParams,
    pub t: usize,
    pub library: f64,
    pub oracle: f64,
}

impl Comparison {
    pub fn abs_error(&self) -> f64 {
        (self.library - self.oracle).abs()
    }
}

/// `n` instances cycling through the mechanisms, T in 1..=50, ν in
/// [2.5, 30), each scored by the library and by [`Oracle`].
pub fn compare_random_instances(n: usize, seed: u64) -> Vec<Comparison> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let kind = MechanismKind::ALL[i % MechanismKind::ALL.len()];
            let mech = random_mechanism(kind, &mut rng);
            let p = GarchParams::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(0.01..1.0),
                rng.random_range(0.0..0.3),
                rng.random_range(0.0..0.9),
                rng.random_range(2.5..30.0),
            )
            .unwrap();
            let h1 = rng.random_range(0.2..3.0);
            let t = rng.random_range(1..=50);
            let y = simulate(&p, &mech, t, i as u64, InitPolicy::Fixed(h1)).unwrap();
            let library = log_likelihood(&y, &p, &mech, InitPolicy::Fixed(h1)).unwrap();
            let oracle = Oracle::new(p.nu, mech).log_likelihood(y.values(), p.alpha, p.alpha0, p.alpha1, p.beta1, h1);
            Comparison {
                instance: i,
                mechanism: mech,
                params: p,
                t,
                library,
                oracle,
            }
        })
        .collect()
}
