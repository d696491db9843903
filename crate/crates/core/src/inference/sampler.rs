use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use super::InferenceError;

/// An unnormalized log density on ℝᵈ. `−∞` marks points outside the support.
pub trait LogDensity {
    fn dim(&self) -> usize;
    fn ln_density(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> LogDensity for (usize, F) {
    fn dim(&self) -> usize {
        self.0
    }

    fn ln_density(&self, x: &[f64]) -> f64 {
        (self.1)(x)
    }
}

/// Which entries of the proposal covariance are learned during burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    Diagonal,
    #[default]
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Total iterations including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    /// Burn-in iterations between proposal covariance updates.
    pub adapt_window: usize,
    pub target_acceptance: f64,
    pub adaptation: Adaptation,
    /// Start from the posterior mode (Nelder–Mead) with a curvature-based
    /// proposal instead of the raw starting point with an identity one.
    pub find_mode: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            burn_in: 20_000,
            thinning: 1,
            seed: 0,
            adapt_window: 500,
            target_acceptance: 0.3,
            adaptation: Adaptation::Full,
            find_mode: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |m: &str| Err(InferenceError::InvalidConfig(m.to_string()));
        if self.iterations <= self.burn_in {
            return bad("iterations must exceed burn_in");
        }
        if self.thinning == 0 {
            return bad("thinning must be at least 1");
        }
        if self.adapt_window == 0 {
            return bad("adapt_window must be at least 1");
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return bad("target_acceptance must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Output of [`rwm`] on the sampler's own (unconstrained) scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RawChain {
    pub draws: Vec<Vec<f64>>,
    pub ln_density: Vec<f64>,
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    pub proposal_scale: f64,
    pub start: Vec<f64>,
}

struct NegLogDensity<'a, T: LogDensity + ?Sized>(&'a T);

impl<T: LogDensity + ?Sized> CostFunction for NegLogDensity<'_, T> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, ArgminError> {
        let v = self.0.ln_density(x);
        Ok(if v.is_finite() { -v } else { f64::MAX })
    }
}

/// Nelder–Mead maximization of `target` from `x0`, restarted once from the
/// best point to shake off a collapsed simplex.
pub fn find_mode<T: LogDensity + ?Sized>(target: &T, x0: &[f64]) -> Vec<f64> {
    let d = x0.len();
    let mut best = x0.to_vec();
    for step in [0.3, 0.05] {
        let mut simplex = vec![best.clone()];
        for i in 0..d {
            let mut v = best.clone();
            v[i] += step;
            simplex.push(v);
        }
        let Ok(solver) = NelderMead::new(simplex).with_sd_tolerance(1e-8) else {
            break;
        };
        let run = Executor::new(NegLogDensity(target), solver)
            .configure(|s| s.max_iters(150 * d as u64))
            .run();
        if let Ok(res) = run {
            if let Some(p) = res.state().get_best_param() {
                if target.ln_density(p) >= target.ln_density(&best) {
                    best = p.clone();
                }
            }
        }
    }
    best
}

/// Inverse of the negative Hessian at `x` by central differences, with
/// eigenvalues floored so that no direction gets variance above 1.
/// Returns `None` when the curvature cannot be evaluated.
pub fn curvature_covariance<T: LogDensity + ?Sized>(target: &T, x: &[f64]) -> Option<DMatrix<f64>> {
    let d = x.len();
    let h = 1e-3;
    let f0 = target.ln_density(x);
    let f = |dx: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for (i, s) in dx {
            p[*i] += s;
        }
        target.ln_density(&p)
    };
    let mut neg_h = DMatrix::zeros(d, d);
    for i in 0..d {
        let v = -(f(&[(i, h)]) - 2.0 * f0 + f(&[(i, -h)])) / (h * h);
        neg_h[(i, i)] = v;
        for j in 0..i {
            let v = -(f(&[(i, h), (j, h)]) - f(&[(i, h), (j, -h)]) - f(&[(i, -h), (j, h)]) + f(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            neg_h[(i, j)] = v;
            neg_h[(j, i)] = v;
        }
    }
    if !neg_h.iter().all(|v| v.is_finite()) {
        return None;
    }
    let eig = SymmetricEigen::new(neg_h);
    let inv = eig.eigenvalues.map(|l| 1.0 / l.max(1.0));
    Some(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose())
}

fn diagonal_only(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&m.diagonal())
}

fn empirical_covariance(draws: &[Vec<f64>]) -> DMatrix<f64> {
    let n = draws.len();
    let d = draws[0].len();
    let mut mean = DVector::zeros(d);
    for x in draws {
        mean += DVector::from_column_slice(x);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for x in draws {
        let c = DVector::from_column_slice(x) - &mean;
        cov += &c * c.transpose();
    }
    cov / (n as f64 - 1.0).max(1.0)
}

/// Random-walk Metropolis with Gaussian proposals `x + s L ε`.
///
/// During burn-in the log scale `s` follows a Robbins–Monro recursion on the
/// acceptance indicator and the covariance `L Lᵀ` is refreshed every
/// `adapt_window` iterations from the second half of the burn-in draws so
/// far. Both are frozen afterwards.
pub fn rwm<T: LogDensity + ?Sized>(target: &T, x0: &[f64], config: &SamplerConfig) -> Result<RawChain, InferenceError> {
    config.validate()?;
    let d = target.dim();
    if x0.len() != d {
        return Err(InferenceError::Dimension {
            expected: d,
            got: x0.len(),
        });
    }
    let initial = target.ln_density(x0);
    if !initial.is_finite() {
        return Err(InferenceError::InitialKernel(initial));
    }

    let (mut x, mut cov) = if config.find_mode {
        let mode = find_mode(target, x0);
        let cov = curvature_covariance(target, &mode).unwrap_or_else(|| DMatrix::identity(d, d) * 0.01);
        (mode, cov)
    } else {
        (x0.to_vec(), DMatrix::identity(d, d))
    };
    if config.adaptation == Adaptation::Diagonal {
        cov = diagonal_only(&cov);
    }
    let mut chol = cov.clone().cholesky().ok_or(InferenceError::InitialKernel(f64::NAN))?.l();
    let mut lp = target.ln_density(&x);
    let start = x.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ln_scale = (2.38 / (d as f64).sqrt()).ln();
    let kept = (config.iterations - config.burn_in).div_ceil(config.thinning);
    let mut draws = Vec::with_capacity(kept);
    let mut ln_density = Vec::with_capacity(kept);
    let mut burn_draws: Vec<Vec<f64>> = Vec::with_capacity(config.burn_in);
    let (mut acc_burn, mut acc_main) = (0usize, 0usize);
    let prior_weight = 10.0 * d as f64;

    let mut eps = DVector::zeros(d);
    for k in 0..config.iterations {
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        let step = &chol * &eps * ln_scale.exp();
        let proposal: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let lp_new = target.ln_density(&proposal);
        let u: f64 = rng.sample(Open01);
        let accepted = lp_new.is_finite() && u.ln() < lp_new - lp;
        if accepted {
            x = proposal;
            lp = lp_new;
        }
        if k < config.burn_in {
            acc_burn += accepted as usize;
            let indicator = if accepted { 1.0 } else { 0.0 };
            ln_scale += (indicator - config.target_acceptance) / ((k + 1) as f64).powf(0.6);
            ln_scale = ln_scale.clamp(-12.0, 5.0);
            burn_draws.push(x.clone());
            if (k + 1) % config.adapt_window == 0 && k + 1 >= 2 * config.adapt_window {
                let recent = &burn_draws[k.div_ceil(2)..];
                let n = recent.len() as f64;
                let mut emp = empirical_covariance(recent);
                if config.adaptation == Adaptation::Diagonal {
                    emp = diagonal_only(&emp);
                }
                let mixed = (emp * n + &cov * prior_weight) / (n + prior_weight);
                if let Some(c) = mixed.clone().cholesky() {
                    cov = mixed;
                    chol = c.l();
                }
            }
        } else {
            acc_main += accepted as usize;
            if (k - config.burn_in).is_multiple_of(config.thinning) {
                draws.push(x.clone());
                ln_density.push(lp);
            }
        }
    }
    Ok(RawChain {
        draws,
        ln_density,
        acceptance_rate: acc_main as f64 / (config.iterations - config.burn_in) as f64,
        burn_in_acceptance_rate: if config.burn_in == 0 {
            0.0
        } else {
            acc_burn as f64 / config.burn_in as f64
        },
        proposal_scale: ln_scale.exp(),
        start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn std_normal() -> (usize, impl Fn(&[f64]) -> f64) {
        (1, |x: &[f64]| -0.5 * x[0] * x[0])
    }

    fn config(iterations: usize, burn_in: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            iterations,
            burn_in,
            seed,
            find_mode: false,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn standard_normal_target() {
        let chain = rwm(&std_normal(), &[3.0], &config(105_000, 5_000, 7)).unwrap();
        let x: Vec<f64> = chain.draws.iter().map(|d| d[0]).collect();
        assert_eq!(x.len(), 100_000);
        let m = stats::mean(&x);
        let se = stats::mc_standard_error(&x);
        assert!(m.abs() < 4.0 * se, "mean {m}, se {se}");
        assert!((stats::variance(&x) - 1.0).abs() < 0.05, "var {}", stats::variance(&x));
        assert!(chain.acceptance_rate > 0.2 && chain.acceptance_rate < 0.4, "{}", chain.acceptance_rate);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = rwm(&std_normal(), &[0.5], &config(3000, 1000, 11)).unwrap();
        let b = rwm(&std_normal(), &[0.5], &config(3000, 1000, 11)).unwrap();
        assert_eq!(a, b);
        let c = rwm(&std_normal(), &[0.5], &config(3000, 1000, 12)).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn split_halves_agree() {
        let target = (2, |x: &[f64]| -0.5 * (x[0] * x[0] + (x[1] - 1.0).powi(2) / 4.0));
        let chain = rwm(&target, &[0.0, 0.0], &config(42_000, 2_000, 5)).unwrap();
        let half = chain.draws.len() / 2;
        for k in 0..2 {
            let a: Vec<f64> = chain.draws[..half].iter().map(|d| d[k]).collect();
            let b: Vec<f64> = chain.draws[half..].iter().map(|d| d[k]).collect();
            let se = (stats::mc_standard_error(&a).powi(2) + stats::mc_standard_error(&b).powi(2)).sqrt();
            assert!((stats::mean(&a) - stats::mean(&b)).abs() < 3.0 * se, "param {k}");
        }
    }

    #[test]
    fn constant_shift_leaves_chain_unchanged() {
        let shifted = (1, |x: &[f64]| -0.5 * x[0] * x[0] + 1234.5);
        let a = rwm(&std_normal(), &[0.2], &config(5000, 1000, 3)).unwrap();
        let b = rwm(&shifted, &[0.2], &config(5000, 1000, 3)).unwrap();
        assert_eq!(a.draws, b.draws);
    }

    #[test]
    fn rejects_bad_start_and_config() {
        let t = (1, |x: &[f64]| if x[0] > 0.0 { 0.0 } else { f64::NEG_INFINITY });
        assert!(matches!(rwm(&t, &[-1.0], &config(10, 5, 0)), Err(InferenceError::InitialKernel(_))));
        assert!(rwm(&t, &[1.0], &config(5, 5, 0)).is_err());
    }

    #[test]
    fn mode_and_curvature_of_gaussian() {
        let target = (2, |x: &[f64]| -0.5 * ((x[0] - 1.0).powi(2) / 0.04 + (x[1] + 2.0).powi(2) / 0.25));
        let m = find_mode(&target, &[0.0, 0.0]);
        assert!((m[0] - 1.0).abs() < 1e-4 && (m[1] + 2.0).abs() < 1e-4, "{m:?}");
        let c = curvature_covariance(&target, &m).unwrap();
        assert!((c[(0, 0)] - 0.04).abs() < 1e-5 && (c[(1, 1)] - 0.25).abs() < 1e-4);
    }
}
