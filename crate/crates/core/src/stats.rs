//! Small descriptive statistics used by the samplers and reports.

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n − 1` denominator (0 for fewer than two values).
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// Linear-interpolation quantile of already sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantiles(x: &[f64], ps: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    ps.iter().map(|p| quantile_sorted(&sorted, *p)).collect()
}

/// Integrated autocorrelation time `1 + 2 Σ ρ_k`, truncated with Geyer's
/// initial monotone positive sequence. Clamped to `[1/n, n]`.
pub fn integrated_autocorr_time(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let acov = |k: usize| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let g0 = acov(0);
    if g0 <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = acov(2 * k) + acov(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    ((2.0 * sum - g0) / g0).clamp(1.0 / n as f64, n as f64)
}

pub fn effective_sample_size(x: &[f64]) -> f64 {
    x.len() as f64 / integrated_autocorr_time(x)
}

/// Monte Carlo standard error of the mean of a correlated sequence.
pub fn mc_standard_error(x: &[f64]) -> f64 {
    (variance(x) * integrated_autocorr_time(x) / x.len() as f64).sqrt()
}

/// `ln Σ exp(x_i)` without overflow.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}
