//! Goodness-of-fit and tail statistics for samples of rescaled estimates.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limitlaw::stable::standard_quantile;

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_distance<F: FnMut(f64) -> f64>(sample: &[f64], mut cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    Ok(d.min(1.0))
}

/// Empirical characteristic function of `sample` at `theta`.
pub fn empirical_cf(sample: &[f64], theta: f64) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &x in sample {
        let (s, c) = (theta * x).sin_cos();
        re += c;
        im += s;
    }
    Complex64::new(re, im) / sample.len() as f64
}

/// `max_θ |φ̂(θ) − φ(θ)|` over the grid.
pub fn cf_distance<F: FnMut(f64) -> Complex64>(sample: &[f64], mut cf: F, grid: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite() || *t == 0.0) {
        return Err(Error::Precondition("CF grid must be nonempty with finite nonzero entries".into()));
    }
    Ok(grid.iter().map(|&t| (empirical_cf(sample, t) - cf(t)).norm()).fold(0.0, f64::max))
}

/// Hill estimate of the tail index from the `k_top` largest values.
pub fn hill_estimator(sample: &[f64], k_top: usize) -> Result<f64> {
    if k_top == 0 || k_top >= sample.len() {
        return Err(Error::Precondition(format!("need 0 < k_top < n, got k_top={k_top}, n={}", sample.len())));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    let threshold = xs[k_top];
    if !(threshold > 0.0) {
        return Err(Error::Precondition(format!("order statistic {} is not positive ({threshold})", k_top + 1)));
    }
    let lt = threshold.ln();
    let mean = xs[..k_top].iter().map(|x| x.ln() - lt).sum::<f64>() / k_top as f64;
    if !(mean > 0.0) {
        return Err(Error::Numerical("tied upper order statistics".into()));
    }
    Ok(1.0 / mean)
}

/// Quantile-matching estimate of stable parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StableFit {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub delta: f64,
}

pub const FIT_MIN_SAMPLE: usize = 500;

const ALPHA_LO: f64 = 1.05;
const ALPHA_STEP: f64 = 0.05;
const N_ALPHA: usize = 20;
const N_BETA: usize = 11;
const LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Quantile shape functionals of the standard law on an (α, β) grid.
struct Table {
    /// `(q95 − q05)/(q75 − q25)`.
    spread: Vec<f64>,
    /// `(q95 + q05 − 2 q50)/(q95 − q05)`.
    skew: Vec<f64>,
    iqr: Vec<f64>,
    median: Vec<f64>,
}

fn grid_alpha(i: usize) -> f64 {
    ALPHA_LO + ALPHA_STEP * i as f64
}

fn grid_beta(j: usize) -> f64 {
    j as f64 / (N_BETA - 1) as f64
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Table { spread: vec![], skew: vec![], iqr: vec![], median: vec![] };
        for i in 0..N_ALPHA {
            // The top row is the Gaussian limit; invert just below α = 2.
            let alpha = grid_alpha(i).min(1.999_999);
            for j in 0..N_BETA {
                let q: Vec<f64> = LEVELS
                    .iter()
                    .map(|&u| standard_quantile(u, alpha, grid_beta(j)).expect("standard quantile"))
                    .collect();
                t.spread.push((q[4] - q[0]) / (q[3] - q[1]));
                t.skew.push((q[4] + q[0] - 2.0 * q[2]) / (q[4] - q[0]));
                t.iqr.push(q[3] - q[1]);
                t.median.push(q[2]);
            }
        }
        t
    })
}

/// Bilinear interpolation of a table column at continuous (α, β) indices.
fn interp(values: &[f64], a: f64, b: f64) -> f64 {
    let ai = a.clamp(0.0, (N_ALPHA - 1) as f64);
    let bi = b.clamp(0.0, (N_BETA - 1) as f64);
    let (i0, j0) = ((ai.floor() as usize).min(N_ALPHA - 2), (bi.floor() as usize).min(N_BETA - 2));
    let (fa, fb) = (ai - i0 as f64, bi - j0 as f64);
    let v = |i: usize, j: usize| values[i * N_BETA + j];
    (1.0 - fa) * ((1.0 - fb) * v(i0, j0) + fb * v(i0, j0 + 1)) + fa * ((1.0 - fb) * v(i0 + 1, j0) + fb * v(i0 + 1, j0 + 1))
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f is monotone on [lo, hi]; returns the nearer end when there is no sign change.
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return if flo.abs() < fhi.abs() { lo } else { hi };
    }
    let increasing = fhi > flo;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sample_quantile(sorted: &[f64], u: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * u;
    let i = h.floor() as usize;
    let f = h - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Estimates `(α, β, σ, δ)` by matching sample quantile ratios to a table
/// computed from the characteristic function. `α` is clamped to `[1.05, 2]`
/// and `|β| ≤ 1`.
pub fn stability_index_fit(sample: &[f64]) -> Result<StableFit> {
    if sample.len() < FIT_MIN_SAMPLE {
        return Err(Error::Precondition(format!("stable fit needs at least {FIT_MIN_SAMPLE} values, got {}", sample.len())));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let q: Vec<f64> = LEVELS.iter().map(|&u| sample_quantile(&xs, u)).collect();
    if !(q[3] > q[1]) {
        return Err(Error::Numerical("sample has zero interquartile range".into()));
    }
    let spread = (q[4] - q[0]) / (q[3] - q[1]);
    let mut skew = (q[4] + q[0] - 2.0 * q[2]) / (q[4] - q[0]);
    // The table covers β ≥ 0; negative skew maps through reflection.
    let sign = if skew < 0.0 { -1.0 } else { 1.0 };
    skew *= sign;
    let t = table();
    let beta_index = |a: f64| bisect(|b| interp(&t.skew, a, b) - skew, 0.0, (N_BETA - 1) as f64);
    let a = bisect(|a| interp(&t.spread, a, beta_index(a)) - spread, 0.0, (N_ALPHA - 1) as f64);
    let b = beta_index(a);
    let sigma = (q[3] - q[1]) / interp(&t.iqr, a, b);
    let delta = q[2] - sign * sigma * interp(&t.median, a, b);
    Ok(StableFit { alpha: grid_alpha(0) + ALPHA_STEP * a, beta: sign * b / (N_BETA - 1) as f64, sigma, delta })
}

/// Moment-based normality screen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalityCheck {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub pass: bool,
}

pub const SKEW_LIMIT: f64 = 0.2;
pub const KURTOSIS_LIMIT: f64 = 0.5;

/// Passes when `|skewness| < 0.2` and `|excess kurtosis| < 0.5`.
pub fn normality_check(sample: &[f64]) -> Result<NormalityCheck> {
    if sample.len() < FIT_MIN_SAMPLE {
        return Err(Error::Precondition(format!("normality screen needs at least {FIT_MIN_SAMPLE} values, got {}", sample.len())));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if !(m2 > 0.0) {
        return Err(Error::Numerical("sample has zero variance".into()));
    }
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    Ok(NormalityCheck { skewness, excess_kurtosis, pass: skewness.abs() < SKEW_LIMIT && excess_kurtosis.abs() < KURTOSIS_LIMIT })
}
