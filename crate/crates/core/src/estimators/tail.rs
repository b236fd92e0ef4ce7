//! `E Leb(Ξ ∩ {|t| > λ})`, the far-field mass of the grain, and the fit of
//! its decay exponent.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::covariance::ols;
use crate::estimators::EstimateWithError;
use crate::grains::{grain_with_r, GrainModel, HeavyTailLaw};
use crate::quad::{integrate, QuadOptions};
use crate::rng::open01;

/// Grid cells for tail volumes of shapes without closed forms.
const TAIL_GRID: usize = 1 << 16;

/// Smallest `R` whose grain can reach beyond distance `lambda`.
pub fn tail_threshold(model: &GrainModel, lambda: f64) -> f64 {
    let law = model.law();
    let lo0 = law.lower_bound();
    if model.rho_bound(lo0.max(f64::MIN_POSITIVE)) > lambda {
        return lo0;
    }
    let (mut lo, mut hi) = (lo0.max(1e-300), lo0.max(1.0));
    while model.rho_bound(hi) <= lambda {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.rho_bound(mid) > lambda {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

fn tail_at(model: &GrainModel, r: f64, lambda: f64) -> Result<f64> {
    // Deterministic shapes ignore the generator.
    let mut rng = crate::rng::RngStream::new(0, 0);
    Ok(grain_with_r(model, r, &mut rng)?.tail_volume(lambda, TAIL_GRID))
}

/// Tail mass by quadrature over the law of `R`; deterministic shapes only.
pub fn tail_expectation_quad(model: &GrainModel, lambda: f64) -> Result<f64> {
    if model.base().is_some_and(|b| !b.is_deterministic()) {
        return Err(Error::Unsupported("quadrature tail mass needs a deterministic shape".into()));
    }
    let law = model.law();
    let r0 = tail_threshold(model, lambda);
    let surv = if r0.is_finite() { law.survival(r0) } else { 0.0 };
    if surv == 0.0 {
        return Ok(0.0);
    }
    if let HeavyTailLaw::Constant { value } = *law {
        return tail_at(model, value, lambda);
    }
    let m = match law.alpha() {
        Some(alpha) => 2.0 * alpha / (alpha - 1.0),
        None => 1.0,
    };
    let mut err = None;
    let q = integrate(
        |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let r = law.upper_quantile_above(r0, s.powf(m));
            match tail_at(model, r, lambda) {
                Ok(v) => v * m * s.powf(m - 1.0),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        QuadOptions::tol(1e-300, 1e-10),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(surv * q.value)
}

/// Tail mass by sampling grains. Pareto sizes are drawn from the `r`-tilted
/// tail above the reach threshold so each draw contributes a bounded ratio.
pub fn tail_expectation_mc<R: Rng + ?Sized>(model: &GrainModel, lambda: f64, n_mc: usize, rng: &mut R) -> Result<EstimateWithError> {
    let law = *model.law();
    let r0 = tail_threshold(model, lambda);
    let surv = if r0.is_finite() { law.survival(r0) } else { 0.0 };
    if surv == 0.0 {
        return Ok(EstimateWithError::exact(0.0));
    }
    let n = n_mc.max(2);
    let (weight, tilted) = match law {
        HeavyTailLaw::Pareto { alpha, xm } => {
            let lo = xm.max(r0);
            (alpha * xm.powf(alpha) * lo.powf(1.0 - alpha) / (alpha - 1.0), true)
        }
        _ => (surv, false),
    };
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let q = (i as f64 + open01(rng)) / n as f64;
        let r = match law {
            HeavyTailLaw::Pareto { alpha, xm } => xm.max(r0) * q.powf(-1.0 / (alpha - 1.0)),
            _ => law.upper_quantile_above(r0, q),
        };
        let g = grain_with_r(model, r, rng)?.tail_volume(lambda, TAIL_GRID);
        vals.push(weight * if tilted { g / r } else { g });
    }
    let mut e = EstimateWithError::from_samples(&vals);
    e.budget = n;
    Ok(e)
}

/// Log-log slope of the tail mass over a grid of distances.
#[derive(Clone, Debug, PartialEq)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
}

/// Minimum number of grid points for a slope fit.
pub const MIN_FIT_POINTS: usize = 4;

pub fn fit_tail_slope(lambdas: &[f64], values: &[f64]) -> Result<TailFit> {
    if lambdas.len() < MIN_FIT_POINTS || lambdas.len() != values.len() {
        return Err(Error::Config(format!("slope fit needs at least {MIN_FIT_POINTS} grid points, got {}", lambdas.len())));
    }
    if values.iter().any(|v| !(*v > 0.0)) || lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Numerical("tail mass vanished on the grid; choose smaller distances".into()));
    }
    let lx: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = ols(&lx, &ly);
    Ok(TailFit { slope, intercept, lambdas: lambdas.to_vec(), values: values.to_vec() })
}

/// Decay exponent the tail mass must beat: `(1 − α) ν / α`.
pub fn tail_threshold_exponent(nu: usize, alpha: f64) -> f64 {
    (1.0 - alpha) * nu as f64 / alpha
}
