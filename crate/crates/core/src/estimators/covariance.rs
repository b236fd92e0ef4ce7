//! Covariance of the field and the constants built from it.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{model_mu, EstimateWithError};
use crate::geometry::{lens_volume, unit_sphere_area};
use crate::grains::{grain_with_r, BaseShape, Family, GrainModel, HeavyTailLaw, MAX_DIMENSION};
use crate::rng::open01;
use crate::quad::{integrate, integrate_with_breaks, QuadOptions};

/// Cells of the inner grid used for overlaps of overlapping composite bases.
const INNER_GRID: usize = 4096;

fn norm(t: &[f64]) -> f64 {
    t.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Smallest `R` for which a grain and its translate by `t` can overlap.
fn overlap_threshold(model: &GrainModel, t: &[f64]) -> f64 {
    match model.family() {
        Family::Homothetic { .. } => (0.5 * norm(t)).powi(model.nu() as i32),
        _ => {
            let p = model.rect_exponent().expect("rectangular family");
            let from_w = if p < 1.0 {
                t[0].abs().powf(1.0 / (1.0 - p))
            } else if t[0].abs() >= 1.0 {
                f64::INFINITY
            } else {
                0.0
            };
            from_w.max(t[1].abs().powf(1.0 / p))
        }
    }
}

/// `Leb(Ξ ∩ (Ξ − t))` for a grain of scale `r` with a deterministic shape.
fn deterministic_overlap(model: &GrainModel, r: f64, t: &[f64]) -> Option<f64> {
    match model.family() {
        Family::Homothetic { base: BaseShape::UnitBall, .. } => Some(lens_volume(model.nu(), model.scale_of(r), norm(t))),
        Family::Homothetic { base: BaseShape::UnitCubeScaled, .. } => {
            let side = 2.0 * model.scale_of(r) / (model.nu() as f64).sqrt();
            Some(t.iter().map(|x| (side - x.abs()).max(0.0)).product())
        }
        Family::Homothetic { .. } => None,
        _ => {
            let (w, h) = model.rect_sides(r).expect("rectangular family");
            Some((w - t[0].abs()).max(0.0) * (h - t[1].abs()).max(0.0))
        }
    }
}

/// Monte Carlo `r_X(t) = E Leb(Ξ ∩ (Ξ − t))`.
///
/// Only `R` above the overlap threshold contributes. For Pareto laws `R` is
/// drawn from the tail tilted by `r`, so the weighted integrand
/// `overlap / R` is bounded and the estimator has finite variance. The
/// driving uniform is stratified with two draws per stratum, which also
/// gives the error estimate.
pub fn covariance_rx<R: Rng + ?Sized>(model: &GrainModel, t: &[f64], n_mc: usize, rng: &mut R) -> Result<EstimateWithError> {
    if t.len() != model.nu() {
        return Err(Error::Precondition(format!("lag has dimension {}, model has {}", t.len(), model.nu())));
    }
    let law = model.law();
    let r0 = overlap_threshold(model, t);
    let surv = if r0.is_finite() { law.survival(r0) } else { 0.0 };
    if surv == 0.0 {
        return Ok(EstimateWithError::exact(0.0));
    }
    let deterministic = model.base().is_none_or(|b| b.is_deterministic());
    if deterministic && matches!(law, HeavyTailLaw::Constant { .. }) {
        let v = deterministic_overlap(model, law.mean(), t).expect("deterministic shape");
        return Ok(EstimateWithError::exact(v));
    }
    // (weight, upper quantile of the proposal) for each law.
    let (weight, draw): (f64, Box<dyn Fn(f64) -> f64>) = match *law {
        HeavyTailLaw::Pareto { alpha, xm } => {
            let lo = xm.max(r0);
            let mass = alpha * xm.powf(alpha) * lo.powf(1.0 - alpha) / (alpha - 1.0);
            (mass, Box::new(move |q: f64| lo * q.powf(-1.0 / (alpha - 1.0))))
        }
        _ => (surv, Box::new(move |q: f64| law.upper_quantile_above(r0, q))),
    };
    let tilted = law.is_heavy_tailed();
    let strata = (n_mc / 2).max(1);
    let mut sum = 0.0;
    let mut var = 0.0;
    for j in 0..strata {
        let mut pair = [0.0; 2];
        for f in pair.iter_mut() {
            let q = (j as f64 + open01(rng)) / strata as f64;
            let r = draw(q.min(1.0));
            let overlap = match deterministic_overlap(model, r, t) {
                Some(v) => v,
                None => grain_with_r(model, r, rng)?.self_overlap(t, INNER_GRID),
            };
            *f = if tilted { overlap / r } else { overlap };
        }
        sum += 0.5 * (pair[0] + pair[1]);
        var += 0.25 * (pair[0] - pair[1]).powi(2);
    }
    let m = strata as f64;
    Ok(EstimateWithError { value: weight * sum / m, se: weight * var.sqrt() / m, budget: 2 * strata })
}

/// `r_X(t)` by quadrature over the law of `R`, for deterministic shapes.
pub fn covariance_rx_quad(model: &GrainModel, t: &[f64]) -> Result<f64> {
    if t.len() != model.nu() {
        return Err(Error::Precondition(format!("lag has dimension {}, model has {}", t.len(), model.nu())));
    }
    if model.base().is_some_and(|b| !b.is_deterministic()) {
        return Err(Error::Unsupported("quadrature covariance needs a deterministic base shape".into()));
    }
    let law = model.law();
    let r0 = overlap_threshold(model, t);
    let surv = if r0.is_finite() { law.survival(r0) } else { 0.0 };
    if surv == 0.0 {
        return Ok(0.0);
    }
    if let HeavyTailLaw::Constant { value } = law {
        return Ok(deterministic_overlap(model, *value, t).expect("deterministic shape"));
    }
    // With q = s^m the quantile's singularity at q = 0 is absorbed for
    // m > α/(α - 1); the overlap grows at most linearly in R.
    let m = match law.alpha() {
        Some(alpha) => 2.0 * alpha / (alpha - 1.0),
        None => 1.0,
    };
    let q = integrate(
        |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let r = law.upper_quantile_above(r0, s.powf(m));
            deterministic_overlap(model, r, t).expect("deterministic shape") * m * s.powf(m - 1.0)
        },
        0.0,
        1.0,
        QuadOptions::tol(1e-13, 1e-10),
    )?;
    Ok(surv * q.value)
}

/// `Cov(1(X(0) >= 1), 1(X(t) >= 1)) = e^{-2μ}(e^{a} - 1)` with `a = r_X(t)`.
pub fn cov_indicator(a: f64, mu: f64) -> f64 {
    (-2.0 * mu).exp() * a.exp_m1()
}

fn poisson_upper(mean: f64, m: usize) -> f64 {
    // P(N >= m) = 1 - Σ_{i<m} e^-mean mean^i / i!
    if m == 0 {
        return 1.0;
    }
    let mut term = (-mean).exp();
    let mut cdf = 0.0;
    for i in 0..m {
        if i > 0 {
            term *= mean / i as f64;
        }
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}

/// `Cov(1(X(0) >= k), 1(X(t) >= k))` from the representation
/// `(X(0), X(t)) = (N1 + N12, N2 + N12)` with independent Poisson variables of
/// means `μ - a`, `μ - a`, `a`.
///
/// The series over `N12` is finite: all terms with `N12 >= k` share the
/// factor one and are summed as `P(N12 >= k)`.
pub fn bivariate_exceedance_cov(a: f64, mu: f64, k: usize) -> f64 {
    let a = a.clamp(0.0, mu);
    let rest = mu - a;
    let mut both = poisson_upper(a, k);
    let mut pj = (-a).exp();
    for j in 0..k {
        if j > 0 {
            pj *= a / j as f64;
        }
        both += pj * poisson_upper(rest, k - j).powi(2);
    }
    both - poisson_upper(mu, k).powi(2)
}

fn cov_level(a: f64, mu: f64, k: usize) -> f64 {
    if k == 1 {
        cov_indicator(a, mu)
    } else {
        bivariate_exceedance_cov(a, mu, k)
    }
}

/// Power-law fit `log r_X(d z) ≈ intercept + slope · log d`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub distances: Vec<f64>,
    /// Direction-averaged covariance at each distance.
    pub values: Vec<EstimateWithError>,
}

/// Least-squares slope and intercept of `y` on `x`.
pub(crate) fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits the decay of `r_X` along the given unit directions.
pub fn covariance_decay_check<R: Rng + ?Sized>(
    model: &GrainModel,
    directions: &[Vec<f64>],
    distances: &[f64],
    n_mc: usize,
    rng: &mut R,
) -> Result<DecayFit> {
    if !model.law().is_heavy_tailed() {
        return Err(Error::Precondition("decay fit needs a Pareto law; bounded grains have compactly supported covariance".into()));
    }
    if distances.len() < 2 || directions.is_empty() {
        return Err(Error::Precondition("decay fit needs at least two distances and one direction".into()));
    }
    let mut values = Vec::with_capacity(distances.len());
    for &d in distances {
        let mut v = 0.0;
        let mut var = 0.0;
        for z in directions {
            let t: Vec<f64> = z.iter().map(|c| c * d).collect();
            let e = covariance_rx(model, &t, n_mc, rng)?;
            v += e.value;
            var += e.se * e.se;
        }
        let m = directions.len() as f64;
        values.push(EstimateWithError { value: v / m, se: var.sqrt() / m, budget: n_mc * directions.len() });
    }
    if values.iter().any(|v| !(v.value > 0.0)) {
        return Err(Error::Numerical("covariance vanished at a fitted distance".into()));
    }
    let lx: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.value.ln()).collect();
    let (slope, intercept) = ols(&lx, &ly);
    Ok(DecayFit { slope, intercept, distances: distances.to_vec(), values })
}

/// `ℓ(z) = c_f ∫_0^∞ E Leb(Ξ⁰ ∩ (Ξ⁰ − r^{-1/ν} z)) r^{-α} dr`.
///
/// With `d = r^{-1/ν}` and `v = d^γ`, `γ = ν(α − 1)`, the integral becomes
/// `(ν/γ) ∫_0^{2^γ} o(v^{1/γ} z) dv`, which has no endpoint singularity.
/// Random bases average `n_mc` per-sample integrals.
pub fn ell_direction<R: Rng + ?Sized>(model: &GrainModel, z: &[f64], n_mc: usize, rng: &mut R) -> Result<EstimateWithError> {
    let (Some(alpha), Some(c_f)) = (model.alpha(), model.law().c_f()) else {
        return Err(Error::Precondition("l(z) needs a Pareto law for R".into()));
    };
    let Family::Homothetic { base, .. } = model.family() else {
        return Err(Error::Precondition("l(z) needs a homothetic grain".into()));
    };
    let nu = model.nu();
    if z.len() != nu {
        return Err(Error::Precondition(format!("direction has dimension {}, model has {nu}", z.len())));
    }
    let zn = norm(z);
    let gamma = nu as f64 * (alpha - 1.0);
    let upper = 2f64.powf(gamma) / zn.powf(gamma);
    let opts = QuadOptions::tol(1e-12, 1e-9);
    let integral = |overlap: &dyn Fn(&[f64]) -> f64| -> Result<f64> {
        let mut t = [0.0; MAX_DIMENSION];
        let q = integrate(
            |v: f64| {
                let d = v.powf(1.0 / gamma);
                for a in 0..nu {
                    t[a] = d * z[a];
                }
                overlap(&t[..nu])
            },
            0.0,
            upper,
            opts,
        )?;
        Ok(c_f * nu as f64 / gamma * q.value)
    };
    if base.is_deterministic() {
        let v = integral(&|t: &[f64]| deterministic_overlap(model, 1.0, t).expect("deterministic shape"))?;
        return Ok(EstimateWithError::exact(v));
    }
    let mut vals = Vec::with_capacity(n_mc.max(2));
    for _ in 0..n_mc.max(2) {
        let g = grain_with_r(model, 1.0, rng)?;
        vals.push(integral(&|t: &[f64]| g.self_overlap(t, INNER_GRID))?);
    }
    Ok(EstimateWithError::from_samples(&vals))
}

/// `σ_k² = ∫_{R^ν} Cov(1(X(0) >= k), 1(X(t) >= k)) dt`.
pub fn sigma2(model: &GrainModel, k: usize) -> Result<f64> {
    sigma2_on(model, k, model.nu())
}

/// The same integral over the coordinate subspace of dimension `dim`
/// (the first `dim` coordinates).
pub fn sigma2_on(model: &GrainModel, k: usize, dim: usize) -> Result<f64> {
    let nu = model.nu();
    if k == 0 || dim == 0 || dim > nu {
        return Err(Error::Precondition(format!("need k >= 1 and 1 <= dim <= {nu}")));
    }
    if let Some(alpha) = model.alpha() {
        if nu as f64 * (alpha - 1.0) <= dim as f64 {
            return Err(Error::Precondition(format!(
                "covariance decays like |t|^-{:.3} and is not integrable over {dim} dimensions; \
                 the model is long-range dependent there and has no Gaussian variance",
                nu as f64 * (alpha - 1.0)
            )));
        }
    }
    if model.base().is_some_and(|b| !b.is_deterministic()) {
        return Err(Error::Unsupported("variance quadrature needs a deterministic base shape".into()));
    }
    let mu = model_mu(model, 0)?.mu.value;
    let f = |t: &[f64]| -> f64 { cov_level(covariance_rx_quad(model, t).unwrap_or(f64::NAN), mu, k) };
    let opts = QuadOptions::tol(1e-13, 1e-8);
    let law = model.law();
    let bounded = law.upper_bound().is_finite();
    let reach = if bounded { 2.0 * model.rho_bound(law.upper_bound()) } else { 8.0 * model.rho_bound(law.lower_bound()).max(1e-3) };

    let radial = |dir: &[f64]| -> Result<f64> {
        let mut t = [0.0; MAX_DIMENSION];
        let mut g = |rho: f64| -> f64 {
            for a in 0..nu {
                t[a] = if a < dim { rho * dir[a] } else { 0.0 };
            }
            f(&t[..nu]) * rho.powi(dim as i32 - 1)
        };
        let head = integrate_with_breaks(&mut g, 0.0, reach, &[], opts)?.value;
        if bounded {
            return Ok(head);
        }
        let tail = integrate(|w: f64| if w <= 0.0 { 0.0 } else { g(reach / w) * reach / (w * w) }, 0.0, 1.0, opts)?.value;
        Ok(head + tail)
    };

    let isotropic = model.base().is_some_and(|b| b.is_isotropic());
    let value = if isotropic || dim == 1 {
        let mut e1 = vec![0.0; dim];
        e1[0] = 1.0;
        unit_sphere_area(dim) * radial(&e1)?
    } else if dim == 2 {
        // Symmetric under t -> -t, so half the circle suffices.
        let mut err = None;
        let q = integrate(
            |theta: f64| match radial(&[theta.cos(), theta.sin()]) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            std::f64::consts::PI,
            QuadOptions::tol(1e-12, 1e-7),
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        2.0 * q.value
    } else {
        return Err(Error::Unsupported(format!("anisotropic variance quadrature over {dim} dimensions")));
    };
    if !value.is_finite() {
        return Err(Error::Numerical("variance quadrature produced a non-finite value".into()));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use std::f64::consts::{E, PI};

    fn disk(law: HeavyTailLaw) -> GrainModel {
        GrainModel::homothetic(2, BaseShape::UnitBall, law).unwrap()
    }

    #[test]
    fn unit_disk_covariance() {
        let m = disk(HeavyTailLaw::constant(1.0).unwrap());
        let mut rng = RngStream::new(1, 0);
        let at = |x: f64, rng: &mut RngStream| covariance_rx(&m, &[x, 0.0], 100, rng).unwrap();
        assert!((at(0.0, &mut rng).value - PI).abs() < 1e-12);
        assert!((at(1.0, &mut rng).value - (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0)).abs() < 1e-12);
        assert_eq!(at(2.5, &mut rng).value, 0.0);
    }

    #[test]
    fn monte_carlo_matches_quadrature() {
        let mut rng = RngStream::new(2, 0);
        let models = [
            disk(HeavyTailLaw::pareto(1.5, 0.4).unwrap()),
            GrainModel::homothetic(3, BaseShape::UnitCubeScaled, HeavyTailLaw::BoundedUniform).unwrap(),
            GrainModel::rect_xiex2(HeavyTailLaw::pareto(1.5, 1.0).unwrap(), 0.7).unwrap(),
        ];
        for m in &models {
            let t: Vec<f64> = (0..m.nu()).map(|a| 0.3 + 0.2 * a as f64).collect();
            let mc = covariance_rx(m, &t, 20_000, &mut rng).unwrap();
            let q = covariance_rx_quad(m, &t).unwrap();
            assert!((mc.value - q).abs() < 4.0 * mc.se.max(1e-9), "{} ± {} vs {q}", mc.value, mc.se);
        }
    }

    #[test]
    fn covariance_at_zero_is_mu_and_symmetric() {
        let m = disk(HeavyTailLaw::pareto(1.5, 1.0).unwrap());
        assert!((covariance_rx_quad(&m, &[0.0, 0.0]).unwrap() - 3.0 * PI).abs() < 1e-7);
        let a = covariance_rx_quad(&m, &[0.7, -0.2]).unwrap();
        let b = covariance_rx_quad(&m, &[-0.7, 0.2]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stratified_error_shrinks() {
        let m = disk(HeavyTailLaw::pareto(1.5, 0.4).unwrap());
        let mut rng = RngStream::new(3, 0);
        let a = covariance_rx(&m, &[1.0, 0.0], 1000, &mut rng).unwrap();
        let b = covariance_rx(&m, &[1.0, 0.0], 16_000, &mut rng).unwrap();
        assert!(b.se < a.se / 2.0);
    }

    #[test]
    fn power_law_decay() {
        let mut rng = RngStream::new(4, 0);
        for nu in [1usize, 2] {
            let m = GrainModel::homothetic(nu, BaseShape::UnitBall, HeavyTailLaw::pareto(1.5, 1.0).unwrap()).unwrap();
            let mut z = vec![0.0; nu];
            z[0] = 1.0;
            let fit = covariance_decay_check(&m, &[z], &[4.0, 8.0, 16.0, 32.0, 64.0], 4000, &mut rng).unwrap();
            assert!((fit.slope + nu as f64 * 0.5).abs() < 0.15, "nu {nu}: {}", fit.slope);
        }
        let bounded = disk(HeavyTailLaw::constant(1.0).unwrap());
        assert!(covariance_decay_check(&bounded, &[vec![1.0, 0.0]], &[1.0, 2.0], 10, &mut rng).is_err());
        assert_eq!(covariance_rx(&bounded, &[2.0, 0.0], 10, &mut rng).unwrap().value, 0.0);
    }

    #[test]
    fn ell_for_interval_base() {
        // ν = 1, base (−1, 1): ℓ = c_R 2^α / (α − 1).
        let m = GrainModel::homothetic(1, BaseShape::UnitBall, HeavyTailLaw::pareto(1.5, 0.5).unwrap()).unwrap();
        let mut rng = RngStream::new(0, 0);
        let l = ell_direction(&m, &[1.0], 0, &mut rng).unwrap().value;
        let c_r = 0.5f64.powf(1.5);
        assert!((l - c_r * 2f64.powf(1.5) / 0.5).abs() < 1e-8);
        // Independent dense Riemann sum in the original variable r.
        let c_f = 1.5 * c_r;
        let n = 2_000_000;
        let (lo, hi) = (0.5f64, 1e7f64);
        let (llo, lhi) = (lo.ln(), hi.ln());
        let h = (lhi - llo) / n as f64;
        let mut riemann = 0.0;
        for i in 0..n {
            let r = (llo + (i as f64 + 0.5) * h).exp();
            riemann += (2.0 - 1.0 / r).max(0.0) * r.powf(-1.5) * r * h;
        }
        // Tail beyond hi: ∫ 2 r^{-1.5} dr.
        riemann += 2.0 * 2.0 * hi.powf(-0.5);
        assert!((l - c_f * riemann).abs() < 0.005 * l, "{l} vs {}", c_f * riemann);
    }

    #[test]
    fn ell_matches_covariance_tail() {
        // Beyond the reach of the smallest grain r_X(t) = ℓ(z) |t|^{-ν(α−1)} exactly.
        let m = disk(HeavyTailLaw::pareto(1.5, 1.0).unwrap());
        let mut rng = RngStream::new(0, 0);
        let l = ell_direction(&m, &[0.6, 0.8], 0, &mut rng).unwrap().value;
        let t = 10.0;
        let r = covariance_rx_quad(&m, &[0.6 * t, 0.8 * t]).unwrap();
        assert!((r - l / t).abs() < 1e-7 * r, "{r} vs {}", l / t);
        let l2 = ell_direction(&m, &[1.0, 0.0], 0, &mut rng).unwrap().value;
        assert!((l - l2).abs() < 1e-9 * l);
    }

    #[test]
    fn ell_for_lilypond_is_nonnegative_and_roughly_isotropic() {
        let m = GrainModel::homothetic(2, BaseShape::Lilypond { intensity: 3.0 }, HeavyTailLaw::pareto(1.5, 1.0).unwrap()).unwrap();
        let mut rng = RngStream::new(5, 0);
        let a = ell_direction(&m, &[1.0, 0.0], 400, &mut rng).unwrap();
        let b = ell_direction(&m, &[0.0, 1.0], 400, &mut rng).unwrap();
        assert!(a.value > 0.0 && b.value > 0.0);
        assert!((a.value - b.value).abs() < 4.0 * (a.se.hypot(b.se)));
    }

    #[test]
    fn sigma2_interval_closed_form() {
        let m = GrainModel::homothetic(1, BaseShape::UnitBall, HeavyTailLaw::constant(0.5).unwrap()).unwrap();
        let s = sigma2(&m, 1).unwrap();
        assert!((s - (-2f64).exp() * (2.0 * E - 4.0)).abs() < 1e-9, "{s}");
    }

    #[test]
    fn sigma2_series_matches_closed_form() {
        for &(a, mu) in &[(0.0, 1.0), (0.3, 1.0), (1.0, 1.0), (0.01, 3.0), (2.5, 3.0)] {
            let closed = cov_indicator(a, mu);
            let series = bivariate_exceedance_cov(a, mu, 1);
            assert!((closed - series).abs() < 1e-12, "{a} {mu}");
        }
        let m = GrainModel::homothetic(1, BaseShape::UnitBall, HeavyTailLaw::constant(0.5).unwrap()).unwrap();
        let mu = 1.0;
        let opts = QuadOptions::tol(1e-13, 1e-10);
        let via_series = 2.0 * integrate(|x: f64| bivariate_exceedance_cov(covariance_rx_quad(&m, &[x]).unwrap(), mu, 1), 0.0, 1.0, opts).unwrap().value;
        assert!((via_series - sigma2(&m, 1).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn sigma2_level_two_by_brute_force_sum() {
        // Cov at full overlap equals Var(1(N >= k)).
        let mu: f64 = 1.3;
        let q: f64 = 1.0 - (-mu).exp() * (1.0 + mu);
        assert!((bivariate_exceedance_cov(mu, mu, 2) - q * (1.0 - q)).abs() < 1e-14);
        assert!(bivariate_exceedance_cov(0.0, mu, 3).abs() < 1e-15);
        // Double sum over (N1, N2, N12) as oracle.
        let a: f64 = 0.4;
        let pois = |m: f64, n: usize| (-m).exp() * m.powi(n as i32) / (1..=n).map(|i| i as f64).product::<f64>();
        let mut both = 0.0;
        for n12 in 0..40 {
            for n1 in 0..40 {
                for n2 in 0..40 {
                    if n1 + n12 >= 2 && n2 + n12 >= 2 {
                        both += pois(a, n12) * pois(mu - a, n1) * pois(mu - a, n2);
                    }
                }
            }
        }
        assert!((bivariate_exceedance_cov(a, mu, 2) - (both - q * q)).abs() < 1e-12);
    }

    #[test]
    fn sigma2_refuses_long_range_dependence() {
        let m = disk(HeavyTailLaw::pareto(1.5, 1.0).unwrap());
        assert!(matches!(sigma2(&m, 1), Err(Error::Precondition(_))));
        // Integrable along a line when ν(α − 1) > 1.
        let m = disk(HeavyTailLaw::pareto(1.8, 0.1).unwrap());
        assert!(sigma2_on(&m, 1, 1).unwrap() > 0.0);
    }

    #[test]
    fn sigma2_anisotropic_square() {
        // Square grain of side s: r_X(t) = (s − |t1|)(s − |t2|), checked by a
        // product-grid Riemann sum.
        let m = GrainModel::homothetic(2, BaseShape::UnitCubeScaled, HeavyTailLaw::constant(0.5).unwrap()).unwrap();
        let s = 2.0 * 0.5f64.sqrt() / 2f64.sqrt();
        let mu = s * s;
        let n = 1000;
        let h = 2.0 * s / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -s + (i as f64 + 0.5) * h;
                let y = -s + (j as f64 + 0.5) * h;
                sum += cov_indicator((s - x.abs()) * (s - y.abs()), mu) * h * h;
            }
        }
        let q = sigma2(&m, 1).unwrap();
        assert!((q - sum).abs() < 1e-5 * sum.max(1.0), "{q} vs {sum}");
    }
}
