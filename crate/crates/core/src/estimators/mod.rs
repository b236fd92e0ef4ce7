//! Volume-fraction estimators and model constants.

mod covariance;
mod tail;

pub use covariance::{
    bivariate_exceedance_cov, cov_indicator, covariance_decay_check, covariance_rx, covariance_rx_quad, ell_direction,
    sigma2, sigma2_on, DecayFit,
};
pub use tail::{
    fit_tail_slope, tail_expectation_mc, tail_expectation_quad, tail_threshold, tail_threshold_exponent, TailFit, MIN_FIT_POINTS,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Realization, Window, WindowShape};
use crate::geometry::unit_ball_volume;
use crate::grains::{grain_with_r, Family, GrainModel, MAX_DIMENSION};
use crate::rng::RngStream;

/// Estimate with its Monte Carlo or quadrature standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub se: f64,
    /// Points or samples used; 0 for closed forms.
    pub budget: usize,
}

impl EstimateWithError {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0, budget: 0 }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self { value: mean, se: (var / n as f64).sqrt(), budget: n }
    }
}

/// Seed of the internal stream used by model constants that need sampling.
const CONSTANTS_SEED: u64 = 0x6d6f_6465_6c5f_6d75;

/// `μ = E Leb(Ξ)` together with `p = 1 - e^-μ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuEstimate {
    pub mu: EstimateWithError,
    pub p: f64,
}

/// `p = 1 - e^-μ`.
pub fn coverage_probability(mu: f64) -> f64 {
    -(-mu).exp_m1()
}

/// `P(N >= k)` for `N ~ Poisson(μ)`: the expected fraction of `{X >= k}`.
pub fn exceedance_probability(mu: f64, k: usize) -> f64 {
    if k <= 1 {
        return if k == 0 { 1.0 } else { coverage_probability(mu) };
    }
    let mut term = (-mu).exp();
    let mut below = term;
    for j in 1..k {
        term *= mu / j as f64;
        below += term;
    }
    (1.0 - below).max(0.0)
}

/// `μ` in closed form when the base volume is deterministic, else by
/// averaging `n_mc` sampled base volumes.
pub fn model_mu(model: &GrainModel, n_mc: usize) -> Result<MuEstimate> {
    let mean_r = model.law().mean();
    let mu = match model.exact_mean_base_volume() {
        Some(v) => EstimateWithError::exact(mean_r * v),
        None => {
            if n_mc == 0 {
                return Err(Error::Config("random base shapes need a positive sample budget".into()));
            }
            let mut rng = RngStream::new(CONSTANTS_SEED, n_mc as u64);
            let vols: Vec<f64> = (0..n_mc)
                .map(|_| grain_with_r(model, 1.0, &mut rng).map(|g| g.volume()))
                .collect::<Result<_>>()?;
            let base = EstimateWithError::from_samples(&vols);
            EstimateWithError { value: mean_r * base.value, se: mean_r * base.se, budget: n_mc }
        }
    };
    if !(mu.value > 0.0) {
        return Err(Error::Config(format!("mean grain volume must be positive, got {}", mu.value)));
    }
    Ok(MuEstimate { mu, p: coverage_probability(mu.value) })
}

/// `c_Ξ = c_R E Leb(Ξ⁰)^α` for homothetic Pareto models.
pub fn c_xi(model: &GrainModel, n_mc: usize) -> Result<EstimateWithError> {
    let (Some(alpha), Some(c_r)) = (model.alpha(), model.c_r()) else {
        return Err(Error::Precondition("c_Xi needs a Pareto law for R".into()));
    };
    let Family::Homothetic { base, .. } = model.family() else {
        return Err(Error::Precondition("c_Xi needs a homothetic grain".into()));
    };
    if let Some(v) = base.exact_volume(model.nu()) {
        return Ok(EstimateWithError::exact(c_r * v.powf(alpha)));
    }
    let mut rng = RngStream::new(CONSTANTS_SEED ^ 0xa1, n_mc as u64);
    let vals: Vec<f64> = (0..n_mc.max(2))
        .map(|_| grain_with_r(model, 1.0, &mut rng).map(|g| g.volume().powf(alpha)))
        .collect::<Result<_>>()?;
    let m = EstimateWithError::from_samples(&vals);
    Ok(EstimateWithError { value: c_r * m.value, se: c_r * m.se, budget: m.budget })
}

/// Point budget that keeps the binomial standard error of a fraction near `p`
/// at or below 10% of `scale`, capped at `max_points`.
pub fn auto_point_budget(p: f64, scale: f64, max_points: usize) -> usize {
    let var = (p * (1.0 - p)).max(1e-12);
    let n = (var / (0.1 * scale).powi(2)).ceil();
    (n as usize).clamp(1, max_points.max(1))
}

fn binomial_estimate(hits: usize, n: usize) -> EstimateWithError {
    let p = hits as f64 / n as f64;
    EstimateWithError { value: p, se: (p * (1.0 - p) / n as f64).sqrt(), budget: n }
}

/// Sample volume fraction of `{X >= k}` in `λA` from `n_pts` uniform points.
pub fn volume_fraction<R: Rng + ?Sized>(rz: &Realization, k: usize, n_pts: usize, rng: &mut R) -> Result<EstimateWithError> {
    Ok(volume_fraction_levels(rz, k, n_pts, rng)?.pop().expect("k >= 1"))
}

/// Fractions for all levels `1..=k_max` from one common point set.
pub fn volume_fraction_levels<R: Rng + ?Sized>(
    rz: &Realization,
    k_max: usize,
    n_pts: usize,
    rng: &mut R,
) -> Result<Vec<EstimateWithError>> {
    if k_max == 0 || n_pts == 0 {
        return Err(Error::Config("level and point budget must be positive".into()));
    }
    let nu = rz.nu();
    let mut t = [0.0; MAX_DIMENSION];
    let mut hits = vec![0usize; k_max];
    for _ in 0..n_pts {
        rz.window().sample_point(rng, &mut t[..nu]);
        let x = rz.coverage_count(&t[..nu]);
        for h in hits.iter_mut().take(x.min(k_max)) {
            *h += 1;
        }
    }
    Ok(hits.into_iter().map(|h| binomial_estimate(h, n_pts)).collect())
}

/// Exact fractions of `{X >= k}`, `k = 1..=k_max`, for a one-dimensional window.
pub fn volume_fraction_exact(rz: &Realization, k_max: usize) -> Result<Vec<f64>> {
    if rz.nu() != 1 {
        return Err(Error::Unsupported(format!("exact line sweep needs nu = 1, got {}", rz.nu())));
    }
    let e = rz.window().half_extents()[0];
    Ok(rz.line_levels(-e, e, k_max).into_iter().map(|l| l / (2.0 * e)).collect())
}

/// Axis-aligned box `[lo, hi]` in unscaled coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l).max(0.0)).product()
    }

    fn overlaps(&self, other: &BoxRegion) -> bool {
        self.lo.iter().zip(&self.hi).zip(other.lo.iter().zip(&other.hi)).all(|((l1, h1), (l2, h2))| l1 < h2 && l2 < h1)
    }
}

/// Piecewise-constant test function `φ = Σ w_b 1_b` on disjoint boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pieces: Vec<(BoxRegion, f64)>,
}

impl TestFunction {
    pub fn new(pieces: Vec<(BoxRegion, f64)>) -> Result<Self> {
        for (i, (b, w)) in pieces.iter().enumerate() {
            if b.lo.len() != b.hi.len() || b.lo.iter().zip(&b.hi).any(|(l, h)| !(l < h)) {
                return Err(Error::Config(format!("box {i} is empty or malformed")));
            }
            if !w.is_finite() {
                return Err(Error::Config(format!("weight {i} is not finite")));
            }
            if pieces[..i].iter().any(|(o, _)| o.overlaps(b)) {
                return Err(Error::Config(format!("box {i} overlaps an earlier box")));
            }
        }
        Ok(Self { pieces })
    }

    /// Indicator of the window's box `A`.
    pub fn indicator(shape: &WindowShape) -> Result<Self> {
        match shape {
            WindowShape::Box { sides } => Self::new(vec![(
                BoxRegion { lo: sides.iter().map(|s| -s / 2.0).collect(), hi: sides.iter().map(|s| s / 2.0).collect() },
                1.0,
            )]),
            WindowShape::Ball { .. } => Err(Error::Unsupported("indicator of a ball is not piecewise constant on boxes".into())),
        }
    }

    pub fn pieces(&self) -> &[(BoxRegion, f64)] {
        &self.pieces
    }

    pub fn l1_norm(&self) -> f64 {
        self.pieces.iter().map(|(b, w)| w.abs() * b.volume()).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.pieces.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max)
    }
}

fn box_inside_window(b: &BoxRegion, shape: &WindowShape) -> bool {
    match shape {
        WindowShape::Box { sides } => b.lo.iter().zip(&b.hi).zip(sides).all(|((l, h), s)| *l >= -s / 2.0 && *h <= s / 2.0),
        WindowShape::Ball { radius } => {
            let far: f64 = b.lo.iter().zip(&b.hi).map(|(l, h)| l.abs().max(h.abs()).powi(2)).sum();
            far <= radius * radius
        }
    }
}

/// `X̂_{λ,k}(φ) = ∫ φ(t/λ) 1(X(t) >= k) dt`, with `n_pts` points per box.
pub fn weighted_functional<R: Rng + ?Sized>(
    rz: &Realization,
    phi: &TestFunction,
    k: usize,
    n_pts: usize,
    rng: &mut R,
) -> Result<EstimateWithError> {
    if phi.pieces.is_empty() {
        return Ok(EstimateWithError::exact(0.0));
    }
    let nu = rz.nu();
    let lambda = rz.window().lambda();
    let mut value = 0.0;
    let mut var = 0.0;
    let mut t = [0.0; MAX_DIMENSION];
    for (b, w) in &phi.pieces {
        if b.lo.len() != nu {
            return Err(Error::Config(format!("test function box has dimension {}, field has {nu}", b.lo.len())));
        }
        if !box_inside_window(b, rz.window().shape()) {
            return Err(Error::Config("test function support must lie inside the window A".into()));
        }
        let mut hits = 0usize;
        for _ in 0..n_pts {
            for a in 0..nu {
                t[a] = lambda * (b.lo[a] + (b.hi[a] - b.lo[a]) * rng.random::<f64>());
            }
            if rz.covered_at_least(&t[..nu], k) {
                hits += 1;
            }
        }
        let f = binomial_estimate(hits, n_pts);
        let factor = w * lambda.powi(nu as i32) * b.volume();
        value += factor * f.value;
        var += (factor * f.se).powi(2);
    }
    Ok(EstimateWithError { value, se: var.sqrt(), budget: n_pts * phi.pieces.len() })
}

/// Coordinate hyperplane `{t_i = 0, i > nu0}` with a sub-window `A_H` in the
/// first `nu0` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperplaneSpec {
    nu: usize,
    nu0: usize,
    region: WindowShape,
}

impl HyperplaneSpec {
    pub fn new(nu: usize, nu0: usize, region: WindowShape) -> Result<Self> {
        if nu0 == 0 || nu0 >= nu {
            return Err(Error::Config(format!("hyperplane dimension must be in 1..{nu}, got {nu0}")));
        }
        // Validates positivity of the region.
        Window::new(region.clone(), nu0, 1.0)?;
        Ok(Self { nu, nu0, region })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nu0(&self) -> usize {
        self.nu0
    }

    pub fn region(&self) -> &WindowShape {
        &self.region
    }

    /// `Leb_{nu0}(A_H)`.
    pub fn region_volume(&self) -> f64 {
        match &self.region {
            WindowShape::Box { sides } => sides.iter().product(),
            WindowShape::Ball { radius } => unit_ball_volume(self.nu0) * radius.powi(self.nu0 as i32),
        }
    }

    /// Whether `A_H × {0}` lies inside the unscaled window set `A`.
    pub fn fits_in(&self, window: &Window) -> bool {
        let zero_tail = vec![0.0; self.nu - self.nu0];
        let corners: Vec<Vec<f64>> = match &self.region {
            WindowShape::Box { sides } => {
                let n = 1usize << self.nu0;
                (0..n)
                    .map(|mask| {
                        let mut c: Vec<f64> =
                            sides.iter().enumerate().map(|(i, s)| if mask >> i & 1 == 1 { s / 2.0 } else { -s / 2.0 }).collect();
                        c.extend(&zero_tail);
                        c
                    })
                    .collect()
            }
            WindowShape::Ball { radius } => (0..self.nu0)
                .flat_map(|i| {
                    [1.0, -1.0].map(|sgn| {
                        let mut c = vec![0.0; self.nu];
                        c[i] = sgn * radius;
                        c
                    })
                })
                .collect(),
        };
        let unit = Window::new(window.shape().clone(), window.nu(), 1.0).expect("valid window");
        // Ball regions inside a box need every boundary point, which the box
        // test on the bounding corners covers conservatively.
        match (&self.region, window.shape()) {
            (WindowShape::Ball { radius }, WindowShape::Box { .. }) => {
                let e = unit.half_extents();
                e[..self.nu0].iter().all(|h| *h >= *radius)
            }
            _ => corners.iter().all(|c| unit.contains(c)),
        }
    }

    fn sample_point<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R, out: &mut [f64]) {
        let w = Window::new(self.region.clone(), self.nu0, lambda).expect("validated region");
        w.sample_point(rng, &mut out[..self.nu0]);
        for x in out[self.nu0..self.nu].iter_mut() {
            *x = 0.0;
        }
    }

    /// Interval covered by `λ A_H` when `nu0 = 1`.
    fn line_interval(&self, lambda: f64) -> (f64, f64) {
        let h = match &self.region {
            WindowShape::Box { sides } => sides[0] / 2.0,
            WindowShape::Ball { radius } => *radius,
        };
        (-lambda * h, lambda * h)
    }
}

fn check_hyperplane(rz: &Realization, h: &HyperplaneSpec) -> Result<()> {
    if h.nu != rz.nu() {
        return Err(Error::Config(format!("hyperplane is for nu = {}, field has nu = {}", h.nu, rz.nu())));
    }
    if !h.fits_in(rz.window()) {
        return Err(Error::Config("hyperplane sub-window is not contained in the window A".into()));
    }
    Ok(())
}

/// Fraction of `λ A_H × {0}` covered, from `n_pts` uniform points.
pub fn hyperplane_fraction<R: Rng + ?Sized>(
    rz: &Realization,
    h: &HyperplaneSpec,
    k: usize,
    n_pts: usize,
    rng: &mut R,
) -> Result<EstimateWithError> {
    check_hyperplane(rz, h)?;
    if k == 0 || n_pts == 0 {
        return Err(Error::Config("level and point budget must be positive".into()));
    }
    let lambda = rz.window().lambda();
    let mut t = [0.0; MAX_DIMENSION];
    let mut hits = 0;
    for _ in 0..n_pts {
        h.sample_point(lambda, rng, &mut t[..h.nu]);
        if rz.covered_at_least(&t[..h.nu], k) {
            hits += 1;
        }
    }
    Ok(binomial_estimate(hits, n_pts))
}

/// Exact hyperplane fractions for `k = 1..=k_max` when `nu0 = 1`.
pub fn hyperplane_fraction_exact(rz: &Realization, h: &HyperplaneSpec, k_max: usize) -> Result<Vec<f64>> {
    check_hyperplane(rz, h)?;
    if h.nu0 != 1 {
        return Err(Error::Unsupported(format!("exact line sweep needs nu0 = 1, got {}", h.nu0)));
    }
    let (lo, hi) = h.line_interval(rz.window().lambda());
    Ok(rz.line_levels(lo, hi, k_max).into_iter().map(|l| l / (hi - lo)).collect())
}

/// Normalization of the deviation `p̂ - p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RescaleMode {
    Stable { nu: usize, alpha: f64 },
    Gaussian { nu: usize },
    HyperStable { nu0: usize, alpha0: f64 },
    HyperGaussian { nu0: usize },
}

impl RescaleMode {
    pub fn exponent(&self) -> f64 {
        match *self {
            RescaleMode::Stable { nu, alpha } => nu as f64 * (1.0 - 1.0 / alpha),
            RescaleMode::Gaussian { nu } => nu as f64 / 2.0,
            RescaleMode::HyperStable { nu0, alpha0 } => nu0 as f64 * (1.0 - 1.0 / alpha0),
            RescaleMode::HyperGaussian { nu0 } => nu0 as f64 / 2.0,
        }
    }
}

/// `λ^e (p̂ - p)` with the exponent of `mode`.
pub fn rescale_stat(p_hat: f64, p: f64, lambda: f64, mode: RescaleMode) -> f64 {
    lambda.powf(mode.exponent()) * (p_hat - p)
}
