//! Grain laws, grain sampling and per-grain geometry.

mod law;
mod lilypond;

pub use law::{sample_r, HeavyTailLaw};
pub use lilypond::lilypond_grow;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ball_intersection_volume, ball_volume, chord_half, disk_union_area, merge_intervals, rect_disk_area, union_length, unit_ball_volume,
};
use crate::rng::open01;

/// Shape of the base grain, contained in the open unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BaseRepr", into = "BaseRepr")]
pub enum BaseShape {
    UnitBall,
    /// Cube of half-side `1/sqrt(nu)`, whose corners touch the unit sphere.
    UnitCubeScaled,
    /// Union of hard balls grown from Poisson germs of the given intensity
    /// (per unit volume) in the unit ball.
    Lilypond { intensity: f64 },
    /// Union of Poisson-many balls with uniform centers in the ball of radius
    /// 1/2 and radii `y^(1/nu)/2`, `y ~ U(0,1]`.
    ClusterBoolean { mean_count: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum BaseRepr {
    Name(String),
    Full(BaseTagged),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum BaseTagged {
    UnitBall,
    UnitCubeScaled,
    Lilypond {
        #[serde(default = "default_lilypond_intensity")]
        intensity: f64,
    },
    ClusterBoolean {
        #[serde(default = "default_cluster_mean")]
        mean_count: f64,
    },
}

fn default_lilypond_intensity() -> f64 {
    1.0
}

fn default_cluster_mean() -> f64 {
    4.0
}

impl TryFrom<BaseRepr> for BaseShape {
    type Error = String;

    fn try_from(r: BaseRepr) -> std::result::Result<Self, String> {
        let tagged = match r {
            BaseRepr::Full(t) => t,
            BaseRepr::Name(name) => match name.as_str() {
                "unit-ball" => BaseTagged::UnitBall,
                "unit-cube-scaled" => BaseTagged::UnitCubeScaled,
                "lilypond" => BaseTagged::Lilypond { intensity: default_lilypond_intensity() },
                "cluster-boolean" => BaseTagged::ClusterBoolean { mean_count: default_cluster_mean() },
                other => return Err(format!("unknown base shape `{other}`")),
            },
        };
        Ok(match tagged {
            BaseTagged::UnitBall => BaseShape::UnitBall,
            BaseTagged::UnitCubeScaled => BaseShape::UnitCubeScaled,
            BaseTagged::Lilypond { intensity } => BaseShape::Lilypond { intensity },
            BaseTagged::ClusterBoolean { mean_count } => BaseShape::ClusterBoolean { mean_count },
        })
    }
}

impl From<BaseShape> for BaseRepr {
    fn from(b: BaseShape) -> Self {
        match b {
            BaseShape::UnitBall => BaseRepr::Name("unit-ball".into()),
            BaseShape::UnitCubeScaled => BaseRepr::Name("unit-cube-scaled".into()),
            BaseShape::Lilypond { intensity } => BaseRepr::Full(BaseTagged::Lilypond { intensity }),
            BaseShape::ClusterBoolean { mean_count } => BaseRepr::Full(BaseTagged::ClusterBoolean { mean_count }),
        }
    }
}

impl BaseShape {
    /// Whether every base grain is the same set.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, BaseShape::UnitBall | BaseShape::UnitCubeScaled)
    }

    /// Law of the base grain is invariant under rotations.
    pub fn is_isotropic(&self) -> bool {
        !matches!(self, BaseShape::UnitCubeScaled)
    }

    /// Exact volume for deterministic bases.
    pub fn exact_volume(&self, nu: usize) -> Option<f64> {
        match self {
            BaseShape::UnitBall => Some(unit_ball_volume(nu)),
            BaseShape::UnitCubeScaled => Some((2.0 / (nu as f64).sqrt()).powi(nu as i32)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BaseShape::Lilypond { intensity } if !(intensity > 0.0 && intensity.is_finite()) => {
                Err(Error::Config(format!("lilypond intensity must be positive, got {intensity}")))
            }
            BaseShape::ClusterBoolean { mean_count } if !(mean_count > 0.0 && mean_count.is_finite()) => {
                Err(Error::Config(format!("cluster mean count must be positive, got {mean_count}")))
            }
            _ => Ok(()),
        }
    }
}

/// Grain family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `Ξ = R^(1/nu) Ξ⁰`.
    Homothetic { base: BaseShape, law: HeavyTailLaw },
    /// `(0,1] × (0,R]` in the plane.
    RectXiex1 { law: HeavyTailLaw },
    /// `(0,R^(1-p)] × (0,R^p]` in the plane.
    RectXiex2 { law: HeavyTailLaw, p: f64 },
}

/// Law of the generic grain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct GrainModel {
    nu: usize,
    family: Family,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ModelRepr {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<BaseShape>,
    #[serde(rename = "R")]
    r: HeavyTailLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
}

impl TryFrom<ModelRepr> for GrainModel {
    type Error = Error;

    fn try_from(m: ModelRepr) -> Result<Self> {
        match m.family.as_str() {
            "homothetic" => {
                let base = m.base.ok_or_else(|| Error::Config("homothetic model needs a `base`".into()))?;
                let nu = m.nu.ok_or_else(|| Error::Config("homothetic model needs `nu`".into()))?;
                GrainModel::homothetic(nu, base, m.r)
            }
            "rect-xiex1" => {
                if m.nu.is_some_and(|nu| nu != 2) {
                    return Err(Error::Config("rectangular grains require nu = 2".into()));
                }
                GrainModel::rect_xiex1(m.r)
            }
            "rect-xiex2" => {
                if m.nu.is_some_and(|nu| nu != 2) {
                    return Err(Error::Config("rectangular grains require nu = 2".into()));
                }
                let p = m.p.ok_or_else(|| Error::Config("rect-xiex2 needs the shape parameter `p`".into()))?;
                GrainModel::rect_xiex2(m.r, p)
            }
            other => Err(Error::Config(format!("unknown grain family `{other}`"))),
        }
    }
}

impl From<GrainModel> for ModelRepr {
    fn from(g: GrainModel) -> Self {
        match g.family {
            Family::Homothetic { base, law } => ModelRepr {
                family: "homothetic".into(),
                base: Some(base),
                r: law,
                nu: Some(g.nu),
                p: None,
            },
            Family::RectXiex1 { law } => ModelRepr { family: "rect-xiex1".into(), base: None, r: law, nu: Some(2), p: None },
            Family::RectXiex2 { law, p } => {
                ModelRepr { family: "rect-xiex2".into(), base: None, r: law, nu: Some(2), p: Some(p) }
            }
        }
    }
}

/// Dimensions above this are rejected; the point-sampling code is generic but
/// the envelope expansion grows with `nu`.
pub const MAX_DIMENSION: usize = 8;

impl GrainModel {
    pub fn homothetic(nu: usize, base: BaseShape, law: HeavyTailLaw) -> Result<Self> {
        if nu == 0 || nu > MAX_DIMENSION {
            return Err(Error::Config(format!("dimension must be in 1..={MAX_DIMENSION}, got {nu}")));
        }
        base.validate()?;
        law.validate()?;
        Ok(Self { nu, family: Family::Homothetic { base, law } })
    }

    pub fn rect_xiex1(law: HeavyTailLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self { nu: 2, family: Family::RectXiex1 { law } })
    }

    pub fn rect_xiex2(law: HeavyTailLaw, p: f64) -> Result<Self> {
        law.validate()?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!("rect-xiex2 shape parameter must lie in (0, 1), got {p}")));
        }
        Ok(Self { nu: 2, family: Family::RectXiex2 { law, p } })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn law(&self) -> &HeavyTailLaw {
        match &self.family {
            Family::Homothetic { law, .. } | Family::RectXiex1 { law } | Family::RectXiex2 { law, .. } => law,
        }
    }

    pub fn base(&self) -> Option<BaseShape> {
        match self.family {
            Family::Homothetic { base, .. } => Some(base),
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        self.law().alpha()
    }

    pub fn c_r(&self) -> Option<f64> {
        self.law().c_r()
    }

    pub fn is_homothetic(&self) -> bool {
        matches!(self.family, Family::Homothetic { .. })
    }

    /// Long-range dependent, i.e. `E Leb(Ξ)² = ∞`.
    pub fn is_lrd(&self) -> bool {
        self.law().is_heavy_tailed()
    }

    /// Exponent of `R` in the side lengths `(R^(1-p), R^p)` of a rectangular grain.
    pub fn rect_exponent(&self) -> Option<f64> {
        match self.family {
            Family::RectXiex1 { .. } => Some(1.0),
            Family::RectXiex2 { p, .. } => Some(p),
            Family::Homothetic { .. } => None,
        }
    }

    /// Side lengths of a rectangular grain with scale `r`.
    pub fn rect_sides(&self, r: f64) -> Option<(f64, f64)> {
        let p = self.rect_exponent()?;
        Some((r.powf(1.0 - p), r.powf(p)))
    }

    /// Linear scale `R^(1/nu)` of a homothetic grain.
    pub fn scale_of(&self, r: f64) -> f64 {
        match self.nu {
            1 => r,
            2 => r.sqrt(),
            nu => r.powf(1.0 / nu as f64),
        }
    }

    /// `E Leb(Ξ⁰)` when it is known exactly; rectangles have unit area per unit `R`.
    pub fn exact_mean_base_volume(&self) -> Option<f64> {
        match self.family {
            Family::Homothetic { base, .. } => base.exact_volume(self.nu),
            _ => Some(1.0),
        }
    }

    /// Upper bound on the bounding radius of a grain with scale `r`.
    pub fn rho_bound(&self, r: f64) -> f64 {
        match self.family {
            Family::Homothetic { .. } => self.scale_of(r),
            _ => {
                let (w, h) = self.rect_sides(r).expect("rectangular family");
                w.hypot(h)
            }
        }
    }
}

/// Geometry of one sampled grain.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Base is the unit ball.
    Ball,
    /// Base is the cube `[-half, half]^nu`.
    Cube { half: f64 },
    /// Base is a union of balls (flat `nu`-vectors for centers).
    Balls { centers: Vec<f64>, radii: Vec<f64>, disjoint: bool },
    /// `(0, w] × (0, h]`.
    Rect { w: f64, h: f64 },
}

/// One realized grain, positioned with its reference point at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct GrainSample {
    nu: usize,
    r: f64,
    scale: f64,
    shape: Shape,
    volume: f64,
    rho: f64,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl GrainSample {
    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Linear homothety factor (1 for rectangles).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Smallest `r` with `Ξ ⊂ {|t| <= r}`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Bounding interval of the grain along coordinate `axis`.
    pub fn extent(&self, axis: usize) -> (f64, f64) {
        match &self.shape {
            Shape::Rect { w, h } => (0.0, if axis == 0 { *w } else { *h }),
            _ => (-self.rho, self.rho),
        }
    }

    /// Membership of `t` in the grain.
    pub fn contains(&self, t: &[f64]) -> bool {
        let d2 = norm2(t);
        if d2 > self.rho * self.rho {
            return false;
        }
        let s = self.scale;
        match &self.shape {
            Shape::Ball => d2 < s * s,
            Shape::Cube { half } => t.iter().all(|x| x.abs() < s * half),
            Shape::Balls { centers, radii, .. } => {
                let nu = self.nu;
                radii.iter().enumerate().any(|(i, r)| {
                    let c = &centers[i * nu..(i + 1) * nu];
                    let q: f64 = t.iter().zip(c).map(|(x, ci)| (x / s - ci).powi(2)).sum();
                    q < r * r
                })
            }
            Shape::Rect { w, h } => t[0] > 0.0 && t[0] <= *w && t[1] > 0.0 && t[1] <= *h,
        }
    }

    /// Appends to `out` the intervals of `x` such that `(x, 0, ..., 0)` lies in
    /// `u + Ξ`. The intervals of one grain are pairwise disjoint.
    pub fn line_section(&self, u: &[f64], out: &mut Vec<(f64, f64)>) {
        let perp2: f64 = norm2(&u[1..]);
        if perp2 >= self.rho * self.rho {
            return;
        }
        let s = self.scale;
        match &self.shape {
            Shape::Ball => {
                if let Some(h) = chord_half(s, perp2.sqrt()) {
                    out.push((u[0] - h, u[0] + h));
                }
            }
            Shape::Cube { half } => {
                let a = s * half;
                if u[1..].iter().all(|x| x.abs() < a) {
                    out.push((u[0] - a, u[0] + a));
                }
            }
            Shape::Balls { centers, radii, disjoint } => {
                let nu = self.nu;
                let start = out.len();
                for (i, r) in radii.iter().enumerate() {
                    let c = &centers[i * nu..(i + 1) * nu];
                    let d2: f64 = (1..nu).map(|j| (u[j] + s * c[j]).powi(2)).sum();
                    if let Some(h) = chord_half(s * r, d2.sqrt()) {
                        let x0 = u[0] + s * c[0];
                        out.push((x0 - h, x0 + h));
                    }
                }
                if !disjoint && out.len() - start > 1 {
                    let mut own: Vec<(f64, f64)> = out.drain(start..).collect();
                    merge_intervals(&mut own);
                    out.extend(own);
                }
            }
            Shape::Rect { w, h } => {
                let y = -u[1];
                if y > 0.0 && y <= *h {
                    out.push((u[0], u[0] + w));
                }
            }
        }
    }

    /// `Leb(Ξ ∩ (Ξ − t))`; exact except for overlapping composite bases, which
    /// use a midpoint grid of about `n_inner` cells.
    pub fn self_overlap(&self, t: &[f64], n_inner: usize) -> f64 {
        let d = norm2(t).sqrt();
        if d >= 2.0 * self.rho {
            return 0.0;
        }
        let nu = self.nu;
        let s = self.scale;
        match &self.shape {
            Shape::Ball => ball_intersection_volume(nu, s, s, d),
            Shape::Cube { half } => t.iter().map(|x| (2.0 * s * half - x.abs()).max(0.0)).product(),
            Shape::Rect { w, h } => (w - t[0].abs()).max(0.0) * (h - t[1].abs()).max(0.0),
            Shape::Balls { centers, radii, disjoint: true } => {
                let mut total = 0.0;
                for (i, ri) in radii.iter().enumerate() {
                    let ci = &centers[i * nu..(i + 1) * nu];
                    for (j, rj) in radii.iter().enumerate() {
                        let cj = &centers[j * nu..(j + 1) * nu];
                        let dist = (0..nu).map(|a| (s * (ci[a] - cj[a]) + t[a]).powi(2)).sum::<f64>().sqrt();
                        total += ball_intersection_volume(nu, s * ri, s * rj, dist);
                    }
                }
                total
            }
            Shape::Balls { .. } => {
                let mut shifted = [0.0; MAX_DIMENSION];
                grid_measure(nu, self.rho, n_inner, |x| {
                    if !self.contains(x) {
                        return false;
                    }
                    for a in 0..nu {
                        shifted[a] = x[a] + t[a];
                    }
                    self.contains(&shifted[..nu])
                })
            }
        }
    }

    /// `nu0`-dimensional measure of `{t' : (t', s_perp) ∈ Ξ}`.
    pub fn slice_measure(&self, s_perp: &[f64], nu0: usize, n_mc: usize) -> Result<f64> {
        if nu0 == 0 || nu0 >= self.nu || s_perp.len() != self.nu - nu0 {
            return Err(Error::Precondition(format!(
                "slice needs 1 <= nu0 < nu = {} and {} perpendicular coordinates",
                self.nu,
                self.nu.saturating_sub(nu0)
            )));
        }
        let perp2 = norm2(s_perp);
        if perp2 >= self.rho * self.rho {
            return Ok(0.0);
        }
        let s = self.scale;
        Ok(match &self.shape {
            Shape::Ball => ball_volume(nu0, (s * s - perp2).max(0.0).sqrt()),
            Shape::Cube { half } => {
                let a = s * half;
                if s_perp.iter().all(|x| x.abs() < a) {
                    (2.0 * a).powi(nu0 as i32)
                } else {
                    0.0
                }
            }
            Shape::Balls { centers, radii, disjoint } => {
                let nu = self.nu;
                let mut pieces: Vec<(Vec<f64>, f64)> = Vec::new();
                for (i, r) in radii.iter().enumerate() {
                    let c = &centers[i * nu..(i + 1) * nu];
                    let d2: f64 = (nu0..nu).map(|j| (s_perp[j - nu0] - s * c[j]).powi(2)).sum();
                    let rr = (s * r).powi(2) - d2;
                    if rr > 0.0 {
                        pieces.push((c[..nu0].iter().map(|x| s * x).collect(), rr.sqrt()));
                    }
                }
                if *disjoint {
                    pieces.iter().map(|(_, r)| ball_volume(nu0, *r)).sum()
                } else {
                    match nu0 {
                        1 => {
                            let iv: Vec<(f64, f64)> = pieces.iter().map(|(c, r)| (c[0] - r, c[0] + r)).collect();
                            union_length(&iv)
                        }
                        2 => {
                            let disks: Vec<(f64, f64, f64)> = pieces.iter().map(|(c, r)| (c[0], c[1], *r)).collect();
                            disk_union_area(&disks)
                        }
                        _ => grid_measure(nu0, self.rho, n_mc, |x| {
                            pieces.iter().any(|(c, r)| x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < r * r)
                        }),
                    }
                }
            }
            Shape::Rect { w, h } => {
                let y = s_perp[0];
                if y > 0.0 && y <= *h {
                    *w
                } else {
                    0.0
                }
            }
        })
    }

    /// `Leb(Ξ ∩ {|t| > lambda})`.
    pub fn tail_volume(&self, lambda: f64, n_mc: usize) -> f64 {
        if lambda >= self.rho {
            return 0.0;
        }
        let nu = self.nu;
        let s = self.scale;
        match &self.shape {
            Shape::Ball => ball_volume(nu, 1.0) * (s.powi(nu as i32) - lambda.powi(nu as i32)).max(0.0),
            Shape::Cube { half } if nu <= 2 => {
                let a = s * half;
                if nu == 1 {
                    (2.0 * (a - lambda)).max(0.0)
                } else {
                    (4.0 * a * a - 4.0 * rect_disk_area(a, a, lambda)).max(0.0)
                }
            }
            Shape::Rect { w, h } => (w * h - rect_disk_area(*w, *h, lambda)).max(0.0),
            _ => {
                let l2 = lambda * lambda;
                grid_measure(nu, self.rho, n_mc, |x| norm2(x) > l2 && self.contains(x))
            }
        }
    }
}

/// Midpoint-rule measure of `{x in [-half, half]^d : inside(x)}` using about
/// `n` cells.
pub(crate) fn grid_measure(d: usize, half: f64, n: usize, mut inside: impl FnMut(&[f64]) -> bool) -> f64 {
    let m = ((n.max(1) as f64).powf(1.0 / d as f64).ceil() as usize).max(1);
    let h = 2.0 * half / m as f64;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut count = 0usize;
    loop {
        for j in 0..d {
            x[j] = -half + (idx[j] as f64 + 0.5) * h;
        }
        if inside(&x) {
            count += 1;
        }
        let mut j = 0;
        loop {
            if j == d {
                return count as f64 * h.powi(d as i32);
            }
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Uniform point in the open unit ball, written into `out`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let nu = out.len();
    if nu <= 3 {
        loop {
            for x in out.iter_mut() {
                *x = 2.0 * rng.random::<f64>() - 1.0;
            }
            if norm2(out) < 1.0 {
                return;
            }
        }
    }
    loop {
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        let n = norm2(out).sqrt();
        if n > 0.0 {
            let r = open01(rng).powf(1.0 / nu as f64);
            for x in out.iter_mut() {
                *x *= r / n;
            }
            return;
        }
    }
}

/// Poisson count conditioned to be at least one.
pub(crate) fn zero_truncated_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean > 20.0 {
        let pois = Poisson::new(mean).expect("positive finite mean");
        loop {
            let n: f64 = pois.sample(rng);
            if n >= 1.0 {
                return n as usize;
            }
        }
    }
    // Inversion of P(N = k | N >= 1) = e^-m m^k / k! / (1 - e^-m).
    let u = open01(rng);
    let mut k = 1usize;
    let mut pk = mean / mean.exp_m1();
    let mut cdf = pk;
    while u > cdf && pk > 0.0 {
        k += 1;
        pk *= mean / k as f64;
        cdf += pk;
    }
    k
}

fn sample_base<R: Rng + ?Sized>(nu: usize, base: BaseShape, rng: &mut R) -> Result<(Shape, f64, f64)> {
    Ok(match base {
        BaseShape::UnitBall => (Shape::Ball, unit_ball_volume(nu), 1.0),
        BaseShape::UnitCubeScaled => {
            let half = 1.0 / (nu as f64).sqrt();
            (Shape::Cube { half }, (2.0 * half).powi(nu as i32), 1.0)
        }
        BaseShape::Lilypond { intensity } => {
            let n = zero_truncated_poisson(intensity * unit_ball_volume(nu), rng);
            let mut centers = vec![0.0; n * nu];
            for c in centers.chunks_exact_mut(nu) {
                uniform_in_ball(rng, c);
            }
            let radii = lilypond_grow(&centers, nu)?;
            let volume = radii.iter().map(|r| ball_volume(nu, *r)).sum();
            let bound = bounding_radius(&centers, &radii, nu);
            (Shape::Balls { centers, radii, disjoint: true }, volume, bound)
        }
        BaseShape::ClusterBoolean { mean_count } => {
            let n = zero_truncated_poisson(mean_count, rng);
            let mut centers = vec![0.0; n * nu];
            let mut radii = Vec::with_capacity(n);
            for c in centers.chunks_exact_mut(nu) {
                uniform_in_ball(rng, c);
                for x in c.iter_mut() {
                    *x *= 0.5;
                }
                radii.push(0.5 * open01(rng).powf(1.0 / nu as f64));
            }
            let bound = bounding_radius(&centers, &radii, nu);
            let volume = match nu {
                1 => {
                    let iv: Vec<(f64, f64)> = radii.iter().enumerate().map(|(i, r)| (centers[i] - r, centers[i] + r)).collect();
                    union_length(&iv)
                }
                2 => {
                    let disks: Vec<(f64, f64, f64)> =
                        radii.iter().enumerate().map(|(i, r)| (centers[2 * i], centers[2 * i + 1], *r)).collect();
                    disk_union_area(&disks)
                }
                _ => grid_measure(nu, bound, 200_000, |x| {
                    radii.iter().enumerate().any(|(i, r)| {
                        x.iter().zip(&centers[i * nu..(i + 1) * nu]).map(|(a, b)| (a - b).powi(2)).sum::<f64>() < r * r
                    })
                }),
            };
            (Shape::Balls { centers, radii, disjoint: false }, volume, bound)
        }
    })
}

fn bounding_radius(centers: &[f64], radii: &[f64], nu: usize) -> f64 {
    radii
        .iter()
        .enumerate()
        .map(|(i, r)| norm2(&centers[i * nu..(i + 1) * nu]).sqrt() + r)
        .fold(0.0, f64::max)
}

/// Samples a grain with the given value of `R`; the base shape is drawn from `rng`.
pub fn grain_with_r<R: Rng + ?Sized>(model: &GrainModel, r: f64, rng: &mut R) -> Result<GrainSample> {
    let nu = model.nu;
    match model.family {
        Family::Homothetic { base, .. } => {
            let (shape, base_volume, base_rho) = sample_base(nu, base, rng)?;
            let scale = model.scale_of(r);
            Ok(GrainSample { nu, r, scale, shape, volume: r * base_volume, rho: scale * base_rho })
        }
        Family::RectXiex1 { .. } | Family::RectXiex2 { .. } => {
            let (w, h) = model.rect_sides(r).expect("rectangular family");
            Ok(GrainSample { nu, r, scale: 1.0, shape: Shape::Rect { w, h }, volume: w * h, rho: w.hypot(h) })
        }
    }
}

/// Samples `R` and then the rest of the grain.
pub fn sample_grain<R: Rng + ?Sized>(model: &GrainModel, rng: &mut R) -> Result<GrainSample> {
    let r = model.law().sample(rng);
    grain_with_r(model, r, rng)
}
