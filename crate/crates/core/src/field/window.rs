use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;
use crate::grains::{uniform_in_ball, MAX_DIMENSION};

/// Shape of the unscaled observation set `A`, centered at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum WindowShape {
    /// `Π [-s_i/2, s_i/2]`.
    Box { sides: Vec<f64> },
    Ball { radius: f64 },
}

impl WindowShape {
    pub fn unit_box(nu: usize) -> Self {
        WindowShape::Box { sides: vec![1.0; nu] }
    }
}

/// The scaled observation set `λA`.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    shape: WindowShape,
    nu: usize,
    lambda: f64,
}

impl Window {
    /// `nu` is only used for ball windows; box windows take it from their sides.
    pub fn new(shape: WindowShape, nu: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("scale must be positive and finite, got {lambda}")));
        }
        let nu = match &shape {
            WindowShape::Box { sides } => {
                if sides.is_empty() || sides.len() > MAX_DIMENSION {
                    return Err(Error::Config(format!("box window needs 1..={MAX_DIMENSION} sides")));
                }
                if sides.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::Config(format!("box sides must be positive, got {sides:?}")));
                }
                if nu != sides.len() {
                    return Err(Error::Config(format!(
                        "box window has {} sides but the model dimension is {nu}",
                        sides.len()
                    )));
                }
                sides.len()
            }
            WindowShape::Ball { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
                }
                if nu == 0 || nu > MAX_DIMENSION {
                    return Err(Error::Config(format!("dimension must be in 1..={MAX_DIMENSION}")));
                }
                nu
            }
        };
        Ok(Self { shape, nu, lambda })
    }

    pub fn shape(&self) -> &WindowShape {
        &self.shape
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `Leb(A)`.
    pub fn unit_volume(&self) -> f64 {
        match &self.shape {
            WindowShape::Box { sides } => sides.iter().product(),
            WindowShape::Ball { radius } => unit_ball_volume(self.nu) * radius.powi(self.nu as i32),
        }
    }

    /// `Leb(λA)`.
    pub fn volume(&self) -> f64 {
        self.unit_volume() * self.lambda.powi(self.nu as i32)
    }

    /// Half-extents of the bounding box of `λA`.
    pub fn half_extents(&self) -> Vec<f64> {
        match &self.shape {
            WindowShape::Box { sides } => sides.iter().map(|s| 0.5 * s * self.lambda).collect(),
            WindowShape::Ball { radius } => vec![radius * self.lambda; self.nu],
        }
    }

    /// Circumradius `r_W` of `λA`.
    pub fn circumradius(&self) -> f64 {
        match &self.shape {
            WindowShape::Box { .. } => self.half_extents().iter().map(|e| e * e).sum::<f64>().sqrt(),
            WindowShape::Ball { radius } => radius * self.lambda,
        }
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        match &self.shape {
            WindowShape::Box { .. } => t.iter().zip(self.half_extents()).all(|(x, e)| x.abs() <= e),
            WindowShape::Ball { radius } => {
                let r = radius * self.lambda;
                t.iter().map(|x| x * x).sum::<f64>() <= r * r
            }
        }
    }

    /// Euclidean distance from `t` to `λA`.
    pub fn distance(&self, t: &[f64]) -> f64 {
        match &self.shape {
            WindowShape::Box { .. } => t
                .iter()
                .zip(self.half_extents())
                .map(|(x, e)| (x.abs() - e).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
            WindowShape::Ball { radius } => {
                (t.iter().map(|x| x * x).sum::<f64>().sqrt() - radius * self.lambda).max(0.0)
            }
        }
    }

    /// Uniform point in `λA`.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.shape {
            WindowShape::Box { .. } => {
                for (x, e) in out.iter_mut().zip(self.half_extents()) {
                    *x = e * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            WindowShape::Ball { radius } => {
                uniform_in_ball(rng, out);
                let r = radius * self.lambda;
                for x in out.iter_mut() {
                    *x *= r;
                }
            }
        }
    }

    /// Coefficients `c_m` with `Leb(λA ⊕ B_ρ) = Σ_m c_m ρ^m` (Steiner polynomial).
    pub fn parallel_volume_coefficients(&self) -> Vec<f64> {
        let nu = self.nu;
        match &self.shape {
            WindowShape::Ball { radius } => {
                let r = radius * self.lambda;
                (0..=nu)
                    .map(|m| unit_ball_volume(nu) * binomial(nu, m) * r.powi((nu - m) as i32))
                    .collect()
            }
            WindowShape::Box { sides } => {
                let lengths: Vec<f64> = sides.iter().map(|s| s * self.lambda).collect();
                let e = elementary_symmetric(&lengths);
                (0..=nu).map(|m| e[nu - m] * unit_ball_volume(m)).collect()
            }
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `e_0..e_n` of the given numbers.
fn elementary_symmetric(x: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; x.len() + 1];
    e[0] = 1.0;
    for (i, &v) in x.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}
