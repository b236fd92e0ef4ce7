use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::open01;

/// Law of the scale variable `R` of a grain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HeavyTailLaw {
    /// `P(R > x) = (x / xm)^(-alpha)` for `x >= xm`, with `alpha` in (1, 2).
    Pareto { alpha: f64, xm: f64 },
    Constant { value: f64 },
    /// Uniform on (0, 1].
    BoundedUniform,
}

impl HeavyTailLaw {
    pub fn pareto(alpha: f64, xm: f64) -> Result<Self> {
        let law = HeavyTailLaw::Pareto { alpha, xm };
        law.validate()?;
        Ok(law)
    }

    pub fn constant(value: f64) -> Result<Self> {
        let law = HeavyTailLaw::Constant { value };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            HeavyTailLaw::Pareto { alpha, xm } => {
                if !(alpha > 1.0 && alpha < 2.0) {
                    return Err(Error::Config(format!("pareto tail index must lie in (1, 2), got {alpha}")));
                }
                if !(xm > 0.0 && xm.is_finite()) {
                    return Err(Error::Config(format!("pareto scale must be positive and finite, got {xm}")));
                }
            }
            HeavyTailLaw::Constant { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::Config(format!("constant R must be positive and finite, got {value}")));
                }
            }
            HeavyTailLaw::BoundedUniform => {}
        }
        Ok(())
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            HeavyTailLaw::Pareto { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Tail constant `c_R` with `P(R > x) ~ c_R x^(-alpha)`.
    pub fn c_r(&self) -> Option<f64> {
        match *self {
            HeavyTailLaw::Pareto { alpha, xm } => Some(xm.powf(alpha)),
            _ => None,
        }
    }

    /// Density tail constant `c_f = alpha c_R` with `f(r) ~ c_f r^(-1-alpha)`.
    pub fn c_f(&self) -> Option<f64> {
        Some(self.alpha()? * self.c_r()?)
    }

    pub fn is_heavy_tailed(&self) -> bool {
        matches!(self, HeavyTailLaw::Pareto { .. })
    }

    /// Largest value of `R`, infinite for unbounded laws.
    pub fn upper_bound(&self) -> f64 {
        match *self {
            HeavyTailLaw::Pareto { .. } => f64::INFINITY,
            HeavyTailLaw::Constant { value } => value,
            HeavyTailLaw::BoundedUniform => 1.0,
        }
    }

    pub fn lower_bound(&self) -> f64 {
        match *self {
            HeavyTailLaw::Pareto { xm, .. } => xm,
            HeavyTailLaw::Constant { value } => value,
            HeavyTailLaw::BoundedUniform => 0.0,
        }
    }

    /// `E R^s`; infinite when the moment diverges.
    pub fn moment(&self, s: f64) -> f64 {
        match *self {
            HeavyTailLaw::Pareto { alpha, xm } => {
                if s < alpha {
                    alpha * xm.powf(s) / (alpha - s)
                } else {
                    f64::INFINITY
                }
            }
            HeavyTailLaw::Constant { value } => value.powf(s),
            HeavyTailLaw::BoundedUniform => {
                if s > -1.0 {
                    1.0 / (s + 1.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }

    /// `P(R > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            HeavyTailLaw::Pareto { alpha, xm } => {
                if x <= xm {
                    1.0
                } else {
                    (x / xm).powf(-alpha)
                }
            }
            HeavyTailLaw::Constant { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
            HeavyTailLaw::BoundedUniform => (1.0 - x).clamp(0.0, 1.0),
        }
    }

    /// Quantile at level `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            HeavyTailLaw::Pareto { alpha, xm } => xm * (1.0 - u).powf(-1.0 / alpha),
            HeavyTailLaw::Constant { value } => value,
            HeavyTailLaw::BoundedUniform => u,
        }
    }

    /// One draw by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            HeavyTailLaw::Pareto { alpha, xm } => xm * open01(rng).powf(-1.0 / alpha),
            HeavyTailLaw::Constant { value } => value,
            HeavyTailLaw::BoundedUniform => open01(rng),
        }
    }

    /// One draw from the law tilted by `r^s`, i.e. with density proportional
    /// to `r^s P(dr)`. Requires `E R^s < ∞`.
    pub fn sample_tilted<R: Rng + ?Sized>(&self, s: f64, rng: &mut R) -> f64 {
        match *self {
            HeavyTailLaw::Pareto { alpha, xm } => xm * open01(rng).powf(-1.0 / (alpha - s)),
            HeavyTailLaw::Constant { value } => value,
            HeavyTailLaw::BoundedUniform => open01(rng).powf(1.0 / (s + 1.0)),
        }
    }

    /// Quantile at level `u` of the law conditioned on `R > r0`; requires
    /// `P(R > r0) > 0`.
    pub fn quantile_above(&self, r0: f64, u: f64) -> f64 {
        self.upper_quantile_above(r0, 1.0 - u)
    }

    /// Same as [`quantile_above`](Self::quantile_above) addressed by the
    /// conditional upper-tail probability `q = 1 - u`, which keeps precision
    /// deep in the tail.
    pub fn upper_quantile_above(&self, r0: f64, q: f64) -> f64 {
        match *self {
            HeavyTailLaw::Pareto { alpha, xm } => xm.max(r0) * q.powf(-1.0 / alpha),
            HeavyTailLaw::Constant { value } => value,
            HeavyTailLaw::BoundedUniform => {
                let a = r0.clamp(0.0, 1.0);
                1.0 - (1.0 - a) * q
            }
        }
    }
}

/// Draws `R` after checking the law parameters.
pub fn sample_r<R: Rng + ?Sized>(law: &HeavyTailLaw, rng: &mut R) -> Result<f64> {
    law.validate()?;
    Ok(law.sample(rng))
}
