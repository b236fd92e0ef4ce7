//! Stable and Gaussian reference laws: sampling, characteristic functions
//! and distribution functions.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::limitlaw::levy::{levy_cf, levy_sigma_alpha};
use crate::quad::{integrate_split, QuadOptions};
use crate::rng::open01;

/// Where the parameters of a stable law came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Provenance {
    Explicit,
    /// `scale · L` where `L` has the Lévy-form CF with intensity `c`.
    Model { c: f64, region_volume: f64, prefactor: f64, scale: f64 },
}

/// Stable law with characteristic function
/// `exp(iδθ − σ^α|θ|^α (1 − iβ sign(θ) tan(πα/2)))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub delta: f64,
    pub provenance: Provenance,
}

impl StableLaw {
    pub fn new(alpha: f64, beta: f64, sigma: f64, delta: f64) -> Result<Self> {
        let law = Self { alpha, beta, sigma, delta, provenance: Provenance::Explicit };
        law.validate()?;
        Ok(law)
    }

    /// `scale · L` with `L` the Lévy-form law of intensity `c`.
    pub fn from_levy(c: f64, alpha: f64, scale: f64, region_volume: f64, prefactor: f64) -> Result<Self> {
        if !(c > 0.0 && scale > 0.0) {
            return Err(Error::Precondition(format!("need c > 0 and scale > 0, got {c} and {scale}")));
        }
        let sigma = scale * levy_sigma_alpha(c, alpha).powf(1.0 / alpha);
        let law = Self { alpha, beta: 1.0, sigma, delta: 0.0, provenance: Provenance::Model { c, region_volume, prefactor, scale } };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(Error::Precondition(format!("stability index must lie in (1, 2), got {}", self.alpha)));
        }
        if !(-1.0..=1.0).contains(&self.beta) || !(self.sigma > 0.0) || !self.delta.is_finite() {
            return Err(Error::Precondition(format!(
                "invalid stable parameters beta={} sigma={} delta={}",
                self.beta, self.sigma, self.delta
            )));
        }
        Ok(())
    }

    /// Closed-form characteristic function.
    pub fn cf(&self, theta: f64) -> Complex64 {
        stable_cf(theta, self.alpha, self.beta, self.sigma, self.delta)
    }

    /// Characteristic function through the Lévy jump integral, available for
    /// laws derived from a model.
    pub fn levy_cf(&self, theta: f64) -> Result<Complex64> {
        match self.provenance {
            Provenance::Model { c, scale, .. } => levy_cf(scale * theta, c, self.alpha),
            Provenance::Explicit => Err(Error::Precondition("law was not built from a Lévy form".into())),
        }
    }
}

pub(crate) fn stable_cf(theta: f64, alpha: f64, beta: f64, sigma: f64, delta: f64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let a = (sigma * theta.abs()).powf(alpha);
    let skew = beta * theta.signum() * (PI * alpha / 2.0).tan();
    Complex64::new(-a, delta * theta + a * skew).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianLaw {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !mean.is_finite() {
            return Err(Error::Precondition(format!("invalid Gaussian law mean={mean} variance={variance}")));
        }
        Ok(Self { mean, variance })
    }

    pub fn cf(&self, theta: f64) -> Complex64 {
        Complex64::new(-0.5 * self.variance * theta * theta, self.mean * theta).exp()
    }

    fn normal(&self) -> Normal {
        Normal::new(self.mean, self.variance.sqrt()).expect("validated parameters")
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.normal().cdf(x)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.normal().inverse_cdf(u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        self.mean + self.variance.sqrt() * z
    }
}

/// Reference law of a rescaled statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LimitLaw {
    Stable(StableLaw),
    Gaussian(GaussianLaw),
}

impl LimitLaw {
    pub fn cf(&self, theta: f64) -> Complex64 {
        match self {
            LimitLaw::Stable(s) => s.cf(theta),
            LimitLaw::Gaussian(g) => g.cf(theta),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            LimitLaw::Stable(s) => stable_cdf(x, s),
            LimitLaw::Gaussian(g) => Ok(g.cdf(x)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LimitLaw::Stable(s) => stable_sample(s, rng),
            LimitLaw::Gaussian(g) => g.sample(rng),
        }
    }
}

/// One draw by the Chambers–Mallows–Stuck method.
pub fn stable_sample<R: Rng + ?Sized>(law: &StableLaw, rng: &mut R) -> f64 {
    law.sigma * standard_stable(law.alpha, law.beta, rng) + law.delta
}

pub(crate) fn standard_stable<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let v = PI * (open01(rng) - 0.5);
    let w = -open01(rng).ln();
    let t = beta * (PI * alpha / 2.0).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
    let arg = alpha * (v + b);
    s * arg.sin() / v.cos().powf(1.0 / alpha) * ((v - arg).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `F(x)` of the standard law (`σ = 1`, `δ = 0`) by Gil-Pelaez inversion,
/// `F(x) = 1/2 − (1/π) ∫_0^∞ Im(e^{−iθx} φ(θ)) / θ dθ`.
pub(crate) fn standard_cdf(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    // φ decays like exp(−θ^α); beyond θ_max the integrand is below e^{−45}.
    let theta_max = 45f64.powf(1.0 / alpha);
    let panels = ((theta_max * x.abs().max(1.0) / FRAC_PI_2).ceil() as usize).clamp(4, 200_000);
    let f = |theta: f64| -> f64 {
        if theta <= 0.0 {
            // Limit of the integrand at 0.
            return -x;
        }
        let phi = stable_cf(theta, alpha, beta, 1.0, 0.0);
        (Complex64::new(0.0, -theta * x).exp() * phi).im / theta
    };
    let q = integrate_split(f, 0.0, theta_max, panels, QuadOptions { abs_tol: 1e-9, rel_tol: 1e-9, max_intervals: 4 * panels + 4000 })
        .map_err(|e| Error::Numerical(format!("CDF inversion at x={x} over θ ∈ [0, {theta_max:.3}] with {panels} panels: {e}")))?;
    Ok((0.5 - q.value / PI).clamp(0.0, 1.0))
}

/// Distribution function by numerical inversion of the characteristic
/// function, accurate to about 1e-6 in absolute terms.
pub fn stable_cdf(x: f64, law: &StableLaw) -> Result<f64> {
    standard_cdf((x - law.delta) / law.sigma, law.alpha, law.beta)
}

/// Quantile of the standard law by bracketing and bisection on the CDF.
pub(crate) fn standard_quantile(u: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Precondition(format!("quantile level must lie in (0, 1), got {u}")));
    }
    let mut lo = -1.0;
    let mut hi = 1.0;
    while standard_cdf(lo, alpha, beta)? > u {
        lo *= 2.0;
        if lo < -1e8 {
            return Err(Error::Numerical(format!("quantile {u} below -1e8")));
        }
    }
    while standard_cdf(hi, alpha, beta)? < u {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Numerical(format!("quantile {u} above 1e8")));
        }
    }
    while hi - lo > 1e-10 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if standard_cdf(mid, alpha, beta)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn stable_quantile(u: f64, law: &StableLaw) -> Result<f64> {
    Ok(law.delta + law.sigma * standard_quantile(u, law.alpha, law.beta)?)
}
