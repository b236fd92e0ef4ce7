//! Reference limit laws of the rescaled volume-fraction estimators and the
//! statistics used to compare samples against them.

mod levy;
mod stable;
mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{c_xi, model_mu, sigma2_on, EstimateWithError, RescaleMode};
use crate::geometry::{unit_ball_volume, unit_sphere_area};
use crate::grains::{grain_with_r, BaseShape, Family, GrainModel};
use crate::quad::{integrate, QuadOptions};
use crate::rng::RngStream;

pub use levy::{levy_cf, levy_integral, levy_sigma_alpha, LevyForm};
pub use stable::{stable_cdf, stable_quantile, stable_sample, GaussianLaw, LimitLaw, Provenance, StableLaw};
pub use stats::{
    cf_distance, empirical_cf, hill_estimator, ks_distance, normality_check, stability_index_fit, NormalityCheck, StableFit,
    FIT_MIN_SAMPLE, KURTOSIS_LIMIT, SKEW_LIMIT,
};

/// `e^{-μ} μ^{k-1} / (k-1)!`, the weight of level `k` in the stable limit.
pub fn level_prefactor(mu: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("excursion level must be at least 1".into()));
    }
    let mut v = (-mu).exp();
    for j in 1..k {
        v *= mu / j as f64;
    }
    Ok(v)
}

/// Index of the hyperplane limit, `1 + (ν/ν₀)(α − 1)`.
pub fn hyperplane_index(nu: usize, nu0: usize, alpha: f64) -> f64 {
    1.0 + nu as f64 / nu0 as f64 * (alpha - 1.0)
}

/// `h_∞ = c_R α ν / (α₀ ν₀)`.
pub fn h_infinity(c_r: f64, alpha: f64, nu: usize, nu0: usize) -> f64 {
    c_r * alpha * nu as f64 / (hyperplane_index(nu, nu0, alpha) * nu0 as f64)
}

/// Regime of the hyperplane estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperRegime {
    Stable,
    Gaussian,
}

/// Stable when `α < 1 + ν₀/ν`, Gaussian when `α > 1 + ν₀/ν` or the law has
/// bounded support; the boundary itself is rejected.
pub fn hyperplane_regime(nu: usize, nu0: usize, alpha: Option<f64>) -> Result<HyperRegime> {
    if nu0 == 0 || nu0 > nu {
        return Err(Error::Precondition(format!("need 1 <= nu0 <= nu, got nu0={nu0}, nu={nu}")));
    }
    let Some(alpha) = alpha else {
        return Ok(HyperRegime::Gaussian);
    };
    let boundary = 1.0 + nu0 as f64 / nu as f64;
    if (alpha - boundary).abs() < 1e-12 {
        return Err(Error::Precondition(format!(
            "alpha = {alpha} sits on the phase boundary 1 + nu0/nu = {boundary}; neither limit applies"
        )));
    }
    Ok(if alpha < boundary { HyperRegime::Stable } else { HyperRegime::Gaussian })
}

/// Constants that determine a limit law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "kebab-case")]
pub enum LimitSpec {
    /// Full-dimensional estimator with heavy-tailed grains.
    FullStable { k: usize, nu: usize, alpha: f64, c_xi: f64, mu: f64, region_volume: f64 },
    /// Full-dimensional estimator with square-integrable grain volume.
    FullGaussian { k: usize, nu: usize, sigma2: f64, region_volume: f64 },
    /// Hyperplane estimator below the phase boundary.
    HyperStable { nu: usize, nu0: usize, alpha: f64, c_r: f64, mu: f64, slice_moment: f64, region_volume: f64 },
    /// Hyperplane estimator above the phase boundary.
    HyperGaussian { nu: usize, nu0: usize, alpha: Option<f64>, sigma2: f64, region_volume: f64 },
}

impl LimitSpec {
    /// Spec for the full-dimensional level-`k` estimator over a region of
    /// volume `region_volume`. Random base shapes use `n_mc` samples.
    pub fn full(model: &GrainModel, k: usize, region_volume: f64, n_mc: usize) -> Result<Self> {
        let nu = model.nu();
        match model.alpha() {
            Some(alpha) if model.is_homothetic() => Ok(LimitSpec::FullStable {
                k,
                nu,
                alpha,
                c_xi: c_xi(model, n_mc)?.value,
                mu: model_mu(model, n_mc)?.mu.value,
                region_volume,
            }),
            Some(_) => Err(Error::Unsupported("stable limit constants need a homothetic grain".into())),
            None => Ok(LimitSpec::FullGaussian { k, nu, sigma2: sigma2_on(model, k, nu)?, region_volume }),
        }
    }

    /// Spec for the hyperplane estimator on a `nu0`-dimensional region of
    /// measure `region_volume`; the regime is chosen from `(ν, ν₀, α)`.
    pub fn hyperplane(model: &GrainModel, nu0: usize, region_volume: f64, n_mc: usize) -> Result<Self> {
        let nu = model.nu();
        if nu0 == nu {
            return Self::full(model, 1, region_volume, n_mc).map(|s| match s {
                LimitSpec::FullStable { alpha, c_xi, mu, region_volume, .. } => LimitSpec::HyperStable {
                    nu,
                    nu0,
                    alpha,
                    c_r: model.c_r().expect("pareto law"),
                    mu,
                    slice_moment: c_xi / model.c_r().expect("pareto law"),
                    region_volume,
                },
                LimitSpec::FullGaussian { sigma2, region_volume, .. } => {
                    LimitSpec::HyperGaussian { nu, nu0, alpha: None, sigma2, region_volume }
                }
                other => other,
            });
        }
        let alpha = model.alpha();
        match hyperplane_regime(nu, nu0, alpha)? {
            HyperRegime::Stable => {
                let alpha = alpha.expect("stable regime implies a Pareto law");
                let alpha0 = hyperplane_index(nu, nu0, alpha);
                let mut rng = RngStream::new(0x736c_6963_65, n_mc as u64);
                Ok(LimitSpec::HyperStable {
                    nu,
                    nu0,
                    alpha,
                    c_r: model.c_r().expect("pareto law"),
                    mu: model_mu(model, n_mc)?.mu.value,
                    slice_moment: slice_moment(model, nu0, alpha0, n_mc, &mut rng)?.value,
                    region_volume,
                })
            }
            HyperRegime::Gaussian => Ok(LimitSpec::HyperGaussian { nu, nu0, alpha, sigma2: sigma2_on(model, 1, nu0)?, region_volume }),
        }
    }

    /// Normalization that turns `p̂ − p` into the statistic with this limit.
    pub fn rescale_mode(&self) -> RescaleMode {
        match *self {
            LimitSpec::FullStable { nu, alpha, .. } => RescaleMode::Stable { nu, alpha },
            LimitSpec::FullGaussian { nu, .. } => RescaleMode::Gaussian { nu },
            LimitSpec::HyperStable { nu, nu0, alpha, .. } => {
                RescaleMode::HyperStable { nu0, alpha0: hyperplane_index(nu, nu0, alpha) }
            }
            LimitSpec::HyperGaussian { nu0, .. } => RescaleMode::HyperGaussian { nu0 },
        }
    }
}

/// Maps the model constants to the limit law of the rescaled statistic.
pub fn limit_law_from_model(spec: &LimitSpec) -> Result<LimitLaw> {
    match *spec {
        LimitSpec::FullStable { k, alpha, c_xi, mu, region_volume, .. } => {
            let prefactor = level_prefactor(mu, k)?;
            let c = c_xi * region_volume;
            Ok(LimitLaw::Stable(StableLaw::from_levy(c, alpha, prefactor / region_volume, region_volume, prefactor)?))
        }
        LimitSpec::FullGaussian { sigma2, region_volume, .. } => {
            Ok(LimitLaw::Gaussian(GaussianLaw::new(0.0, sigma2 / region_volume)?))
        }
        LimitSpec::HyperStable { nu, nu0, alpha, c_r, mu, slice_moment, region_volume } => {
            if hyperplane_regime(nu, nu0, Some(alpha))? != HyperRegime::Stable {
                return Err(Error::Precondition(format!(
                    "stable hyperplane limit needs alpha < 1 + nu0/nu = {}, got {alpha}; above the phase boundary the limit is Gaussian",
                    1.0 + nu0 as f64 / nu as f64
                )));
            }
            let alpha0 = hyperplane_index(nu, nu0, alpha);
            let c = h_infinity(c_r, alpha, nu, nu0) * slice_moment * region_volume;
            let prefactor = (-mu).exp();
            Ok(LimitLaw::Stable(StableLaw::from_levy(c, alpha0, prefactor / region_volume, region_volume, prefactor)?))
        }
        LimitSpec::HyperGaussian { nu, nu0, alpha, sigma2, region_volume } => {
            if nu0 < nu && hyperplane_regime(nu, nu0, alpha)? != HyperRegime::Gaussian {
                return Err(Error::Precondition(format!(
                    "Gaussian hyperplane limit needs alpha > 1 + nu0/nu = {}; below the phase boundary the limit is stable",
                    1.0 + nu0 as f64 / nu as f64
                )));
            }
            Ok(LimitLaw::Gaussian(GaussianLaw::new(0.0, sigma2 / region_volume)?))
        }
    }
}

/// `∫_{R^{ν−ν₀}} E g⁰(s)^{α₀} ds`, where `g⁰(s)` is the `ν₀`-dimensional
/// measure of the base grain's section at perpendicular offset `s`.
///
/// Balls and cubes use closed forms or one-dimensional quadrature; random
/// bases average per-sample integrals over `n_mc` grains.
pub fn slice_moment(model: &GrainModel, nu0: usize, alpha0: f64, n_mc: usize, rng: &mut RngStream) -> Result<EstimateWithError> {
    let Family::Homothetic { base, .. } = model.family() else {
        return Err(Error::Unsupported("slice moments are defined for homothetic grains".into()));
    };
    let nu = model.nu();
    if nu0 == 0 || nu0 >= nu {
        return Err(Error::Precondition(format!("need 1 <= nu0 < nu = {nu}, got {nu0}")));
    }
    let d = nu - nu0;
    let opts = QuadOptions::tol(1e-13, 1e-10);
    match base {
        BaseShape::UnitBall => {
            let v0 = unit_ball_volume(nu0);
            let q = integrate(
                |r: f64| (v0 * (1.0 - r * r).max(0.0).powf(nu0 as f64 / 2.0)).powf(alpha0) * r.powi(d as i32 - 1),
                0.0,
                1.0,
                opts,
            )?;
            Ok(EstimateWithError::exact(unit_sphere_area(d) * q.value))
        }
        BaseShape::UnitCubeScaled => {
            let side = 2.0 / (nu as f64).sqrt();
            Ok(EstimateWithError::exact(side.powi(d as i32) * side.powf(nu0 as f64 * alpha0)))
        }
        _ => {
            if d != 1 {
                return Err(Error::Unsupported(format!("slice moments of random bases with {d} perpendicular dimensions")));
            }
            let mut vals = Vec::with_capacity(n_mc.max(2));
            for _ in 0..n_mc.max(2) {
                let g = grain_with_r(model, 1.0, rng)?;
                let rho = g.rho();
                let mut err = None;
                let q = integrate(
                    |s: f64| match g.slice_measure(&[s], nu0, 0) {
                        Ok(v) => v.powf(alpha0),
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    },
                    -rho,
                    rho,
                    QuadOptions::tol(1e-10, 1e-7),
                )?;
                if let Some(e) = err {
                    return Err(e);
                }
                vals.push(q.value);
            }
            Ok(EstimateWithError::from_samples(&vals))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grains::HeavyTailLaw;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    #[test]
    fn prefactor_values() {
        assert!((level_prefactor(1.3, 1).unwrap() - (-1.3f64).exp()).abs() < 1e-16);
        let v = level_prefactor(PI, 4).unwrap();
        assert!((v - (-PI).exp() * PI.powi(3) / 6.0).abs() < 1e-15);
        assert!(level_prefactor(1.0, 0).is_err());
    }

    #[test]
    fn h_infinity_example() {
        assert!((hyperplane_index(2, 1, 1.3) - 1.6).abs() < 1e-15);
        assert!((h_infinity(1.0, 1.3, 2, 1) - 1.625).abs() < 1e-15);
    }

    #[test]
    fn regimes_are_total_off_the_boundary() {
        for nu in 1..=4usize {
            for nu0 in 1..=nu {
                for i in 1..100 {
                    let alpha = 1.0 + i as f64 / 100.0;
                    let boundary = 1.0 + nu0 as f64 / nu as f64;
                    let r = hyperplane_regime(nu, nu0, Some(alpha));
                    if (alpha - boundary).abs() < 1e-12 {
                        assert!(r.is_err());
                    } else {
                        assert_eq!(r.unwrap() == HyperRegime::Stable, alpha < boundary);
                    }
                }
            }
        }
        assert_eq!(hyperplane_regime(2, 1, None).unwrap(), HyperRegime::Gaussian);
    }

    #[test]
    fn ball_slice_moment_closed_form() {
        // ν = 2, ν₀ = 1: ∫_{-1}^{1} (2√(1−s²))^{a} ds = 2^a √π Γ(a/2+1)/Γ(a/2+3/2).
        let m = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.3, 1.0).unwrap()).unwrap();
        let mut rng = RngStream::new(0, 0);
        let a = 1.6;
        let v = slice_moment(&m, 1, a, 0, &mut rng).unwrap().value;
        let expect = 2f64.powf(a) * PI.sqrt() * gamma(a / 2.0 + 1.0) / gamma(a / 2.0 + 1.5);
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
    }

    #[test]
    fn cluster_slice_moment_is_consistent_with_single_ball() {
        // A cluster with mean count near zero is conditioned to one ball of
        // radius U^{1/2}/2 at center V/2, so its moment is bounded by the unit ball's.
        let m = GrainModel::homothetic(2, BaseShape::ClusterBoolean { mean_count: 1e-6 }, HeavyTailLaw::pareto(1.3, 1.0).unwrap()).unwrap();
        let mut rng = RngStream::new(1, 0);
        let v = slice_moment(&m, 1, 1.6, 200, &mut rng).unwrap();
        let ball = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.3, 1.0).unwrap()).unwrap();
        let full = slice_moment(&ball, 1, 1.6, 0, &mut rng).unwrap().value;
        assert!(v.value > 0.0 && v.value < full);
    }

    #[test]
    fn equal_dimensions_reduce_to_the_full_law() {
        let m = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.5, 0.3).unwrap()).unwrap();
        let full = limit_law_from_model(&LimitSpec::full(&m, 1, 4.0, 0).unwrap()).unwrap();
        let hyper = limit_law_from_model(&LimitSpec::hyperplane(&m, 2, 4.0, 0).unwrap()).unwrap();
        let (LimitLaw::Stable(a), LimitLaw::Stable(b)) = (full, hyper) else { panic!("stable laws expected") };
        assert!((a.alpha - b.alpha).abs() < 1e-15);
        assert!((a.sigma - b.sigma).abs() < 1e-12 * a.sigma);
        assert_eq!((a.beta, a.delta), (1.0, 0.0));
    }

    #[test]
    fn full_law_scale() {
        // σ = (prefactor/Leb(A)) (c Γ(2−α)|cos(πα/2)|/(α−1))^{1/α} with c = c_Ξ Leb(A).
        let m = GrainModel::homothetic(1, BaseShape::UnitBall, HeavyTailLaw::pareto(1.5, 1.0 / 6.0).unwrap()).unwrap();
        let spec = LimitSpec::full(&m, 2, 1.0, 0).unwrap();
        let LimitLaw::Stable(s) = limit_law_from_model(&spec).unwrap() else { panic!() };
        let c_xi = (1.0f64 / 6.0).powf(1.5) * 2f64.powf(1.5);
        let mu = 1.0;
        let sa = c_xi * gamma(0.5) * (0.75 * PI).cos().abs() / 0.5;
        assert!((s.sigma - (-mu as f64).exp() * mu * sa.powf(1.0 / 1.5)).abs() < 1e-12);
    }

    #[test]
    fn phase_boundary_errors() {
        let heavy = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.8, 1.0).unwrap()).unwrap();
        let spec = LimitSpec::HyperStable { nu: 2, nu0: 1, alpha: 1.8, c_r: 1.0, mu: 1.0, slice_moment: 1.0, region_volume: 1.0 };
        let err = limit_law_from_model(&spec).unwrap_err();
        assert!(err.to_string().contains("phase boundary"));
        assert!(matches!(LimitSpec::hyperplane(&heavy, 1, 1.0, 0).unwrap(), LimitSpec::HyperGaussian { .. }));
        let light = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.3, 1.0).unwrap()).unwrap();
        assert!(matches!(LimitSpec::hyperplane(&light, 1, 1.0, 0).unwrap(), LimitSpec::HyperStable { .. }));
        let on = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.5, 1.0).unwrap()).unwrap();
        assert!(LimitSpec::hyperplane(&on, 1, 1.0, 0).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = LimitSpec::FullGaussian { k: 2, nu: 1, sigma2: 0.19, region_volume: 1.0 };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"theorem\":\"full-gaussian\""));
        assert_eq!(serde_json::from_str::<LimitSpec>(&s).unwrap(), spec);
    }
}
