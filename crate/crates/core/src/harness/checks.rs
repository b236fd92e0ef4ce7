//! Non-distributional experiments: the tail-mass condition, covariance,
//! Charlier identities and rasters.

use crate::charlier::{charlier_coeff_series, expansion_residual, orthogonality_check};
use crate::error::{Error, Result};
use crate::estimators::{
    cov_indicator, covariance_decay_check, covariance_rx, covariance_rx_quad, ell_direction, exceedance_probability, fit_tail_slope,
    model_mu, tail_expectation_mc, tail_expectation_quad, tail_threshold_exponent, EstimateWithError,
};
use crate::field::{raster_coverage, raster_field, simulate_realization, Window};
use crate::grains::{sample_grain, Family};
use crate::harness::{mean_se, replicate, ExperimentConfig, ReplicationRow, ResultTable, SummaryRow};
use crate::limitlaw::{hill_estimator, level_prefactor};
use crate::rng::RngStream;

/// Stream slots for the auxiliary computations of one experiment.
const SLOT_TAIL: usize = 0;
const SLOT_HILL: usize = 1;
const SLOT_RAYS: usize = 2;
const SLOT_DECAY: usize = 3;
const SLOT_ELL: usize = 4;

fn aux_rng(cfg: &ExperimentConfig, slot: usize, index: usize) -> RngStream {
    RngStream::for_replication(cfg.seed, &format!("{}#aux", cfg.name), slot, index)
}

/// Decay of `E Leb(Ξ ∩ {|t| > λ})` against the exponent `(1 − α)ν/α`, plus
/// a Hill estimate of the tail index of `Leb(Ξ)`.
pub fn run_condition_check(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let model = &cfg.model;
    let Some(alpha) = model.alpha() else {
        return Err(Error::Config(
            "condition-check needs a Pareto law; grains of bounded size have vanishing tail mass beyond their reach".into(),
        ));
    };
    let lambdas = &cfg.condition.lambdas;
    let threshold = tail_threshold_exponent(model.nu(), alpha);
    let mut table = ResultTable::default();

    let quad: Option<Vec<f64>> = lambdas.iter().map(|&l| tail_expectation_quad(model, l).ok()).collect();
    let mc: Vec<EstimateWithError> = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| tail_expectation_mc(model, l, cfg.quadrature_budget, &mut aux_rng(cfg, SLOT_TAIL, i)))
        .collect::<Result<_>>()?;
    for (i, &l) in lambdas.iter().enumerate() {
        table.summary.push(SummaryRow {
            lambda: Some(l),
            mean: Some(mc[i].value),
            se: Some(mc[i].se),
            n: Some(mc[i].budget),
            reference: quad.as_ref().map(|q| q[i]),
            ..SummaryRow::new(cfg, "tail-mass")
        });
    }

    let mc_values: Vec<f64> = mc.iter().map(|e| e.value).collect();
    let mc_fit = fit_tail_slope(lambdas, &mc_values)?;
    let quad_fit = quad.as_ref().map(|q| fit_tail_slope(lambdas, q)).transpose()?;
    if let Some(fit) = &quad_fit {
        table.summary.push(SummaryRow {
            value: Some(fit.slope),
            reference: Some(threshold),
            pass: Some(fit.slope < threshold),
            ..SummaryRow::new(cfg, "slope-quadrature")
        });
    }
    table.summary.push(SummaryRow {
        value: Some(mc_fit.slope),
        reference: Some(threshold),
        pass: quad_fit.is_none().then_some(mc_fit.slope < threshold),
        ..SummaryRow::new(cfg, "slope-mc")
    });

    let n = cfg.quadrature_budget.max(2);
    let mut rng = aux_rng(cfg, SLOT_HILL, 0);
    let volumes: Vec<f64> = (0..n).map(|_| sample_grain(model, &mut rng).map(|g| g.volume())).collect::<Result<_>>()?;
    let k_top = cfg.condition.hill_k_top.min(n / 10).max(1);
    table.summary.push(SummaryRow {
        n: Some(n),
        value: Some(hill_estimator(&volumes, k_top)?),
        reference: Some(alpha),
        ..SummaryRow::new(cfg, "hill")
    });
    Ok(table)
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Config(format!("direction {v:?} cannot be normalized")));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Covariance function along rays, its decay and direction profile, and the
/// empirical two-point indicator covariance of simulated fields.
pub fn run_covariance(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let model = &cfg.model;
    let nu = model.nu();
    let cc = &cfg.covariance;
    let directions: Vec<Vec<f64>> = if cc.directions.is_empty() {
        let mut e1 = vec![0.0; nu];
        e1[0] = 1.0;
        vec![e1]
    } else {
        cc.directions.iter().map(|d| unit(d)).collect::<Result<_>>()?
    };
    if directions.iter().any(|d| d.len() != nu) {
        return Err(Error::Config(format!("directions must have dimension {nu}")));
    }
    let mu = model_mu(model, cfg.quadrature_budget)?.mu.value;
    let mut table = ResultTable::default();

    let mut idx = 0;
    for (di, z) in directions.iter().enumerate() {
        for &d in &cc.distances {
            let t: Vec<f64> = z.iter().map(|c| c * d).collect();
            let e = covariance_rx(model, &t, cfg.quadrature_budget, &mut aux_rng(cfg, SLOT_RAYS, idx))?;
            idx += 1;
            let reference = if d == 0.0 { Some(mu) } else { covariance_rx_quad(model, &t).ok() };
            let pass = reference.map(|r| (e.value - r).abs() <= cfg.thresholds.bias_z * e.se + 1e-9 * r.abs().max(1.0));
            table.summary.push(SummaryRow {
                k: Some(di),
                lambda: Some(d),
                mean: Some(e.value),
                se: Some(e.se),
                n: Some(e.budget),
                reference,
                pass,
                ..SummaryRow::new(cfg, "rx")
            });
        }
    }

    if !cc.decay_distances.is_empty() {
        if let Some(alpha) = model.alpha() {
            let fit = covariance_decay_check(model, &directions, &cc.decay_distances, cfg.quadrature_budget, &mut aux_rng(cfg, SLOT_DECAY, 0))?;
            let reference = -(nu as f64) * (alpha - 1.0);
            table.summary.push(SummaryRow {
                value: Some(fit.slope),
                reference: Some(reference),
                pass: Some((fit.slope - reference).abs() <= cfg.thresholds.index_tol),
                ..SummaryRow::new(cfg, "decay-slope")
            });
        }
    }

    if let (Some(_), Family::Homothetic { base, .. }) = (model.alpha(), model.family()) {
        let mut ells = Vec::with_capacity(directions.len());
        for (di, z) in directions.iter().enumerate() {
            let e = ell_direction(model, z, cfg.quadrature_budget / 100, &mut aux_rng(cfg, SLOT_ELL, di))?;
            ells.push(e.value);
            table.summary.push(SummaryRow {
                k: Some(di),
                mean: Some(e.value),
                se: Some(e.se),
                ..SummaryRow::new(cfg, "ell")
            });
        }
        let hi = ells.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ells.iter().cloned().fold(f64::MAX, f64::min);
        let spread = (hi - lo) / hi.abs().max(f64::MIN_POSITIVE);
        let gated = base.is_isotropic() && base.is_deterministic();
        table.summary.push(SummaryRow {
            value: Some(spread),
            pass: gated.then_some(spread <= 1e-6),
            ..SummaryRow::new(cfg, "ell-isotropy")
        });
    }

    if let Some(emp) = &cc.empirical {
        empirical_covariance(cfg, emp, mu, &mut table)?;
    }
    Ok(table)
}

/// Pairs `(T, T + s e₁)` with both ends in `λA`; the sample covariance of
/// the coverage indicators is compared with `e^{−2μ}(e^{r_X(s e₁)} − 1)`.
fn empirical_covariance(
    cfg: &ExperimentConfig,
    emp: &crate::harness::EmpiricalCovarianceConfig,
    mu: f64,
    table: &mut ResultTable,
) -> Result<()> {
    let model = &cfg.model;
    let nu = model.nu();
    if emp.replications < 2 || emp.pairs == 0 {
        return Err(Error::Config("empirical covariance needs at least two replications and one pair".into()));
    }
    let window = Window::new(cfg.window_shape(), nu, emp.lambda)?;
    let p = exceedance_probability(mu, 1);
    let stream_name = format!("{}#pairs", cfg.name);
    for (si, &s) in emp.separations.iter().enumerate() {
        let means = replicate(cfg.threads, emp.replications, |rep| {
            let mut rng = RngStream::for_replication(cfg.seed, &stream_name, si, rep);
            let rz = simulate_realization(model, &window, &mut rng)?;
            let mut a = vec![0.0; nu];
            let mut b = vec![0.0; nu];
            let mut both = 0usize;
            for _ in 0..emp.pairs {
                let mut tries = 0;
                loop {
                    window.sample_point(&mut rng, &mut a);
                    b.copy_from_slice(&a);
                    b[0] += s;
                    if window.contains(&b) {
                        break;
                    }
                    tries += 1;
                    if tries > 10_000 {
                        return Err(Error::Config(format!("separation {s} does not fit inside the window")));
                    }
                }
                if rz.coverage_count(&a) >= 1 && rz.coverage_count(&b) >= 1 {
                    both += 1;
                }
            }
            Ok(both as f64 / emp.pairs as f64)
        })?;
        let experiment = format!("{}/sep={s}", cfg.name);
        for (rep, &m) in means.iter().enumerate() {
            table.replications.push(ReplicationRow {
                experiment: experiment.clone(),
                replication: rep,
                lambda: emp.lambda,
                k: 1,
                nu0: None,
                estimate: m,
                se: (m * (1.0 - m) / emp.pairs as f64).sqrt(),
                n_pts: emp.pairs,
                seed: cfg.seed,
            });
        }
        let (mean, se) = mean_se(&means);
        let mut t = vec![0.0; nu];
        t[0] = s;
        let a = match covariance_rx_quad(model, &t) {
            Ok(v) => v,
            Err(_) => covariance_rx(model, &t, cfg.quadrature_budget, &mut aux_rng(cfg, SLOT_RAYS, usize::MAX - si))?.value,
        };
        let target = cov_indicator(a, mu);
        let cov = mean - p * p;
        table.summary.push(SummaryRow {
            lambda: Some(emp.lambda),
            value: Some(s),
            n: Some(emp.replications),
            mean: Some(cov),
            se: Some(se),
            target: Some(target),
            pass: Some((cov - target).abs() <= cfg.thresholds.bias_z * se),
            ..SummaryRow::new(cfg, "empirical-covariance")
        });
    }
    Ok(())
}

/// Orthogonality, the first-order coefficient and expansion residuals of
/// the Charlier basis.
pub fn run_charlier_check(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let c = &cfg.charlier;
    if c.max_level == 0 {
        return Err(Error::Config("charlier max_level must be at least 1".into()));
    }
    let mut table = ResultTable::default();
    for &mu in &c.mus {
        let dev = orthogonality_check(c.max_degree, mu, c.tail_tol)?;
        table.summary.push(SummaryRow {
            target: Some(mu),
            n: Some(c.max_degree),
            value: Some(dev),
            pass: Some(dev < 1e-9),
            ..SummaryRow::new(cfg, "orthogonality")
        });
        for k in 1..=c.max_level {
            let series = charlier_coeff_series(k, mu, 1, c.tail_tol)?;
            let closed = level_prefactor(mu, k)?;
            table.summary.push(SummaryRow {
                target: Some(mu),
                k: Some(k),
                value: Some(series),
                reference: Some(closed),
                pass: Some((series - closed).abs() < 1e-12),
                ..SummaryRow::new(cfg, "first-coefficient")
            });
            let residuals: Vec<f64> = (0..=c.max_degree).map(|j| expansion_residual(k, mu, j, c.tail_tol)).collect::<Result<_>>()?;
            let monotone = residuals.windows(2).all(|w| w[1] <= w[0] + 1e-14);
            table.summary.push(SummaryRow {
                target: Some(mu),
                k: Some(k),
                n: Some(c.max_degree),
                value: residuals.last().copied(),
                reference: residuals.first().copied(),
                pass: Some(monotone),
                ..SummaryRow::new(cfg, "expansion-residual")
            });
        }
    }
    Ok(table)
}

/// Rasters of one planar realization at the first scale of the ladder.
pub fn run_render(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let model = &cfg.model;
    if model.nu() != 2 {
        return Err(Error::Config(format!("render needs nu = 2, got {}", model.nu())));
    }
    let lambda = cfg.lambdas[0];
    let window = Window::new(cfg.window_shape(), 2, lambda)?;
    let mut rng = RngStream::for_replication(cfg.seed, &cfg.name, 0, 0);
    let rz = simulate_realization(model, &window, &mut rng)?;
    let mu = model_mu(model, cfg.quadrature_budget)?.mu.value;
    let res = cfg.render.resolution;
    let mut table = ResultTable::default();
    table.rasters.push(("coverage".into(), raster_coverage(&rz, res, cfg.render.shade_levels)?));
    for &k in &cfg.k_levels {
        let bm = raster_field(&rz, res, k)?;
        table.summary.push(SummaryRow {
            lambda: Some(lambda),
            k: Some(k),
            n: Some(rz.germ_count()),
            value: Some(bm.count_nonzero() as f64 / (bm.width * bm.height) as f64),
            reference: Some(exceedance_probability(mu, k)),
            ..SummaryRow::new(cfg, "raster")
        });
        table.rasters.push((format!("k{k}"), bm));
    }
    Ok(table)
}
