//! Experiment orchestration: configuration, seeded parallel replication,
//! verdicts and CSV/graymap output.

mod checks;
mod config;
mod limit;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{write_pgm, Bitmap};

pub use checks::{run_charlier_check, run_condition_check, run_covariance, run_render};
pub use config::{
    CharlierConfig, ConditionConfig, CovarianceConfig, EmpiricalCovarianceConfig, ExperimentConfig, ExperimentKind, HyperplaneConfig,
    RenderConfig, Thresholds,
};
pub use limit::{run_clt_test, run_hyperplane_test, run_limit_test};

/// One replicated estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub experiment: String,
    pub replication: usize,
    pub lambda: f64,
    pub k: usize,
    pub nu0: Option<usize>,
    pub estimate: f64,
    pub se: f64,
    pub n_pts: usize,
    pub seed: u64,
}

/// One aggregated check. Columns that do not apply to a check stay empty;
/// `pass` is empty for informational rows.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub kind: String,
    pub check: String,
    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub nu0: Option<usize>,
    pub n: Option<usize>,
    pub mean: Option<f64>,
    pub se: Option<f64>,
    pub target: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub delta_hat: Option<f64>,
    pub ks_distance: Option<f64>,
    pub cf_distance: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub variance: Option<f64>,
    pub value: Option<f64>,
    pub reference: Option<f64>,
    pub pass: Option<bool>,
}

impl SummaryRow {
    pub(crate) fn new(cfg: &ExperimentConfig, check: &str) -> Self {
        Self { experiment: cfg.name.clone(), kind: cfg.kind.name().into(), check: check.into(), ..Self::default() }
    }
}

/// Everything an experiment produces.
#[derive(Clone, Debug, Default)]
pub struct ResultTable {
    pub replications: Vec<ReplicationRow>,
    pub summary: Vec<SummaryRow>,
    /// Named rasters written as `field_<name>.pgm`.
    pub rasters: Vec<(String, Bitmap)>,
}

impl ResultTable {
    /// All gating rows passed.
    pub fn pass(&self) -> bool {
        self.summary.iter().all(|r| r.pass != Some(false))
    }

    pub fn rows(&self, check: &str) -> impl Iterator<Item = &SummaryRow> {
        let check = check.to_string();
        self.summary.iter().filter(move |r| r.check == check)
    }

    pub fn replications_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.replications.is_empty() {
            w.write_record(["experiment", "replication", "lambda", "k", "nu0", "estimate", "se", "n_pts", "seed"])?;
        }
        for r in &self.replications {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn summary_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.summary {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| Error::Internal(e.to_string()))
    }

    /// Writes `replications.csv`, `summary.csv` and the rasters into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("replications.csv"), self.replications_csv()?)?;
        std::fs::write(dir.join("summary.csv"), self.summary_csv()?)?;
        for (name, bitmap) in &self.rasters {
            write_pgm(bitmap, BufWriter::new(File::create(dir.join(format!("field_{name}.pgm")))?))?;
        }
        Ok(())
    }
}

/// Runs the experiment named by `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.kind {
        ExperimentKind::LimitTest => run_limit_test(cfg),
        ExperimentKind::CltTest => run_clt_test(cfg),
        ExperimentKind::HyperplaneTest => run_hyperplane_test(cfg),
        ExperimentKind::ConditionCheck => run_condition_check(cfg),
        ExperimentKind::Covariance => run_covariance(cfg),
        ExperimentKind::CharlierCheck => run_charlier_check(cfg),
        ExperimentKind::Render => run_render(cfg),
    }
}

/// Process exit code for an outcome: 0 pass, 1 statistical failure,
/// 2 configuration error, 3 runtime failure.
pub fn exit_code(outcome: &Result<ResultTable>) -> i32 {
    match outcome {
        Ok(t) if t.pass() => 0,
        Ok(_) => 1,
        Err(Error::Config(_) | Error::Precondition(_) | Error::Unsupported(_) | Error::Json(_)) => 2,
        Err(_) => 3,
    }
}

/// Evaluates `f(0..n)` on a pool of `threads` workers, preserving order.
pub(crate) fn replicate<T, F>(threads: Option<usize>, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let e = crate::estimators::EstimateWithError::from_samples(xs);
    (e.value, e.se)
}
