use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::WindowShape;
use crate::grains::GrainModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LimitTest,
    CltTest,
    HyperplaneTest,
    ConditionCheck,
    Covariance,
    CharlierCheck,
    Render,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::LimitTest => "limit-test",
            ExperimentKind::CltTest => "clt-test",
            ExperimentKind::HyperplaneTest => "hyperplane-test",
            ExperimentKind::ConditionCheck => "condition-check",
            ExperimentKind::Covariance => "covariance",
            ExperimentKind::CharlierCheck => "charlier-check",
            ExperimentKind::Render => "render",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            ExperimentKind::LimitTest,
            ExperimentKind::CltTest,
            ExperimentKind::HyperplaneTest,
            ExperimentKind::ConditionCheck,
            ExperimentKind::Covariance,
            ExperimentKind::CharlierCheck,
            ExperimentKind::Render,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }

    /// Kinds whose verdict rests on the distribution of replicated statistics.
    pub fn is_distributional(&self) -> bool {
        matches!(self, ExperimentKind::LimitTest | ExperimentKind::CltTest | ExperimentKind::HyperplaneTest)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperplaneConfig {
    pub nu0: usize,
    /// Sub-window in the first `nu0` coordinates.
    pub region: WindowShape,
}

/// Pass/fail tolerances. Defaults were calibrated against the exact
/// samplers of the reference laws at the default replication counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Allowed |α̂ − α| for full-window stable limits.
    pub index_tol: f64,
    /// Allowed |α̂ − α₀| for hyperplane stable limits.
    pub hyper_index_tol: f64,
    /// Minimum fitted skewness parameter for totally skewed limits.
    pub beta_min: f64,
    /// Relative tolerance of fitted scale ratios between levels.
    pub prefactor_tol: f64,
    /// Relative tolerance of the empirical variance in Gaussian limits.
    pub variance_tol: f64,
    /// Standard errors allowed between a replication mean and its target.
    pub bias_z: f64,
    /// Refusal band around the hyperplane phase boundary.
    pub boundary_margin: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            index_tol: 0.15,
            hyper_index_tol: 0.2,
            beta_min: 0.5,
            prefactor_tol: 0.2,
            variance_tol: 0.1,
            bias_z: 4.0,
            boundary_margin: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionConfig {
    /// Distances at which the tail mass is evaluated; at least four.
    pub lambdas: Vec<f64>,
    /// Upper order statistics used by the Hill check.
    pub hill_k_top: usize,
}

impl Default for ConditionConfig {
    fn default() -> Self {
        Self { lambdas: (0..9).map(|i| 10f64.powf(2.0 + 0.5 * i as f64)).collect(), hill_k_top: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalCovarianceConfig {
    pub lambda: f64,
    pub separations: Vec<f64>,
    pub replications: usize,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovarianceConfig {
    /// Ray directions; normalized on use. Empty means the first axis.
    pub directions: Vec<Vec<f64>>,
    /// Distances along each ray at which `r_X` is reported.
    pub distances: Vec<f64>,
    /// Distances for the power-law fit; empty skips the fit.
    pub decay_distances: Vec<f64>,
    pub empirical: Option<EmpiricalCovarianceConfig>,
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        Self { directions: vec![], distances: vec![0.0, 0.5, 1.0, 2.0], decay_distances: vec![], empirical: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharlierConfig {
    pub max_degree: usize,
    pub mus: Vec<f64>,
    pub max_level: usize,
    pub tail_tol: f64,
}

impl Default for CharlierConfig {
    fn default() -> Self {
        Self { max_degree: 10, mus: vec![0.5, 1.0, std::f64::consts::PI], max_level: 5, tail_tol: crate::charlier::TAIL_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub resolution: usize,
    /// Levels for the coverage shading.
    pub shade_levels: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { resolution: 512, shade_levels: 4 }
    }
}

/// One experiment, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_name")]
    pub name: String,
    pub model: GrainModel,
    /// Unscaled observation set; defaults to the unit box.
    #[serde(default)]
    pub window: Option<WindowShape>,
    /// Scale ladder; defaults to 50, 100, 200 (12.5, 25, 50 for nu >= 3).
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_levels")]
    pub k_levels: Vec<usize>,
    #[serde(default)]
    pub hyperplane: Option<HyperplaneConfig>,
    /// Quadrature points per replication; automatic when absent.
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    /// Sample budget for Monte Carlo model constants and geometric checks.
    #[serde(default = "default_budget")]
    pub quadrature_budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub condition: ConditionConfig,
    #[serde(default)]
    pub covariance: CovarianceConfig,
    #[serde(default)]
    pub charlier: CharlierConfig,
    #[serde(default)]
    pub render: RenderConfig,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_replications() -> usize {
    500
}

fn default_levels() -> Vec<usize> {
    vec![1]
}

fn default_max_points() -> usize {
    1_000_000
}

fn default_budget() -> usize {
    100_000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.fill_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn fill_defaults(&mut self) {
        let nu = self.model.nu();
        if self.window.is_none() {
            self.window = Some(WindowShape::unit_box(nu));
        }
        if self.lambdas.is_empty() {
            self.lambdas = if nu <= 2 { vec![50.0, 100.0, 200.0] } else { vec![12.5, 25.0, 50.0] };
        }
    }

    pub fn window_shape(&self) -> WindowShape {
        self.window.clone().unwrap_or_else(|| WindowShape::unit_box(self.model.nu()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\', ',', '\n']) {
            return Err(Error::Config(format!("experiment name `{}` must be nonempty without separators", self.name)));
        }
        if self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::Config("scales must be positive and finite".into()));
        }
        if self.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("scale ladder must be strictly increasing, got {:?}", self.lambdas)));
        }
        if self.kind.is_distributional() && self.replications < 100 {
            return Err(Error::Config(format!(
                "{} needs at least 100 replications per scale, got {}",
                self.kind.name(),
                self.replications
            )));
        }
        if self.k_levels.is_empty() || self.k_levels.contains(&0) {
            return Err(Error::Config("excursion levels must be a nonempty list of positive integers".into()));
        }
        if self.points == Some(0) || self.max_points == 0 {
            return Err(Error::Config("point budgets must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        crate::field::Window::new(self.window_shape(), self.model.nu(), 1.0)?;
        Ok(())
    }
}
