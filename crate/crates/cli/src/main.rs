use std::path::PathBuf;
use std::process::ExitCode;

use boolgrain::error::Error;
use boolgrain::harness::{exit_code, run_experiment, ExperimentConfig, ExperimentKind, ResultTable};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "boolgrain", version, about = "Boolean-model simulations with heavy-tailed grains and limit-law checks")]
struct Cli {
    #[command(subcommand)]
    kind: Kind,
}

#[derive(Subcommand)]
enum Kind {
    /// Stable limit of the full-window volume fraction (Pareto grain sizes).
    LimitTest(Args),
    /// Gaussian limit of the full-window volume fraction (bounded grain sizes).
    CltTest(Args),
    /// Limit of the estimator restricted to a coordinate hyperplane.
    HyperplaneTest(Args),
    /// Decay of the tail mass E Leb(grain outside a ball).
    ConditionCheck(Args),
    /// Covariance function, its decay and the empirical two-point covariance.
    Covariance(Args),
    /// Charlier orthogonality and expansion identities.
    CharlierCheck(Args),
    /// Graymap rasters of one planar realization.
    Render(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl Kind {
    fn split(self) -> (ExperimentKind, Args) {
        match self {
            Kind::LimitTest(a) => (ExperimentKind::LimitTest, a),
            Kind::CltTest(a) => (ExperimentKind::CltTest, a),
            Kind::HyperplaneTest(a) => (ExperimentKind::HyperplaneTest, a),
            Kind::ConditionCheck(a) => (ExperimentKind::ConditionCheck, a),
            Kind::Covariance(a) => (ExperimentKind::Covariance, a),
            Kind::CharlierCheck(a) => (ExperimentKind::CharlierCheck, a),
            Kind::Render(a) => (ExperimentKind::Render, a),
        }
    }
}

/// Reads the config, filling in `kind` from the subcommand when absent.
fn load(kind: ExperimentKind, args: &Args) -> boolgrain::error::Result<ExperimentConfig> {
    let path = &args.config;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: invalid JSON: {e}", path.display())))?;
    let obj = value.as_object_mut().ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
    match obj.get("kind").and_then(|k| k.as_str()) {
        None => {
            obj.insert("kind".into(), kind.name().into());
        }
        Some(k) if k == kind.name() => {}
        Some(k) => {
            return Err(Error::Config(format!("config is for `{k}` but the `{}` subcommand was given", kind.name())));
        }
    }
    if let Some(seed) = args.seed {
        obj.insert("seed".into(), seed.into());
    }
    if let Some(t) = args.threads {
        obj.insert("threads".into(), t.into());
    }
    ExperimentConfig::from_json(&value.to_string())
}

fn report(table: &ResultTable) {
    for r in &table.summary {
        let verdict = match r.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "info",
        };
        let mut line = format!("{verdict:4}  {}", r.check);
        if let Some(l) = r.lambda {
            line.push_str(&format!("  lambda={l}"));
        }
        if let Some(k) = r.k {
            line.push_str(&format!("  k={k}"));
        }
        if let Some(v) = r.alpha_hat {
            line.push_str(&format!("  alpha_hat={v:.4}"));
        }
        if let Some(v) = r.mean {
            line.push_str(&format!("  mean={v:.6}"));
        }
        if let Some(v) = r.value {
            line.push_str(&format!("  value={v:.6}"));
        }
        if let Some(v) = r.reference {
            line.push_str(&format!("  reference={v:.6}"));
        }
        println!("{line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.kind.split();
    let outcome = load(kind, &args).and_then(|cfg| {
        let table = run_experiment(&cfg)?;
        table.write(&args.out)?;
        Ok(table)
    });
    match &outcome {
        Ok(table) => {
            report(table);
            println!("{}", if table.pass() { "PASS" } else { "FAIL" });
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&outcome) as u8)
}
