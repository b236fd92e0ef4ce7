use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_boolgrain");

fn write_config(dir: &Path, json: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

const CHARLIER: &str = r#"{"model":{"family":"homothetic","base":"unit-ball","nu":1,"R":{"kind":"constant","value":1.0}}}"#;

#[test]
fn charlier_check_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CHARLIER);
    let out = dir.path().join("out");
    let (code, stdout, _) = run(&["charlier-check", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.trim_end().ends_with("PASS"));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("experiment,kind,check,"));
    assert!(summary.contains("orthogonality"));
    assert!(out.join("replications.csv").exists());
}

#[test]
fn kind_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let json = CHARLIER.replacen('{', r#"{"kind":"render","#, 1);
    let cfg = write_config(dir.path(), &json);
    let (code, _, stderr) = run(&["charlier-check", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("subcommand"), "{stderr}");
}

#[test]
fn wrong_regime_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"replications":100,"model":{"family":"homothetic","base":"unit-ball","nu":1,"R":{"kind":"pareto","alpha":1.5,"xm":0.2}}}"#,
    );
    let (code, _, stderr) = run(&["clt-test", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("long-range"), "{stderr}");
}

#[test]
fn missing_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["render", "--config", "/nonexistent/cfg.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn render_seed_flag_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"lambdas":[8],"k_levels":[1,2],"render":{"resolution":48,"shade_levels":3},
            "model":{"family":"homothetic","base":"unit-ball","nu":2,"R":{"kind":"pareto","alpha":1.5,"xm":0.2}}}"#,
    );
    let mut images = Vec::new();
    for (threads, seed) in [("1", "5"), ("2", "5"), ("1", "6")] {
        let out = dir.path().join(format!("o{threads}{seed}"));
        let (code, _, stderr) = run(&[
            "render",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
            "--seed",
            seed,
        ]);
        assert_eq!(code, 0, "{stderr}");
        let img = std::fs::read(out.join("field_k1.pgm")).unwrap();
        assert!(img.starts_with(b"P5\n48 48\n255\n"));
        assert!(out.join("field_coverage.pgm").exists());
        images.push(img);
    }
    assert_eq!(images[0], images[1]);
    assert_ne!(images[0], images[2]);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        boolgrain::harness::ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 7);
}

#[test]
fn shipped_render_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/render-lilypond.json");
    let (code, stdout, stderr) = run(&["render", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    for name in ["coverage", "k1", "k2", "k3"] {
        assert!(dir.path().join(format!("field_{name}.pgm")).exists());
    }
}
