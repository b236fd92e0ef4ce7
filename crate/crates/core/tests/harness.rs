use boolgrain::error::Error;
use boolgrain::harness::{exit_code, run_experiment, ExperimentConfig, ResultTable};

const PARETO_1D: &str = r#"{"family":"homothetic","base":"unit-ball","nu":1,"R":{"kind":"pareto","alpha":1.5,"xm":0.2}}"#;

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

#[test]
fn single_scale_has_no_trend_row() {
    let c = cfg(&format!(r#"{{"kind":"limit-test","replications":100,"lambdas":[30],"model":{PARETO_1D}}}"#));
    let t = run_experiment(&c).unwrap();
    assert_eq!(t.rows("cf-trend").count(), 0);
    assert_eq!(t.rows("distribution").count(), 1);
    assert_eq!(t.replications.len(), 100);
}

#[test]
fn trend_row_per_level_on_a_ladder() {
    let c = cfg(&format!(r#"{{"kind":"limit-test","replications":100,"lambdas":[10,20],"k_levels":[1,2],"model":{PARETO_1D}}}"#));
    let t = run_experiment(&c).unwrap();
    assert_eq!(t.rows("cf-trend").count(), 2);
    assert_eq!(t.rows("unbiased").count(), 4);
    assert_eq!(t.rows("scale-ratio").count(), 0, "fit needs 500 replications");
}

#[test]
fn full_dimensional_hyperplane_matches_limit_test() {
    let base = format!(r#""name":"same","replications":100,"lambdas":[10,20],"seed":3,"model":{PARETO_1D}"#);
    let limit = run_experiment(&cfg(&format!(r#"{{"kind":"limit-test",{base}}}"#))).unwrap();
    let hyper = run_experiment(&cfg(&format!(
        r#"{{"kind":"hyperplane-test",{base},"hyperplane":{{"nu0":1,"region":{{"shape":"box","sides":[1.0]}}}}}}"#
    )))
    .unwrap();
    assert_eq!(limit.replications, hyper.replications);
    let strip = |t: &ResultTable| t.summary.iter().map(|r| (r.check.clone(), r.mean, r.alpha_hat, r.cf_distance, r.pass)).collect::<Vec<_>>();
    assert_eq!(strip(&limit), strip(&hyper));
}

#[test]
fn phase_boundary_is_refused() {
    for alpha in [1.5, 1.51, 1.49] {
        let c = cfg(&format!(
            r#"{{"kind":"hyperplane-test","replications":100,"window":{{"shape":"box","sides":[1.0,0.01]}},
                "hyperplane":{{"nu0":1,"region":{{"shape":"box","sides":[1.0]}}}},
                "model":{{"family":"homothetic","base":"unit-ball","nu":2,"R":{{"kind":"pareto","alpha":{alpha},"xm":0.1}}}}}}"#
        ));
        let r = run_experiment(&c);
        assert!(matches!(r, Err(Error::Config(ref m)) if m.contains("phase boundary")), "{alpha}: {:?}", r.err());
        assert_eq!(exit_code(&r), 2);
    }
}

#[test]
fn regime_mismatches_are_refused() {
    let clt = cfg(&format!(r#"{{"kind":"clt-test","replications":100,"model":{PARETO_1D}}}"#));
    assert!(matches!(run_experiment(&clt), Err(Error::Config(_))));
    let limit = cfg(r#"{"kind":"limit-test","replications":100,
        "model":{"family":"homothetic","base":"unit-ball","nu":1,"R":{"kind":"constant","value":1.0}}}"#);
    assert!(matches!(run_experiment(&limit), Err(Error::Config(_))));
    let rect = cfg(r#"{"kind":"limit-test","replications":100,"model":{"family":"rect-xiex1","R":{"kind":"pareto","alpha":1.5,"xm":1.0}}}"#);
    assert!(matches!(run_experiment(&rect), Err(Error::Config(_))));
    let render = cfg(&format!(r#"{{"kind":"render","model":{PARETO_1D}}}"#));
    assert!(matches!(run_experiment(&render), Err(Error::Config(_))));
    let cond = cfg(r#"{"kind":"condition-check","model":{"family":"homothetic","base":"unit-ball","nu":2,"R":{"kind":"bounded-uniform"}}}"#);
    assert!(matches!(run_experiment(&cond), Err(Error::Config(_))));
}

#[test]
fn condition_check_needs_four_distances() {
    let c = cfg(&format!(r#"{{"kind":"condition-check","quadrature_budget":500,"condition":{{"lambdas":[10,20,40]}},"model":{PARETO_1D}}}"#));
    assert!(matches!(run_experiment(&c), Err(Error::Config(_))));
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        format!(r#"{{"kind":"limit-test","lambdas":[50,50],"model":{PARETO_1D}}}"#),
        format!(r#"{{"kind":"limit-test","replications":99,"model":{PARETO_1D}}}"#),
        format!(r#"{{"kind":"limit-test","k_levels":[0],"model":{PARETO_1D}}}"#),
        format!(r#"{{"kind":"limit-test","name":"a/b","model":{PARETO_1D}}}"#),
        format!(r#"{{"kind":"limit-test","colour":1,"model":{PARETO_1D}}}"#),
        format!(r#"{{"kind":"shape-test","model":{PARETO_1D}}}"#),
        r#"{"kind":"limit-test","model":{"family":"homothetic","base":"unit-ball","nu":1,"R":{"kind":"pareto","alpha":2.5,"xm":1}}}"#.into(),
    ];
    for json in bad {
        assert!(matches!(ExperimentConfig::from_json(&json), Err(Error::Config(_))), "{json}");
    }
}

#[test]
fn defaults_follow_dimension() {
    let c = cfg(&format!(r#"{{"kind":"covariance","model":{PARETO_1D}}}"#));
    assert_eq!(c.lambdas, vec![50.0, 100.0, 200.0]);
    assert_eq!(c.replications, 500);
    let c3 = cfg(r#"{"kind":"covariance","model":{"family":"homothetic","base":"unit-ball","nu":3,"R":{"kind":"constant","value":1}}}"#);
    assert_eq!(c3.lambdas, vec![12.5, 25.0, 50.0]);
}

#[test]
fn covariance_at_origin_is_mu() {
    let c = cfg(r#"{"kind":"covariance","quadrature_budget":4000,"covariance":{"distances":[0,0.5]},
        "model":{"family":"homothetic","base":"unit-ball","nu":2,"R":{"kind":"pareto","alpha":1.5,"xm":0.2}}}"#);
    let t = run_experiment(&c).unwrap();
    let rows: Vec<_> = t.rows("rx").collect();
    // mu = pi E R = pi * 3 * 0.2
    assert!((rows[0].reference.unwrap() - std::f64::consts::PI * 0.6).abs() < 1e-9);
    assert!(t.pass(), "{:?}", t.summary);
    let iso = t.rows("ell-isotropy").next().unwrap();
    assert_eq!(iso.pass, Some(true));
}

#[test]
fn empty_replication_table_still_has_header() {
    let c = cfg(r#"{"kind":"charlier-check","model":{"family":"homothetic","base":"unit-ball","nu":1,"R":{"kind":"constant","value":1}}}"#);
    let t = run_experiment(&c).unwrap();
    let csv = String::from_utf8(t.replications_csv().unwrap()).unwrap();
    assert_eq!(csv.trim_end(), "experiment,replication,lambda,k,nu0,estimate,se,n_pts,seed");
    assert_eq!(exit_code(&Ok(t)), 0);
}
