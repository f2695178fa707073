use kroncov::estimators::Method;
use kroncov::experiment::{
    coverage_report, run_experiment, summarize, write_records, ExperimentSpec, LambdaPolicy,
    RunOptions, RECORD_HEADER,
};
use kroncov::Error;

const SMOKE: &str = include_str!("../../../specs/smoke.toml");

fn smoke() -> ExperimentSpec {
    ExperimentSpec::parse(SMOKE, "smoke.toml").unwrap()
}

fn csv_bytes(spec: &ExperimentSpec, threads: usize) -> Vec<u8> {
    let run = run_experiment(spec, RunOptions { threads: Some(threads), omega_override: None }).unwrap();
    let mut buf = Vec::new();
    write_records(&mut buf, &run.records).unwrap();
    buf
}

#[test]
fn record_count_and_header() {
    let spec = smoke();
    let run = run_experiment(&spec, RunOptions::default()).unwrap();
    assert_eq!(run.records.len(), spec.trials * spec.n_grid.len() * spec.estimators.len());
    let mut buf = Vec::new();
    write_records(&mut buf, &run.records).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), RECORD_HEADER);
    assert_eq!(text.lines().count(), run.records.len() + 1);
    for r in &run.records {
        assert!(r.frobenius_error >= 0.0 && r.operator_error_rearranged >= 0.0);
        let sq = r.frobenius_error * r.frobenius_error;
        assert!((r.squared_frobenius_error - sq).abs() <= 1e-12 * sq.max(f64::MIN_POSITIVE));
        assert_eq!(r.lambda_used.is_some(), r.estimator == Method::PlsSoft);
    }
}

#[test]
fn single_record() {
    let mut spec = smoke();
    spec.trials = 1;
    spec.n_grid = vec![80];
    spec.estimators = vec![Method::RankOne];
    assert_eq!(run_experiment(&spec, RunOptions::default()).unwrap().records.len(), 1);
}

#[test]
fn byte_identical_across_runs_and_thread_counts() {
    let spec = smoke();
    let one = csv_bytes(&spec, 1);
    assert_eq!(one, csv_bytes(&spec, 1));
    assert_eq!(one, csv_bytes(&spec, 3));
}

#[test]
fn infeasible_specs_fail_before_running() {
    let mut spec = smoke();
    spec.n_grid = vec![100, 50];
    assert!(matches!(run_experiment(&spec, RunOptions::default()), Err(Error::Spec(_))));

    let mut spec = smoke();
    spec.n_grid = vec![2, 100];
    assert!(matches!(
        run_experiment(&spec, RunOptions::default()),
        Err(Error::DeltaCondition { .. }) | Err(Error::Spec(_))
    ));

    let mut spec = smoke();
    spec.omega = None;
    assert!(run_experiment(&spec, RunOptions::default()).is_err());

    assert!(ExperimentSpec::parse(&SMOKE.replace("schema_version = 1", "schema_version = 9"), "v9").is_err());
    assert!(ExperimentSpec::parse(&format!("{SMOKE}\nunknown_key = 1\n"), "extra").is_err());
}

#[test]
fn coverage_is_monotone_in_omega() {
    let mut spec = smoke();
    spec.estimators = vec![Method::PlsSoft];
    spec.trials = 12;
    let mut prev = (0.0, 0.0);
    for omega in [0.05, 0.2, 0.5, 1.0, 3.0] {
        let run = run_experiment(&spec, RunOptions { threads: None, omega_override: Some(omega) }).unwrap();
        let c = coverage_report(&run.records, spec.delta).unwrap();
        assert!(c.lemma1_coverage >= prev.0 && c.theorem1_coverage >= prev.1, "ω = {omega}");
        prev = (c.lemma1_coverage, c.theorem1_coverage);
    }
    assert_eq!(prev, (1.0, 1.0));
}

#[test]
fn summary_reports_slopes_and_coverage() {
    let spec = smoke();
    let run = run_experiment(&spec, RunOptions::default()).unwrap();
    let summary = summarize(&spec, &run).unwrap();
    assert_eq!(summary.records, run.records.len());
    assert!(summary.coverage.is_some());
    assert_eq!(summary.baseline_rates.len(), spec.n_grid.len());
    assert!(!summary.rate_slopes.is_empty());
    assert_eq!(summary.omega, Some(1.0));
}

#[test]
fn spec_round_trips_through_toml() {
    let spec = smoke();
    let again = ExperimentSpec::parse(&spec.to_toml(), "roundtrip").unwrap();
    assert_eq!(spec, again);
    assert!(matches!(again.lambda_policy, LambdaPolicy::Theorem1 { .. }));
}
