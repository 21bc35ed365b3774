use std::path::PathBuf;

use rmab::harness::{
    emit_csv, emit_posterior_weights, frequentist_regret_experiment, loglog_slope, read_csv, run_experiment,
    write_csv, ExperimentConfig, RegretSeries,
};
use rmab::valuation::cumulative_regret_forms;
use rmab::Error;

fn config(mode: &str, mapping: &str, extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"K": 2, "N": 1, "L": 3, "m": 6, "mapping_name": "{mapping}", "mode": "{mode}",
            "prior": {{"grid": {{"values": [0.2, 0.5, 0.8]}}}},
            "theta_star": [[0.2, 0.8], [0.8, 0.2]],
            "replications": 30,
            "value_eval": {{"method": "exact-if-feasible", "replications": 200, "benchmark_replications": 200}},
            "master_seed": 5{extra}}}"#
    ))
    .unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn output_is_independent_of_worker_count() {
    let mut cfg = config("frequentist", "whittle", "");
    cfg.value_eval.method = rmab::harness::ValueMethod::Mc;
    let one = in_pool(1, || write_csv(&run_experiment(&cfg).unwrap()));
    let four = in_pool(4, || write_csv(&run_experiment(&cfg).unwrap()));
    assert_eq!(one, four);
    let again = in_pool(3, || write_csv(&run_experiment(&cfg).unwrap()));
    assert_eq!(one, again);
}

#[test]
fn optimal_benchmark_regret_is_not_negative() {
    for (mode, seed) in [("bayesian", 1), ("frequentist", 2)] {
        let mut cfg = config(mode, "optimal_dp", "");
        cfg.master_seed = seed;
        let s = run_experiment(&cfg).unwrap();
        for r in &s.rows {
            assert!(r.regret >= -3.0 * r.regret_stderr - 1e-12, "{mode} episode {}: {r:?}", r.episode);
        }
    }
}

#[test]
fn regret_forms_agree() {
    let s = frequentist_regret_experiment(&config("frequentist", "myopic", "")).unwrap();
    let bench = s.rows[0].benchmark_value;
    let values: Vec<f64> = s.rows.iter().map(|r| r.algo_value).collect();
    let (direct, per_episode) = cumulative_regret_forms(bench, &values);
    let last = s.rows.last().unwrap().cum_regret;
    assert!((direct - per_episode).abs() <= 1e-9 * direct.abs().max(1.0));
    assert!((last - per_episode).abs() <= 1e-9 * last.abs().max(1.0));
}

#[test]
fn csv_round_trip_and_prefix_sums() {
    let s = frequentist_regret_experiment(&config("frequentist", "whittle", "")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/regret.csv");
    emit_csv(&s, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.rows.len(), s.rows.len());
    let mut cum = 0.0;
    for (a, b) in back.rows.iter().zip(&s.rows) {
        assert_eq!(a.episode, b.episode);
        cum += a.regret;
        // six significant digits per field
        let tol = 1e-5 * (b.cum_regret.abs() + s.rows.iter().map(|r| r.regret.abs()).sum::<f64>()) + 1e-12;
        assert!((cum - a.cum_regret).abs() <= tol, "episode {}: {cum} vs {}", a.episode, a.cum_regret);
        assert!((a.benchmark_value - b.benchmark_value).abs() <= 1e-5 * b.benchmark_value.abs());
    }

    let weights = dir.path().join("posterior_weights.csv");
    emit_posterior_weights(&s, &weights).unwrap();
    let text = std::fs::read_to_string(&weights).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("episode,arm,weight_on_true"));
    assert_eq!(lines.count(), 6 * 2);
}

#[test]
fn empty_series_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_csv(&RegretSeries::default(), &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "episode,benchmark_value,algo_value,regret,cum_regret,stderr\n"
    );
    let blocked: PathBuf = path.join("below-a-file.csv");
    let err = emit_csv(&RegretSeries::default(), &blocked).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("below-a-file.csv") || err.to_string().contains("empty.csv"));
    assert!(!err.is_config());
}

#[test]
fn slope_of_emitted_series() {
    let values: Vec<f64> = (1..=20).map(|l| 10.0 - 2.0 / (l as f64).sqrt()).collect();
    let s = RegretSeries::from_values(&[10.0; 20], &values);
    let slope = loglog_slope(&s, Some((10, 20))).unwrap();
    assert!(slope > 0.0 && slope < 1.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    emit_csv(&s, &path).unwrap();
    let back = loglog_slope(&read_csv(&path).unwrap(), Some((10, 20))).unwrap();
    assert!((back - slope).abs() < 1e-4);
}

#[test]
fn prior_mass_required_for_frequentist_truth() {
    let mut cfg = config("frequentist", "whittle", "");
    cfg.theta_star = Some(rmab::harness::ThetaSpec::Pairs(vec![(0.3, 0.8), (0.8, 0.2)]));
    assert!(matches!(frequentist_regret_experiment(&cfg), Err(Error::Config(_))));
}
