use srwlab::harness::{
    run_experiment, Backend, ExperimentConfig, ExperimentId, HarnessError, THRESHOLD_NOTE,
};
use srwlab::stats::ks_two_sample;

fn small(id: ExperimentId, n_list: Vec<u64>, replicates: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_for(id);
    cfg.n_list = n_list;
    cfg.replicates = replicates;
    cfg
}

fn column(r: &srwlab::harness::RunResult, n: u64, name: &str) -> Vec<f64> {
    let k = r.samples.columns.iter().position(|c| c == name).unwrap();
    r.samples
        .rows
        .iter()
        .filter(|row| row.0 == n)
        .map(|row| row.2[k])
        .collect()
}

#[test]
fn zero_replicates_rejected() {
    let mut cfg = ExperimentConfig::default_for(ExperimentId::E1);
    cfg.replicates = 0;
    assert!(matches!(
        run_experiment(&cfg),
        Err(HarnessError::ConfigInvalid(_))
    ));
}

#[test]
fn bad_configs_rejected() {
    let mut cfg = ExperimentConfig::default_for(ExperimentId::E2);
    cfg.thresholds.insert("no_such_key".into(), 1.0);
    assert!(matches!(
        cfg.validate(),
        Err(HarnessError::ConfigInvalid(_))
    ));

    let cfg = small(ExperimentId::E2, vec![], 10);
    assert!(matches!(
        cfg.validate(),
        Err(HarnessError::ConfigInvalid(_))
    ));

    let mut cfg = small(ExperimentId::E2, vec![10], 10);
    cfg.theta = -1.0;
    assert!(matches!(
        cfg.validate(),
        Err(HarnessError::ConfigInvalid(_))
    ));

    let text = r#"{"experiment": "E2", "replicates": 5, "n_list": [10], "bogus": 1}"#;
    assert!(ExperimentConfig::from_json(text).is_err());
}

#[test]
fn json_config_defaults() {
    let text = r#"{
        "experiment": "E2",
        "weight": {"kind": "bounded", "lo": 1.0, "hi": 2.0, "radius": 3},
        "n_list": [40],
        "replicates": 20,
        "iota": "+",
        "thresholds": {"relative_tolerance": 0.5}
    }"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    assert_eq!((cfg.x, cfg.theta), (1.0, 0.5));
    assert_eq!(cfg.backend, Backend::Auto);
    let t = cfg.effective_thresholds();
    assert_eq!(t["relative_tolerance"], 0.5);
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.thresholds, t);
    assert_eq!(r.note, THRESHOLD_NOTE);
}

#[test]
fn e2_example_window() {
    let r = run_experiment(&small(ExperimentId::E2, vec![400], 200)).unwrap();
    let m = r.scales[0].stat("mean");
    assert!((3.6..=4.4).contains(&m), "{m}");
    assert!(r.passed);
}

#[test]
fn e9_example_variance() {
    let r = run_experiment(&ExperimentConfig::default_for(ExperimentId::E9)).unwrap();
    let v = r.scales[0].stat("variance");
    assert!((v / (8.0 / 3.0) - 1.0).abs() <= 0.05, "{v}");
}

#[test]
fn verdicts_follow_from_stored_statistics() {
    let mut cfg = small(ExperimentId::E2, vec![60], 50);
    cfg.thresholds.insert("relative_tolerance".into(), 0.0);
    let r = run_experiment(&cfg).unwrap();
    assert!(!r.passed);
    let v = &r.verdicts[0];
    let s = &r.scales[0];
    assert_eq!(v.statistic, (s.stat("mean") / s.stat("target") - 1.0).abs());
    assert_eq!(v.threshold, r.thresholds["relative_tolerance"]);
}

#[test]
fn backends_agree_at_small_n() {
    // primary statistic of each profile-based experiment
    let cases = [
        (ExperimentId::E1, "dev_plus"),
        (ExperimentId::E2, "t_over_n2"),
        (ExperimentId::E3, "fluctuation"),
        (ExperimentId::E7, "i_plus_gap"),
    ];
    let n = 60;
    for (id, col) in cases {
        let mut direct = small(id, vec![n], 1500);
        direct.backend = Backend::Direct;
        let mut eta = direct.clone();
        eta.backend = Backend::Eta;
        eta.master_seed += 1;
        let (a, b) = (
            run_experiment(&direct).unwrap(),
            run_experiment(&eta).unwrap(),
        );
        let ks = ks_two_sample(&column(&a, n, col), &column(&b, n, col)).unwrap();
        assert!(ks.p_value > 0.01, "{id:?} {col}: {ks:?}");
    }
}

#[test]
fn writes_result_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentId::E8, vec![3, 6], 40);
    cfg.output = Some(dir.path().to_path_buf());
    let r = run_experiment(&cfg).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap())
            .unwrap();
    assert_eq!(json["experiment"], "E8");
    assert_eq!(json["passed"], r.passed);
    assert!(json["timing"]["wall_seconds"].as_f64().unwrap() >= 0.0);
    let csv = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,replicate,tau"));
    assert_eq!(lines.count(), 80);
}

#[test]
fn every_experiment_runs_small() {
    for id in ExperimentId::ALL {
        let mut cfg = ExperimentConfig::default_for(id);
        cfg.replicates = 30;
        if !matches!(id, ExperimentId::E8 | ExperimentId::E9) {
            cfg.n_list = vec![30, 60];
        }
        if id == ExperimentId::E6 {
            cfg.thresholds.insert("delta2_paths".into(), 200.0);
            cfg.thresholds.insert("limit_paths".into(), 100.0);
        }
        let r = run_experiment(&cfg).unwrap_or_else(|e| panic!("{id:?}: {e}"));
        assert!(!r.verdicts.is_empty(), "{id:?}");
        assert_eq!(r.samples.rows.len() as u64 % 30, 0);
    }
}
