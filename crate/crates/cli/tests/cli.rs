use std::path::Path;
use std::process::{Command, Output};

fn srwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srwlab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rho_table() {
    let o = srwlab(&["rho"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("index,probability\n"));
    let total: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn simulate_is_seeded() {
    let a = srwlab(&["simulate", "--n", "8", "--seed", "3"]);
    let b = srwlab(&["simulate", "--n", "8", "--seed", "3"]);
    assert!(a.status.success());
    assert!(stdout(&a).starts_with("i,ell_minus,ell_plus\n"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn profile_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = srwlab(&[
        "profile",
        "--n",
        "12",
        "--x",
        "-0.5",
        "--iota",
        "+",
        "--coupled",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("coupled.csv")).unwrap();
    assert!(csv.starts_with("i,ell_minus,ell_plus,zeta,matched\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["backend"], "eta");
}

#[test]
fn metric_prints_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let g = dir.path().join("g.csv");
    std::fs::write(&f, "breakpoint,value\n-inf,0\n0.5,1\n").unwrap();
    std::fs::write(&g, "breakpoint,value\n-inf,0\n0.7,1\n").unwrap();
    let o = srwlab(&["metric", "j1", path(&f), path(&g), "--interval", "0", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lower,upper,tolerance"));
    let v: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((v[0] - 0.2).abs() < 1e-9 && (v[1] - 0.2).abs() < 1e-9);

    let o = srwlab(&["metric", "m1", path(&f), path(&g), "--interval", "0", "2"]);
    let v: Vec<f64> = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!(v[0] <= v[1] && v[1] <= 0.2 + 1e-6 && v[2] > 0.0);

    let o = srwlab(&["metric", "m1", path(&f), path(&g)]);
    assert!(o.status.success());

    let o = srwlab(&[
        "metric",
        "uniform",
        path(&f),
        path(&g),
        "--interval",
        "0",
        "2",
    ]);
    assert_eq!(stdout(&o).lines().nth(1), Some("1,1,0"));

    let o = srwlab(&["metric", "uniform", path(&f), path(&g)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e2.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "E2", "n_list": [40], "replicates": 50}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = srwlab(&[
        "experiment",
        path(&cfg),
        "--seed",
        "9",
        "--threads",
        "2",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["master_seed"], 9);
    assert!(out.join("samples.csv").exists());

    std::fs::write(
        &cfg,
        r#"{"experiment": "E2", "n_list": [40], "replicates": 50, "thresholds": {"relative_tolerance": 0.0}}"#,
    )
    .unwrap();
    assert_eq!(srwlab(&["experiment", path(&cfg)]).status.code(), Some(1));

    std::fs::write(
        &cfg,
        r#"{"experiment": "E2", "n_list": [40], "replicates": 0}"#,
    )
    .unwrap();
    assert_eq!(srwlab(&["experiment", path(&cfg)]).status.code(), Some(2));
}
