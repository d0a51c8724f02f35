use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fdrsafe::generator::{sample_dataset, GeneratorParams};

fn fdrsafe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdrsafe"))
        .args(args)
        .env_remove("FDRSAFE_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_stats(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let phi = GeneratorParams::new(0.8, 1.0, 0.3, 2.0, 3.0).unwrap();
    let data = sample_dataset(&phi, n, seed).unwrap();
    let mut text = String::from("gene,statistic\n");
    for (i, u) in data.u.iter().enumerate() {
        text.push_str(&format!("g{i},{u}\n"));
    }
    let path = dir.join("stats.csv");
    std::fs::write(&path, text).unwrap();
    path
}

const FAST: [&str; 4] = ["--n-synthetic", "2", "--ensemble-size", "3"];

fn run_to(input: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", input.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend(FAST);
    args.extend(extra);
    fdrsafe(&args)
}

#[test]
fn grid_defaults_list_every_model() {
    let o = fdrsafe(&["grid"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.last(), Some(&"total: 110"));
    assert_eq!(lines.len(), 111);
}

#[test]
fn grid_json_and_single_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    std::fs::write(&cfg, "[empirical_null]\nenabled = false\n[pvalue]\nenabled = false\n").unwrap();
    let o = fdrsafe(&["grid", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], 6);
    assert!(v["models"]
        .as_array()
        .unwrap()
        .iter()
        .all(|m| m["family"] == "grenander_null"));
}

#[test]
fn invalid_grid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    std::fs::write(&cfg, "[pvalue]\nadj = [-1.0]\n").unwrap();
    let o = fdrsafe(&["grid", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "[pvalue]\nbogus = 1\n").unwrap();
    assert_eq!(fdrsafe(&["grid", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn run_writes_versioned_result_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_stats(dir.path(), 300, 1);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let o = run_to(&input, &a, &["--seed", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(run_to(&input, &b, &["--seed", "5"]).status.success());
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["records"].as_array().unwrap().len(), 300);
    assert_eq!(v["records"][7]["index"], 7);
    assert_eq!(v["selected"].as_array().unwrap().len(), 3);
    assert_eq!(v["manifest"]["seed"], 5);
    assert_eq!(v["manifest"]["input"]["sha256"].as_str().unwrap().len(), 64);
    let pi0 = v["pi0_hat"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pi0));

    // Replaying from the result's manifest reproduces it byte for byte.
    let c = dir.path().join("c.json");
    let o = fdrsafe(&["run", input.to_str().unwrap(), "--config", a.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(bytes, std::fs::read(&c).unwrap());
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_stats(dir.path(), 200, 2);
    let out = dir.path().join("r.json");
    let mut args = vec!["run", input.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend(FAST);
    let o = Command::new(env!("CARGO_BIN_EXE_fdrsafe"))
        .args(&args)
        .env("FDRSAFE_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["manifest"]["seed"], 42);
}

#[test]
fn malformed_input_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    let out = dir.path().join("r.json");
    for (text, needle) in [
        ("", "line 1"),
        ("statistic\n", "no statistics"),
        ("statistic\n1.0\nnot-a-number\n", "line 3"),
        ("value\n1.0\n", "statistic"),
    ] {
        std::fs::write(&input, text).unwrap();
        let o = run_to(&input, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{text:?}");
        assert!(stderr(&o).contains(needle), "{text:?}: {}", stderr(&o));
    }
    let o = run_to(&dir.path().join("missing.csv"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pipeline_failure_exits_3_with_stage() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tiny.csv");
    std::fs::write(&input, "statistic\n0.1\n-0.4\n2.2\n").unwrap();
    let o = run_to(&input, &dir.path().join("r.json"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("stage: generator"), "{}", stderr(&o));
}

#[test]
fn timings_go_to_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_stats(dir.path(), 200, 3);
    let timings = dir.path().join("t.json");
    let o = run_to(&input, &dir.path().join("r.json"), &["--timings", timings.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&timings).unwrap()).unwrap();
    assert_eq!(v["stages"].as_array().unwrap().len(), 3);
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate", "--reps", "2", "--size", "200", "--n-synthetic", "2", "--ensemble-size", "3", "--out",
        out.to_str().unwrap(),
    ];
    args.extend(extra);
    fdrsafe(&args)
}

#[test]
fn simulate_writes_tidy_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let extra = ["--scenario", "symmetric", "--methods", "fdrsafe,default_G,oracle_single"];
    let o = simulate(&a, &extra);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(simulate(&b, &extra).status.success());
    for file in [
        "metrics.csv",
        "summary.csv",
        "calibration_local.csv",
        "calibration_global.csv",
        "family_share.csv",
        "failures.csv",
        "manifest.json",
    ] {
        let left = std::fs::read(a.join(file)).unwrap();
        assert_eq!(left, std::fs::read(b.join(file)).unwrap(), "{file} differs between runs");
    }
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    let lines: Vec<_> = summary.lines().collect();
    assert_eq!(lines[0], "method,reps,fdr_rmse,Fdr_rmse,brier,pr_auc,roc_auc,pi0_hat,pi0_error");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("fdrsafe,2,"));
    let metrics = std::fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert!(metrics.lines().skip(1).all(|l| l.split(',').count() == 4));
}

#[test]
fn simulate_correlated_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(
        &cfg,
        "kind = \"correlated\"\nsize = 300\npi0 = 0.8\n\n[correlated.covariance]\nstructure = \"ar1\"\nrho = 0.5\nblock_size = 20\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = simulate(&out, &["--config", cfg.to_str().unwrap(), "--methods", "default_Q,oracle_single"]);
    assert!(o.status.success(), "{}", stderr(&o));
    // No closed-form truth: the oracle is recorded as failed, not fabricated.
    let failures = std::fs::read_to_string(out.join("failures.csv")).unwrap();
    assert_eq!(failures.lines().filter(|l| l.starts_with("oracle_single")).count(), 2);
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(!metrics.contains("fdr_rmse,") && metrics.contains("Fdr_rmse"));
}

#[test]
fn simulate_rejects_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), &["--scenario", "lopsided"]);
    assert_eq!(o.status.code(), Some(2));
    let o = simulate(dir.path(), &["--scenario", "symmetric", "--methods", "magic"]);
    assert_eq!(o.status.code(), Some(2));
}
