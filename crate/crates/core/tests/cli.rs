//! End-to-end tests of the command line interface.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxmh"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const BASIC: &str = r#"{
  "target": {"family": "gaussian_l1", "dim": 1, "lambda": 1.0, "mean": [1.0]},
  "sampler": {"algorithm": "prox_mh", "eta": "auto", "n_steps": 4000,
              "n_chains": 2, "seed": 11, "lazy": false},
  "diagnostics": {"grid": {"ranges": [[-7.0, 9.0]], "bins": [200]},
                  "tv_threshold": 0.1, "lemma_checks": false},
  "output": {"directory": "out", "formats": ["csv", "json"]}
}"#;

#[test]
fn run_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.json", BASIC);
    let output = bin()
        .args(["run", config.to_str().unwrap(), "--threads", "2"])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let out = dir.path().join("out");
    let csv = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "chain,step,accepted,x_1");
    // 2 chains x (4000 steps + initial point)
    assert_eq!(csv.lines().count(), 1 + 2 * 4001);
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,0,0,"), "first row: {first}");

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap())
            .unwrap();
    assert!(metrics["acceptance_rate"].as_f64().unwrap() > 0.3);
    assert!(metrics["tv_to_truth"].as_f64().is_some());
    assert!(metrics["tuning"]["recommended_eta"].as_f64().unwrap() > 0.0);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"].as_u64().unwrap(), 11);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn identical_seed_reproduces_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.json", BASIC);
    let mut blobs = Vec::new();
    for out_name in ["a", "b"] {
        let status = bin()
            .args([
                "run",
                config.to_str().unwrap(),
                "--out-dir",
                out_name,
                "--threads",
                "4",
            ])
            .status()
            .unwrap();
        assert!(status.success());
        blobs.push(std::fs::read(dir.path().join(out_name).join("samples.csv")).unwrap());
    }
    assert_eq!(blobs[0], blobs[1]);

    // a different seed must change the samples
    let status = bin()
        .args([
            "run",
            config.to_str().unwrap(),
            "--out-dir",
            "c",
            "--seed",
            "999",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let other = std::fs::read(dir.path().join("c").join("samples.csv")).unwrap();
    assert_ne!(blobs[0], other);
}

#[test]
fn config_errors_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();

    // malformed JSON
    let bad = write_config(dir.path(), "bad.json", "{ not json");
    let output = bin().args(["run", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("parse error"), "stderr: {stderr}");

    // plain MALA on a non-smooth target is a validation error
    let invalid = BASIC.replace("\"prox_mh\"", "\"mala\"");
    let path = write_config(dir.path(), "invalid.json", &invalid);
    let output = bin().args(["run", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("smoothed_mala"), "stderr: {stderr}");
}

#[test]
fn missing_data_file_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
      "target": {"family": "lasso_posterior", "design": "missing_design.csv",
                 "response": "missing_response.csv", "lambda": 1.0},
      "sampler": {"algorithm": "prox_mh", "eta": 0.05, "n_steps": 100, "seed": 1},
      "output": {"directory": "out"}
    }"#;
    let path = write_config(dir.path(), "lasso.json", config);
    let output = bin().args(["run", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn lasso_posterior_runs_from_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("design.csv"), "1.0,0.2\n0.1,0.8\n0.4,0.3\n").unwrap();
    std::fs::write(dir.path().join("response.csv"), "0.5\n-0.2\n0.9\n").unwrap();
    let config = r#"{
      "target": {"family": "lasso_posterior", "design": "design.csv",
                 "response": "response.csv", "lambda": 0.7},
      "sampler": {"algorithm": "prox_mh", "eta": "auto", "n_steps": 3000, "seed": 5},
      "output": {"directory": "out"}
    }"#;
    let path = write_config(dir.path(), "lasso.json", config);
    let output = bin().args(["run", path.to_str().unwrap()]).output().unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/samples.csv")).unwrap();
    assert!(csv.starts_with("chain,step,accepted,x_1,x_2\n"));
}

#[test]
fn tune_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "exp.json", BASIC);
    let output = bin().args(["tune", config.to_str().unwrap()]).output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("recommended_eta"), "stdout: {stdout}");
    assert!(stdout.contains("tail_radius_rs"));
}

#[test]
fn selftest_passes() {
    let output = bin().arg("selftest").output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        output.status.success(),
        "stdout: {stdout}\nstderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(stdout.contains("PASS l1-partition-vs-quadrature"));
    assert!(stdout.contains("PASS detailed-balance-1d-lasso"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn compare_two_algorithms_on_the_same_target() {
    let dir = tempfile::tempdir().unwrap();
    let prox = r#"{
      "target": {"family": "gaussian_l1", "dim": 1, "lambda": 1.0},
      "sampler": {"algorithm": "prox_mh", "eta": "auto", "n_steps": 2000,
                  "n_chains": 200, "seed": 21, "lazy": false},
      "diagnostics": {"tv_threshold": 0.1},
      "output": {"directory": "ignored"}
    }"#;
    let smoothed = prox.replace("\"prox_mh\"", "\"smoothed_mala\"");
    let p1 = write_config(dir.path(), "prox.json", prox);
    let p2 = write_config(dir.path(), "smoothed.json", &smoothed);
    let out_dir = dir.path().join("cmp");

    let output = bin()
        .args([
            "compare",
            p1.to_str().unwrap(),
            p2.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let table = std::fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "algorithm,dim,eta,iterations_to_tv,acceptance_rate,ess_per_sec"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("prox_mh,1,"));
    assert!(lines[2].starts_with("smoothed_mala,1,"));
    // both reached the threshold
    assert!(!table.contains("unreached"), "table:\n{table}");

    // a single config is rejected
    let output = bin()
        .args(["compare", p1.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));

    // different families are rejected
    let other = r#"{
      "target": {"family": "group_lasso", "dim": 2, "groups": [[0, 1]], "weights": [1.0]},
      "sampler": {"algorithm": "prox_mh", "eta": 0.05, "n_steps": 100, "seed": 1},
      "output": {"directory": "x"}
    }"#;
    let p3 = write_config(dir.path(), "other.json", other);
    let output = bin()
        .args([
            "compare",
            p1.to_str().unwrap(),
            p3.to_str().unwrap(),
            "--out-dir",
            dir.path().join("cmp2").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}
