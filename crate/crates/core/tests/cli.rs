use std::process::{Command, Output};

use serde_json::Value;

fn gpdrift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpdrift")).args(args).env_remove("GPDRIFT_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn estimate_hand_oracle() {
    let o = gpdrift(&[
        "estimate", "--kernel", "fbm", "--H", "0.5", "--n", "2", "--alpha", "1", "--scale", "1", "--data", "1,3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mu_hat"], 1.5);
    assert_eq!(v["sigma2_hat"], 0.25);
    assert_eq!(v["config"]["data"], serde_json::json!([1.0, 3.0]));
}

#[test]
fn estimate_reads_data_file_and_infers_n() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "X\n1\n3\n").unwrap();
    let o =
        gpdrift(&["estimate", "--kernel", "fbm", "--H", "0.5", "--data", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.lines().nth(2).unwrap().starts_with("1.5,0.25,2,"), "{out}");

    let o = gpdrift(&["estimate", "--kernel", "fbm", "--H", "0.5", "--n", "3", "--data", "1,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cosine_counterexample_is_not_pd() {
    let o = gpdrift(&["build-cov", "--kernel", "ce-cosine", "--n", "4"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("not positive definite") && err.contains("pivot"), "{err}");
}

#[test]
fn out_of_range_parameters_exit_2() {
    let o = gpdrift(&["eval-kernel", "--kernel", "bifbm", "--H", "0.9", "--K", "1.5", "--s", "1", "--t", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("HK must lie in (0,1)"));
    assert_eq!(gpdrift(&["eval-kernel", "--kernel", "nope", "--s", "1", "--t", "1"]).status.code(), Some(2));
    assert_eq!(gpdrift(&["clt", "--reps", "10"]).status.code(), Some(2));
    assert_eq!(gpdrift(&["eval-kernel", "--kernel", "fbm", "--s", "-1", "--t", "1"]).status.code(), Some(2));
}

#[test]
fn eval_kernel_value() {
    let o = gpdrift(&["eval-kernel", "--kernel", "fbm", "--H", "0.5", "--s", "1", "--t", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["R"], 1.0);
}

#[test]
fn csv_report_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let o = gpdrift(&["consistency", "--n", "10,20", "--reps", "200", "--seed", "9", "--out", first.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = gpdrift(&["consistency", "--config", first.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let a = std::fs::read(&first).unwrap();
    assert!(String::from_utf8_lossy(&a).starts_with("# config: {"));
    assert_eq!(a, std::fs::read(&second).unwrap());
}

#[test]
fn json_report_echo_round_trips_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let o = gpdrift(&["moments", "--n", "5", "--reps", "300", "--format", "json", "--out", first.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let a: Value = serde_json::from_slice(&std::fs::read(&first).unwrap()).unwrap();
    assert_eq!(a["config"]["reps"], 300);

    let o = gpdrift(&["moments", "--config", first.to_str().unwrap(), "--format", "json"]);
    let b: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(a, b);

    let o = gpdrift(&["moments", "--config", first.to_str().unwrap(), "--reps", "400", "--format", "json"]);
    let c: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(c["config"]["reps"], 400);
}

#[test]
fn config_file_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kernal": "fbm"}"#).unwrap();
    assert_eq!(gpdrift(&["clt", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(gpdrift(&["clt", "--config", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn seed_env_is_a_fallback() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_gpdrift"));
        cmd.args(["sample", "--n", "4"]).args(extra).env_remove("GPDRIFT_SEED");
        if let Some(s) = env {
            cmd.env("GPDRIFT_SEED", s);
        }
        stdout(&cmd.output().unwrap())
    };
    assert_eq!(run(Some("7"), &[]), run(None, &["--seed", "7"]));
    assert_ne!(run(Some("7"), &[]), run(None, &[]));
    assert_eq!(run(Some("7"), &["--seed", "8"]), run(None, &["--seed", "8"]));
}

#[test]
fn experiment_output_is_thread_count_invariant() {
    let a = gpdrift(&["clt", "--reps", "500", "--threads", "1"]);
    let b = gpdrift(&["clt", "--reps", "500", "--threads", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().nth(1).unwrap(), "experiment,family,H,K,n,statistic,empirical,oracle,tolerance,pass");
}
