use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_saw-quench");

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .arg("--quiet")
        .env_remove("SAW_QUENCH_WORKERS")
        .output()
        .unwrap()
}

fn manifest(out: &Path, sub: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join(format!("manifest_{sub}.json"))).unwrap()).unwrap()
}

#[test]
fn count_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["count", "--d", "2", "--n-max", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let got = fs::read_to_string(dir.path().join("counts.csv")).unwrap();
    assert_eq!(got, include_str!("data/counts_d2_n6.csv"));
    let m = manifest(dir.path(), "count");
    assert_eq!(m["subcommand"], "count");
    assert_eq!(m["config"]["n_max"], 6);
    assert_eq!(m["outputs"][0], "counts.csv");
}

#[test]
fn tree_trajectory_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["tree", "--ell", "3", "--beta", "0.3", "--depth", "6", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let got = fs::read_to_string(dir.path().join("tree_seed2.csv")).unwrap();
    assert_eq!(got, include_str!("data/tree_ell3_beta0.3_seed2.csv"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run(p, &["count", "--d", "2", "--n-max", "4"]).status.code(), Some(0));
    // bounds check with an impossible tolerance reports a failed verdict
    let o = run(p, &["sandwich", "--d", "2", "--n-max", "6", "--beta", "0.5", "--seeds", "3", "--tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(manifest(p, "sandwich")["verdict"], "fail");
    // invalid parameters
    assert_eq!(run(p, &["count", "--d", "0", "--n-max", "4"]).status.code(), Some(1));
    assert_eq!(run(p, &["quenched", "--d", "2", "--n-max", "4", "--beta", "-1"]).status.code(), Some(1));
    assert_eq!(run(p, &["count", "--d", "2", "--n-max", "30", "--budget", "1e6"]).status.code(), Some(1));
    // usage errors and missing input
    assert_eq!(run(p, &["count", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(p, &["pz", "--input", "/nonexistent.csv"]).status.code(), Some(1));
    assert_eq!(Command::new(BIN).arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn error_messages_go_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["quenched", "--d", "2", "--n-max", "4", "--beta", "-1"]);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("beta"), "{err}");
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# counting run\nd = 2\nn_max = 5\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let out = dir.path().join("a");
    assert_eq!(run(&out, &["count", "--config", cfg]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("counts.csv")).unwrap();
    assert!(csv.ends_with("5,284\n"), "{csv}");
    assert_eq!(manifest(&out, "count")["config_file"], cfg);

    let out = dir.path().join("b");
    assert_eq!(run(&out, &["count", "--config", cfg, "--n-max", "6"]).status.code(), Some(0));
    assert_eq!(fs::read_to_string(out.join("counts.csv")).unwrap(), include_str!("data/counts_d2_n6.csv"));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sandwich", "--d", "2", "--n-max", "8", "--beta", "0.5", "--seeds", "3"];
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(workers);
        let o = Command::new(BIN)
            .args(args)
            .arg("--out-dir")
            .arg(&out)
            .arg("--quiet")
            .env("SAW_QUENCH_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(manifest(&out, "sandwich")["workers"], workers.parse::<u64>().unwrap());
        outputs.push((
            fs::read_to_string(out.join("sandwich.json")).unwrap(),
            fs::read_to_string(out.join("sandwich_estimates.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn pz_reads_per_seed_samples() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = run(p, &["goodwalks", "--d", "2", "--n-max", "6", "--delta", "0.5", "--samples", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let input = p.join("goodwalks_per_seed.csv");
    let o = run(p, &["pz", "--input", input.to_str().unwrap(), "--column", "good_n6"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("pz.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
}
