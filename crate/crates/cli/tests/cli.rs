use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rankpick::io::{write_csv_file, write_matrix_market_file};
use rankpick::random::{sample_gaussian, sample_uniform};
use rankpick::{Matrix64, Rng};
use serde_json::Value;
use tempfile::TempDir;

fn rankpick(args: &[&str]) -> Output {
    rankpick_env(args, &[])
}

fn rankpick_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rankpick"));
    cmd.args(args).env_remove("RANKPICK_SEED").env_remove("RUST_LOG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is pure JSON")
}

/// Rank-3 signal plus unit noise, 40 x 30.
fn low_rank(dir: &Path) -> PathBuf {
    let mut rng = Rng::new(11);
    let l: Matrix64 = sample_gaussian(40, 3, &mut rng);
    let r: Matrix64 = sample_gaussian(3, 30, &mut rng);
    let z: Matrix64 = sample_gaussian(40, 30, &mut rng);
    let x = l.matmul(&r).unwrap().scale(3.0).add(&z).unwrap();
    let p = dir.join("x.csv");
    write_csv_file(&x, &p).unwrap();
    p
}

fn nonnegative(dir: &Path) -> PathBuf {
    let mut rng = Rng::new(12);
    let w: Matrix64 = sample_uniform(30, 2, &mut rng);
    let h: Matrix64 = sample_uniform(2, 24, &mut rng);
    let noise: Matrix64 = sample_uniform(30, 24, &mut rng);
    let x = w.matmul(&h).unwrap().add(&noise.scale(0.05)).unwrap();
    let p = dir.join("nn.mtx");
    write_matrix_market_file(&x, &p).unwrap();
    p
}

#[test]
fn bcv_svd_smoke_contract() {
    let dir = TempDir::new().unwrap();
    let x = low_rank(dir.path());
    let out = rankpick(&["bcv-svd", "--in", x.to_str().unwrap(), "--folds", "2x2", "--ranks", "0..8", "--mode", "I", "--seed", "7"]);
    let v = json(&out);
    assert_eq!(v["method"], "bcv-svd");
    assert_eq!(v["mode"], "I");
    assert_eq!(v["selected"], 3);
    assert_eq!(v["ranks"].as_array().unwrap().len(), 9);
    assert_eq!(v["plan"]["h"], 2);
    assert_eq!(v["metadata"]["seed"], 7);
    assert_eq!(v["metadata"]["folds"], "2x2");
    assert_eq!(v["metadata"]["ranks"], "0..8");
}

#[test]
fn seed_env_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let x = low_rank(dir.path());
    let args = ["bcv-svd", "--in", x.to_str().unwrap(), "--ranks", "0..5"];
    let from_env = rankpick_env(&args, &[("RANKPICK_SEED", "7")]);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "7"]);
    let from_flag = rankpick(&with_flag);
    assert_eq!(from_env.stdout, from_flag.stdout);
    let mut other = args.to_vec();
    other.extend(["--seed", "8"]);
    let overridden = rankpick_env(&other, &[("RANKPICK_SEED", "7")]);
    assert_eq!(json(&overridden)["metadata"]["seed"], 8);
    assert_eq!(json(&rankpick(&args))["metadata"]["seed"], 0);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let x = low_rank(dir.path());
    let nn = nonnegative(dir.path());
    for (cmd, path) in [("bcv-svd", &x), ("ek", &x), ("bcv-nmf", &nn)] {
        let run = |t: &str| rankpick(&[cmd, "--in", path.to_str().unwrap(), "--ranks", "0..4", "--threads", t]).stdout;
        assert_eq!(run("1"), run("3"), "{}", cmd);
    }
}

#[test]
fn theory_prints_e1() {
    let v = json(&rankpick(&["theory", "--m", "1000", "--n", "1000", "--r", "500", "--s", "500"]));
    assert!((v["e1"].as_f64().unwrap() - 1.0005).abs() < 1e-12);
    assert_eq!(v["e0"], 1.0);
    let v = json(&rankpick(&["theory", "--m", "100", "--n", "100", "--r", "50", "--s", "50", "--delta", "20", "--eta", "0.75"]));
    assert_eq!(v["onatski"]["above_threshold"], true);
    assert!(v["table1"].is_array());
}

#[test]
fn simulate_is_byte_identical() {
    let args = ["simulate", "--preset", "table2-desk", "--reps", "1", "--seed", "1"];
    let a = rankpick(&args);
    let b = rankpick(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["metadata"]["reps"], 1);
    assert_eq!(v["experiments"].as_array().unwrap().len(), 6);
    let tsv = rankpick(&["simulate", "--preset", "table2-desk", "--reps", "1", "--seed", "1", "--format", "tsv"]);
    let text = String::from_utf8(tsv.stdout).unwrap();
    assert!(text.starts_with("experiment\tpattern\tsignal\tmethod\tmean_k\tmean_regret\n"));
}

#[test]
fn simulate_from_config() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"name": "tiny", "data": {"kind": "signal", "m": 30, "n": 20, "pattern": {"binary": 2}, "signal_ratio": 1.0},
            "methods": ["bcv-svd-I", "bic3", "ek@2x2"], "ranks": "0..5", "replications": 2, "seed": 4}"#,
    )
    .unwrap();
    let v = json(&rankpick(&["simulate", "--config", cfg.to_str().unwrap()]));
    let exp = &v["experiments"][0];
    assert_eq!(exp["config"]["seed"], 4);
    assert_eq!(exp["methods"].as_array().unwrap().len(), 3);
    let v = json(&rankpick(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "9", "--reps", "1"]));
    assert_eq!(v["experiments"][0]["config"]["seed"], 9);
    assert_eq!(v["experiments"][0]["config"]["replications"], 1);
}

#[test]
fn bic_and_ek_curves() {
    let dir = TempDir::new().unwrap();
    let x = low_rank(dir.path());
    let v = json(&rankpick(&["bic", "--in", x.to_str().unwrap(), "--ranks", "0..6"]));
    let methods: Vec<&str> = v.as_array().unwrap().iter().map(|c| c["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["bic1", "bic2", "bic3"]);
    let v = json(&rankpick(&["bic", "--in", x.to_str().unwrap(), "--ranks", "0..6", "--variant", "bic2"]));
    assert_eq!(v["method"], "bic2");
    let v = json(&rankpick(&["ek", "--in", x.to_str().unwrap(), "--ranks", "0..6", "--folds", "2x2"]));
    assert_eq!(v["method"], "ek");
    let tsv = rankpick(&["bic", "--in", x.to_str().unwrap(), "--ranks", "0..2", "--format", "tsv"]);
    assert_eq!(String::from_utf8(tsv.stdout).unwrap().lines().next().unwrap(), "rank\tbic1\tbic2\tbic3");
}

#[test]
fn bcv_nmf_writes_factors() {
    let dir = TempDir::new().unwrap();
    let nn = nonnegative(dir.path());
    let fac = dir.path().join("factors");
    let v = json(&rankpick(&[
        "bcv-nmf",
        "--in",
        nn.to_str().unwrap(),
        "--ranks",
        "0..4",
        "--mode",
        "simple",
        "--factors",
        fac.to_str().unwrap(),
        "--seed",
        "2",
    ]));
    assert_eq!(v["mode"], "simple");
    assert_eq!(v["metadata"]["nmf_seed"], 2);
    let k = v["selected"].as_u64().unwrap();
    let side: Value = serde_json::from_str(&std::fs::read_to_string(fac.join(format!("nmf_k{}.json", k))).unwrap()).unwrap();
    assert_eq!(side["rank"], k);
    assert!(fac.join(format!("nmf_k{}_W.csv", k)).exists());
    assert!(fac.join(format!("nmf_k{}_H.csv", k)).exists());
}

#[test]
fn plan_round_trip_and_out_file() {
    let dir = TempDir::new().unwrap();
    let x = low_rank(dir.path());
    let plan = dir.path().join("plan.json");
    let out = dir.path().join("curve.json");
    let first = rankpick(&["bcv-svd", "--in", x.to_str().unwrap(), "--ranks", "0..5", "--seed", "5", "--save-plan", plan.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(first.status.success());
    assert!(first.stdout.is_empty());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let replay = json(&rankpick(&["bcv-svd", "--in", x.to_str().unwrap(), "--ranks", "0..5", "--plan", plan.to_str().unwrap()]));
    assert_eq!(saved["scores"], replay["scores"]);
}

#[test]
fn header_flag_skips_first_row() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("h.csv");
    std::fs::write(&p, "a,b,c\n1,2,3\n2,4,6.5\n3,6,9\n1,1,1\n").unwrap();
    assert_eq!(rankpick(&["bic", "--in", p.to_str().unwrap(), "--ranks", "0..1"]).status.code(), Some(2));
    assert!(rankpick(&["bic", "--in", p.to_str().unwrap(), "--ranks", "0..1", "--header"]).status.success());
}

#[test]
fn argument_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let x = low_rank(dir.path());
    let xs = x.to_str().unwrap();
    let missing = dir.path().join("missing.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["bcv-svd", "--in", missing.to_str().unwrap()],
        vec!["bcv-svd", "--in", xs, "--folds", "2y2"],
        vec!["bcv-svd", "--in", xs, "--ranks", "5..2"],
        vec!["bcv-svd", "--in", xs, "--ranks", "0..29"],
        vec!["bcv-svd", "--in", xs, "--mode", "III"],
        vec!["bcv-nmf", "--in", xs, "--ranks", "0..2"],
        vec!["bic", "--in", xs, "--variant", "bic4"],
        vec!["simulate", "--preset", "nope"],
        vec!["theory", "--m", "10", "--n", "10", "--r", "10", "--s", "1"],
        vec!["bcv-svd", "--bogus"],
        vec!["frobnicate"],
        vec![],
    ];
    for args in cases {
        let out = rankpick(&args);
        assert_eq!(out.status.code(), Some(2), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{:?}", args);
        assert!(!out.stderr.is_empty(), "{:?}", args);
    }
    assert_eq!(rankpick(&["--help"]).status.code(), Some(0));
}
