use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sublin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sublin"))
        .args(args)
        .env_remove("SUBLIN_SEED")
        .output()
        .unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = sublin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn verify(record: &Path) -> Value {
    ok_json(&["verify", "--record", record.to_str().unwrap()])
}

fn without_wall_time(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec())
        .unwrap()
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_time\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn case2_training_meets_its_margin_and_verifies() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.json");
    let p = path.to_str().unwrap();
    let r = ok_json(&[
        "train", "--instance", "case2:n=64,d=8,l=3", "--eps", "0.04", "--budget", "sqrt-n", "--seed", "7", "--out", p,
    ]);
    assert!(r["audit"]["margin"].as_f64().unwrap() >= 0.667, "{}", r["audit"]);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["contract"]["holds"], true);
    assert_eq!(r["solution"]["classifier"]["picks"].as_array().unwrap().len() as u64, r["solution"]["classifier"]["T"]);
    assert_eq!(serde_json::from_str::<Value>(&fs::read_to_string(&path).unwrap()).unwrap(), r);
    assert_eq!(verify(&path)["verified"], true);

    // Every pick moved to a row that fixes w̄ to a single direction.
    let mut tampered = r.clone();
    for pick in tampered["solution"]["classifier"]["picks"].as_array_mut().unwrap() {
        *pick = 0.into();
    }
    let bad = dir.path().join("tampered.json");
    fs::write(&bad, serde_json::to_string(&tampered).unwrap()).unwrap();
    let report = verify(&bad);
    assert_eq!(report["verified"], false);
    let strict = sublin(&["verify", "--record", bad.to_str().unwrap(), "--strict"]);
    assert_eq!(code(&strict), 3);

    // Out-of-range picks fail verification instead of crashing it.
    tampered["solution"]["classifier"]["picks"][0] = 10_000.into();
    fs::write(&bad, serde_json::to_string(&tampered).unwrap()).unwrap();
    let report = verify(&bad);
    assert_eq!(report["verified"], false);
    assert!(report["error"].as_str().unwrap().contains("10000"));
}

#[test]
fn records_are_byte_stable_apart_from_wall_time() {
    let args = ["train", "--instance", "ball:n=40,d=5", "--eps", "0.2", "--seed", "11", "--repeats", "3"];
    let a = sublin(&args);
    let b = sublin(&args);
    assert!(a.status.success());
    assert_eq!(without_wall_time(&a.stdout), without_wall_time(&b.stdout));
    let other = sublin(&["train", "--instance", "ball:n=40,d=5", "--eps", "0.2", "--seed", "12", "--repeats", "3"]);
    assert_ne!(without_wall_time(&a.stdout), without_wall_time(&other.stdout));
}

#[test]
fn seed_falls_back_to_the_environment() {
    let args = ["game", "--matrix", "antisym:n=6", "--eps", "0.2"];
    let flagged = sublin(&[&args[..], &["--seed", "5"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_sublin"))
        .args(args)
        .env("SUBLIN_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(without_wall_time(&flagged.stdout), without_wall_time(&env.stdout));
    let bad = Command::new(env!("CARGO_BIN_EXE_sublin"))
        .args(args)
        .env("SUBLIN_SEED", "five")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn sqrt_d_training_charges_norm_estimation() {
    let r = ok_json(&[
        "train", "--budget", "sqrt-d", "--instance", "case2:n=16,d=256,l=5", "--eps", "0.04", "--seed", "3",
    ]);
    let b = &r["ledger"]["breakdown"];
    assert!(b["norm_estimation"].as_f64().unwrap() > 0.0, "{b}");
}

#[test]
fn best_of_repeats_on_a_labeled_csv() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("x.csv");
    fs::write(&data, "1,0.9,0.1\n1,0.8,-0.2\n-1,-0.7,0.3\n-1,-0.9,-0.1\n1,0.6,0.5\n").unwrap();
    let d = data.to_str().unwrap();
    let out = dir.path().join("r.json");
    let r = ok_json(&[
        "train", "--data", d, "--labeled", "--eps", "0.1", "--repeats", "9", "--seed", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(r["config"]["repeats"], 9);
    // Small inputs get a computed reference margin.
    assert_eq!(r["contract"]["holds"], true, "{}", r["contract"]);
    let best = r["audit"]["margin"].as_f64().unwrap();
    // A single run is the first of the nine repeats.
    let single = ok_json(&["train", "--data", d, "--labeled", "--eps", "0.1", "--seed", "1"]);
    assert!(best >= single["audit"]["margin"].as_f64().unwrap());
    let total: u128 = r["charged_all_runs"].to_string().parse().unwrap();
    let one: u128 = r["ledger"]["charged_queries"].to_string().parse().unwrap();
    assert!(total > one);
    assert_eq!(verify(&out)["verified"], true);
}

#[test]
fn svmlight_input_and_kernels() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("xor.svm");
    fs::write(&data, "1 1:1 2:1\n1 1:-1 2:-1\n-1 1:1 2:-1\n-1 1:-1 2:1\n").unwrap();
    let d = data.to_str().unwrap();
    let out = dir.path().join("k.json");
    for (kernel, mode) in [("poly:2", "explicit"), ("poly:2", "estimator"), ("gauss:0.5", "estimator")] {
        let r = ok_json(&[
            "train", "--data", d, "--format", "svmlight", "--kernel", kernel, "--kernel-mode", mode, "--eps", "0.2",
            "--rounds", "400", "--seed", "2", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(r["status"], "unchecked");
        if kernel == "poly:2" {
            // x1·x2 separates XOR.
            assert!(r["audit"]["margin"].as_f64().unwrap() > 0.0, "{kernel} {mode}: {}", r["audit"]);
        }
        assert_eq!(verify(&out)["verified"], true);
    }
    let linear = ok_json(&["train", "--data", d, "--format", "svmlight", "--eps", "0.2", "--rounds", "400", "--seed", "2"]);
    assert!(linear["audit"]["margin"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn meb_and_svm_records_verify() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("q.json");
    let o = out.to_str().unwrap();
    for budget in ["sqrt-n", "sqrt-d"] {
        let r = ok_json(&["meb", "--instance", "case1:n=32,d=6,k=7,l=3", "--eps", "0.1", "--budget", budget, "--seed", "4", "--out", o]);
        assert!(r["audit"]["radius_sq"].as_f64().unwrap() >= 0.5 + 2f64.sqrt() / 4.0 - 1e-9);
        assert_eq!(verify(&out)["verified"], r["contract"]["holds"]);
    }
    let r = ok_json(&["svm", "--instance", "case2:n=32,d=6,l=3", "--eps", "0.1", "--seed", "4", "--out", o]);
    assert_eq!(r["solution"]["outcome"]["status"], "separated");
    assert_eq!(verify(&out)["verified"], r["contract"]["holds"]);

    let mut tampered: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    // Row 0 is the only row unlike the others.
    for pick in tampered["solution"]["picks"].as_array_mut().unwrap() {
        *pick = 0.into();
    }
    fs::write(&out, tampered.to_string()).unwrap();
    assert_eq!(verify(&out)["verified"], false);

    let dir2 = TempDir::new().unwrap();
    let data = dir2.path().join("pm.csv");
    fs::write(&data, "1,0\n-1,0\n").unwrap();
    let r = ok_json(&["svm", "--data", data.to_str().unwrap(), "--eps", "0.1", "--seed", "1"]);
    assert_eq!(r["status"], "not-separated");
}

#[test]
fn games_direct_and_reduced() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("g.json");
    let o = out.to_str().unwrap();
    let r = ok_json(&["game", "--matrix", "zerosum:n=12,k=4", "--eps", "0.1", "--trials", "3", "--seed", "1", "--out", o]);
    assert_eq!(r["solution"]["reduced"], false);
    assert_eq!(r["audit"]["eps_optimal"], true);
    assert_eq!(verify(&out)["verified"], true);

    let pennies = dir.path().join("pennies.csv");
    fs::write(&pennies, "1,-1\n-1,1\n").unwrap();
    let r = ok_json(&["game", "--matrix", pennies.to_str().unwrap(), "--eps", "0.05", "--seed", "2", "--out", o]);
    assert_eq!(r["solution"]["reduced"], true);
    assert!(r["audit"]["exploitability"].as_f64().unwrap() <= 2.0 * 18.0 * 0.05);
    assert_eq!(r["solution"]["recovered"]["row"]["n"], 2);
    assert_eq!(verify(&out)["verified"], true);

    let mut tampered: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    tampered["solution"]["strategy"]["support"] = serde_json::json!({ "0": 1.0 });
    fs::write(&out, tampered.to_string()).unwrap();
    assert_eq!(verify(&out)["verified"], false);
}

#[test]
fn strict_mode_turns_a_violated_contract_into_exit_3() {
    let args = ["game", "--matrix", "zerosum:n=12,k=4", "--eps", "0.01", "--rounds", "3", "--seed", "0"];
    let lax = sublin(&args);
    assert_eq!(code(&lax), 0);
    let r: Value = serde_json::from_slice(&lax.stdout).unwrap();
    assert_eq!(r["status"], "contract-violated");
    let strict = sublin(&[&args[..], &["--strict"]].concat());
    assert_eq!(code(&strict), 3);
    // The record is still emitted.
    assert!(serde_json::from_slice::<Value>(&strict.stdout).is_ok());
}

#[test]
fn flag_errors_exit_with_2() {
    for args in [
        &["train", "--instance", "case2:n=8,d=4,l=2", "--eps", "1.5"][..],
        &["train", "--instance", "case2:n=8,d=4,l=2", "--eps", "0.1", "--kernel", "rbf"],
        &["train", "--instance", "nosuch:n=8", "--eps", "0.1"],
        &["train", "--eps", "0.1"],
        &["train", "--instance", "case2:n=8,d=4,l=2", "--eps", "0.1", "--cost.bits-l", "0"],
        &["train", "--instance", "case2:n=8,d=4,l=2", "--eps", "0.1", "--kernel", "gauss:1", "--kernel-mode", "explicit"],
        &["game", "--matrix", "zerosum:n=5,k=1", "--eps", "0"],
        &["bench", "--sweep", "n", "--alg", "sqrt-n"],
        &["bench", "--sweep", "d", "--alg", "game", "--seed", "1"],
        &["frobnicate"],
    ] {
        let out = sublin(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn runtime_errors_exit_with_1() {
    let out = sublin(&["train", "--data", "/nonexistent/x.csv", "--eps", "0.1"]);
    assert_eq!(code(&out), 1);
    let out = sublin(&["game", "--matrix", "/nonexistent/m.csv", "--eps", "0.1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bench_reports_slopes() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("b.csv");
    let args = [
        "bench", "--sweep", "n", "--from", "5", "--to", "8", "--alg", "sqrt-n", "--alg", "baseline", "--seeds", "2",
        "--eps", "0.3", "--seed", "9", "--out", csv.to_str().unwrap(),
    ];
    let out = sublin(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "alg,size,mean_charged,std_charged");
    assert_eq!(lines.len(), 1 + 2 * 4);
    assert!(lines[1].starts_with("sqrt-n,32,"));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let slope = |alg: &str| -> f64 {
        let line = stderr.lines().find(|l| l.starts_with(&format!("slope {alg} "))).unwrap();
        line.rsplit(' ').next().unwrap().parse().unwrap()
    };
    assert!((slope("sqrt-n") - 0.5).abs() < 0.1, "{stderr}");
    assert!((slope("baseline") - 1.0).abs() < 0.1, "{stderr}");

    let again = sublin(&args);
    assert!(again.status.success());
    assert_eq!(fs::read_to_string(&csv).unwrap(), table);
}

#[test]
fn bench_sweeps_d_and_single_points() {
    let out = sublin(&["bench", "--sweep", "d", "--from", "3", "--to", "5", "--alg", "sqrt-d", "--seeds", "1", "--eps", "0.5", "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);

    let out = sublin(&["bench", "--sweep", "n", "--from", "6", "--to", "6", "--alg", "game", "--seeds", "2", "--eps", "0.3", "--seed", "1"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("warning"), "{stderr}");
    assert!(stderr.contains("slope game NaN"), "{stderr}");
}

#[test]
fn gen_output_feeds_back_into_train() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("case2.csv");
    let out = sublin(&["gen", "--instance", "case2:n=16,d=4,l=2", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 16);
    assert!(text.lines().all(|l| l.split(',').count() == 4));
    let r = ok_json(&["train", "--data", csv.to_str().unwrap(), "--eps", "0.1", "--seed", "3"]);
    assert!(r["audit"]["margin"].as_f64().unwrap() >= 1.0 / 2f64.sqrt() - 0.1);

    let game = sublin(&["gen", "--instance", "zerosum:n=4,k=2"]);
    let rows: Vec<String> = String::from_utf8(game.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 4);
}
