// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_levy-exit"));
    cmd.env_remove("LEVY_EXIT_WORKERS");
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn sample_is_deterministic_with_header_and_rows() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "sample", "--alpha", "1", "--n", "10000", "--trials", "1000", "--seed", "7",
    ];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run(&args, &a)), 0);
    assert_eq!(code(&run(&args, &b)), 0);
    let csv = read(&a, "samples.csv");
    assert_eq!(csv, read(&b, "samples.csv"));
    assert!(csv.starts_with("z,theta\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 1001);
    assert!(column(&csv, "z")
        .iter()
        .all(|&z| (1.0..=100.0).contains(&z)));
}

#[test]
fn site_preset_sets_alpha() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &[
            "sample", "--site", "KAIST", "--n", "1000", "--trials", "3", "--seed", "1",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let run: serde_json::Value = serde_json::from_str(&read(tmp.path(), "run.json")).unwrap();
    assert_eq!(run["config"]["alpha"], 0.53);
    assert_eq!(run["config"]["command"], "sample");
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        code(&run(
            &["sample", "--alpha", "2.5", "--n", "100"],
            tmp.path()
        )),
        1
    );
    assert_eq!(code(&run(&["sample", "--n", "100"], tmp.path())), 1);
    assert_eq!(
        code(&run(
            &["sample", "--alpha", "1", "--site", "ncsu", "--n", "100"],
            tmp.path()
        )),
        1
    );
    assert_eq!(
        code(
            &bin()
                .args(["exit-times", "--model", "bus"])
                .output()
                .unwrap()
        ),
        1
    );
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);
}

#[test]
fn walk_exit_times_respect_floor_and_repeat() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "exit-times",
        "--model",
        "walk",
        "--alpha",
        "0.7",
        "--n",
        "4096",
        "--trials",
        "2000",
        "--seed",
        "11",
    ];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run(&args, &a)), 0);
    assert_eq!(code(&run(&args, &b)), 0);
    let csv = read(&a, "exit_times.csv");
    assert_eq!(csv, read(&b, "exit_times.csv"));
    assert!(csv.starts_with("trial_index,exit_time,step_count,truncated_last\n"));
    assert!(column(&csv, "exit_time").iter().all(|&t| t >= 16.0));
    let side: serde_json::Value = serde_json::from_str(&read(&a, "exit_times.json")).unwrap();
    assert_eq!(side["model"], "walk");
    assert_eq!(side["abandoned"], 0);
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "exit-times",
        "--model",
        "flight",
        "--alpha",
        "1.3",
        "--n",
        "16384",
        "--trials",
        "3000",
        "--seed",
        "5",
    ];
    let one = tmp.path().join("one");
    let four = tmp.path().join("four");
    let env = tmp.path().join("env");
    assert_eq!(
        code(
            &bin()
                .args(args)
                .args(["--workers", "1", "--out"])
                .arg(&one)
                .output()
                .unwrap()
        ),
        0
    );
    assert_eq!(
        code(
            &bin()
                .args(args)
                .args(["--workers", "4", "--out"])
                .arg(&four)
                .output()
                .unwrap()
        ),
        0
    );
    let o = bin()
        .args(args)
        .args(["--workers", "1", "--out"])
        .arg(&env)
        .env("LEVY_EXIT_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let base = read(&one, "exit_times.csv");
    assert_eq!(base, read(&four, "exit_times.csv"));
    assert_eq!(base, read(&env, "exit_times.csv"));
}

#[test]
fn abandoned_trials_fail_validation() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &[
            "exit-times",
            "--model",
            "flight",
            "--alpha",
            "2",
            "--n",
            "65536",
            "--trials",
            "100",
            "--step-cap",
            "3",
            "--seed",
            "1",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 2);
    let side: serde_json::Value =
        serde_json::from_str(&read(tmp.path(), "exit_times.json")).unwrap();
    assert_eq!(side["abandoned"], 100);
}

#[test]
fn omitted_seed_is_recorded_and_replays_identically() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let o = run(
        &[
            "exit-times",
            "--model",
            "walk",
            "--alpha",
            "1.5",
            "--n",
            "4096",
            "--trials",
            "500",
        ],
        &first,
    );
    assert_eq!(code(&o), 0);
    let record: serde_json::Value = serde_json::from_str(&read(&first, "run.json")).unwrap();
    assert!(record["config"]["seed"].is_u64());
    let second = tmp.path().join("second");
    let o = bin()
        .arg("--replay")
        .arg(first.join("run.json"))
        .arg("--out")
        .arg(&second)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(
        read(&first, "exit_times.csv"),
        read(&second, "exit_times.csv")
    );
    assert_eq!(
        read(&first, "exit_times.json"),
        read(&second, "exit_times.json")
    );
}

#[test]
fn fit_of_exact_power_law_table() {
    let tmp = TempDir::new().unwrap();
    let mut table = String::from("n,q10,q50,q90,mean,trials,abandoned\n");
    for e in [10, 12, 14, 16, 18] {
        let n = 2f64.powi(e);
        let v = 3.0 * n.powf(0.75);
        table.push_str(&format!("{n},{v},{v},{v},{v},100,0\n"));
    }
    let path = tmp.path().join("table.csv");
    fs::write(&path, table).unwrap();
    let out = tmp.path().join("fit");
    let o = run(
        &[
            "fit",
            "--model",
            "flight",
            "--alpha",
            "1.5",
            "--table",
            path.to_str().unwrap(),
        ],
        &out,
    );
    assert_eq!(code(&o), 0);
    let text = read(&out, "fit.json");
    let keys: Vec<&str> = [
        "model",
        "alpha",
        "c_d",
        "slope",
        "stderr",
        "r2",
        "theoretical",
        "pass",
    ]
    .to_vec();
    let positions: Vec<usize> = keys
        .iter()
        .map(|k| text.find(&format!("\"{k}\"")).unwrap())
        .collect();
    assert!(
        positions.windows(2).all(|w| w[0] < w[1]),
        "key order in {text}"
    );
    let fit: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((fit["slope"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(fit["pass"], true);
}

#[test]
fn fit_simulates_scaling_table() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &[
            "fit",
            "--model",
            "flight",
            "--alpha",
            "1",
            "--n-grid",
            "1024,4096,16384,65536",
            "--trials",
            "4000",
            "--seed",
            "3",
            "--emit-svg",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let csv = read(tmp.path(), "scaling.csv");
    assert!(csv.starts_with("n,q10,q50,q90,mean,trials,abandoned\n"));
    assert_eq!(csv.lines().count(), 5);
    let fit: serde_json::Value = serde_json::from_str(&read(tmp.path(), "fit.json")).unwrap();
    assert!((fit["slope"].as_f64().unwrap() - 0.5).abs() < 0.08);
    assert!(read(tmp.path(), "scaling.svg").starts_with("<svg"));
}

#[test]
fn analytic_table_is_a_cdf() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &["analytic", "--alpha", "1.5", "--r", "10", "--points", "300"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let csv = read(tmp.path(), "analytic.csv");
    assert!(csv.starts_with("t,survival,fet_cdf\n"));
    let cdf = column(&csv, "fet_cdf");
    assert_eq!(cdf[0], 0.0);
    assert!(cdf.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn analytic_overlay_matches_simulation_at_alpha_two() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &[
            "analytic",
            "--alpha",
            "2",
            "--n",
            "16384",
            "--overlay-trials",
            "20000",
            "--seed",
            "9",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&read(tmp.path(), "analytic.json")).unwrap();
    assert!(summary["sup_distance"].as_f64().unwrap() <= 0.05);
    assert!(read(tmp.path(), "overlay.csv").starts_with("t,fet_cdf,empirical\n"));
}

#[test]
fn bounds_tables() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &[
            "bounds",
            "--alpha",
            "1",
            "--n",
            "16384",
            "--trials",
            "5000",
            "--horizon",
            "16",
            "--epsilon",
            "0.25",
            "--seed",
            "4",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let csv = read(tmp.path(), "bounds_exit.csv");
    assert!(csv.starts_with("k,empirical,bound\n"));
    assert_eq!(
        column(&csv, "k"),
        (1..=16).map(f64::from).collect::<Vec<_>>()
    );
    assert!(read(tmp.path(), "vanishing.csv").starts_with("n,t_tilde,s2,bound\n"));
    assert_eq!(
        code(&run(
            &["bounds", "--alpha", "1", "--n", "16384", "--epsilon", "0"],
            tmp.path()
        )),
        1
    );
}

#[test]
fn phase_scan_writes_every_table() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &[
            "phase-scan",
            "--alphas",
            "0.5,1.5",
            "--n-grid",
            "256,1024,4096,16384",
            "--trials",
            "500",
            "--seed",
            "2",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(read(tmp.path(), "phase_scan.csv").lines().count(), 3);
    for name in ["scaling_walk_alpha0.5.csv", "scaling_flight_alpha1.5.csv"] {
        assert!(tmp.path().join(name).exists(), "{name}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&read(tmp.path(), "phase_scan.json")).unwrap();
    assert_eq!(json["fits"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_passes_by_default_and_catches_faults() {
    let tmp = TempDir::new().unwrap();
    let good = tmp.path().join("good");
    let o = run(&["verify", "--seed", "1"], &good);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_str(&read(&good, "verify.json")).unwrap();
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for expected in [
        "series",
        "projection ks",
        "coupling",
        "cdf sandwich",
        "hoeffding bounds",
    ] {
        assert!(
            names.contains(&expected),
            "{expected} missing from {names:?}"
        );
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("PASS ")).count(),
        names.len()
    );

    let bad = tmp.path().join("bad");
    let o = run(
        &["verify", "--seed", "1", "--inject-fault", "normalization"],
        &bad,
    );
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL projection ks"));
}
