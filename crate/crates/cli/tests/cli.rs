use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_obstruct");

fn run_in(dir: &Path, threads: Option<usize>, args: &[&str]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(dir).args(args).env_remove("OBSTRUCT_THREADS");
    if let Some(t) = threads {
        cmd.env("OBSTRUCT_THREADS", t.to_string());
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Report with the timing field removed.
fn payload(path: &Path) -> Value {
    let mut v = json(path);
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    v
}

fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[test]
fn elementary_file_has_square_root_spacing() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        None,
        &["construct", "--mode", "elementary", "--n", "16", "--samples", "100", "--out", "p.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let p = json(&dir.path().join("p.json"));
    assert_eq!(p["A_num"], 1);
    assert_eq!(p["A_den"], 16);
    assert_eq!(p["Q"], 16);
    let idx: Vec<u64> = serde_json::from_value(p["indices"].clone()).unwrap();
    assert_eq!(idx, (0..16).collect::<Vec<_>>());
    assert_eq!(p["provenance"]["kind"], "elementary");
}

#[test]
fn thinned_construction_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = [
        "construct", "--mode", "thinned", "--n", "8", "--Q", "64", "--seed", "1", "--out", "p.json", "--report",
        "r.json",
    ];
    assert_eq!(code(&run_in(dir.path(), None, &args)), 0);
    let first_pattern = fs::read(dir.path().join("p.json")).unwrap();
    let first_report = payload(&dir.path().join("r.json"));
    assert_eq!(code(&run_in(dir.path(), None, &args)), 0);
    assert_eq!(first_pattern, fs::read(dir.path().join("p.json")).unwrap());
    assert_eq!(first_report, payload(&dir.path().join("r.json")));

    let p = json(&dir.path().join("p.json"));
    let idx: Vec<u64> = serde_json::from_value(p["indices"].clone()).unwrap();
    assert_eq!(idx.len(), 8);
    assert!(idx.windows(2).all(|w| w[0] < w[1]));
    assert!(idx.iter().all(|&k| k < 64));
}

#[test]
fn automatic_denominator_is_the_next_prime() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        None,
        &["construct", "--mode", "thinned", "--n", "32", "--p", "2", "--out", "p.json"],
    );
    assert_eq!(code(&out), 0);
    let q = json(&dir.path().join("p.json"))["Q"].as_u64().unwrap();
    let base = 32u64.pow(4);
    assert!(is_prime_trial(q));
    assert!(q > base && q < 2 * base);
    assert!((base + 1..q).all(|c| !is_prime_trial(c)));
    assert_eq!(q, 1_048_583);
}

#[test]
fn verify_passes_and_fails_with_witness() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = run_in(
        d,
        None,
        &["construct", "--mode", "elementary", "--n", "64", "--epsilon", "1.25", "--samples", "10", "--out", "e.json"],
    );
    assert_eq!(code(&out), 0);
    let ok = run_in(
        d,
        None,
        &["verify", "--pattern", "e.json", "--epsilon", "1.25", "--samples", "1000", "--report", "ok.json"],
    );
    assert_eq!(code(&ok), 0);
    assert_eq!(json(&d.join("ok.json"))["pass"], true);

    let eps = (1.0 / 640.0).to_string();
    let bad = run_in(
        d,
        None,
        &["verify", "--pattern", "e.json", "--epsilon", &eps, "--samples", "1000", "--report", "bad.json"],
    );
    assert_eq!(code(&bad), 1);
    let r = json(&d.join("bad.json"));
    assert_eq!(r["pass"], false);
    assert_eq!(r["report"]["hitting"]["worst_b"].as_array().unwrap().len(), 1);
    assert!(r["report"]["hitting"]["worst_gap"].as_f64().unwrap() > 1.0 / 640.0);
}

#[test]
fn oversized_net_is_a_budget_error() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&run_in(d, None, &["construct", "--n", "32", "--out", "t.json"])),
        0
    );
    let out = run_in(
        d,
        None,
        &["verify", "--pattern", "t.json", "--epsilon", "0.3", "--method", "net"],
    );
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("699055334"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run_in(dir.path(), None, &["construct"])), 2);
    assert_eq!(code(&run_in(dir.path(), None, &["verify", "--pattern", "missing.json"])), 2);
    assert_eq!(
        code(&run_in(dir.path(), None, &["density", "--epsilon", "1.5", "--R", "10"])),
        2
    );
}

#[test]
fn density_example_is_near_nine_tenths() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        None,
        &[
            "density", "--d", "2", "--p", "2", "--epsilon", "0.1", "--R", "200", "--method", "mc", "--samples",
            "1000000", "--report", "d.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let f = json(&dir.path().join("d.json"))["report"]["fraction"].as_f64().unwrap();
    assert!((f - 0.9).abs() < 0.005, "{f}");
}

#[test]
fn render_counts_shells() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        None,
        &["render", "--p", "2", "--epsilon", "0.3", "--R", "6", "--out", "e.svg", "--report", "r.json"],
    );
    assert_eq!(code(&out), 0);
    let r = json(&dir.path().join("r.json"));
    // shells m = 0..=9 meet the disc of radius 3: m − 0.35 < 9
    assert_eq!(r["report"]["inscribed_shells"], 10);
    let svg = fs::read_to_string(dir.path().join("e.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<path").count() as u64, r["report"]["drawn_shells"].as_u64().unwrap());
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("run.cfg"), "# thinned pattern\nn = 8\nQ = 64\nseed = 5\nout = a.json\n").unwrap();
    assert_eq!(code(&run_in(d, None, &["construct", "--config", "run.cfg"])), 0);
    assert_eq!(
        code(&run_in(d, None, &["construct", "--config", "run.cfg", "--seed", "1", "--out", "b.json"])),
        0
    );
    assert_eq!(
        code(&run_in(d, None, &["construct", "--n", "8", "--Q", "64", "--seed", "1", "--out", "c.json"])),
        0
    );
    assert_eq!(json(&d.join("a.json"))["provenance"]["seed"], 5);
    assert_eq!(fs::read(d.join("b.json")).unwrap(), fs::read(d.join("c.json")).unwrap());
}

#[test]
fn discrepancy_bound_dominates_on_generated_sequence() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        None,
        &[
            "discrepancy", "--a-num", "1", "--a-den", "641", "--n-terms", "64", "--m", "100", "--report", "r.json",
            "--dump", "pts.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let r = json(&dir.path().join("r.json"))["report"].clone();
    assert!(r["et_bound"].as_f64().unwrap() >= r["exact_discrepancy"].as_f64().unwrap());
    let csv = fs::read_to_string(dir.path().join("pts.csv")).unwrap();
    assert_eq!(csv.lines().count(), 65);
    // k = 30: 900 mod 641 = 259
    let row: Vec<&str> = csv.lines().nth(31).unwrap().split(',').collect();
    assert!((row[2].parse::<f64>().unwrap() - 259.0 / 641.0).abs() < 1e-15);
}

/// Runs every subcommand twice single-threaded and once with four threads
/// and compares the reports without the timing field.
#[test]
fn every_subcommand_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("pts.txt"), "0.1\n1/3\n0.75\n2/7\n").unwrap();
    assert_eq!(code(&run_in(d, None, &["construct", "--n", "8", "--Q", "61", "--seed", "2", "--out", "base.json"])), 0);
    let commands: Vec<Vec<&str>> = vec![
        vec!["construct", "--n", "8", "--Q", "64", "--seed", "1", "--epsilon", "0.9", "--samples", "5000"],
        vec!["construct", "--n", "12", "--Q", "1009", "--calibrate", "--retries", "3", "--samples", "3000"],
        vec!["verify", "--pattern", "base.json", "--epsilon", "0.6", "--samples", "20000", "--seed", "9"],
        vec!["verify", "--pattern", "base.json", "--epsilon", "0.9", "--method", "net", "--scale", "auto", "--budget", "200000"],
        vec!["density", "--epsilon", "0.2", "--R", "50", "--samples", "200000", "--seed", "4"],
        vec!["density", "--d", "2", "--p", "3", "--epsilon", "0.05", "--R", "8", "--method", "slice"],
        vec!["nocopy", "--pattern", "base.json", "--epsilon", "0.9", "--samples", "2000", "--seed", "3"],
        vec!["discrepancy", "--points", "pts.txt", "--m", "10"],
        vec!["render", "--p", "3", "--epsilon", "0.3", "--R", "4", "--pixels", "60"],
        vec!["calibrate", "--n", "10", "--Q", "1009", "--retries", "2", "--samples", "2000", "--net-cells", "100000"],
    ];
    for (i, cmd) in commands.iter().enumerate() {
        let mut reports = Vec::new();
        for (run, threads) in [(0, 1), (1, 1), (2, 4)] {
            let report = format!("r{i}_{run}.json");
            let mut args = cmd.clone();
            let out_file = format!("o{i}_{run}.out");
            if matches!(cmd[0], "construct" | "render" | "calibrate") {
                args.extend(["--out", &out_file]);
            }
            args.extend(["--report", &report]);
            let out = run_in(d, Some(threads), &args);
            assert!(code(&out) <= 1, "{cmd:?}: {}", String::from_utf8_lossy(&out.stderr));
            reports.push((payload(&d.join(&report)), fs::read(d.join(&out_file)).ok()));
        }
        assert_eq!(reports[0], reports[1], "rerun differs for {cmd:?}");
        assert_eq!(reports[0], reports[2], "thread count changes {cmd:?}");
    }
}
