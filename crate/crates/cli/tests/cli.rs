//! End-to-end tests of the command-line surface: artifact layout and
//! determinism, record streams, CSV shape, and the verify exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hullmax"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn hullmax");
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hullmax-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn learn_artifacts_and_determinism() {
    let dir = tmp("learn");
    let dist = dir.join("dist.json");
    run_ok(&[
        "gen-dist", "--family", "bad-maxima-dependency", "--n", "256", "--seed", "9", "--out",
        p(&dist),
    ]);
    let s1 = dir.join("s1");
    let s2 = dir.join("s2");
    for s in [&s1, &s2] {
        run_ok(&[
            "learn", "--problem", "maxima", "--dist", p(&dist), "--out-dir", p(s), "--t-freq",
            "256",
        ]);
    }
    // manifest plus slab boundaries plus one tree per index
    let trees: serde_json::Value =
        serde_json::from_slice(&std::fs::read(s1.join("trees.json")).unwrap()).unwrap();
    assert_eq!(trees.as_array().unwrap().len(), 256);
    let slabs: serde_json::Value =
        serde_json::from_slice(&std::fs::read(s1.join("slabs.json")).unwrap()).unwrap();
    assert!(slabs["boundaries"].as_array().unwrap().len() > 100);
    // byte-identical artifacts for equal seeds across process runs
    for f in ["manifest.json", "slabs.json", "trees.json"] {
        assert_eq!(
            std::fs::read(s1.join(f)).unwrap(),
            std::fs::read(s2.join(f)).unwrap(),
            "{f} differs between identical learns"
        );
    }
}

#[test]
fn run_records_and_stale_structures() {
    let dir = tmp("run");
    let dist = dir.join("dist.json");
    run_ok(&[
        "gen-dist", "--family", "uniform", "--n", "64", "--seed", "4", "--out", p(&dist),
    ]);
    let s = dir.join("structs");
    run_ok(&[
        "learn", "--problem", "maxima", "--dist", p(&dist), "--out-dir", p(&s), "--t-freq", "128",
    ]);
    let out = run_ok(&[
        "run", "--problem", "maxima", "--dist", p(&dist), "--structures", p(&s), "--trials",
        "100",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let records: Vec<serde_json::Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).expect("record parses"))
        .collect();
    assert_eq!(records.len(), 100);
    for r in &records {
        assert_eq!(r["oracle_agreement"], true);
        assert_eq!(r["n"], 64);
    }

    // a different distribution file invalidates the manifest hash
    let other = dir.join("other.json");
    run_ok(&[
        "gen-dist", "--family", "uniform", "--n", "64", "--seed", "5", "--out", p(&other),
    ]);
    let out = bin()
        .args([
            "run", "--problem", "maxima", "--dist", p(&other), "--structures", p(&s),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stale"));
}

#[test]
fn bench_csv_shape_and_proxy_bound() {
    let dir = tmp("bench");
    let csv = dir.join("summary.csv");
    run_ok(&[
        "bench", "--problem", "maxima", "--family", "bad-maxima-easy", "--ladder", "64,256",
        "--trials", "30", "--seed", "2", "--t-freq", "128", "--out", p(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "problem,family,n,trials,rounds_per_n,cmp_per_n,baseline_cmp_per_nlogn,entropy_proxy_per_n,fallback_rate"
    );
    assert_eq!(lines.len(), 3);
    for row in &lines[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 9, "fixed column count");
        let cmp_per_n: f64 = cols[5].parse().unwrap();
        let proxy_per_n: f64 = cols[7].parse().unwrap();
        assert!(
            proxy_per_n <= cmp_per_n + 8.0,
            "proxy {proxy_per_n} exceeds comparisons {cmp_per_n} + 8"
        );
    }

    // determinism of the whole summary for a fixed config and seed
    let csv2 = dir.join("summary2.csv");
    run_ok(&[
        "bench", "--problem", "maxima", "--family", "bad-maxima-easy", "--ladder", "64,256",
        "--trials", "30", "--seed", "2", "--t-freq", "128", "--out", p(&csv2),
    ]);
    assert_eq!(text, std::fs::read_to_string(&csv2).unwrap());
}

#[test]
fn hull_pipeline_and_verify_exit_codes() {
    let dir = tmp("verify");
    let dist = dir.join("dist.json");
    run_ok(&[
        "gen-dist", "--family", "fixed-random", "--n", "128", "--seed", "11", "--out", p(&dist),
    ]);
    let s = dir.join("structs");
    run_ok(&[
        "learn", "--problem", "hull", "--dist", p(&dist), "--out-dir", p(&s), "--t-freq", "64",
    ]);
    // the canonical hull holds one direction per constructed line, about
    // (meet points / spacing) of them; n = 128 has spacing 49
    let canonical: serde_json::Value =
        serde_json::from_slice(&std::fs::read(s.join("canonical.json")).unwrap()).unwrap();
    let k = canonical["all_lines"].as_array().unwrap().len();
    assert!((2..=2 * 128 / 49 + 4).contains(&k), "k = {k}");
    let dump = dir.join("dump");
    run_ok(&[
        "run", "--problem", "hull", "--dist", p(&dist), "--structures", p(&s), "--trials", "5",
        "--dump", p(&dump), "--out", p(&dir.join("records.jsonl")),
    ]);

    let inst = dump.join("inst-0.txt");
    let cert = dump.join("cert-0.json");
    let out = run_ok(&["verify", "--instance", p(&inst), "--certificate", p(&cert)]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "valid");

    // mutate a witness pair: exit code 1 with a report naming the triple
    let mut v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&cert).unwrap()).unwrap();
    let pairs = v["witness_pairs"].as_array_mut().unwrap();
    let victim = pairs.iter().position(|w| !w.is_null()).unwrap();
    pairs[victim] = serde_json::json!([victim, victim]);
    let bad = dir.join("bad.json");
    std::fs::write(&bad, serde_json::to_vec(&v).unwrap()).unwrap();
    let out = bin()
        .args(["verify", "--instance", p(&inst), "--certificate", p(&bad)])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("violation"));

    // instance/certificate size mismatch: usage error 2
    let short = dir.join("short.txt");
    std::fs::write(&short, "0 0\n1 1\n").unwrap();
    let out = bin()
        .args(["verify", "--instance", p(&short), "--certificate", p(&cert)])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // the packed binary format round-trips through verify as well
    let text = std::fs::read_to_string(&inst).unwrap();
    let instance = hullmax::distributions::instance_from_text(&text).unwrap();
    let bin_path = dir.join("inst-0.bin");
    std::fs::write(&bin_path, hullmax::distributions::instance_to_binary(&instance)).unwrap();
    let out = run_ok(&["verify", "--instance", p(&bin_path), "--certificate", p(&cert)]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "valid");
}

#[test]
fn degenerate_hull_learning_falls_back() {
    // at n = 16 the default spacing exceeds the number of hull meet points;
    // learning reports the worst-case mode and runs still verify
    let dir = tmp("degenerate");
    let dist = dir.join("dist.json");
    run_ok(&[
        "gen-dist", "--family", "uniform", "--n", "16", "--seed", "3", "--out", p(&dist),
    ]);
    let s = dir.join("structs");
    run_ok(&["learn", "--problem", "hull", "--dist", p(&dist), "--out-dir", p(&s)]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(s.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["worst_case"], true);
    let out = run_ok(&[
        "run", "--problem", "hull", "--dist", p(&dist), "--structures", p(&s), "--trials", "20",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for line in stdout.lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(r["oracle_agreement"], true);
        assert_eq!(r["fallback_used"], true);
    }
}
