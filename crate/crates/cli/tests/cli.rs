use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn loggas(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loggas"))
        .args(args)
        .current_dir(dir)
        .env_remove("LOGGAS_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn equilibrium_writes_semicircle_support() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "quad.json",
        r#"{"potential": {"kind": "quadratic"}}"#,
    );
    let out = loggas(
        &["equilibrium", "--config", &cfg, "--out", "eq.json"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let eq: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eq.json")).unwrap()).unwrap();
    assert!((eq["A"].as_f64().unwrap() + 2.0).abs() < 1e-10);
    assert!((eq["B"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    let csv = fs::read_to_string(dir.path().join("eq.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn verify_loops_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "quad.json",
        r#"{"beta": 2.0, "n": 64, "samples": 100}"#,
    );
    let mut csvs = Vec::new();
    for (threads, out) in [("1", "a"), ("3", "b")] {
        let o = loggas(
            &[
                "verify-loops",
                "--config",
                &cfg,
                "--seed",
                "7",
                "--threads",
                threads,
                "--out",
                out,
                "--quiet",
            ],
            dir.path(),
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        csvs.push(fs::read(dir.path().join(out).join("loop-rank1.csv")).unwrap());
        csvs.push(fs::read(dir.path().join(out).join("loop-rankn.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[2]);
    assert_eq!(csvs[1], csvs[3]);
}

#[test]
fn sample_cache_hit_is_logged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "quad.json", r#"{"n": 32, "samples": 10}"#);
    let first = loggas(&["sample", "--config", &cfg, "--cache", "c"], dir.path());
    assert_eq!(first.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&first.stderr).contains("cache miss"));
    let second = loggas(&["sample", "--config", &cfg, "--cache", "c"], dir.path());
    assert!(String::from_utf8_lossy(&second.stderr).contains("cache hit"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/samples.json")).unwrap())
            .unwrap();
    assert_eq!(meta["cache_hit"], true);
    assert_eq!(meta["samples"], 10);
}

#[test]
fn corrupt_cache_is_an_operational_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "quad.json", r#"{"n": 8, "samples": 2}"#);
    assert_eq!(
        loggas(&["sample", "--config", &cfg, "--cache", "c"], dir.path())
            .status
            .code(),
        Some(0)
    );
    let run = fs::read_dir(dir.path().join("c"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    fs::write(run.join("0_0.bin"), b"NOTMAGIC").unwrap();
    let out = loggas(&["wegner", "--config", &cfg, "--cache", "c"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}

#[test]
fn malformed_config_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"experiment": {"clt": {"energies": "zero"}}}"#,
    );
    let out = loggas(&["clt", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment.clt.energies"));
}

#[test]
fn oracle_prints_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "o.json",
        r#"{"beta": 1.0, "experiment": {"oracle": {"n": 2}}}"#,
    );
    let out = loggas(
        &[
            "oracle",
            "--config",
            &cfg,
            "--observable",
            "gap2",
            "--quiet",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-8);
}

#[test]
fn report_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = loggas(&["report", "empty"], dir.path());
    fs::create_dir(dir.path().join("empty")).unwrap();
    assert_eq!(empty.status.code(), Some(1));
    assert_eq!(
        loggas(&["report", "empty"], dir.path()).status.code(),
        Some(1)
    );

    let cfg = write(
        dir.path(),
        "o.json",
        r#"{"experiment": {"loops": {"oracle": true}}}"#,
    );
    let o = loggas(
        &["verify-loops", "--config", &cfg, "--out", "r", "--quiet"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let ok = loggas(&["report", "r"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));
    assert!(dir.path().join("r/summary.md").is_file());

    // A gated failure: far from the real axis |s_N - m_V|² decays like η^{-4}.
    let cfg = write(
        dir.path(),
        "w.json",
        r#"{"n": 64, "samples": 50, "experiment": {"local_law": {"etas": [10, 20, 40, 80]}}}"#,
    );
    let w = loggas(
        &["local-law", "--config", &cfg, "--out", "r", "--quiet"],
        dir.path(),
    );
    assert_eq!(w.status.code(), Some(2));
    assert!(dir.path().join("r/local-law.csv").is_file());
    let mixed = loggas(&["report", "r"], dir.path());
    assert_eq!(mixed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mixed.stdout).contains("FAIL"));
}
