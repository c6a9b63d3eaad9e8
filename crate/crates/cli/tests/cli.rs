//! Drives the `perptail` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

const LAW: &str = r#""law": {
    "factor": {"kind": "power_f", "c": 1.0, "r": 2.0},
    "increment": {"kind": "weibull", "d": 1.0, "alpha": 2.0},
    "dependence": {"kind": "independent"}
}"#;

fn perptail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perptail"))
        .args(args)
        .output()
        .unwrap()
}

fn config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    let sep = if body.is_empty() { "" } else { ", " };
    std::fs::write(&p, format!("{{{LAW}{sep}{body}}}")).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn constants_table() {
    let o = perptail(&["constants", "--alpha", "2", "--r", "2,3"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.lines().next().unwrap().starts_with("# perptail-csv v1"));
    assert!(s.contains("2,2,1.3333333333333333,1.5874010519681994,2,"));
    assert_eq!(s.lines().count(), 4);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        perptail(&["constants", "--alpha", "0.5", "--r", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        perptail(&["verify", "no-such-suite"]).status.code(),
        Some(2)
    );
    assert_eq!(perptail(&["mgf"]).status.code(), Some(2));
    assert_eq!(perptail(&["bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#""outputs": {"simulate": true}, "mc": {"paths": 100, "horizon": 10}"#,
    );
    let o = perptail(&["--config", &cfg, "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mc.seed"));
}

#[test]
fn simulate_is_reproducible_and_seed_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#""mc": {"paths": 500, "horizon": 30, "seed": 3}"#,
    );
    let a = perptail(&["--config", &cfg, "--threads", "1", "simulate"]);
    let b = perptail(&["--config", &cfg, "simulate"]);
    let c = perptail(&["--config", &cfg, "--seed", "4", "simulate"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    assert_eq!(stdout(&a).lines().count(), 502);
}

#[test]
fn hfun_mgf_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#""x_grid": {"min": 4.0, "max": 8.0, "per_decade": 4}, "z_grid": {"min": 1e-3, "max": 30.0, "per_decade": 16}, "lower": {"n_blocks": 4}"#,
    );
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let o = perptail(&["--config", &cfg, "hfun", "--x", "10"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let row = stdout(&o).lines().nth(2).unwrap().to_string();
    let h: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    // closed form for this law: (3/2^{2/3}) x^{4/3}
    let closed = 3.0 / 2f64.powf(2.0 / 3.0) * 10f64.powf(4.0 / 3.0);
    assert!((h / closed - 1.0).abs() < 1e-6, "{h} vs {closed}");

    assert_eq!(
        perptail(&["--config", &cfg, "--out-dir", out, "mgf"])
            .status
            .code(),
        Some(0)
    );
    assert!(Path::new(out).join("mgf.csv").exists());

    let o = perptail(&["--config", &cfg, "--out-dir", out, "tail"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(out).join("summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);

    let o = perptail(&["--config", &cfg, "lower-bound", "--x", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(cert["log_bound"].as_f64().unwrap() < 0.0);
    assert!((cert["reached"].as_f64().unwrap() / 8.0 - 1.0).abs() < 1e-6);
}

#[test]
fn certify_upper_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let co = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("independent", "comonotone");
    std::fs::write(&cfg, co).unwrap();
    let args = [
        "--config",
        &cfg,
        "certify-upper",
        "--min",
        "10",
        "--max",
        "200",
    ];
    let ok = perptail(&[&args[..], &["--b", "0.42", "--x", "20"]].concat());
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["certificate"]["verdict"]["kind"], "certified");
    let bad = perptail(&[&args[..], &["--b", "1.68"]].concat());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn conjugate_of_a_parabola() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("f.csv");
    let mut s = String::from("# comment\nx,y\n");
    for k in 0..=400 {
        let x = 10f64.powf(-2.0 + 5.0 * k as f64 / 400.0);
        s += &format!("{x},{}\n", x * x);
    }
    std::fs::write(&input, s).unwrap();
    let o = perptail(&[
        "conjugate",
        "--input",
        input.to_str().unwrap(),
        "--min",
        "0.1",
        "--max",
        "100",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for line in stdout(&o).lines().skip(2) {
        let mut it = line.split(',').map(|v| v.parse::<f64>().unwrap());
        let (z, v) = (it.next().unwrap(), it.next().unwrap());
        assert!((v - z * z / 4.0).abs() <= 1e-3 * z * z / 4.0, "{z}: {v}");
    }
}

#[test]
fn verify_single_suite_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = perptail(&["--out-dir", out, "verify", "afterh-exact"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS 4"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap())
            .unwrap();
    assert_eq!(v["passed"], true);
}
