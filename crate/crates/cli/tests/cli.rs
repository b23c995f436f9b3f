use std::path::Path;
use std::process::{Command, Output};

use envelope_core::harness::verify_manifest;
use serde_json::Value;

fn envlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_envlab"))
        .args(args)
        .output()
        .expect("spawn envlab")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn small_run(out: &Path, eps_levels: &str) -> Output {
    let args = [
        "run",
        "--preset",
        "smooth",
        "--grid",
        "16,16,17",
        "--eps-levels",
        eps_levels,
        "--beta-max",
        "5",
        "--quiet",
        "--out",
        out.to_str().unwrap(),
    ];
    envlab(&args)
}

#[test]
fn smooth_run_is_complete_and_hashed() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path(), "2");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = manifest(dir.path());
    assert_eq!(m["status"], "COMPLETE");
    assert_eq!(m["preset"], "smooth");
    // five estimates for each of the five default B values
    assert_eq!(m["verdicts"].as_array().unwrap().len(), 25);
    assert!(m["oracle"]["sup"].as_f64().unwrap() < 1e-2);
    for rel in [
        "reports/solves.csv",
        "reports/cauchy.csv",
        "reports/estimates.csv",
        "reports/verdicts.csv",
    ] {
        assert!(m["files"][rel].is_string(), "{rel} missing from manifest");
    }
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
    std::fs::write(dir.path().join("reports/solves.csv"), "tampered").unwrap();
    assert_eq!(
        verify_manifest(dir.path()).unwrap(),
        vec!["reports/solves.csv".to_string()]
    );
}

#[test]
fn reruns_emit_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(small_run(a.path(), "1").status.success());
    assert!(small_run(b.path(), "1").status.success());
    assert_eq!(manifest(a.path())["files"], manifest(b.path())["files"]);
}

#[test]
fn single_beta_level_is_incomplete() {
    let dir = tempfile::tempdir().unwrap();
    let out = envlab(&[
        "run",
        "--preset",
        "degenerate-lambda4",
        "--grid",
        "16,17",
        "--eps-levels",
        "1",
        "--beta-max",
        "0",
        "--quiet",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(dir.path());
    assert_eq!(m["status"], "INCOMPLETE");
    assert!(m["envelope_uncertainty"].is_null());
    assert!(dir.path().join("fields/u_0_0.bin").exists());
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"preset": "degenerate-lambda4", "grid": [16, 16, 17], "eps_levels": 1, "beta_max": 2}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = envlab(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--preset",
        "constants",
        "--quiet",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = manifest(&out_dir);
    assert_eq!(m["preset"], "constants");
    assert_eq!(m["schedule"]["beta_list"].as_array().unwrap().len(), 3);
    // solve stops before the scan and the comparison
    assert!(m["verdicts"].as_array().unwrap().is_empty());
    assert!(m["oracle"].is_null());

    std::fs::write(&cfg, r#"{"preset": "smooth", "bogus": 1}"#).unwrap();
    let out = envlab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_probe_and_diff() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    for (grid, name) in [("16,8,17", "c.bin"), ("32,8,33", "f.bin")] {
        let out = envlab(&[
            "oracle",
            "--preset",
            "smooth",
            "--grid",
            grid,
            "--out",
            &p(name),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = envlab(&["probe", &p("c.bin"), &p("f.bin")]);
    assert!(out.status.success());
    let probe: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ratio = probe["hess_ratio"].as_f64().unwrap();
    assert!((0.8..=1.25).contains(&ratio), "hess ratio {ratio}");

    let out = envlab(&["diff", &p("c.bin"), &p("c.bin")]);
    let cmp: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cmp["sup"].as_f64(), Some(0.0));
    let out = envlab(&["diff", &p("c.bin"), &p("f.bin")]);
    assert_eq!(out.status.code(), Some(1));

    let out = envlab(&[
        "oracle",
        "--preset",
        "log-singular-c1",
        "--grid",
        "16,17",
        "--out",
        &p("x.bin"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = envlab(&["oracle", "--grid", "16", "--out", &p("x.bin")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn scan_rereads_a_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(small_run(dir.path(), "1").status.success());
    let csv_dir = dir.path().join("rescan");
    let out = envlab(&[
        "scan",
        dir.path().to_str().unwrap(),
        "--b-ladder",
        "0,3",
        "--q-variant",
        "interior",
        "--out",
        csv_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 10);
    let text = std::fs::read_to_string(csv_dir.join("estimates.csv")).unwrap();
    assert!(text.starts_with("eps,beta,"));
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
}
