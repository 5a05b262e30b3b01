use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn jetq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jetq"))
        .args(args)
        .env_remove("JETQ_SEED")
        .output()
        .expect("running jetq")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is json")
}

fn kernel_file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn bidisc_u(dir: &Path, l: f64, m: f64) -> PathBuf {
    kernel_file(
        dir,
        &format!("u_{l}_{m}.jk"),
        &format!(
            "dim = 2\nparams = l={l}, m={m}\nkernel = (1 - (z2+z1)*(wb2+wb1))^(-l) * (1 - (z2-z1)*(wb2-wb1))^(-m)\n"
        ),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn equal_weight_bidisc_has_no_angle() {
    let dir = tempfile::tempdir().unwrap();
    let k = bidisc_u(dir.path(), 1.0, 1.0);
    let out = jetq(&[
        "invariants",
        "--kernel",
        s(&k),
        "--samples",
        "2",
        "--radius",
        "0.3",
        "--no-timing",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let items = report["results"].as_array().unwrap();
    assert_eq!(items.len(), 2);
    for item in items {
        for a in item["angle"].as_array().unwrap() {
            let pair = a.as_array().unwrap();
            assert!(pair.iter().all(|v| v.as_f64().unwrap().abs() < 1e-12));
        }
    }
    assert_eq!(report["schema"], 1);
    assert!(report.get("wall_time_s").is_none());
    assert_eq!(report["seed"], 0x6A65_7471u64);
}

#[test]
fn disc_kernel_transverse_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let k = kernel_file(
        dir.path(),
        "disc.jk",
        "# weighted disc\ndim = 1\nparams = l=2\nkernel = (1 - z1*wb1)^(-l)\n",
    );
    let out = jetq(&["invariants", "--kernel", s(&k)]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let first = &report["results"][0];
    assert_eq!(first["trans"].as_f64(), Some(2.0));
    assert_eq!(first["tan"].as_array().map(Vec::len), Some(0));
    assert!(report["wall_time_s"].as_f64().is_some());
}

#[test]
fn malformed_kernel_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let k = kernel_file(dir.path(), "bad.jk", "dim = 1\nkernel = (1 - z1*wb1\n");
    let out = jetq(&["invariants", "--kernel", s(&k)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("offset 12"), "{err}");
    assert_eq!(
        jetq(&["invariants", "--kernel", "/nonexistent/k.jk"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn equiv_dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = bidisc_u(dir.path(), 1.0, 1.0);
    let d = kernel_file(
        dir.path(),
        "disc.jk",
        "dim = 1\nkernel = (1 - z1*wb1)^(-2)\n",
    );
    assert_eq!(
        jetq(&["equiv", "--kernel", s(&a), "--kernel", s(&d)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(jetq(&["equiv", "--kernel", s(&a)]).status.code(), Some(2));
}

#[test]
fn equiv_report_carries_block_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let a = bidisc_u(dir.path(), 1.0, 1.0);
    let b = bidisc_u(dir.path(), 0.5, 1.5);
    let out = jetq(&[
        "equiv",
        "--kernel",
        s(&a),
        "--kernel",
        s(&b),
        "--samples",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["results"]["verdict"], "not_equivalent");
    assert_eq!(report["results"]["per_sample"].as_array().unwrap().len(), 3);
    let r = &report["results"]["residuals"];
    assert_eq!(r["tan"].as_f64(), Some(0.0));
    assert!(r["row"].as_f64().unwrap() >= 1.0);
}

#[test]
fn params_override_changes_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let a = bidisc_u(dir.path(), 1.0, 1.0);
    let b = bidisc_u(dir.path(), 0.5, 1.5);
    let out = jetq(&[
        "equiv",
        "--kernel",
        s(&a),
        "--kernel",
        s(&b),
        "--params",
        "l=1,m=1",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bidisc_table_first_row() {
    let out = jetq(&[
        "bidisc", "table", "--lambda", "1", "--mu", "1", "--p-max", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,alpha_p,beta_p1,eta_p,beta_p2"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((row[1] - h).abs() < 1e-15 && (row[2] - h).abs() < 1e-15);
    assert_eq!(text.lines().count(), 5);

    let js = jetq(&[
        "bidisc", "table", "--lambda", "1", "--mu", "1", "--p-max", "3", "--format", "json",
    ]);
    assert_eq!(json(&js)["results"].as_array().unwrap().len(), 4);
}

#[test]
fn bidisc_verify_passes() {
    let out = jetq(&["bidisc", "verify", "--lambda", "1", "--mu", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["results"]["pass"], true);
    let out = jetq(&[
        "bidisc", "verify", "--lambda", "1", "--mu", "2", "--tol", "1e-8", "--p-max", "20",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bidisc_overflow_exits_2() {
    let out = jetq(&[
        "bidisc", "verify", "--lambda", "1", "--mu", "1", "--p-max", "500",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        jetq(&["bidisc", "verify", "--lambda", "0", "--mu", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn homog_checks() {
    let out = jetq(&["homog", "--alpha", "2", "--delta", "1", "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert!(report["results"]["max_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(report["results"]["abc"][0].as_f64(), Some(4.0));

    let neg = jetq(&["homog", "--alpha", "2", "--delta", "1", "--beta", "-0.5"]);
    assert_eq!(neg.status.code(), Some(0));

    let bad = jetq(&["homog", "--alpha", "1", "--delta", "1", "--beta", "1"]);
    assert_eq!(bad.status.code(), Some(2));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("alpha*delta - beta^2 > 0"), "{err}");
}

#[test]
fn homog_without_cross_term_matches_bidisc_restriction() {
    let out = jetq(&[
        "homog",
        "--alpha",
        "1.5",
        "--delta",
        "0.5",
        "--beta",
        "0",
        "--samples",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let k = &json(&out)["results"]["points"][0]["curvature"];
    let entry = |i: usize, j: usize| k[i][j][0].as_f64().unwrap();
    assert!((entry(0, 0) - 2.0).abs() < 1e-12 && (entry(0, 1) - 1.0).abs() < 1e-12);
}

#[test]
fn csv_is_table_only() {
    let out = jetq(&[
        "homog", "--alpha", "2", "--delta", "1", "--beta", "0.5", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(jetq(&["equiv"]).status.code(), Some(2));
    assert_eq!(jetq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        jetq(&["bidisc", "verify", "--lambda", "1", "--mu", "1", "--tol", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn kernel_parse_echoes_canonical_form() {
    let dir = tempfile::tempdir().unwrap();
    let k = kernel_file(
        dir.path(),
        "k.jk",
        "dim = 2\nparams = l=2\nkernel = (1-z1*wb1)^(-l)*exp(z2*wb2)\n",
    );
    let out = jetq(&["kernel", "parse", "--kernel", s(&k), "--no-timing"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let text = report["results"]["kernel"].as_str().unwrap();
    assert_eq!(text, "(1 - z1*wb1)^(-l)*exp(z2*wb2)");
    assert_eq!(report["results"]["free_parameters"][0], "l");
}

#[test]
fn seed_override_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let k = bidisc_u(dir.path(), 1.0, 2.0);
    let out_path = dir.path().join("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_jetq"))
        .args([
            "invariants",
            "--kernel",
            s(&k),
            "--no-timing",
            "--out",
            s(&out_path),
        ])
        .env("JETQ_SEED", "42")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["seed"], 42);
    let default = json(&jetq(&["invariants", "--kernel", s(&k), "--no-timing"]));
    assert_eq!(report["results"][0], default["results"][0]);
    assert_ne!(report["results"][8], default["results"][8]);
}
