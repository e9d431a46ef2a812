use std::path::Path;
use std::process::{Command, Output};

use daemor::cli::{read_summary, CONFIG_ECHO, REPORT};
use daemor::io::{read_rom, read_system, RunConfig};
use daemor::testbed::planted::demo_poles;
use daemor::transfer::PoleReport;
use serde_json::Value;

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/demo_interpolation_report.json");

fn daemor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_daemor"))
        .args(args)
        .current_dir(dir)
        .env_remove("DAEMOR_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) {
    let out = daemor(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_code(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["code"].as_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn assert_close(a: &Value, b: &Value, tol: f64, at: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= tol, "{at}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{at}");
            for (k, (u, v)) in x.iter().zip(y).enumerate() {
                assert_close(u, v, tol, &format!("{at}[{k}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.len(), y.len(), "{at}");
            for (k, u) in x {
                assert_close(u, &y[k], tol, &format!("{at}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{at}"),
    }
}

#[test]
fn generate_writes_readable_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["generate", "--out", "sys"], tmp.path());
    let b = read_system(tmp.path().join("sys")).unwrap();
    assert_eq!((b.system.n1(), b.system.n2()), (120, 30));
    assert_eq!((b.system.inputs(), b.system.outputs()), (1, 2));
    assert_eq!(b.manifest.seed, Some(RunConfig::default().seed));
    assert!(tmp.path().join("sys").join(CONFIG_ECHO).exists());
}

#[test]
fn reduce_verify_matches_golden_report() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["reduce", "--out", "run"], tmp.path());
    let rom = read_rom(tmp.path().join("run/rom")).unwrap();
    assert_eq!(rom.order(), 24);
    ok(
        &["verify", "--bundle", "run/system", "--rom", "run/rom", "--out", "check"],
        tmp.path(),
    );
    let got: Value = serde_json::from_slice(&std::fs::read(tmp.path().join("check").join(REPORT)).unwrap()).unwrap();
    let want: Value = serde_json::from_slice(&std::fs::read(GOLDEN).unwrap()).unwrap();
    assert_close(&got, &want, 1e-10, "report");
}

#[test]
fn demo_pipeline_captures_poles_and_stabilizes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&["reduce", "--out", "run"], dir);
    ok(&["poles", "--bundle", "run/system", "--rom", "run/rom", "--out", "poles"], dir);
    for name in ["poles_full.json", "poles_reduced.json"] {
        let rep: PoleReport = serde_json::from_slice(&std::fs::read(dir.join("poles").join(name)).unwrap()).unwrap();
        assert_eq!(rep.unstable_count, 2, "{name}");
        for p in demo_poles() {
            let d = rep.finite_poles.iter().map(|z| (z - p).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-4 * p.norm(), "{name}");
        }
    }
    ok(&["lqr", "--rom", "run/rom", "--out", "ctl"], dir);
    assert!(dir.join("ctl/lqr/K_full.mtx").exists());
    ok(&["simulate", "--bundle", "run/system", "--out", "open"], dir);
    ok(
        &["simulate", "--bundle", "run/system", "--gain", "ctl/lqr", "--out", "closed"],
        dir,
    );
    let open = read_summary(dir.join("open/simulation.json")).unwrap();
    let closed = read_summary(dir.join("closed/simulation.json")).unwrap();
    assert!(!open.closed_loop && closed.closed_loop);
    assert_eq!(closed.steps, 2000);
    assert!(open.x_norm_final > open.x_norm_initial);
    assert!(closed.x_norm_final <= 1e-3 * closed.x_norm_initial);
    assert!(closed.max_constraint_residual <= 1e-9);
    let rows = read_csv(&dir.join("closed/trajectory.csv"));
    assert_eq!(rows.len(), 2001);
}

#[test]
fn sigma_curves_agree_at_interpolation_frequencies() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut cfg = RunConfig::default();
    // same grid as the interpolation frequencies
    cfg.sweep.count = 10;
    std::fs::write(dir.join("cfg.json"), cfg.to_json()).unwrap();
    ok(&["reduce", "--config", "cfg.json", "--out", "run"], dir);
    ok(
        &["sigma", "--config", "cfg.json", "--bundle", "run/system", "--rom", "run/rom", "--out", "sig"],
        dir,
    );
    let full = read_csv(&dir.join("sig/sigma_full.csv"));
    let red = read_csv(&dir.join("sig/sigma_reduced.csv"));
    assert_eq!(full.len(), 10);
    for (f, r) in full.iter().zip(&red) {
        assert_eq!(f[0], r[0]);
        let (a, b): (f64, f64) = (f[1].parse().unwrap(), r[1].parse().unwrap());
        assert!((a - b).abs() <= 1e-8 * a, "omega {}", f[0]);
    }
}

#[test]
fn oseen_lqr_writes_functional_gains() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = RunConfig {
        generator: daemor::io::config::GeneratorConfig::toy_oseen(),
        mode: daemor::reduction::ReductionMode::Galerkin,
        ..RunConfig::default()
    };
    std::fs::write(dir.join("cfg.json"), cfg.to_json()).unwrap();
    ok(&["reduce", "--config", "cfg.json", "--out", "run"], dir);
    ok(
        &["lqr", "--config", "cfg.json", "--bundle", "run/system", "--rom", "run/rom", "--out", "ctl"],
        dir,
    );
    let rows = read_csv(&dir.join("ctl/functional_gains.csv"));
    let b = read_system(dir.join("run/system")).unwrap();
    assert_eq!(rows.len(), b.system.n1());
    assert!(rows.iter().all(|r| r[1] == "u" || r[1] == "v"));
}

#[test]
fn errors_are_reported_as_json_with_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("bad.json"), "{\"seed\": 1, \"bogus\": true}").unwrap();
    let out = daemor(&["reduce", "--config", "bad.json", "--out", "x"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_code(&out), "invalid-config");

    let out = daemor(&["poles", "--bundle", "missing", "--out", "x"], dir);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_code(&out), "io");

    let out = daemor(&["sigma", "--out", "x"], dir);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_daemor"))
        .args(["generate", "--out", "x"])
        .current_dir(dir)
        .env("DAEMOR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_code(&out), "invalid-config");
}

#[test]
fn malformed_matrix_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&["generate", "--out", "sys"], dir);
    std::fs::write(
        dir.join("sys/B1.mtx"),
        "% daemor coordinate matrix\n120 1 1\n121 1 1.0\n",
    )
    .unwrap();
    let out = daemor(&["poles", "--bundle", "sys", "--out", "x"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_code(&out), "index-out-of-range");
}
