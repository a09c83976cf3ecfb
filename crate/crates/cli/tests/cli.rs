use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn levi(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_levi"));
    cmd.current_dir(dir).args(args);
    if let Some(text) = config {
        fs::write(dir.join("run.json"), text).unwrap();
        cmd.args(["--config", "run.json"]);
    }
    cmd.output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const CIRCLE: &str = r#"{"input": {"kind": "circle", "radius": 1.0, "markers": 64}, "t_end": 0.1}"#;

#[test]
fn circle_flow_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = levi(tmp.path(), &["flow", "--out", "a"], Some(CIRCLE));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("a");
    for f in [
        "snapshots.csv",
        "flow.svg",
        "diagnostics.csv",
        "summary.json",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let summary = json(&dir.join("summary.json"));
    assert!((summary["t_reached"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    let ratio =
        summary["final_length"].as_f64().unwrap() / summary["initial_length"].as_f64().unwrap();
    assert!((ratio - 0.1f64.exp()).abs() < 1e-4);
    assert!(fs::read_to_string(dir.join("snapshots.csv"))
        .unwrap()
        .starts_with("t,index,x,y,K\n"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        levi(tmp.path(), &["flow", "--out", "a"], Some(CIRCLE))
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        levi(tmp.path(), &["flow", "--out", "b"], Some(CIRCLE))
            .status
            .code(),
        Some(0)
    );
    for f in [
        "snapshots.csv",
        "diagnostics.csv",
        "summary.json",
        "flow.svg",
    ] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap()
        );
    }
    let sweep = r#"{"seeds": [], "random": {"count": 2, "lo": [-2, -2], "hi": [2, 2], "tau_range": [0.3, 0.6]},
        "potential": {"generators": [[-1, 0], [1, 0], [0, 1]], "J": 16}, "settings": {"periods": 1.1, "dt": 1e-3}}"#;
    assert_eq!(
        levi(
            tmp.path(),
            &["orbit", "--out", "c", "--seed", "5"],
            Some(sweep)
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        levi(
            tmp.path(),
            &["orbit", "--out", "d", "--seed", "5", "--threads", "2"],
            Some(sweep)
        )
        .status
        .code(),
        Some(0)
    );
    for f in ["verification.json", "orbit_000.csv", "orbit_001.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("c").join(f)).unwrap(),
            fs::read(tmp.path().join("d").join(f)).unwrap()
        );
    }
}

#[test]
fn backward_oval_reports_singularity() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"input": {"kind": "support", "z0": 1.0, "modes": [[0, 0], [0.1, 0]], "markers": 128}, "t_end": -0.5}"#;
    let out = levi(tmp.path(), &["flow", "--out", "a"], Some(cfg));
    assert_eq!(out.status.code(), Some(4));
    let out = levi(
        tmp.path(),
        &["flow", "--out", "b", "--allow-singularity"],
        Some(cfg),
    );
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&tmp.path().join("b/summary.json"));
    let exact = 0.3f64.ln() / 4.0;
    assert!((summary["spectral_blowup_time"].as_f64().unwrap() - exact).abs() < 1e-6);
    assert!((summary["singularity"]["t"].as_f64().unwrap() - exact).abs() < 5e-2);
}

#[test]
fn oval_comparison_and_diagnose() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"input": {"kind": "support", "z0": 1.0, "modes": [[0, 0], [0.1, 0]], "markers": 128},
        "t_end": 0.2, "settings": {"dt": 1e-4, "parametrization": {"kind": "arclength"}},
        "compare_spectral": true, "check_diagnostics": true}"#;
    let out = levi(tmp.path(), &["flow", "--out", "a"], Some(cfg));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = json(&tmp.path().join("a/summary.json"));
    assert!(summary["max_relative_hausdorff"].as_f64().unwrap() < 1e-3);
    assert_eq!(
        summary["diagnostics"]["b_dot_nonpositive"],
        Value::Bool(true)
    );

    let out = levi(
        tmp.path(),
        &["diagnose", "--out", "d"],
        Some(r#"{"trajectory": "a/snapshots.csv"}"#),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        json(&tmp.path().join("d/checks.json"))["c0_conserved"],
        Value::Bool(true)
    );
    assert_eq!(
        fs::read(tmp.path().join("a/diagnostics.csv")).unwrap(),
        fs::read(tmp.path().join("d/diagnostics.csv")).unwrap()
    );
}

#[test]
fn parabola_window_stays_below_pi() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"input": {"kind": "parabola", "half_width": 50.0, "markers": 161}, "t_end": 0.02,
        "settings": {"resample_every": 0, "parametrization": {"kind": "arclength"}}, "check_diagnostics": true}"#;
    let out = levi(tmp.path(), &["flow", "--out", "a"], Some(cfg));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = json(&tmp.path().join("a/summary.json"));
    assert!(
        s["diagnostics"]["max_windowed_integral"].as_f64().unwrap() <= std::f64::consts::PI + 0.05
    );

    let out = levi(
        tmp.path(),
        &["diagnose", "--out", "d"],
        Some(r#"{"trajectory": "a/snapshots.csv", "closed": false}"#),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_input_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        levi(tmp.path(), &["flow"], Some(r#"{"t_end": 1.0, "speed": 2}"#))
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        levi(tmp.path(), &["flow", "--config", "missing.json"], None)
            .status
            .code(),
        Some(3)
    );
    let bad_dt =
        r#"{"input": {"kind": "circle", "radius": 1.0, "markers": 64}, "settings": {"dt": -1.0}}"#;
    assert_eq!(
        levi(tmp.path(), &["flow"], Some(bad_dt)).status.code(),
        Some(3)
    );
    assert_eq!(levi(tmp.path(), &["diagnose"], None).status.code(), Some(3));
    assert_eq!(
        levi(tmp.path(), &["orbit"], Some(r#"{"seeds": [[0.0, 0.0]]}"#))
            .status
            .code(),
        Some(3)
    );
    let inside = r#"{"seeds": [[0.2, 0.1]], "potential": {"generators": [[1, 1], [-1, 1], [-1, -1], [1, -1]]}}"#;
    assert_eq!(
        levi(tmp.path(), &["orbit"], Some(inside)).status.code(),
        Some(3)
    );
}

#[test]
fn construct_and_field() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("pts.csv"),
        "x,y\n1,1\n-1,1\n-1,-1\n1,-1\n0,0\n",
    )
    .unwrap();
    let cfg =
        r#"{"potential": {"generators_file": "pts.csv", "J": 32}, "grid": {"nx": 8, "ny": 6}}"#;
    let out = levi(tmp.path(), &["construct", "--out", "a"], Some(cfg));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let spec = json(&tmp.path().join("a/potential.json"));
    assert_eq!(spec["J"], 32);
    assert_eq!(spec["generators"].as_array().unwrap().len(), 5);
    let field = fs::read_to_string(tmp.path().join("a/field.csv")).unwrap();
    assert!(field.starts_with("x,y,tau,U,gradUx,gradUy,v,K\n"));
    assert_eq!(field.lines().count(), 49);

    let cfg = r#"{"potential": {"spec_file": "a/potential.json"}, "grid": {"nx": 3, "ny": 3, "lo": [2, 0], "hi": [4, 2]}}"#;
    assert_eq!(
        levi(tmp.path(), &["field", "--out", "b"], Some(cfg))
            .status
            .code(),
        Some(0)
    );
    assert!(!tmp.path().join("b/potential.json").exists());
    assert!(tmp.path().join("b/levels.svg").exists());

    // a singleton builds the radial potential: U = |x - q0|²
    let cfg = r#"{"potential": {"generators": [[0, 0]]}, "grid": {"nx": 2, "ny": 1, "lo": [1, 0], "hi": [2, 0]}}"#;
    assert_eq!(
        levi(tmp.path(), &["construct", "--out", "c"], Some(cfg))
            .status
            .code(),
        Some(0)
    );
    let rows = fs::read_to_string(tmp.path().join("c/field.csv")).unwrap();
    let u: Vec<f64> = rows
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(u, vec![1.0, 4.0]);
}

#[test]
fn radial_orbit_and_negative_control() {
    let tmp = TempDir::new().unwrap();
    let out = levi(tmp.path(), &["orbit", "--out", "a"], None);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&tmp.path().join("a/verification.json"));
    let period = report["runs"][0]["period"].as_f64().unwrap();
    assert!((period - 2.0 * std::f64::consts::PI / 2f64.sqrt()).abs() < 1e-3);
    assert!(fs::read_to_string(tmp.path().join("a/orbit_000.csv"))
        .unwrap()
        .starts_with("t,x,y,vx,vy,E,U\n"));

    let out = levi(
        tmp.path(),
        &["orbit", "--out", "b"],
        Some(r#"{"settings": {"speed_factor": 1.1}}"#),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        json(&tmp.path().join("b/verification.json"))["passed"],
        Value::Bool(false)
    );
}
