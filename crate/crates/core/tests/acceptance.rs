//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use levi_core::diagnostics::{closed_diagnostics, open_diagnostics, DiagnosticTolerances};
use levi_core::dynamics::{
    estimate_period, integrate, level_orbit_ic, run_level_orbit, verify_level, OrbitSettings,
};
use levi_core::levi::{build_levi, LeviConfig, LeviPotential, Profile};
use levi_core::{
    hausdorff, run_icf, ConvexBody, FlowConfig, FourierSupport, MarkerCurve, Parametrization, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, pass: bool, elapsed: Duration, limit: f64, detail: String) {
    let secs = elapsed.as_secs_f64();
    let ok = pass && secs < limit;
    println!(
        "criterion {n}: {} {detail} [{secs:.2}s / {limit}s]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail} in {secs:.2}s");
}

fn oval() -> FourierSupport<f64> {
    FourierSupport::cosine_modes(1.0, &[(2, 0.1)])
}

fn square() -> LeviPotential<f64> {
    let pts = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)].map(|(x, y)| Vec2::new(x, y));
    build_levi(
        &ConvexBody::from_points(pts.to_vec()).unwrap(),
        Profile::FlatExp,
        LeviConfig::default(),
    )
    .unwrap()
}

fn lagrangian() -> FlowConfig<f64> {
    FlowConfig {
        dt: 1e-4,
        parametrization: Parametrization::Arclength,
        ..FlowConfig::default()
    }
}

#[test]
fn criterion_01_circle() {
    let start = Instant::now();
    let t = 2f64.ln();
    let spectral = FourierSupport::disk(Vec2::zero(), 1.0).evolve(t);
    let spectral_err = (spectral.z0 - 2.0).abs().max(
        spectral
            .modes
            .iter()
            .flatten()
            .fold(0.0, |m: f64, c| m.max(c.abs())),
    );
    let circle = MarkerCurve::circle(Vec2::zero(), 1.0, 256).unwrap();
    let traj = run_icf(&circle, t, &lagrangian()).unwrap();
    let lag_err = traj
        .last()
        .curve
        .points()
        .iter()
        .fold(0.0f64, |m, p| m.max((p.norm() - 2.0).abs()));
    let pass = traj.singularity.is_none() && spectral_err <= 1e-12 && lag_err <= 5e-4;
    report(
        1,
        pass,
        start.elapsed(),
        5.0,
        format!("spectral radius error {spectral_err:.2e}, marker radius error {lag_err:.2e}"),
    );
}

#[test]
fn criterion_02_length_law() {
    let start = Instant::now();
    let traj = run_icf(&oval().curve(256).unwrap(), 1.0, &lagrangian()).unwrap();
    let ratio = traj.last().curve.length() / traj.snapshots[0].curve.length();
    let rel = (ratio / E - 1.0).abs();
    let pass = traj.singularity.is_none() && rel <= 1e-3;
    report(
        2,
        pass,
        start.elapsed(),
        10.0,
        format!("length ratio {ratio:.6}, relative error {rel:.2e}"),
    );
}

#[test]
fn criterion_03_cross_validation() {
    let start = Instant::now();
    let h = oval();
    let traj = run_icf(&h.curve(256).unwrap(), 1.0, &lagrangian()).unwrap();
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for t in [0.25, 0.5, 1.0] {
        let snap = traj.at(t);
        assert!((snap.t - t).abs() < 1e-9);
        let exact = h.evolve(t).curve(8192).unwrap();
        let d = hausdorff(&snap.curve, &exact);
        let rel = d / exact.diameter();
        worst = worst.max(rel);
        detail.push(format!("t={t}: {d:.2e}"));
    }
    let pass = traj.singularity.is_none() && worst < 1e-3;
    report(
        3,
        pass,
        start.elapsed(),
        30.0,
        format!("{} (worst {worst:.2e} of diameter)", detail.join(", ")),
    );
}

#[test]
fn criterion_04_mode_decay() {
    let start = Instant::now();
    let modes: Vec<[f64; 2]> = (1..=8)
        .map(|j| [0.3 / (j * j) as f64, -0.2 / (j * j * j) as f64])
        .collect();
    let h = FourierSupport::new(1.5, modes).unwrap();
    let t = 0.7;
    let g = h.evolve(t);
    let mut worst: f64 = ((g.z0 / h.z0) / t.exp() - 1.0).abs();
    for j in 1..=8 {
        let expect = ((1.0 - (j * j) as f64) * t).exp();
        for c in 0..2 {
            worst = worst.max(((g.mode(j)[c] / h.mode(j)[c]) / expect - 1.0).abs());
        }
    }
    report(
        4,
        worst <= 1e-12,
        start.elapsed(),
        1.0,
        format!("worst relative ratio error {worst:.2e}"),
    );
}

#[test]
fn criterion_05_backward_blowup() {
    let start = Instant::now();
    let exact = 0.3f64.ln() / 4.0;
    let h = oval();
    let spectral = h.blowup_time_backward().unwrap().finite().unwrap();
    let traj = run_icf(&h.curve(256).unwrap(), -0.5, &FlowConfig::default()).unwrap();
    let fail = traj.singularity.as_ref().map(|s| s.t);
    let pass = (spectral - exact).abs() <= 1e-6 && fail.is_some_and(|t| (t - exact).abs() <= 5e-2);
    report(
        5,
        pass,
        start.elapsed(),
        30.0,
        format!("exact {exact:.6}, spectral {spectral:.9}, marker failure at {fail:?}"),
    );
}

#[test]
fn criterion_06_monotone_functionals() {
    let start = Instant::now();
    let cfg = FlowConfig {
        snapshot_every: 100,
        ..lagrangian()
    };
    let traj = run_icf(&oval().curve(256).unwrap(), 1.0, &cfg).unwrap();
    let series = closed_diagnostics(&traj.rescale()).unwrap();
    let checks = series.checks(&DiagnosticTolerances::default());
    let pass = traj.singularity.is_none()
        && checks.c0_conserved
        && checks.b_dot_nonpositive
        && checks.b_convex;
    report(
        6,
        pass,
        start.elapsed(),
        10.0,
        format!(
            "c0 spread {:.2e}, max b_dot {:.2e}, min second difference {:.2e}",
            checks.c0_max_deviation, checks.b_dot_max_interior, checks.b_second_difference_min
        ),
    );
}

#[test]
fn criterion_07_open_curve() {
    let start = Instant::now();
    let exact = 2.0 * 50f64.atan();
    let fine = MarkerCurve::parabola(50.0, 2001)
        .unwrap()
        .integral_curvature()
        .unwrap();
    let static_ok = (fine - exact).abs() <= 1e-3 && fine <= PI;
    let cfg = FlowConfig {
        resample_every: 0,
        snapshot_every: 100,
        ..lagrangian()
    };
    let traj = run_icf(&MarkerCurve::parabola(50.0, 161).unwrap(), 0.1, &cfg).unwrap();
    let records = open_diagnostics(&traj.rescale(), 50.0, 0.05).unwrap();
    let max_window = records
        .iter()
        .map(|r| r.windowed_integral)
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = static_ok
        && traj.singularity.is_none()
        && (traj.last().t - 0.1).abs() < 1e-9
        && records.iter().all(|r| r.within_bound && !r.clipped);
    report(
        7,
        pass,
        start.elapsed(),
        60.0,
        format!(
            "static turning {fine:.6} (exact {exact:.6}), max windowed integral {max_window:.4}"
        ),
    );
}

#[test]
fn criterion_08_square_sweep() {
    let start = Instant::now();
    let p = square();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut seeds = Vec::new();
    while seeds.len() < 100 {
        let x = Vec2::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
        let tau = p.tau(x).unwrap();
        if (0.25..=1.5).contains(&tau) {
            seeds.push(x);
        }
    }
    let settings = OrbitSettings {
        tolerance: 1e-3,
        ..OrbitSettings::default()
    };
    let (mut passed, mut worst_u, mut worst_s, mut worst_period) = (0, 0.0f64, 0.0f64, 0.0f64);
    for x in &seeds {
        let run = run_level_orbit(&p, *x, &settings).unwrap();
        let r = run.report;
        worst_u = worst_u.max(r.u_deviation / r.scale);
        worst_s = worst_s.max(r.speed_deviation / r.scale);
        if let Some(t) = run.period {
            worst_period = worst_period.max((t / run.expected_period - 1.0).abs());
        }
        if r.passed && run.period.is_some_and(f64::is_finite) && run.returns >= 3 {
            passed += 1;
        }
    }
    report(
        8,
        passed == seeds.len(),
        start.elapsed(),
        600.0,
        format!(
            "{passed}/100 orbits verified, worst U deviation {worst_u:.2e}, speed {worst_s:.2e}, period vs perimeter/v {worst_period:.2e}"
        ),
    );
}

#[test]
fn criterion_09_field_consistency() {
    let start = Instant::now();
    let p = square();
    let (mut worst_fd, mut worst_speed, mut used) = (0.0f64, 0.0f64, 0);
    let eps = 1e-5;
    for i in 0..50 {
        for j in 0..50 {
            let x = Vec2::new(
                -14.0 + 28.0 * i as f64 / 49.0,
                -14.0 + 28.0 * j as f64 / 49.0,
            );
            let e = p.eval(x).unwrap();
            if !(0.05..=3.0).contains(&e.tau) {
                continue;
            }
            used += 1;
            let u = |d: Vec2<f64>| p.eval_u(x + d).unwrap();
            let fd = Vec2::new(
                (u(Vec2::new(eps, 0.0)) - u(Vec2::new(-eps, 0.0))) / (2.0 * eps),
                (u(Vec2::new(0.0, eps)) - u(Vec2::new(0.0, -eps))) / (2.0 * eps),
            );
            worst_fd = worst_fd.max(fd.distance(e.grad) / e.grad.norm());
            let v = p.level_speed(e.tau);
            worst_speed = worst_speed.max((v * v * e.curvature / e.grad.norm() - 1.0).abs());
        }
    }
    let pass = used > 1000 && worst_fd < 1e-4 && worst_speed < 1e-8;
    report(
        9,
        pass,
        start.elapsed(),
        60.0,
        format!("{used} grid points, worst gradient error {worst_fd:.2e}, worst v²K/|∇U| - 1 {worst_speed:.2e}"),
    );
}

#[test]
fn criterion_10_flow_correspondence() {
    let start = Instant::now();
    let p = LeviPotential::from_support(oval(), Profile::FlatExp, LeviConfig::default(), vec![])
        .unwrap();
    let settings = OrbitSettings {
        periods: 1.2,
        ..OrbitSettings::default()
    };
    let run = run_level_orbit(&p, Vec2::new(1.6, 0.4), &settings).unwrap();
    let period = run.period.expect("period detected");
    let picks: Vec<Vec2<f64>> = (0..8)
        .map(|k| {
            let target = period * k as f64 / 8.0;
            run.orbit
                .samples
                .iter()
                .min_by(|a, b| (a.t - target).abs().total_cmp(&(b.t - target).abs()))
                .unwrap()
                .q
        })
        .collect();
    let images: Vec<Vec2<f64>> = picks.iter().map(|&x| p.flow_phi(x, 0.3).unwrap()).collect();
    let values: Vec<f64> = images.iter().map(|&y| p.eval_u(y).unwrap()).collect();
    let spread = values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let pushed = run_level_orbit(&p, images[0], &settings).unwrap();
    let off_orbit = images
        .iter()
        .map(|y| {
            pushed
                .orbit
                .samples
                .iter()
                .map(|s| s.q.distance(*y))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    let pass = run.report.passed && spread < 1e-6 && pushed.report.passed && off_orbit < 1e-3;
    report(
        10,
        pass,
        start.elapsed(),
        60.0,
        format!(
            "U spread of images {spread:.2e}, pushed orbit U deviation {:.2e}, images within {off_orbit:.2e} of pushed orbit",
            pushed.report.u_deviation
        ),
    );
}

#[test]
fn criterion_11_radial_oracle() {
    let start = Instant::now();
    let p = LeviPotential::radial(Vec2::zero(), Profile::FlatExp, LeviConfig::default());
    let (q0, v0) = level_orbit_ic(&p, Vec2::new(1.0, 0.0)).unwrap();
    let orbit = integrate(&p, q0, v0, 1e-4, 60_000, 10).unwrap();
    let omega = orbit.samples.iter().fold(0.0f64, |m, s| {
        m.max((s.v.norm() / s.q.norm() - 2f64.sqrt()).abs())
    });
    let period = estimate_period(&orbit).unwrap_or(f64::NAN);
    let expect = 2.0 * PI / 2f64.sqrt();
    let pass = omega < 1e-3 && (period - expect).abs() < 1e-3 && verify_level(&orbit, 1e-4).passed;
    report(
        11,
        pass,
        start.elapsed(),
        5.0,
        format!("angular speed error {omega:.2e}, period {period:.6} (exact {expect:.6})"),
    );
}
