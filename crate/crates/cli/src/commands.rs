use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use levi_core::curve::Snapshot;
use levi_core::diagnostics::{
    closed_diagnostics, open_diagnostics, open_summary, write_open_csv, DiagnosticTolerances,
};
use levi_core::dynamics::{run_level_orbit, LevelOrbitRun};
use levi_core::levi::write_field_csv;
use levi_core::{hausdorff, run_icf, FlowTrajectory, LeviPotential, MarkerCurve, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{self, ConstructRun, DiagnoseRun, FlowRun, OrbitRun};
use crate::{CliError, Global};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<(), CliError> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let mut out = create(dir, name)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// JSON numbers cannot be NaN or infinite; those become `null`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn flow(g: &Global) -> Result<(), CliError> {
    let run: FlowRun = config::load(g.config.as_deref())?;
    let curve = run.input.curve()?;
    let traj = run_icf(&curve, run.t_end, &run.settings)?;

    let mut out = create(&g.out, "snapshots.csv")?;
    traj.write_csv(&mut out)?;
    out.flush()?;
    write_text(&g.out, "flow.svg", &traj.to_svg(8))?;

    let mut summary = serde_json::Map::new();
    summary.insert("t_end".into(), num(run.t_end));
    summary.insert("t_reached".into(), num(traj.last().t));
    summary.insert("snapshots".into(), json!(traj.snapshots.len()));
    summary.insert(
        "initial_length".into(),
        num(traj.snapshots[0].curve.length()),
    );
    summary.insert("final_length".into(), num(traj.last().curve.length()));
    summary.insert(
        "singularity".into(),
        match &traj.singularity {
            Some(s) => json!({ "t": num(s.t), "error": s.error.to_string() }),
            None => Value::Null,
        },
    );

    let support = run.input.support();
    if let Some(h) = &support {
        if run.t_end < 0.0 {
            let t_star = h.blowup_time_backward().map(|b| b.finite());
            summary.insert(
                "spectral_blowup_time".into(),
                match t_star {
                    Ok(Some(t)) => num(t),
                    _ => Value::Null,
                },
            );
        }
        if run.compare_spectral {
            let mut out = create(&g.out, "hausdorff.csv")?;
            writeln!(out, "t,distance,diameter")?;
            let mut worst: f64 = 0.0;
            for s in &traj.snapshots {
                let exact = h.evolve(s.t).curve(4096)?;
                let (d, diam) = (hausdorff(&s.curve, &exact), exact.diameter());
                worst = worst.max(d / diam);
                writeln!(
                    out,
                    "{},{},{}",
                    levi_core::io::fmt_real(s.t),
                    levi_core::io::fmt_real(d),
                    levi_core::io::fmt_real(diam)
                )?;
            }
            out.flush()?;
            summary.insert("max_relative_hausdorff".into(), num(worst));
        }
    }

    let checks_ok;
    let rescaled = traj.rescale();
    if curve.is_closed() {
        match closed_diagnostics(&rescaled) {
            Ok(series) => {
                let mut out = create(&g.out, "diagnostics.csv")?;
                series.write_csv(&mut out)?;
                out.flush()?;
                let checks = series.checks(&DiagnosticTolerances::default());
                checks_ok = checks.passed();
                summary.insert(
                    "diagnostics".into(),
                    serde_json::to_value(&checks).expect("plain data"),
                );
            }
            Err(e) => {
                checks_ok = false;
                summary.insert("diagnostics".into(), json!({ "error": e.to_string() }));
            }
        }
    } else {
        match open_diagnostics(&rescaled, run.window, run.bound_tol) {
            Ok(records) => {
                let mut out = create(&g.out, "open_diagnostics.csv")?;
                write_open_csv(&records, &mut out)?;
                out.flush()?;
                let s = open_summary(&records, run.window);
                checks_ok = s.within_bound;
                summary.insert(
                    "diagnostics".into(),
                    serde_json::to_value(&s).expect("plain data"),
                );
            }
            Err(e) => {
                checks_ok = false;
                summary.insert("diagnostics".into(), json!({ "error": e.to_string() }));
            }
        }
    }
    write_json(&g.out, "summary.json", &summary)?;

    if let Some(s) = &traj.singularity {
        eprintln!("flow stopped at t = {}: {}", s.t, s.error);
        if !g.allow_singularity {
            return Err(CliError::Singularity(format!(
                "at t = {}: {}",
                s.t, s.error
            )));
        }
    }
    if run.check_diagnostics && !checks_ok {
        return Err(CliError::Check(
            "flow diagnostics out of tolerance, see summary.json".into(),
        ));
    }
    println!(
        "flow reached t = {} with {} snapshots",
        traj.last().t,
        traj.snapshots.len()
    );
    Ok(())
}

fn grid_box(p: &LeviPotential<f64>, grid: &config::GridSpec) -> (Vec2<f64>, Vec2<f64>) {
    let gens = p.generators();
    let (mut lo, mut hi) = (
        Vec2::new(f64::INFINITY, f64::INFINITY),
        Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for q in gens {
        lo = Vec2::new(lo.x.min(q.x), lo.y.min(q.y));
        hi = Vec2::new(hi.x.max(q.x), hi.y.max(q.y));
    }
    let mid = (lo + hi) * 0.5;
    let half = ((hi.x - lo.x).max(hi.y - lo.y) * 0.5 + 1.0) * 3.0;
    let lo = grid
        .lo
        .map_or(mid - Vec2::new(half, half), |[x, y]| Vec2::new(x, y));
    let hi = grid
        .hi
        .map_or(mid + Vec2::new(half, half), |[x, y]| Vec2::new(x, y));
    (lo, hi)
}

/// `construct` writes the potential file as well; `field` only samples.
pub fn construct(g: &Global, write_spec: bool) -> Result<(), CliError> {
    let run: ConstructRun = config::load(g.config.as_deref())?;
    if run.grid.nx == 0 || run.grid.ny == 0 {
        return Err(CliError::Input("grid sizes must be positive".into()));
    }
    let spec = run.potential.spec()?;
    let p: LeviPotential<f64> = spec.build()?;
    if write_spec {
        write_json(&g.out, "potential.json", &spec)?;
    }
    let (lo, hi) = grid_box(&p, &run.grid);
    let rows = p.grid_field(lo, hi, run.grid.nx, run.grid.ny);
    let mut out = create(&g.out, "field.csv")?;
    write_field_csv(&rows, &mut out)?;
    out.flush()?;
    write_text(&g.out, "levels.svg", &p.to_svg(&run.levels(), 512))?;
    println!("sampled {} grid points", rows.len());
    Ok(())
}

fn seeds(run: &OrbitRun, p: &LeviPotential<f64>, seed: u64) -> Result<Vec<Vec2<f64>>, CliError> {
    let mut out: Vec<Vec2<f64>> = run.seeds.iter().map(|&[x, y]| Vec2::new(x, y)).collect();
    if let Some(r) = &run.random {
        if !(r.lo[0] < r.hi[0] && r.lo[1] < r.hi[1] && r.tau_range[0] < r.tau_range[1]) {
            return Err(CliError::Input(
                "random seed box and tau_range must be increasing".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut found, mut tries) = (0, 0usize);
        while found < r.count {
            tries += 1;
            if tries > 10_000 * r.count.max(1) {
                return Err(CliError::Input(
                    "random seeds: too few points with tau in range".into(),
                ));
            }
            let x = Vec2::new(
                rng.gen_range(r.lo[0]..r.hi[0]),
                rng.gen_range(r.lo[1]..r.hi[1]),
            );
            let tau = p.tau(x)?;
            if tau >= r.tau_range[0] && tau <= r.tau_range[1] {
                out.push(x);
                found += 1;
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Input("no seed points".into()));
    }
    Ok(out)
}

fn run_json(k: usize, run: &LevelOrbitRun<f64>) -> Value {
    let r = &run.report;
    json!({
        "index": k,
        "q0": [run.q0.x, run.q0.y],
        "v0": [run.v0.x, run.v0.y],
        "tau": num(run.tau),
        "dt": run.dt,
        "u_deviation": num(r.u_deviation),
        "speed_deviation": num(r.speed_deviation),
        "energy_drift": num(r.energy_drift),
        "scale": num(r.scale),
        "level_passed": r.passed,
        "expected_period": num(run.expected_period),
        "period": run.period.map_or(Value::Null, num),
        "returns": run.returns,
        "error": run.error,
    })
}

pub fn orbit(g: &Global) -> Result<(), CliError> {
    let run: OrbitRun = config::load(g.config.as_deref())?;
    let s = &run.settings;
    if !(s.dt > 0.0 && s.periods > 0.0 && s.tolerance > 0.0 && s.speed_factor.is_finite())
        || s.record_every == 0
    {
        return Err(CliError::Input(
            "dt, periods, tolerance and record_every must be positive".into(),
        ));
    }
    let p: LeviPotential<f64> = run.potential.spec()?.build()?;
    let points = seeds(&run, &p, g.seed)?;
    let runs = points
        .par_iter()
        .map(|&x| run_level_orbit(&p, x, &run.settings))
        .collect::<Result<Vec<_>, _>>()?;

    for (k, r) in runs.iter().take(run.max_trajectory_files).enumerate() {
        let mut out = create(&g.out, &format!("orbit_{k:03}.csv"))?;
        r.orbit.write_csv(&mut out)?;
        out.flush()?;
    }
    let ok = |r: &LevelOrbitRun<f64>| r.report.passed && r.period.is_some();
    let failed = runs.iter().filter(|r| !ok(r)).count();
    write_json(
        &g.out,
        "verification.json",
        &json!({
            "settings": run.settings,
            "orbits": runs.len(),
            "failed": failed,
            "passed": failed == 0,
            "runs": runs.iter().enumerate().map(|(k, r)| run_json(k, r)).collect::<Vec<_>>(),
        }),
    )?;
    println!("{} of {} orbits verified", runs.len() - failed, runs.len());
    if failed > 0 {
        return Err(CliError::Check(format!(
            "{failed} orbit(s) failed verification"
        )));
    }
    Ok(())
}

/// Regroups a `t,index,x,y,K` snapshot CSV into snapshots.
fn read_snapshots(path: &Path, closed: bool) -> Result<FlowTrajectory<f64>, CliError> {
    #[derive(Deserialize)]
    struct Row {
        t: f64,
        #[allow(dead_code)]
        index: usize,
        x: f64,
        y: f64,
    }
    let bad = |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(&e))?;
    let mut groups: Vec<(f64, Vec<Vec2<f64>>)> = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| bad(&e))?;
        match groups.last_mut() {
            Some((t, pts)) if *t == row.t => pts.push(Vec2::new(row.x, row.y)),
            _ => groups.push((row.t, vec![Vec2::new(row.x, row.y)])),
        }
    }
    if groups.is_empty() {
        return Err(bad(&"no snapshots"));
    }
    let dt = if groups.len() > 1 {
        (groups[1].0 - groups[0].0).abs()
    } else {
        0.0
    };
    let snapshots = groups
        .into_iter()
        .map(|(t, pts)| {
            Ok(Snapshot {
                t,
                curve: MarkerCurve::new(pts, closed)?,
            })
        })
        .collect::<Result<Vec<_>, levi_core::Error>>()?;
    Ok(FlowTrajectory {
        snapshots,
        singularity: None,
        dt,
    })
}

pub fn diagnose(g: &Global) -> Result<(), CliError> {
    let run: DiagnoseRun = config::load(g.config.as_deref())?;
    let path = run
        .trajectory
        .as_deref()
        .ok_or_else(|| CliError::Input("diagnose needs a trajectory path".into()))?;
    let mut traj = read_snapshots(path, run.closed)?;
    if run.rescale {
        traj = traj.rescale();
    }
    if run.closed {
        let series = closed_diagnostics(&traj)?;
        let mut out = create(&g.out, "diagnostics.csv")?;
        series.write_csv(&mut out)?;
        out.flush()?;
        let checks = series.checks(&run.tolerances());
        write_json(&g.out, "checks.json", &checks)?;
        println!(
            "closed diagnostics over {} snapshots: {}",
            series.len(),
            if checks.passed() { "pass" } else { "fail" }
        );
        if !checks.passed() {
            return Err(CliError::Check(
                "closed-curve functionals out of tolerance, see checks.json".into(),
            ));
        }
    } else {
        let records = open_diagnostics(&traj, run.window, run.bound_tol)?;
        let mut out = create(&g.out, "open_diagnostics.csv")?;
        write_open_csv(&records, &mut out)?;
        out.flush()?;
        let summary = open_summary(&records, run.window);
        write_json(&g.out, "checks.json", &summary)?;
        println!(
            "open diagnostics over {} snapshots: max windowed integral {}",
            records.len(),
            summary.max_windowed_integral
        );
        if !summary.within_bound {
            return Err(CliError::Check(
                "windowed integral curvature exceeds the bound".into(),
            ));
        }
    }
    Ok(())
}
