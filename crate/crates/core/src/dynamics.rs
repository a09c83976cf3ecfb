//! Newton's equation `q'' = -∇U(q)`: velocity Verlet integration, level
//! orbit launch, and empirical checks of the level and periodicity properties.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::levi::{Contact, LeviPotential};
use crate::scalar::Real;
use crate::vec2::Vec2;

/// A potential with gradient. `Hint` carries warm-start state between nearby calls.
pub trait Potential<T: Real>: Sync {
    type Hint: Clone + Default + Send;

    fn value_grad(&self, q: Vec2<T>, hint: &mut Self::Hint) -> Result<(T, Vec2<T>)>;
}

impl<T: Real> Potential<T> for LeviPotential<T> {
    type Hint = Option<Contact<T>>;

    fn value_grad(&self, q: Vec2<T>, hint: &mut Self::Hint) -> Result<(T, Vec2<T>)> {
        let e = self.eval_hinted(q, hint)?;
        Ok((e.value, e.grad))
    }
}

/// A closed-form potential given as `q ↦ (U, ∇U)`.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticPotential<F>(pub F);

impl<T: Real, F: Fn(Vec2<T>) -> (T, Vec2<T>) + Sync> Potential<T> for AnalyticPotential<F> {
    type Hint = ();

    fn value_grad(&self, q: Vec2<T>, _: &mut ()) -> Result<(T, Vec2<T>)> {
        Ok((self.0)(q))
    }
}

/// `U = k |q|² / 2`.
pub fn harmonic<T: Real>(
    k: T,
) -> AnalyticPotential<impl Fn(Vec2<T>) -> (T, Vec2<T>) + Sync + Copy> {
    AnalyticPotential(move |q: Vec2<T>| (k * q.norm_sq() * T::lit(0.5), q * k))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct OrbitSample<T> {
    pub t: T,
    pub q: Vec2<T>,
    pub v: Vec2<T>,
    /// `|v|²/2 + U`.
    pub energy: T,
    pub u: T,
}

/// Recorded solution of Newton's equation. Samples are uniform in time.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit<T> {
    pub dt: T,
    pub record_every: usize,
    pub samples: Vec<OrbitSample<T>>,
    /// Set when a gradient evaluation failed; the orbit stops at the last good state.
    pub error: Option<String>,
}

impl<T: Real> Orbit<T> {
    pub fn sample_spacing(&self) -> T {
        self.dt * T::from_usize_exact(self.record_every)
    }

    pub fn duration(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.t)
    }

    /// CSV with header `t,x,y,vx,vy,E,U`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x,y,vx,vy,E,U")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_real(s.t),
                fmt_real(s.q.x),
                fmt_real(s.q.y),
                fmt_real(s.v.x),
                fmt_real(s.v.y),
                fmt_real(s.energy),
                fmt_real(s.u)
            )?;
        }
        Ok(())
    }
}

/// Velocity Verlet (kick, drift, kick) for `n_steps`, keeping every `record_every`-th state.
pub fn integrate<T: Real, P: Potential<T>>(
    potential: &P,
    q0: Vec2<T>,
    v0: Vec2<T>,
    dt: T,
    n_steps: usize,
    record_every: usize,
) -> Result<Orbit<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::Config(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if record_every == 0 {
        return Err(Error::Config("record_every must be at least 1".into()));
    }
    let mut hint = P::Hint::default();
    let (mut u, mut g) = potential.value_grad(q0, &mut hint)?;
    let half = T::lit(0.5);
    let (mut q, mut v) = (q0, v0);
    let sample = |k: usize, q: Vec2<T>, v: Vec2<T>, u: T| OrbitSample {
        t: dt * T::from_usize_exact(k),
        q,
        v,
        energy: v.norm_sq() * half + u,
        u,
    };
    let mut samples = Vec::with_capacity(n_steps / record_every + 2);
    samples.push(sample(0, q, v, u));
    let mut error = None;
    for k in 1..=n_steps {
        let v_half = v - g * (dt * half);
        let q_next = q + v_half * dt;
        match potential.value_grad(q_next, &mut hint) {
            Ok((u1, g1)) if u1.is_finite() && g1.is_finite() => {
                q = q_next;
                u = u1;
                g = g1;
                v = v_half - g * (dt * half);
            }
            Ok(_) => {
                error = Some(format!("non-finite potential at step {k}"));
                break;
            }
            Err(e) => {
                error = Some(format!("step {k}: {e}"));
                break;
            }
        }
        if k % record_every == 0 || k == n_steps {
            samples.push(sample(k, q, v, u));
        }
    }
    Ok(Orbit {
        dt,
        record_every,
        samples,
        error,
    })
}

/// Initial state of the direct level orbit through `q0`: velocity `v J N`.
pub fn level_orbit_ic<T: Real>(
    potential: &LeviPotential<T>,
    q0: Vec2<T>,
) -> Result<(Vec2<T>, Vec2<T>)> {
    let f = potential.eval_fields(q0)?;
    Ok((q0, f.velocity))
}

/// Deviations of a would-be level orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct LevelReport<T> {
    pub u_deviation: T,
    pub speed_deviation: T,
    pub energy_drift: T,
    /// `max(1, |U(0)|, |v(0)|)`.
    pub scale: T,
    /// Relative tolerance applied to both deviations.
    pub tolerance: T,
    pub passed: bool,
}

/// Default relative tolerance for [`verify_level`].
pub const LEVEL_TOLERANCE: f64 = 1e-4;

/// Maximum deviation of `U` and `|v|` from their initial values.
pub fn verify_level<T: Real>(orbit: &Orbit<T>, tolerance: T) -> LevelReport<T> {
    let first = orbit.samples.first().copied();
    let (u0, s0, e0) = first.map_or((T::zero(), T::zero(), T::zero()), |s| {
        (s.u, s.v.norm(), s.energy)
    });
    let scale = T::one().max(u0.abs()).max(s0);
    let (mut du, mut ds, mut de) = (T::zero(), T::zero(), T::zero());
    for s in &orbit.samples {
        du = du.max((s.u - u0).abs());
        ds = ds.max((s.v.norm() - s0).abs());
        de = de.max((s.energy - e0).abs());
    }
    let passed = orbit.error.is_none() && du <= tolerance * scale && ds <= tolerance * scale;
    LevelReport {
        u_deviation: du,
        speed_deviation: ds,
        energy_drift: de,
        scale,
        tolerance,
        passed,
    }
}

/// Relative phase-space radius used by the return detector.
pub const RETURN_RADIUS: f64 = 1e-3;

/// Times at which the state comes back within `1e-3 · scale` of the initial
/// state, each refined by a parabola through the squared distance.
pub fn detect_returns<T: Real>(orbit: &Orbit<T>) -> Vec<T> {
    let Some(first) = orbit.samples.first() else {
        return vec![];
    };
    let scale = T::one().max(first.u.abs()).max(first.v.norm());
    let r2 = (T::lit(RETURN_RADIUS) * scale).powi(2);
    let d2: Vec<T> = orbit
        .samples
        .iter()
        .map(|s| (s.q - first.q).norm_sq() + (s.v - first.v).norm_sq())
        .collect();
    let h = orbit.sample_spacing();
    let mut out = Vec::new();
    // only look for a return once the state has left a wider ball
    let mut away = false;
    for k in 1..d2.len().saturating_sub(1) {
        if d2[k] > r2 * T::lit(16.0) {
            away = true;
        }
        if !away || d2[k] > d2[k - 1] || d2[k] > d2[k + 1] {
            continue;
        }
        let curv = d2[k - 1] - d2[k] * T::lit(2.0) + d2[k + 1];
        let slope = (d2[k + 1] - d2[k - 1]) * T::lit(0.5);
        let (offset, min) = if curv > T::zero() {
            let o = -slope / curv;
            (o, d2[k] + slope * o * T::lit(0.5))
        } else {
            (T::zero(), d2[k])
        };
        if min <= r2 {
            out.push(orbit.samples[k].t + offset * h);
            away = false;
        }
    }
    out
}

/// First return time, if any.
pub fn estimate_period<T: Real>(orbit: &Orbit<T>) -> Option<T> {
    detect_returns(orbit).first().copied()
}

/// Settings for a verified level-orbit run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    bound(serialize = "T: Real", deserialize = "T: Real"),
    default,
    deny_unknown_fields
)]
pub struct OrbitSettings<T> {
    pub dt: T,
    /// Integration length in units of the expected period.
    pub periods: T,
    pub record_every: usize,
    pub tolerance: T,
    /// Reruns at half the step when verification fails.
    pub max_halvings: usize,
    /// Multiplies the launch velocity; anything but 1 gives a non-level orbit.
    pub speed_factor: T,
}

impl<T: Real> Default for OrbitSettings<T> {
    fn default() -> Self {
        OrbitSettings {
            dt: T::lit(1e-4),
            periods: T::lit(3.3),
            record_every: 10,
            tolerance: T::lit(LEVEL_TOLERANCE),
            max_halvings: 1,
            speed_factor: T::one(),
        }
    }
}

/// Outcome of [`run_level_orbit`].
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct LevelOrbitRun<T> {
    pub q0: Vec2<T>,
    pub v0: Vec2<T>,
    pub tau: T,
    pub dt: T,
    pub report: LevelReport<T>,
    /// Level-curve perimeter divided by the level speed.
    pub expected_period: T,
    pub period: Option<T>,
    pub returns: usize,
    pub error: Option<String>,
    #[serde(skip)]
    pub orbit: Orbit<T>,
}

/// Launches, integrates and verifies the level orbit through `q0`, halving `dt` on failure.
pub fn run_level_orbit<T: Real>(
    potential: &LeviPotential<T>,
    q0: Vec2<T>,
    settings: &OrbitSettings<T>,
) -> Result<LevelOrbitRun<T>> {
    if !(settings.periods > T::zero()) {
        return Err(Error::Config("periods must be positive".into()));
    }
    let (q0, v0) = level_orbit_ic(potential, q0)?;
    let v0 = v0 * settings.speed_factor;
    let tau = potential.tau(q0)?;
    let expected_period = potential.level_period(tau);
    let mut dt = settings.dt;
    let mut attempt = 0;
    loop {
        let steps = (settings.periods * expected_period / dt)
            .ceil()
            .to_usize()
            .unwrap_or(0);
        let orbit = integrate(potential, q0, v0, dt, steps, settings.record_every)?;
        let report = verify_level(&orbit, settings.tolerance);
        if report.passed || attempt >= settings.max_halvings {
            let returns = detect_returns(&orbit);
            return Ok(LevelOrbitRun {
                q0,
                v0,
                tau,
                dt,
                report,
                expected_period,
                period: returns.first().copied(),
                returns: returns.len(),
                error: orbit.error.clone(),
                orbit,
            });
        }
        attempt += 1;
        dt = dt * T::lit(0.5);
    }
}
