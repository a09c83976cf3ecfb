//! Monotone and conserved functionals of rescaled flow trajectories.
//!
//! All quantities are computed on rescaled snapshots `σ_t = e^{-t} γ_t` with
//! `a_t = 1 / K_{σ_t}`, integrating in arclength by the trapezoid rule over
//! the marker polygon.

use std::io::Write;

use serde::Serialize;

use crate::curve::{FlowTrajectory, MarkerCurve};
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::scalar::Real;

/// Per-snapshot functionals of a closed convex rescaled trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticSeries<T> {
    pub times: Vec<T>,
    /// `∫ 1/a ds`, the total turning; `2π` on embedded convex curves.
    pub c0: Vec<T>,
    /// `∫ ln a ds`.
    pub b: Vec<T>,
    /// Centered differences of `b` in time (one-sided at the ends).
    pub b_dot: Vec<T>,
    /// `-∫ (∂s a)² ds`, the same derivative from the evolution equation.
    pub b_dot_analytic: Vec<T>,
    /// Undivided second differences `b[k+1] - 2 b[k] + b[k-1]`; zero at the ends.
    pub b_second_difference: Vec<T>,
    pub length: Vec<T>,
    pub min_a: Vec<T>,
    pub max_a: Vec<T>,
    /// `(max a - min a)²`, bounded by `-length · b_dot` at every snapshot.
    pub spread_sq: Vec<T>,
    /// Largest `min a` over the run.
    pub c1: T,
}

/// Tolerances for [`DiagnosticSeries::checks`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticTolerances<T> {
    pub c0: T,
    pub b_dot: T,
    pub b_second: T,
    /// Relative slack on the spread bound.
    pub witness: T,
    /// The two `ḃ` estimates must agree within `consistency · Δt · scale`.
    pub consistency: T,
    /// Spatial variation of `a` below which a snapshot counts as round.
    pub circular: T,
}

impl<T: Real> Default for DiagnosticTolerances<T> {
    fn default() -> Self {
        DiagnosticTolerances {
            c0: T::lit(1e-3),
            b_dot: T::lit(1e-6),
            b_second: T::lit(1e-6),
            witness: T::lit(1e-3),
            consistency: T::lit(5.0),
            circular: T::lit(1e-6),
        }
    }
}

/// Pass/fail flags with the worst observed values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedChecks {
    pub c0_conserved: bool,
    pub c0_max_deviation: f64,
    pub b_dot_nonpositive: bool,
    pub b_dot_max_interior: f64,
    pub b_convex: bool,
    pub b_second_difference_min: f64,
    pub witness_holds: bool,
    pub b_dot_consistent: bool,
    pub b_dot_max_mismatch: f64,
    /// Every snapshot has `a` spatially constant within tolerance.
    pub circular: bool,
    pub c1: f64,
}

impl ClosedChecks {
    pub fn passed(&self) -> bool {
        self.c0_conserved
            && self.b_dot_nonpositive
            && self.b_convex
            && self.witness_holds
            && self.b_dot_consistent
    }
}

fn positive_curvatures<T: Real>(curve: &MarkerCurve<T>, snapshot: usize) -> Result<Vec<T>> {
    let k = curve.curvatures()?;
    if let Some(i) = k.iter().position(|&k| !(k > T::zero() && k.is_finite())) {
        return Err(Error::Precondition(format!(
            "snapshot {snapshot} is not convex: K = {} at marker {i}",
            k[i]
        )));
    }
    Ok(k)
}

/// Diagnostic series of a closed convex trajectory that has already been rescaled.
pub fn closed_diagnostics<T: Real>(traj: &FlowTrajectory<T>) -> Result<DiagnosticSeries<T>> {
    let n = traj.snapshots.len();
    let half = T::lit(0.5);
    let mut out = DiagnosticSeries {
        times: Vec::with_capacity(n),
        c0: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        b_dot: vec![T::zero(); n],
        b_dot_analytic: Vec::with_capacity(n),
        b_second_difference: vec![T::zero(); n],
        length: Vec::with_capacity(n),
        min_a: Vec::with_capacity(n),
        max_a: Vec::with_capacity(n),
        spread_sq: Vec::with_capacity(n),
        c1: T::neg_infinity(),
    };
    for (idx, snap) in traj.snapshots.iter().enumerate() {
        if !snap.curve.is_closed() {
            return Err(Error::Precondition(format!(
                "snapshot {idx} is not a closed curve"
            )));
        }
        let k = positive_curvatures(&snap.curve, idx)?;
        let a: Vec<T> = k.iter().map(|k| k.recip()).collect();
        let chords = snap.curve.chord_lengths();
        let m = a.len();
        let (mut c0, mut b, mut grad) = (T::zero(), T::zero(), T::zero());
        for (i, &h) in chords.iter().enumerate() {
            let j = (i + 1) % m;
            c0 = c0 + (k[i] + k[j]) * half * h;
            b = b + (a[i].ln() + a[j].ln()) * half * h;
            let da = a[j] - a[i];
            grad = grad + da * da / h;
        }
        let (lo, hi) = a
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &a| {
                (lo.min(a), hi.max(a))
            });
        out.times.push(snap.t);
        out.c0.push(c0);
        out.b.push(b);
        out.b_dot_analytic.push(-grad);
        out.length.push(snap.curve.length());
        out.min_a.push(lo);
        out.max_a.push(hi);
        out.spread_sq.push((hi - lo) * (hi - lo));
        out.c1 = out.c1.max(lo);
    }
    if n >= 2 {
        let (t, b) = (&out.times, &out.b);
        out.b_dot[0] = (b[1] - b[0]) / (t[1] - t[0]);
        out.b_dot[n - 1] = (b[n - 1] - b[n - 2]) / (t[n - 1] - t[n - 2]);
        for k in 1..n - 1 {
            out.b_dot[k] = (b[k + 1] - b[k - 1]) / (t[k + 1] - t[k - 1]);
            out.b_second_difference[k] = b[k + 1] - (b[k] + b[k]) + b[k - 1];
        }
    }
    Ok(out)
}

impl<T: Real> DiagnosticSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn checks(&self, tol: &DiagnosticTolerances<T>) -> ClosedChecks {
        let n = self.len();
        let interior = 1..n.saturating_sub(1);
        let c0_dev = self
            .c0
            .iter()
            .map(|&c| (c - self.c0[0]).abs())
            .fold(T::zero(), T::max);
        let b_dot_max = interior
            .clone()
            .map(|k| self.b_dot[k])
            .fold(T::neg_infinity(), T::max);
        let b2_min = interior
            .clone()
            .map(|k| self.b_second_difference[k])
            .fold(T::infinity(), T::min);
        let witness_holds = (0..n).all(|k| {
            let bound = -self.length[k] * self.b_dot_analytic[k];
            self.spread_sq[k] <= bound * (T::one() + tol.witness) + T::epsilon()
        });
        let mut mismatch = T::zero();
        let mut consistent = true;
        for k in interior.clone() {
            let dt = (self.times[k + 1] - self.times[k - 1]).abs() * T::lit(0.5);
            let scale = T::one().max(self.b_dot_analytic[k].abs());
            let diff = (self.b_dot[k] - self.b_dot_analytic[k]).abs();
            mismatch = mismatch.max(diff / scale);
            consistent &= diff <= tol.consistency * dt * scale;
        }
        let circular = (0..n).all(|k| self.max_a[k] - self.min_a[k] < tol.circular);
        let (b_dot_max, b2_min) = if n < 3 {
            (T::zero(), T::zero())
        } else {
            (b_dot_max, b2_min)
        };
        ClosedChecks {
            c0_conserved: c0_dev <= tol.c0,
            c0_max_deviation: c0_dev.as_f64(),
            b_dot_nonpositive: b_dot_max <= tol.b_dot,
            b_dot_max_interior: b_dot_max.as_f64(),
            b_convex: b2_min >= -tol.b_second,
            b_second_difference_min: b2_min.as_f64(),
            witness_holds,
            b_dot_consistent: consistent,
            b_dot_max_mismatch: mismatch.as_f64(),
            circular,
            c1: self.c1.as_f64(),
        }
    }

    /// CSV with header `t,c0,b,b_dot,length,min_a,max_a`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,c0,b,b_dot,length,min_a,max_a")?;
        for k in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_real(self.times[k]),
                fmt_real(self.c0[k]),
                fmt_real(self.b[k]),
                fmt_real(self.b_dot[k]),
                fmt_real(self.length[k]),
                fmt_real(self.min_a[k]),
                fmt_real(self.max_a[k])
            )?;
        }
        Ok(())
    }
}

/// Windowed turning of one open rescaled snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpenRecord<T> {
    pub t: T,
    /// `∫ K ds` over the arclength window `[-S, S]` around the middle marker.
    pub windowed_integral: T,
    /// The window ran past an end of the curve and was clipped.
    pub clipped: bool,
    pub within_bound: bool,
    /// `A_t = ∫_0^t a dt'` per marker, trapezoidal over the snapshot times.
    pub accumulated_a: Vec<T>,
}

/// Windowed turning and accumulated inverse curvature of an open rescaled
/// trajectory. The markers must not be redistributed during the run, so that
/// marker index is a common parameter for all snapshots.
pub fn open_diagnostics<T: Real>(
    traj: &FlowTrajectory<T>,
    window: T,
    bound_tol: T,
) -> Result<Vec<OpenRecord<T>>> {
    if !(window > T::zero()) {
        return Err(Error::Config(format!(
            "window half-width must be positive, got {window}"
        )));
    }
    let half = T::lit(0.5);
    let mut records: Vec<OpenRecord<T>> = Vec::with_capacity(traj.snapshots.len());
    let mut previous: Option<(T, Vec<T>)> = None;
    for (idx, snap) in traj.snapshots.iter().enumerate() {
        if snap.curve.is_closed() {
            return Err(Error::Precondition(format!(
                "snapshot {idx} is not an open curve"
            )));
        }
        let k = positive_curvatures(&snap.curve, idx)?;
        let a: Vec<T> = k.iter().map(|k| k.recip()).collect();
        let accumulated = match (&previous, records.last()) {
            (Some((t0, a0)), Some(last)) => {
                if a0.len() != a.len() {
                    return Err(Error::Precondition(
                        "marker count changed between snapshots".into(),
                    ));
                }
                let dt = snap.t - *t0;
                last.accumulated_a
                    .iter()
                    .zip(a0.iter().zip(&a))
                    .map(|(&acc, (&x, &y))| acc + (x + y) * half * dt)
                    .collect()
            }
            _ => vec![T::zero(); a.len()],
        };
        let (integral, clipped) = windowed_turning(&snap.curve, &k, window);
        records.push(OpenRecord {
            t: snap.t,
            windowed_integral: integral,
            clipped,
            within_bound: integral <= T::PI() + bound_tol,
            accumulated_a: accumulated,
        });
        previous = Some((snap.t, a));
    }
    Ok(records)
}

fn windowed_turning<T: Real>(curve: &MarkerCurve<T>, k: &[T], window: T) -> (T, bool) {
    let chords = curve.chord_lengths();
    let mid = curve.len() / 2;
    let half = T::lit(0.5);
    let mut total = T::zero();
    let mut clipped = false;
    for forward in [true, false] {
        let mut remaining = window;
        let mut i = mid;
        loop {
            let (seg, next) = match (forward, i) {
                (true, i) if i + 1 < curve.len() => (i, i + 1),
                (false, i) if i > 0 => (i - 1, i - 1),
                _ => {
                    clipped = true;
                    break;
                }
            };
            let h = chords[seg];
            if h >= remaining {
                // partial segment with linearly interpolated curvature
                let f = remaining / h;
                let k_end = k[i] + (k[next] - k[i]) * f;
                total = total + (k[i] + k_end) * half * remaining;
                break;
            }
            total = total + (k[i] + k[next]) * half * h;
            remaining = remaining - h;
            i = next;
        }
    }
    (total, clipped)
}

/// Summary written next to the diagnostic CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpenSummary {
    pub window: f64,
    pub max_windowed_integral: f64,
    pub any_clipped: bool,
    pub within_bound: bool,
}

pub fn open_summary<T: Real>(records: &[OpenRecord<T>], window: T) -> OpenSummary {
    OpenSummary {
        window: window.as_f64(),
        max_windowed_integral: records
            .iter()
            .map(|r| r.windowed_integral.as_f64())
            .fold(f64::NEG_INFINITY, f64::max),
        any_clipped: records.iter().any(|r| r.clipped),
        within_bound: records.iter().all(|r| r.within_bound),
    }
}

/// CSV with header `t,windowed_integral,clipped,within_bound,max_accumulated_a`.
pub fn write_open_csv<T: Real, W: Write>(
    records: &[OpenRecord<T>],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "t,windowed_integral,clipped,within_bound,max_accumulated_a"
    )?;
    for r in records {
        let max_a = r.accumulated_a.iter().copied().fold(T::zero(), T::max);
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_real(r.t),
            fmt_real(r.windowed_integral),
            r.clipped,
            r.within_bound,
            fmt_real(max_a)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{run_icf, FlowConfig, Snapshot};
    use crate::vec2::Vec2;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn static_trajectory(curves: Vec<MarkerCurve<f64>>) -> FlowTrajectory<f64> {
        FlowTrajectory {
            snapshots: curves
                .into_iter()
                .enumerate()
                .map(|(k, curve)| Snapshot {
                    t: 0.1 * k as f64,
                    curve,
                })
                .collect(),
            singularity: None,
            dt: 0.1,
        }
    }

    #[test]
    fn unit_circle_is_flat() {
        let c = MarkerCurve::circle(Vec2::zero(), 1.0, 256).unwrap();
        let d = closed_diagnostics(&static_trajectory(vec![c.clone(), c.clone(), c])).unwrap();
        for k in 0..3 {
            // polygon chords are shorter than arcs by a factor sin(x)/x
            let x = PI / 256.0;
            assert!((d.c0[k] - 2.0 * PI * x.sin() / x).abs() < 1e-12);
            assert!(d.b[k].abs() < 1e-12);
            assert!(d.b_dot[k].abs() < 1e-10);
            assert!(d.b_dot_analytic[k].abs() < 1e-20);
        }
        let checks = d.checks(&DiagnosticTolerances::default());
        assert!(checks.passed() && checks.circular, "{checks:?}");
        assert!((checks.c1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_convex_snapshot_is_named() {
        let pts = (0..64)
            .map(|k| {
                let s = 2.0 * PI * k as f64 / 64.0;
                Vec2::from_angle(s) * (1.0 + 0.5 * (3.0 * s).cos())
            })
            .collect();
        let bumpy = MarkerCurve::closed(pts).unwrap();
        let round = MarkerCurve::circle(Vec2::zero(), 1.0, 64).unwrap();
        match closed_diagnostics(&static_trajectory(vec![round, bumpy])) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("snapshot 1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oval_functionals_are_monotone() {
        let h = crate::support::FourierSupport::cosine_modes(1.0f64, &[(2, 0.1)]);
        let cfg = FlowConfig {
            snapshot_every: 100,
            ..FlowConfig::default()
        };
        let traj = run_icf(&h.curve(256).unwrap(), 0.3, &cfg)
            .unwrap()
            .rescale();
        let d = closed_diagnostics(&traj).unwrap();
        let checks = d.checks(&DiagnosticTolerances::default());
        assert!(checks.passed(), "{checks:?}");
        assert!(!checks.circular);
        // the rescaled length is the initial perimeter
        assert!(d
            .length
            .iter()
            .all(|&l| (l / d.length[0] - 1.0).abs() < 1e-3));
    }

    #[test]
    fn quarter_arc_window() {
        let pts = (0..201)
            .map(|k| Vec2::from_angle(FRAC_PI_2 * k as f64 / 200.0 - FRAC_PI_2 / 2.0))
            .collect();
        let arc = MarkerCurve::open(pts).unwrap();
        let recs = open_diagnostics(&static_trajectory(vec![arc.clone()]), 10.0, 0.05).unwrap();
        assert!(recs[0].clipped);
        assert!((recs[0].windowed_integral - FRAC_PI_2).abs() < 1e-4);
        let inner = open_diagnostics(&static_trajectory(vec![arc]), 0.5, 0.05).unwrap();
        assert!(!inner[0].clipped);
        assert!((inner[0].windowed_integral - 1.0).abs() < 1e-4);
    }

    #[test]
    fn accumulated_a_integrates_in_time() {
        let pts: Vec<_> = (0..41)
            .map(|k| Vec2::from_angle(k as f64 * 0.02) * 2.0)
            .collect();
        let arc = MarkerCurve::open(pts).unwrap();
        let recs = open_diagnostics(
            &static_trajectory(vec![arc.clone(), arc.clone(), arc]),
            0.1,
            0.05,
        )
        .unwrap();
        let acc = &recs[2].accumulated_a;
        assert!(acc[1..acc.len() - 1]
            .iter()
            .all(|&a| (a - 0.4).abs() < 1e-9));
    }

    #[test]
    fn csv_has_one_row_per_snapshot() {
        let c = MarkerCurve::circle(Vec2::zero(), 1.0, 32).unwrap();
        let d = closed_diagnostics(&static_trajectory(vec![c.clone(), c])).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "t,c0,b,b_dot,length,min_a,max_a"
        );
        assert_eq!(text.lines().count(), 3);
    }
}
