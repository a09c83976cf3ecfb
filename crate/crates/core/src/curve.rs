//! Marker-particle solver for the inverse curvature flow `∂t γ = N / K`.
//!
//! Conventions: `J(x, y) = (-y, x)`, `T = γ' / |γ'|`, `N = -J T`, and the
//! signed curvature is positive on counterclockwise convex curves, where `N`
//! points outward. The flow then pushes every marker outward at speed `1 / K`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_real, SvgPlot};
use crate::scalar::Real;
use crate::spectral::AngularGrid;
use crate::vec2::Vec2;

/// Ordered samples of a plane curve.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerCurve<T> {
    points: Vec<Vec2<T>>,
    closed: bool,
}

/// Frame and curvature at one marker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointGeometry<T> {
    pub tangent: Vec2<T>,
    pub normal: Vec2<T>,
    pub curvature: T,
}

pub const MIN_CLOSED_MARKERS: usize = 16;
pub const MIN_OPEN_MARKERS: usize = 4;

impl<T: Real> MarkerCurve<T> {
    pub fn new(points: Vec<Vec2<T>>, closed: bool) -> Result<Self> {
        let min = if closed {
            MIN_CLOSED_MARKERS
        } else {
            MIN_OPEN_MARKERS
        };
        if points.len() < min {
            return Err(Error::Domain(format!(
                "{} curve needs at least {min} markers, got {}",
                if closed { "closed" } else { "open" },
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::DegenerateGeometry { index: i });
        }
        let n = points.len();
        let links = if closed { n } else { n - 1 };
        for i in 0..links {
            if points[i] == points[(i + 1) % n] {
                return Err(Error::DegenerateGeometry { index: i });
            }
        }
        Ok(MarkerCurve { points, closed })
    }

    pub fn closed(points: Vec<Vec2<T>>) -> Result<Self> {
        Self::new(points, true)
    }

    pub fn open(points: Vec<Vec2<T>>) -> Result<Self> {
        Self::new(points, false)
    }

    /// Counterclockwise circle with `n` equally spaced markers.
    pub fn circle(center: Vec2<T>, radius: T, n: usize) -> Result<Self> {
        let grid = AngularGrid::<T>::new(n.max(1));
        let pts = (0..n)
            .map(|k| center + Vec2::from_angle(grid.angle(k)) * radius)
            .collect();
        Self::closed(pts)
    }

    /// Arc of the graph `y = x² / 2` over `|x| ≤ half_width`, with markers
    /// equally spaced in tangent angle.
    pub fn parabola(half_width: T, n: usize) -> Result<Self> {
        let max_angle = half_width.atan();
        let last = T::from_usize_exact(n.max(2) - 1);
        let pts = (0..n)
            .map(|k| {
                let theta = -max_angle + (max_angle + max_angle) * T::from_usize_exact(k) / last;
                let x = theta.tan();
                Vec2::new(x, x * x / T::lit(2.0))
            })
            .collect();
        Self::open(pts)
    }

    pub fn points(&self) -> &[Vec2<T>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec2<T>> {
        self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn links(&self) -> usize {
        if self.closed {
            self.len()
        } else {
            self.len() - 1
        }
    }

    /// Chord lengths `|p_{i+1} - p_i|`, including the closing chord.
    pub fn chord_lengths(&self) -> Vec<T> {
        let n = self.len();
        (0..self.links())
            .map(|i| self.points[(i + 1) % n].distance(self.points[i]))
            .collect()
    }

    /// Polygonal length.
    pub fn length(&self) -> T {
        self.chord_lengths()
            .into_iter()
            .fold(T::zero(), |a, b| a + b)
    }

    /// Mean chord length, the discrete parametrization speed.
    pub fn param_speed(&self) -> T {
        self.length() / T::from_usize_exact(self.links())
    }

    /// `(max - min) / mean` of the chord lengths.
    pub fn chord_spread(&self) -> T {
        let chords = self.chord_lengths();
        let (lo, hi) = chords
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &c| {
                (lo.min(c), hi.max(c))
            });
        (hi - lo) / self.param_speed()
    }

    /// Largest distance between two markers.
    pub fn diameter(&self) -> T {
        let mut d = T::zero();
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.max(p.distance(*q));
            }
        }
        d
    }

    pub fn scaled(&self, k: T) -> Self {
        MarkerCurve {
            points: self.points.iter().map(|&p| p * k).collect(),
            closed: self.closed,
        }
    }

    pub fn translated(&self, v: Vec2<T>) -> Self {
        MarkerCurve {
            points: self.points.iter().map(|&p| p + v).collect(),
            closed: self.closed,
        }
    }

    /// Neighbour triple around marker `i` for interior stencils.
    fn triple(&self, i: usize) -> (Vec2<T>, Vec2<T>, Vec2<T>) {
        let n = self.len();
        (
            self.points[(i + n - 1) % n],
            self.points[i],
            self.points[(i + 1) % n],
        )
    }

    /// Tangent, normal and signed curvature at every marker.
    ///
    /// Interior markers use the three-point stencil in chord-length
    /// parameter: the derivative of the interpolating quadratic and the
    /// curvature of the circle through the three points. Both are exact on
    /// circles. Open ends use the one-sided quadratic through the first or
    /// last three markers.
    pub fn geometry(&self) -> Result<Vec<PointGeometry<T>>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                if !self.closed && i == 0 {
                    let [a, b, c] = [self.points[0], self.points[1], self.points[2]];
                    end_geometry(a, b, c, false, 0)
                } else if !self.closed && i == n - 1 {
                    let [a, b, c] = [self.points[n - 1], self.points[n - 2], self.points[n - 3]];
                    end_geometry(a, b, c, true, n - 1)
                } else {
                    let (a, b, c) = self.triple(i);
                    interior_geometry(a, b, c, i)
                }
            })
            .collect()
    }

    pub fn curvatures(&self) -> Result<Vec<T>> {
        Ok(self.geometry()?.into_iter().map(|g| g.curvature).collect())
    }

    /// Redistributes markers to uniform arclength.
    ///
    /// New markers are placed with cubic Lagrange interpolation in the index
    /// parameter, then moved by one tangential smoothing pass of the given
    /// strength. Only the tangential part of the discrete Laplacian is
    /// applied; its normal part would shrink the curve.
    pub fn resampled(&self, smoothing: T) -> Result<Self> {
        let n = self.len();
        let chords = self.chord_lengths();
        let mut cumulative = Vec::with_capacity(chords.len() + 1);
        cumulative.push(T::zero());
        for &c in &chords {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + c);
        }
        let total = *cumulative.last().unwrap();
        let targets = if self.closed { n } else { n - 1 };
        let mut seg = 0;
        let mut pts = Vec::with_capacity(n);
        for k in 0..n {
            let target = total * T::from_usize_exact(k) / T::from_usize_exact(targets);
            while seg + 1 < chords.len() && cumulative[seg + 1] <= target {
                seg += 1;
            }
            let f = ((target - cumulative[seg]) / chords[seg])
                .max(T::zero())
                .min(T::one());
            pts.push(self.interpolate(seg, f));
        }
        if !self.closed {
            pts[0] = self.points[0];
            pts[n - 1] = self.points[n - 1];
        }
        let mut out = Self::new(pts, self.closed)?;
        if smoothing > T::zero() {
            out = out.tangentially_smoothed(smoothing)?;
        }
        Ok(out)
    }

    /// Cubic Lagrange interpolation at parameter `seg + f`.
    fn interpolate(&self, seg: usize, f: T) -> Vec2<T> {
        let n = self.len();
        let (start, x) = if self.closed {
            (seg as isize - 1, f + T::one())
        } else {
            let start = (seg as isize - 1).clamp(0, n as isize - 4);
            (
                start,
                T::from_usize_exact(seg) - T::from_usize_exact(start as usize) + f,
            )
        };
        let nodes = [T::zero(), T::one(), T::lit(2.0), T::lit(3.0)];
        let mut p = Vec2::zero();
        for m in 0..4 {
            let mut w = T::one();
            for l in 0..4 {
                if l != m {
                    w = w * (x - nodes[l]) / (nodes[m] - nodes[l]);
                }
            }
            let idx = (start + m as isize).rem_euclid(n as isize) as usize;
            p += self.points[idx] * w;
        }
        p
    }

    fn tangentially_smoothed(&self, strength: T) -> Result<Self> {
        let geometry = self.geometry()?;
        let n = self.len();
        let half = T::lit(0.5);
        let pts = (0..n)
            .map(|i| {
                if !self.closed && (i == 0 || i == n - 1) {
                    return self.points[i];
                }
                let (a, b, c) = self.triple(i);
                let lap = (a + c) * half - b;
                let t = geometry[i].tangent;
                b + t * (strength * lap.dot(t))
            })
            .collect();
        Self::new(pts, self.closed)
    }

    /// Explicit Euler step `γ ← γ + dt N / K`.
    pub fn icf_step(&self, dt: T, k_min: T) -> Result<Self> {
        let geometry = self.geometry()?;
        let pts = self.displaced(&geometry, dt, k_min)?;
        Self::new(pts, self.closed)
    }

    fn displaced(&self, geometry: &[PointGeometry<T>], dt: T, k_min: T) -> Result<Vec<Vec2<T>>> {
        self.points
            .iter()
            .zip(geometry)
            .enumerate()
            .map(|(i, (&p, g))| {
                if !(g.curvature.abs() >= k_min) {
                    return Err(Error::CurvatureSingularity {
                        index: i,
                        curvature: g.curvature.as_f64(),
                    });
                }
                Ok(p + g.normal * (dt / g.curvature))
            })
            .collect()
    }

    /// Smallest turning angle carried by one marker, `|K| × local chord`.
    fn min_turning(&self, geometry: &[PointGeometry<T>]) -> T {
        let chords = self.chord_lengths();
        let n = self.len();
        let half = T::lit(0.5);
        geometry
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let local = match (self.closed, i) {
                    (true, _) => (chords[(i + n - 1) % n] + chords[i]) * half,
                    (false, 0) => chords[0],
                    (false, i) if i == n - 1 => chords[n - 2],
                    (false, i) => (chords[i - 1] + chords[i]) * half,
                };
                g.curvature.abs() * local
            })
            .fold(T::infinity(), T::min)
    }

    /// Trapezoidal `∫ K ds` over an open curve with `K > 0`.
    pub fn integral_curvature(&self) -> Result<T> {
        if self.closed {
            return Err(Error::Precondition(
                "integral curvature is defined for open curves".into(),
            ));
        }
        let k = self.curvatures()?;
        if let Some(i) = k.iter().position(|&k| !(k > T::zero())) {
            return Err(Error::Precondition(format!(
                "curvature must be positive, K = {} at marker {i}",
                k[i]
            )));
        }
        let half = T::lit(0.5);
        Ok(self
            .chord_lengths()
            .into_iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, c)| acc + (k[i] + k[i + 1]) * half * c))
    }

    /// Tangent-angle difference between the last and first markers, unwrapped
    /// along the curve.
    pub fn turning_angle(&self) -> Result<T> {
        let g = self.geometry()?;
        let mut total = T::zero();
        for w in g.windows(2) {
            total = total
                + w[0]
                    .tangent
                    .cross(w[1].tangent)
                    .atan2(w[0].tangent.dot(w[1].tangent));
        }
        Ok(total)
    }

    /// Closest distance from `x` to the polygon.
    pub fn distance_to(&self, x: Vec2<T>) -> T {
        let n = self.len();
        (0..self.links())
            .map(|i| segment_distance(x, self.points[i], self.points[(i + 1) % n]))
            .fold(T::infinity(), T::min)
    }
}

fn interior_geometry<T: Real>(
    a: Vec2<T>,
    b: Vec2<T>,
    c: Vec2<T>,
    index: usize,
) -> Result<PointGeometry<T>> {
    let (h1, h2, h3) = ((b - a).norm(), (c - b).norm(), (c - a).norm());
    if !(h1 > T::zero() && h2 > T::zero() && h3 > T::zero()) {
        return Err(Error::DegenerateGeometry { index });
    }
    let d = (c - b) * (h1 * h1) + (b - a) * (h2 * h2);
    let tangent = d.normalized().ok_or(Error::DegenerateGeometry { index })?;
    let curvature = (b - a).cross(c - b) * T::lit(2.0) / (h1 * h2 * h3);
    Ok(PointGeometry {
        tangent,
        normal: -tangent.perp(),
        curvature,
    })
}

/// One-sided quadratic through `a` (the end), `b`, `c`. When `reversed` the
/// stencil runs against the curve orientation.
fn end_geometry<T: Real>(
    a: Vec2<T>,
    b: Vec2<T>,
    c: Vec2<T>,
    reversed: bool,
    index: usize,
) -> Result<PointGeometry<T>> {
    let (h1, h2) = ((b - a).norm(), (c - b).norm());
    if !(h1 > T::zero() && h2 > T::zero()) {
        return Err(Error::DegenerateGeometry { index });
    }
    let h = h1 + h2;
    let d1 = a * (-(h1 + h) / (h1 * h)) + b * (h / (h1 * h2)) + c * (-h1 / (h * h2));
    let d2 = (a / (h1 * h) - b / (h1 * h2) + c / (h * h2)) * T::lit(2.0);
    let speed = d1.norm();
    let mut tangent = d1.normalized().ok_or(Error::DegenerateGeometry { index })?;
    // curvature is invariant under reversal only up to sign
    let mut curvature = d1.cross(d2) / (speed * speed * speed);
    if reversed {
        tangent = -tangent;
        curvature = -curvature;
    }
    Ok(PointGeometry {
        tangent,
        normal: -tangent.perp(),
        curvature,
    })
}

fn segment_distance<T: Real>(x: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == T::zero() {
        return x.distance(a);
    }
    let t = ((x - a).dot(ab) / len2).max(T::zero()).min(T::one());
    x.distance(a + ab * t)
}

/// Symmetric Hausdorff distance between two polygons (markers against segments).
pub fn hausdorff<T: Real>(a: &MarkerCurve<T>, b: &MarkerCurve<T>) -> T {
    let one_way = |p: &MarkerCurve<T>, q: &MarkerCurve<T>| {
        p.points()
            .iter()
            .map(|&x| q.distance_to(x))
            .fold(T::zero(), T::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// How markers are labelled while the flow runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Parametrization {
    /// Backward runs of closed curves use normal angle, everything else arclength.
    Auto,
    /// Material markers, periodically redistributed to uniform arclength.
    Arclength,
    /// Markers pinned to uniformly spaced normal angles of a closed convex
    /// curve. Each marker moves by `dt / K` along its normal, then the curve
    /// is rebuilt from its support values with Fourier modes above `cutoff`
    /// removed. Without an explicit cutoff, backward runs keep the modes whose
    /// amplification `e^{(j² - 1)|t|}` over the run stays below `10⁶`.
    NormalAngle { cutoff: Option<usize> },
}

/// Stepper settings for [`run_icf`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig<T> {
    pub dt: T,
    /// Steps between redistributions; 0 never redistributes.
    pub resample_every: usize,
    /// Steps between stored snapshots. The first and last states are always stored.
    pub snapshot_every: usize,
    pub k_min: T,
    /// Strength of the tangential smoothing pass after each redistribution.
    pub smoothing: T,
    /// Halve the step while it exceeds the explicit stability bound
    /// `Δθ² / 2`, `Δθ` the smallest turning per marker, at most this many times.
    pub max_halvings: u32,
    pub parametrization: Parametrization,
}

impl<T: Real> Default for FlowConfig<T> {
    fn default() -> Self {
        FlowConfig {
            dt: T::lit(1e-4),
            resample_every: 10,
            snapshot_every: 100,
            k_min: T::lit(1e-6),
            smoothing: T::lit(0.1),
            max_halvings: 8,
            parametrization: Parametrization::Auto,
        }
    }
}

impl<T: Real> FlowConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        if !(self.k_min >= T::zero()) {
            return Err(Error::Config("k_min must be non-negative".into()));
        }
        if !(self.smoothing >= T::zero() && self.smoothing <= T::one()) {
            return Err(Error::Config("smoothing must lie in [0, 1]".into()));
        }
        if let Parametrization::NormalAngle { cutoff: Some(0) } = self.parametrization {
            return Err(Error::Config(
                "normal-angle cutoff must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<T> {
    pub t: T,
    pub curve: MarkerCurve<T>,
}

/// Cheap per-snapshot summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotStats<T> {
    pub t: T,
    pub length: T,
    pub mean_speed: T,
    pub min_curvature: T,
    pub max_curvature: T,
}

/// Where and why a run stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct Singularity<T> {
    pub t: T,
    pub error: Error,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrajectory<T> {
    pub snapshots: Vec<Snapshot<T>>,
    pub singularity: Option<Singularity<T>>,
    /// Nominal step used between snapshots.
    pub dt: T,
}

impl<T: Real> FlowTrajectory<T> {
    pub fn times(&self) -> Vec<T> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Snapshot<T> {
        self.snapshots
            .last()
            .expect("a trajectory holds its initial state")
    }

    /// Snapshot whose time is closest to `t`.
    pub fn at(&self, t: T) -> &Snapshot<T> {
        self.snapshots
            .iter()
            .min_by(|a, b| {
                (a.t - t)
                    .abs()
                    .partial_cmp(&(b.t - t).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("a trajectory holds its initial state")
    }

    pub fn stats(&self) -> Vec<SnapshotStats<T>> {
        self.snapshots
            .iter()
            .map(|s| {
                let k = s.curve.curvatures().unwrap_or_default();
                let (lo, hi) = k
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &k| {
                        (lo.min(k), hi.max(k))
                    });
                SnapshotStats {
                    t: s.t,
                    length: s.curve.length(),
                    mean_speed: s.curve.param_speed(),
                    min_curvature: lo,
                    max_curvature: hi,
                }
            })
            .collect()
    }

    /// Rescaled trajectory `σ_t = e^{-t} γ_t`.
    pub fn rescale(&self) -> Self {
        FlowTrajectory {
            snapshots: self
                .snapshots
                .iter()
                .map(|s| Snapshot {
                    t: s.t,
                    curve: s.curve.scaled((-s.t).exp()),
                })
                .collect(),
            singularity: self.singularity.clone(),
            dt: self.dt,
        }
    }

    /// CSV with header `t,index,x,y,K`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,index,x,y,K")?;
        for s in &self.snapshots {
            let k = s
                .curve
                .curvatures()
                .unwrap_or_else(|_| vec![T::nan(); s.curve.len()]);
            for (i, (p, k)) in s.curve.points().iter().zip(k).enumerate() {
                writeln!(
                    out,
                    "{},{i},{},{},{}",
                    fmt_real(s.t),
                    fmt_real(p.x),
                    fmt_real(p.y),
                    fmt_real(k)
                )?;
            }
        }
        Ok(())
    }

    /// Overlay of at most `max_curves` evenly chosen snapshots.
    pub fn to_svg(&self, max_curves: usize) -> String {
        let n = self.snapshots.len();
        let stride = n.div_ceil(max_curves.max(1)).max(1);
        let mut plot = SvgPlot::new();
        for (k, s) in self.snapshots.iter().enumerate() {
            if k % stride == 0 || k + 1 == n {
                plot.polyline(
                    s.curve.points(),
                    s.curve.is_closed(),
                    SvgPlot::palette(k / stride),
                );
            }
        }
        plot.render()
    }
}

/// Runs the flow from `curve0` to `t_end`; negative `t_end` runs it backward.
///
/// Returns `Err` only for invalid settings. A stepping failure ends the run
/// early: the trajectory keeps every state reached and records the failure
/// in [`FlowTrajectory::singularity`].
pub fn run_icf<T: Real>(
    curve0: &MarkerCurve<T>,
    t_end: T,
    cfg: &FlowConfig<T>,
) -> Result<FlowTrajectory<T>> {
    cfg.validate()?;
    if !(t_end != T::zero() && t_end.is_finite()) {
        return Err(Error::Config(format!(
            "t_end must be finite and nonzero, got {t_end}"
        )));
    }
    let backward = t_end < T::zero();
    let steps = (t_end.abs() / cfg.dt - T::lit(1e-9))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let dt = t_end / T::from_usize_exact(steps);

    let param = match cfg.parametrization {
        Parametrization::Auto if backward && curve0.is_closed() => {
            Parametrization::NormalAngle { cutoff: None }
        }
        Parametrization::Auto => Parametrization::Arclength,
        p => p,
    };
    let mut stepper = match param {
        Parametrization::NormalAngle { cutoff } => {
            if !curve0.is_closed() {
                return Err(Error::Config(
                    "normal-angle markers need a closed curve".into(),
                ));
            }
            let cutoff = cutoff.unwrap_or_else(|| auto_cutoff(t_end, curve0.len()));
            Stepper::NormalAngle(NormalAngleState::new(curve0, cutoff)?)
        }
        _ => Stepper::Material(curve0.clone()),
    };

    let mut traj = FlowTrajectory {
        snapshots: vec![Snapshot {
            t: T::zero(),
            curve: stepper.curve()?,
        }],
        singularity: None,
        dt: dt.abs(),
    };
    for step in 1..=steps {
        let t = dt * T::from_usize_exact(step);
        if let Err(error) = stepper.advance(dt, cfg) {
            traj.singularity = Some(Singularity { t, error });
            break;
        }
        if cfg.resample_every > 0 && step % cfg.resample_every == 0 {
            if let Err(error) = stepper.redistribute(cfg.smoothing) {
                traj.singularity = Some(Singularity { t, error });
                break;
            }
        }
        if step % cfg.snapshot_every == 0 || step == steps {
            match stepper.curve() {
                Ok(curve) => traj.snapshots.push(Snapshot { t, curve }),
                Err(error) => {
                    traj.singularity = Some(Singularity { t, error });
                    break;
                }
            }
        }
    }
    Ok(traj)
}

/// Highest Fourier mode kept on a normal-angle run: backward runs keep modes
/// amplified by at most `10⁶` over `|t_end|`.
pub fn auto_cutoff<T: Real>(t_end: T, markers: usize) -> usize {
    let nyquist = (markers / 2).saturating_sub(1).max(1);
    if t_end >= T::zero() {
        return nyquist;
    }
    let budget = T::lit(1e6).ln();
    let k = (T::one() + budget / t_end.abs())
        .sqrt()
        .floor()
        .to_usize()
        .unwrap_or(nyquist);
    k.clamp(1, nyquist)
}

enum Stepper<T: Real> {
    Material(MarkerCurve<T>),
    NormalAngle(NormalAngleState<T>),
}

impl<T: Real> Stepper<T> {
    fn curve(&self) -> Result<MarkerCurve<T>> {
        match self {
            Stepper::Material(c) => Ok(c.clone()),
            Stepper::NormalAngle(s) => MarkerCurve::closed(s.points.clone()),
        }
    }

    fn advance(&mut self, dt: T, cfg: &FlowConfig<T>) -> Result<()> {
        match self {
            Stepper::Material(c) => {
                let geometry = c.geometry()?;
                let bound = {
                    let turn = c.min_turning(&geometry);
                    T::lit(0.5) * turn * turn
                };
                let mut pieces = 1usize;
                while dt.abs() / T::from_usize_exact(pieces) > bound
                    && pieces < (1 << cfg.max_halvings)
                {
                    pieces *= 2;
                }
                let h = dt / T::from_usize_exact(pieces);
                let mut pts = c.displaced(&geometry, h, cfg.k_min)?;
                for _ in 1..pieces {
                    let next = MarkerCurve::new(pts, c.is_closed())?;
                    pts = next.icf_step(h, cfg.k_min)?.into_points();
                }
                *c = MarkerCurve::new(pts, c.is_closed())?;
                Ok(())
            }
            Stepper::NormalAngle(s) => s.advance(dt, cfg.k_min),
        }
    }

    fn redistribute(&mut self, smoothing: T) -> Result<()> {
        if let Stepper::Material(c) = self {
            *c = c.resampled(smoothing)?;
        }
        Ok(())
    }
}

/// Closed convex curve held at normal angles `s_k = 2πk/n`.
struct NormalAngleState<T: Real> {
    grid: AngularGrid<T>,
    normals: Vec<Vec2<T>>,
    points: Vec<Vec2<T>>,
    cutoff: usize,
}

impl<T: Real> NormalAngleState<T> {
    fn new(curve: &MarkerCurve<T>, cutoff: usize) -> Result<Self> {
        let n = curve.len();
        let grid = AngularGrid::new(n);
        let normals: Vec<_> = (0..n).map(|k| Vec2::from_angle(grid.angle(k))).collect();
        // support values of the marker polygon; exact when the markers
        // already sit at these normal angles
        let h: Vec<T> = normals
            .iter()
            .map(|&u| {
                curve
                    .points()
                    .iter()
                    .map(|p| p.dot(u))
                    .fold(T::neg_infinity(), T::max)
            })
            .collect();
        let mut state = NormalAngleState {
            grid,
            normals,
            points: Vec::new(),
            cutoff,
        };
        state.rebuild(&h);
        Ok(state)
    }

    fn rebuild(&mut self, h: &[T]) {
        let (z0, modes) = self.grid.project(h, self.cutoff);
        let derivative: Vec<[T; 2]> = modes
            .iter()
            .enumerate()
            .map(|(idx, &[a, b])| {
                let j = T::from_usize_exact(idx + 1);
                [j * b, -j * a]
            })
            .collect();
        let h = self.grid.synthesize(z0, &modes, |_| T::one());
        let dh = self.grid.synthesize(T::zero(), &derivative, |_| T::one());
        self.points = self
            .normals
            .iter()
            .zip(h.iter().zip(&dh))
            .map(|(&u, (&h, &dh))| u * h + u.perp() * dh)
            .collect();
    }

    fn advance(&mut self, dt: T, k_min: T) -> Result<()> {
        let curve = MarkerCurve::closed(self.points.clone())?;
        let k = curve.curvatures()?;
        let mut h = Vec::with_capacity(k.len());
        for (i, (&k, (&p, &u))) in k
            .iter()
            .zip(self.points.iter().zip(&self.normals))
            .enumerate()
        {
            if !(k > k_min) || !k.is_finite() {
                return Err(Error::CurvatureSingularity {
                    index: i,
                    curvature: k.as_f64(),
                });
            }
            h.push(p.dot(u) + dt / k);
        }
        self.rebuild(&h);
        Ok(())
    }
}
