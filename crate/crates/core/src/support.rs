//! Support functions of planar convex bodies as truncated Fourier series.
//!
//! A convex body `C` is encoded by `h(s) = max_{q ∈ C} ⟨q, u(s)⟩` with
//! `u(s) = (cos s, sin s)`. When `h + h'' > 0` the boundary is the smooth curve
//! `γ(s) = h(s) u(s) + h'(s) J u(s)` with curvature `1 / (h + h'')`, and `s` is
//! the angle of the outward normal at `γ(s)`.
//!
//! Under the inverse curvature flow the support function obeys the linear
//! equation `∂t h = h + h''`, so each Fourier mode evolves independently:
//! the mean is multiplied by `e^t` and mode `j` by `e^{(1 - j²) t}`.

use std::io::Write;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::curve::MarkerCurve;
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::roots::bisect;
use crate::scalar::Real;
use crate::spectral::AngularGrid;
use crate::vec2::Vec2;

/// Truncated Fourier series `h(s) = z0 + Σ_{j=1..J} (a_j cos js + b_j sin js)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSupport<T> {
    pub z0: T,
    /// `modes[j - 1] = [a_j, b_j]`.
    pub modes: Vec<[T; 2]>,
}

/// `h` and its first three derivatives at one angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportJet<T> {
    pub h: T,
    pub dh: T,
    pub ddh: T,
    pub dddh: T,
}

impl<T: Real> SupportJet<T> {
    /// Radius of curvature `h + h''`.
    #[inline]
    pub fn radius(&self) -> T {
        self.h + self.ddh
    }

    /// Derivative of the radius of curvature, `h' + h'''`.
    #[inline]
    pub fn radius_slope(&self) -> T {
        self.dh + self.dddh
    }
}

/// Result of the backward blow-up search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupTime<T> {
    Finite(T),
    Infinite,
}

impl<T: Copy> BlowupTime<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            BlowupTime::Finite(t) => Some(t),
            BlowupTime::Infinite => None,
        }
    }
}

/// One row of the sampled-support CSV export.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportSample<T> {
    pub s: T,
    pub h: T,
    pub radius: T,
    pub curvature: T,
}

impl<T: Real> FourierSupport<T> {
    pub fn new(z0: T, modes: Vec<[T; 2]>) -> Result<Self> {
        let h = FourierSupport { z0, modes };
        h.validate()?;
        Ok(h)
    }

    /// Checks that every coefficient is finite.
    pub fn validate(&self) -> Result<()> {
        let finite = self.z0.is_finite() && self.modes.iter().flatten().all(|c| c.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::Domain("support coefficients must be finite".into()))
        }
    }

    /// Support function of the disk of radius `r` centered at the origin.
    pub fn constant(r: T) -> Self {
        FourierSupport {
            z0: r,
            modes: Vec::new(),
        }
    }

    /// Support function of the disk of radius `r` centered at `center`.
    pub fn disk(center: Vec2<T>, r: T) -> Self {
        FourierSupport {
            z0: r,
            modes: vec![[center.x, center.y]],
        }
    }

    /// `z0 + Σ_j amplitude_j cos(j s)` for `(j, amplitude)` pairs.
    pub fn cosine_modes(z0: T, terms: &[(usize, T)]) -> Self {
        let order = terms.iter().map(|&(j, _)| j).max().unwrap_or(0);
        let mut modes = vec![[T::zero(); 2]; order];
        for &(j, a) in terms {
            assert!(j >= 1, "mode index starts at 1");
            modes[j - 1][0] = modes[j - 1][0] + a;
        }
        FourierSupport { z0, modes }
    }

    /// Truncation order `J`.
    pub fn order(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, j: usize) -> [T; 2] {
        if j == 0 {
            [self.z0, T::zero()]
        } else {
            self.modes.get(j - 1).copied().unwrap_or([T::zero(); 2])
        }
    }

    /// Translation part `z1 = (a_1, b_1)`, the mode-1 coefficients.
    pub fn center(&self) -> Vec2<T> {
        let [a, b] = self.mode(1);
        Vec2::new(a, b)
    }

    /// Drops trailing zero modes.
    pub fn trimmed(mut self) -> Self {
        while matches!(self.modes.last(), Some(&[a, b]) if a == T::zero() && b == T::zero()) {
            self.modes.pop();
        }
        self
    }

    fn has_shape_modes(&self) -> bool {
        self.modes
            .iter()
            .skip(1)
            .any(|&[a, b]| a != T::zero() || b != T::zero())
    }

    /// `h` and its first three derivatives at `s`, by termwise differentiation.
    pub fn jet(&self, s: T) -> SupportJet<T> {
        let (sin1, cos1) = s.sin_cos();
        let (mut c, mut sn) = (T::one(), T::zero());
        let mut jet = SupportJet {
            h: self.z0,
            dh: T::zero(),
            ddh: T::zero(),
            dddh: T::zero(),
        };
        for (idx, &[a, b]) in self.modes.iter().enumerate() {
            let next_c = c * cos1 - sn * sin1;
            sn = sn * cos1 + c * sin1;
            c = next_c;
            let j = T::from_usize_exact(idx + 1);
            let j2 = j * j;
            let even = a * c + b * sn;
            let odd = b * c - a * sn;
            jet.h = jet.h + even;
            jet.dh = jet.dh + j * odd;
            jet.ddh = jet.ddh - j2 * even;
            jet.dddh = jet.dddh - j2 * j * odd;
        }
        jet
    }

    /// `(h, h', h'')` at `s`.
    pub fn evaluate(&self, s: T) -> (T, T, T) {
        let jet = self.jet(s);
        (jet.h, jet.dh, jet.ddh)
    }

    /// Radius of curvature `h + h''` at `s`.
    pub fn radius_of_curvature(&self, s: T) -> T {
        self.jet(s).radius()
    }

    /// Exact solution of `∂t h = h + h''` after time `t` (any sign).
    ///
    /// The mean is multiplied by `e^t` and mode `j` by `e^{(1 - j²) t}`, so
    /// mode 1 is left unchanged.
    pub fn evolve(&self, t: T) -> Self {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(idx, &[a, b])| {
                let j = T::from_usize_exact(idx + 1);
                let f = ((T::one() - j * j) * t).exp();
                [a * f, b * f]
            })
            .collect();
        FourierSupport {
            z0: self.z0 * t.exp(),
            modes,
        }
    }

    /// Boundary point `h u + h' J u` with outward normal angle `s`.
    pub fn point(&self, s: T) -> Vec2<T> {
        let (h, dh, _) = self.evaluate(s);
        let u = Vec2::from_angle(s);
        u * h + u.perp() * dh
    }

    /// Curvature `1 / (h + h'')` of the boundary at normal angle `s`.
    pub fn curvature(&self, s: T) -> Result<T> {
        let radius = self.radius_of_curvature(s);
        if radius > T::zero() {
            Ok(radius.recip())
        } else {
            Err(Error::SupportSingularity {
                s: s.as_f64(),
                margin: radius.as_f64(),
            })
        }
    }

    /// Default grid size for convexity checks: `16 J`, at least 64 nodes.
    pub fn default_margin_grid(&self) -> usize {
        (16 * self.order()).max(64)
    }

    /// Minimum of `h + h''` over the default angular grid.
    pub fn convexity_margin(&self) -> T {
        self.convexity_margin_on(self.default_margin_grid())
    }

    /// Minimum of `h + h''` over a uniform grid of `grid` angles.
    pub fn convexity_margin_on(&self, grid: usize) -> T {
        let grid = grid.max(2 * self.order() + 2);
        radius_on_grid(&AngularGrid::new(grid), self)
            .into_iter()
            .fold(T::infinity(), |m, v| {
                if v.is_nan() {
                    T::neg_infinity()
                } else {
                    m.min(v)
                }
            })
    }

    /// Closed boundary curve sampled on `samples` uniformly spaced normal angles.
    ///
    /// The markers are parametrized by normal angle, not arclength.
    pub fn curve(&self, samples: usize) -> Result<MarkerCurve<T>> {
        let margin = self.convexity_margin_on(self.default_margin_grid().max(samples));
        if !(margin > T::zero()) {
            return Err(Error::NonConvexSupport {
                margin: margin.as_f64(),
            });
        }
        let grid = AngularGrid::<T>::new(samples);
        let points = (0..samples).map(|k| self.point(grid.angle(k))).collect();
        MarkerCurve::closed(points)
    }

    /// Perimeter `2π z0` of the body (valid for convex support functions).
    pub fn perimeter(&self) -> T {
        T::TAU() * self.z0
    }

    /// Fejér (Cesàro) mean of the series. Mode `j ≥ 2` is damped by
    /// `1 - j / (J + 1)`; the mean and mode 1 are kept so the body is not moved.
    ///
    /// The Fejér kernel is non-negative, so a support function with
    /// `h + h'' ≥ 0` keeps that property.
    pub fn fejer_smoothed(&self) -> Self {
        let order = T::from_usize_exact(self.order() + 1);
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(idx, &[a, b])| {
                let j = idx + 1;
                if j == 1 {
                    [a, b]
                } else {
                    let f = T::one() - T::from_usize_exact(j) / order;
                    [a * f, b * f]
                }
            })
            .collect();
        FourierSupport { z0: self.z0, modes }
    }

    /// Most recent negative time at which the backward evolution loses convexity.
    ///
    /// Returns [`BlowupTime::Infinite`] when no mode `j ≥ 2` is present: those
    /// data are circles, which exist for all negative times.
    pub fn blowup_time_backward(&self) -> Result<BlowupTime<T>> {
        let margin0 = self.convexity_margin();
        if !(margin0 > T::zero()) {
            return Err(Error::Precondition(format!(
                "backward blow-up needs a convex initial support, margin = {}",
                margin0
            )));
        }
        if !self.has_shape_modes() {
            return Ok(BlowupTime::Infinite);
        }
        let margin_at = |t: T| {
            let m = self.evolve(t).convexity_margin();
            if m.is_finite() {
                m
            } else {
                T::neg_infinity()
            }
        };

        // Grow the bracket geometrically, then scan it finely so the first
        // sign change below t = 0 is the one that gets bisected.
        let mut inner = T::zero();
        let mut step = T::lit(1e-2);
        let limit = T::lit(-700.0);
        let outer = loop {
            let t = inner - step;
            if t < limit {
                return Ok(BlowupTime::Infinite);
            }
            if !(margin_at(t) > T::zero()) {
                break t;
            }
            inner = t;
            step = step + step;
        };
        let pieces = 64;
        let width = (inner - outer) / T::from_usize_exact(pieces);
        let mut hi = inner;
        let mut lo = outer;
        for k in 1..=pieces {
            let t = inner - width * T::from_usize_exact(k);
            if !(margin_at(t) > T::zero()) {
                lo = t;
                break;
            }
            hi = t;
        }
        let tol = T::resolvable(1e-10);
        let t = bisect(lo, hi, tol, 200, |t| {
            if margin_at(t) > T::zero() {
                T::one()
            } else {
                -T::one()
            }
        })?;
        Ok(BlowupTime::Finite(t))
    }

    /// `(s, h, h + h'', K)` on a uniform grid of `samples` angles. `K` is
    /// infinite where `h + h'' ≤ 0`.
    pub fn samples(&self, samples: usize) -> Vec<SupportSample<T>> {
        let grid = AngularGrid::<T>::new(samples);
        (0..samples)
            .map(|k| {
                let s = grid.angle(k);
                let jet = self.jet(s);
                let radius = jet.radius();
                let curvature = if radius > T::zero() {
                    radius.recip()
                } else {
                    T::infinity()
                };
                SupportSample {
                    s,
                    h: jet.h,
                    radius,
                    curvature,
                }
            })
            .collect()
    }

    /// CSV export with header `s,h,h_plus_hdd,K`.
    pub fn write_csv<W: Write>(&self, samples: usize, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,h,h_plus_hdd,K")?;
        for row in self.samples(samples) {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_real(row.s),
                fmt_real(row.h),
                fmt_real(row.radius),
                fmt_real(row.curvature)
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("support serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let h: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        h.validate()?;
        Ok(h)
    }
}

/// `h + h''` on every node of `grid`.
pub(crate) fn radius_on_grid<T: Real>(grid: &AngularGrid<T>, h: &FourierSupport<T>) -> Vec<T> {
    grid.synthesize(h.z0, &h.modes, |j| {
        let j = T::from_usize_exact(j);
        T::one() - j * j
    })
}

impl<T: Real> Add for &FourierSupport<T> {
    type Output = FourierSupport<T>;

    fn add(self, other: &FourierSupport<T>) -> FourierSupport<T> {
        let n = self.order().max(other.order());
        let modes = (1..=n)
            .map(|j| {
                let ([a1, b1], [a2, b2]) = (self.mode(j), other.mode(j));
                [a1 + a2, b1 + b2]
            })
            .collect();
        FourierSupport {
            z0: self.z0 + other.z0,
            modes,
        }
    }
}

impl<T: Real> Mul<T> for &FourierSupport<T> {
    type Output = FourierSupport<T>;

    fn mul(self, k: T) -> FourierSupport<T> {
        FourierSupport {
            z0: self.z0 * k,
            modes: self.modes.iter().map(|&[a, b]| [a * k, b * k]).collect(),
        }
    }
}

/// Generators of a compact convex body, or its support function directly.
#[derive(Clone, Debug, PartialEq)]
pub enum BodyShape<T> {
    /// The body is the convex hull of these points.
    Points(Vec<Vec2<T>>),
    Support(FourierSupport<T>),
}

/// A compact convex body, translated by `origin_shift`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody<T> {
    pub shape: BodyShape<T>,
    pub origin_shift: Vec2<T>,
}

impl<T: Real> ConvexBody<T> {
    pub fn from_points(points: Vec<Vec2<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain(
                "a convex body needs at least one generator".into(),
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("generator coordinates must be finite".into()));
        }
        Ok(ConvexBody {
            shape: BodyShape::Points(points),
            origin_shift: Vec2::zero(),
        })
    }

    pub fn from_support(h: FourierSupport<T>) -> Result<Self> {
        h.validate()?;
        Ok(ConvexBody {
            shape: BodyShape::Support(h),
            origin_shift: Vec2::zero(),
        })
    }

    pub fn with_origin_shift(mut self, shift: Vec2<T>) -> Self {
        self.origin_shift = shift;
        self
    }

    /// Hull vertices in counterclockwise order (translated); empty for
    /// support-function bodies.
    pub fn hull_vertices(&self) -> Vec<Vec2<T>> {
        match &self.shape {
            BodyShape::Points(pts) => convex_hull(pts)
                .into_iter()
                .map(|p| p + self.origin_shift)
                .collect(),
            BodyShape::Support(_) => Vec::new(),
        }
    }

    /// The single point of a degenerate body, if it is one.
    pub fn singleton(&self) -> Option<Vec2<T>> {
        match &self.shape {
            BodyShape::Points(_) => match self.hull_vertices().as_slice() {
                [p] => Some(*p),
                _ => None,
            },
            BodyShape::Support(h) => {
                let h = h.clone().trimmed();
                (h.z0 == T::zero() && h.order() <= 1).then(|| h.center() + self.origin_shift)
            }
        }
    }

    /// Exact support value `max ⟨q, u(s)⟩`.
    pub fn support_value(&self, s: T) -> T {
        let u = Vec2::from_angle(s);
        match &self.shape {
            BodyShape::Points(_) => self
                .hull_vertices()
                .into_iter()
                .map(|q| q.dot(u))
                .fold(T::neg_infinity(), T::max),
            BodyShape::Support(h) => h.evaluate(s).0 + self.origin_shift.dot(u),
        }
    }

    /// Membership with slack `tol`: hull-side tests for generator polygons,
    /// support inequalities on a 1024-angle grid otherwise.
    pub fn contains(&self, x: Vec2<T>, tol: T) -> bool {
        match &self.shape {
            BodyShape::Points(_) => {
                let hull = self.hull_vertices();
                match hull.len() {
                    1 => x.distance(hull[0]) <= tol,
                    2 => segment_distance(x, hull[0], hull[1]) <= tol,
                    n => (0..n).all(|i| {
                        let (a, b) = (hull[i], hull[(i + 1) % n]);
                        let edge = b - a;
                        // outward distance of x from the edge line
                        (x - a).cross(edge) / edge.norm() <= tol
                    }),
                }
            }
            BodyShape::Support(_) => {
                let grid = AngularGrid::<T>::new(1024);
                (0..grid.len()).all(|k| {
                    let s = grid.angle(k);
                    x.dot(Vec2::from_angle(s)) <= self.support_value(s) + tol
                })
            }
        }
    }

    /// Size-`order` Fourier truncation of the support function.
    ///
    /// Generator bodies are sampled on `samples` uniform angles and projected
    /// with a discrete Fourier transform; `samples ≥ 4 · order` is required.
    pub fn to_fourier(&self, order: usize, samples: usize) -> Result<FourierSupport<T>> {
        if order == 0 {
            return Err(Error::Config("truncation order must be at least 1".into()));
        }
        match &self.shape {
            BodyShape::Points(_) => {
                if samples < 4 * order {
                    return Err(Error::Config(format!(
                        "{samples} samples cannot resolve {order} modes (need at least {})",
                        4 * order
                    )));
                }
                let grid = AngularGrid::<T>::new(samples);
                let hull = self.hull_vertices();
                let values: Vec<T> = (0..samples)
                    .map(|k| {
                        let u = Vec2::from_angle(grid.angle(k));
                        hull.iter()
                            .map(|q| q.dot(u))
                            .fold(T::neg_infinity(), T::max)
                    })
                    .collect();
                let (z0, modes) = grid.project(&values, order);
                Ok(FourierSupport { z0, modes })
            }
            BodyShape::Support(h) => {
                let mut modes: Vec<[T; 2]> = (1..=order).map(|j| h.mode(j)).collect();
                modes[0][0] = modes[0][0] + self.origin_shift.x;
                modes[0][1] = modes[0][1] + self.origin_shift.y;
                Ok(FourierSupport { z0: h.z0, modes })
            }
        }
    }
}

/// Size-`order` Fourier truncation of the support function of the convex
/// hull of `points`, from `samples` uniform angular samples.
pub fn support_from_points<T: Real>(
    points: &[Vec2<T>],
    order: usize,
    samples: usize,
) -> Result<FourierSupport<T>> {
    ConvexBody::from_points(points.to_vec())?.to_fourier(order, samples)
}

/// Andrew's monotone chain; counterclockwise, collinear points dropped.
pub fn convex_hull<T: Real>(points: &[Vec2<T>]) -> Vec<Vec2<T>> {
    let mut pts: Vec<Vec2<T>> = points.to_vec();
    pts.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.y.partial_cmp(&b.y).unwrap_or(std::cmp::Ordering::Equal))
    });
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Vec2<T>, a: Vec2<T>, b: Vec2<T>| (a - o).cross(b - o);
    let mut lower: Vec<Vec2<T>> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= T::zero()
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2<T>> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= T::zero()
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
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
