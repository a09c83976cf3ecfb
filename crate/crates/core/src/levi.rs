//! Levi potentials with a prescribed compact convex critical set.
//!
//! The body `C` is grown by the inverse curvature flow of its support
//! function, `h_t = evolve(h_0, t)`, giving nested convex sets `C_t`. Every
//! exterior point lies on exactly one boundary `∂C_t`; that `t` is the arrival
//! time `τ(x)` and the potential is `U = ψ ∘ τ` for a flat profile `ψ`.
//!
//! Writing `ρ = h_t + h_t''`, the boundary point with normal angle `s` is
//! `γ_t(s) = h_t u + h_t' J u`, with `∂t γ = ρ u + ρ' J u` and `∂s γ = ρ J u`.
//! At such a point `∇U = ψ'(t) u / ρ`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::MarkerCurve;
use crate::error::{Error, Result};
use crate::io::{fmt_real, SvgPlot};
use crate::roots::bisect;
use crate::scalar::Real;
use crate::spectral::AngularGrid;
use crate::support::{ConvexBody, FourierSupport, SupportJet};
use crate::vec2::Vec2;

/// Monotone reparametrization `ψ` of the arrival time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile<T> {
    /// `ψ(t) = exp(-1/t)`, flat at `t = 0`.
    FlatExp,
    /// `ψ(t) = t^p` with `p ≥ 4`.
    PowerSmooth { p: T },
}

/// Serialized form `{"kind": "...", "params": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl<T: Real> Profile<T> {
    pub fn power(p: T) -> Result<Self> {
        if !(p >= T::lit(4.0)) {
            return Err(Error::Config(format!(
                "power profile needs p >= 4, got {p}"
            )));
        }
        Ok(Profile::PowerSmooth { p })
    }

    pub fn psi(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        match *self {
            Profile::FlatExp => (-t.recip()).exp(),
            Profile::PowerSmooth { p } => t.powf(p),
        }
    }

    pub fn dpsi(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        match *self {
            Profile::FlatExp => (-t.recip()).exp() / (t * t),
            Profile::PowerSmooth { p } => p * t.powf(p - T::one()),
        }
    }

    pub fn spec(&self) -> ProfileSpec {
        match *self {
            Profile::FlatExp => ProfileSpec {
                kind: "flat_exp".into(),
                params: vec![],
            },
            Profile::PowerSmooth { p } => ProfileSpec {
                kind: "power_smooth".into(),
                params: vec![p.as_f64()],
            },
        }
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        match (spec.kind.as_str(), spec.params.as_slice()) {
            ("flat_exp", []) => Ok(Profile::FlatExp),
            ("power_smooth", [p]) => Self::power(T::lit(*p)),
            ("power_smooth", []) => Self::power(T::lit(4.0)),
            (kind, params) => Err(Error::Config(format!(
                "unknown profile {kind:?} with {} parameters",
                params.len()
            ))),
        }
    }
}

/// Solver settings.
#[derive(Clone, Debug, PartialEq)]
pub struct LeviConfig<T> {
    /// Fourier truncation order of `h_0`.
    pub order: usize,
    /// Angular samples used to project generator bodies.
    pub samples: usize,
    pub tau_tol: T,
    /// Largest arrival time evaluated before giving up.
    pub t_max: T,
    /// Coarse grid for the maximizing normal angle.
    pub angle_grid: usize,
    pub max_bisection: usize,
    /// Apply one Fejér pass to `h_0`.
    pub fejer: bool,
    /// Radial potentials use `τ = ln(|x - q0| / r0)`.
    pub radial_scale: T,
}

impl<T: Real> Default for LeviConfig<T> {
    fn default() -> Self {
        LeviConfig {
            order: 64,
            samples: 4096,
            tau_tol: T::lit(1e-10),
            t_max: T::lit(30.0),
            angle_grid: 1024,
            max_bisection: 60,
            fejer: false,
            radial_scale: T::one(),
        }
    }
}

impl<T: Real> LeviConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::Config("truncation order must be at least 1".into()));
        }
        if self.samples < 4 * self.order {
            return Err(Error::Config(format!(
                "samples must be at least 4 J = {}",
                4 * self.order
            )));
        }
        if !(self.tau_tol > T::zero())
            || !(self.t_max > T::zero())
            || !(self.radial_scale > T::zero())
        {
            return Err(Error::Config(
                "tau_tol, t_max and radial_scale must be positive".into(),
            ));
        }
        if self.angle_grid < 8 {
            return Err(Error::Config("angle_grid must be at least 8".into()));
        }
        Ok(())
    }
}

/// Arrival time and normal angle of the boundary point through `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact<T> {
    pub t: T,
    pub s: T,
}

/// Value, gradient and contact data at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeviEval<T> {
    pub tau: T,
    pub value: T,
    pub grad: Vec2<T>,
    /// `None` inside the critical set.
    pub contact: Option<Contact<T>>,
    pub curvature: T,
}

/// The fields `N, K, v, V = v J N, W = N / K` at an exterior point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeviFields<T> {
    pub normal: Vec2<T>,
    pub curvature: T,
    pub speed: T,
    pub velocity: Vec2<T>,
    pub w: Vec2<T>,
}

#[derive(Clone, Debug)]
enum Base<T: Real> {
    /// `U = |q - q0|²`.
    Radial {
        center: Vec2<T>,
    },
    Convex(ConvexBase<T>),
}

#[derive(Clone, Debug)]
struct ConvexBase<T: Real> {
    support: FourierSupport<T>,
    grid: AngularGrid<T>,
    /// `Σ_j |a_j| + |b_j|`, a bound on the non-constant part of every `h_t`, `t ≥ 0`.
    wobble: T,
    /// `max_j |a_j| + |b_j|` over modes `j ≥ 2`.
    coeff_max: T,
}

/// A constructed potential. Immutable; every evaluation is a pure function.
#[derive(Clone, Debug)]
pub struct LeviPotential<T: Real> {
    base: Base<T>,
    profile: Profile<T>,
    config: LeviConfig<T>,
    generators: Vec<Vec2<T>>,
}

const NEWTON_ITERS: usize = 12;

/// Builds the potential of `body`. A single generator point gives the radial potential.
pub fn build_levi<T: Real>(
    body: &ConvexBody<T>,
    profile: Profile<T>,
    config: LeviConfig<T>,
) -> Result<LeviPotential<T>> {
    config.validate()?;
    if let Some(center) = body.singleton() {
        return Ok(LeviPotential::radial(center, profile, config));
    }
    let mut support = body.to_fourier(config.order, config.samples)?;
    if config.fejer {
        support = support.fejer_smoothed();
    }
    LeviPotential::from_support(support, profile, config, body.hull_vertices())
}

impl<T: Real> LeviPotential<T> {
    /// `U(q) = |q - center|²`, with arrival time `ln(|q - center| / r0)`.
    pub fn radial(center: Vec2<T>, profile: Profile<T>, config: LeviConfig<T>) -> Self {
        LeviPotential {
            base: Base::Radial { center },
            profile,
            config,
            generators: vec![center],
        }
    }

    pub fn from_support(
        support: FourierSupport<T>,
        profile: Profile<T>,
        config: LeviConfig<T>,
        generators: Vec<Vec2<T>>,
    ) -> Result<Self> {
        config.validate()?;
        support.validate()?;
        if !(support.z0 > T::zero()) {
            return Err(Error::Domain(
                "critical set must have positive mean width".into(),
            ));
        }
        let wobble = support
            .modes
            .iter()
            .flatten()
            .fold(T::zero(), |acc, c| acc + c.abs());
        let coeff_max = support
            .modes
            .iter()
            .skip(1)
            .map(|[a, b]| a.abs() + b.abs())
            .fold(T::zero(), T::max);
        let grid = AngularGrid::new(config.angle_grid);
        Ok(LeviPotential {
            base: Base::Convex(ConvexBase {
                support,
                grid,
                wobble,
                coeff_max,
            }),
            profile,
            config,
            generators,
        })
    }

    pub fn profile(&self) -> Profile<T> {
        self.profile
    }

    pub fn config(&self) -> &LeviConfig<T> {
        &self.config
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.base, Base::Radial { .. })
    }

    /// Hull vertices of the generating body (the center for radial potentials).
    pub fn generators(&self) -> &[Vec2<T>] {
        &self.generators
    }

    /// Support function `h_0` of the critical set; `None` for radial potentials.
    pub fn base_support(&self) -> Option<&FourierSupport<T>> {
        match &self.base {
            Base::Convex(c) => Some(&c.support),
            Base::Radial { .. } => None,
        }
    }

    /// Support function of the sublevel set `C_t`.
    pub fn level_support(&self, t: T) -> FourierSupport<T> {
        match &self.base {
            Base::Convex(c) => c.support.evolve(t),
            Base::Radial { center } => {
                FourierSupport::disk(*center, self.config.radial_scale * t.exp())
            }
        }
    }

    /// Closed level curve `∂C_t` sampled at `n` normal angles.
    pub fn level_curve(&self, t: T, n: usize) -> Result<MarkerCurve<T>> {
        self.level_support(t).curve(n)
    }

    /// Jet of `h_t` at `s`. Modes too damped to matter are skipped.
    fn jet_at(&self, c: &ConvexBase<T>, t: T, s: T) -> SupportJet<T> {
        let h = &c.support;
        let et = t.exp();
        let mut jet = SupportJet {
            h: h.z0 * et,
            dh: T::zero(),
            ddh: T::zero(),
            dddh: T::zero(),
        };
        let floor = T::epsilon() * (jet.h.abs() + c.wobble) * T::lit(1e-2);
        let (sin1, cos1) = s.sin_cos();
        let (mut cj, mut sj) = (T::one(), T::zero());
        // q^{j²} and q^{2j+1} with q = e^{-t}, so that mode j carries e^t q^{j²}
        let q = (-t).exp();
        let q2 = q * q;
        let (mut qjj, mut qodd) = (q, q * q2);
        for (idx, &[a, b]) in h.modes.iter().enumerate() {
            let j = T::from_usize_exact(idx + 1);
            let f = if t > T::zero() {
                et * qjj
            } else {
                ((T::one() - j * j) * t).exp()
            };
            if idx >= 1 && t > T::zero() && f * j * j * j * c.coeff_max < floor {
                break;
            }
            let next_c = cj * cos1 - sj * sin1;
            sj = sj * cos1 + cj * sin1;
            cj = next_c;
            let (a, b) = (a * f, b * f);
            let even = a * cj + b * sj;
            let odd = b * cj - a * sj;
            let j2 = j * j;
            jet.h = jet.h + even;
            jet.dh = jet.dh + j * odd;
            jet.ddh = jet.ddh - j2 * even;
            jet.dddh = jet.dddh - j2 * j * odd;
            qjj = qjj * qodd;
            qodd = qodd * q2;
        }
        jet
    }

    /// Boundary point `γ_t(s)`.
    pub fn boundary_point(&self, t: T, s: T) -> Vec2<T> {
        match &self.base {
            Base::Convex(c) => {
                let jet = self.jet_at(c, t, s);
                let u = Vec2::from_angle(s);
                u * jet.h + u.perp() * jet.dh
            }
            Base::Radial { center } => {
                *center + Vec2::from_angle(s) * (self.config.radial_scale * t.exp())
            }
        }
    }

    /// `φ(t) = max_s ⟨x, u(s)⟩ - h_t(s)` and its maximizer.
    fn phi(&self, c: &ConvexBase<T>, x: Vec2<T>, t: T) -> (T, T) {
        let ht = c.support.evolve(t);
        let mut modes = ht.modes.clone();
        if modes.is_empty() {
            modes.push([T::zero(); 2]);
        }
        modes[0][0] = modes[0][0] - x.x;
        modes[0][1] = modes[0][1] - x.y;
        let values = c.grid.synthesize(ht.z0, &modes, |_| T::one());
        let (mut best, mut k_best) = (T::infinity(), 0);
        for (k, &v) in values.iter().enumerate() {
            if v < best {
                best = v;
                k_best = k;
            }
        }
        // refine the minimum of h_t - ⟨x, u⟩
        let shifted = FourierSupport { z0: ht.z0, modes };
        let mut s = c.grid.angle(k_best);
        let half_cell = T::PI() / T::from_usize_exact(c.grid.len());
        let s0 = s;
        for _ in 0..5 {
            let jet = shifted.jet(s);
            if !(jet.ddh > T::zero()) {
                break;
            }
            let step = (jet.dh / jet.ddh).max(-half_cell).min(half_cell);
            s = s - step;
        }
        let refined = shifted.jet(s).h;
        if refined <= best {
            (-refined, s)
        } else {
            (-best, s0)
        }
    }

    /// Newton iteration for `γ_t(s) = x` from a nearby contact.
    fn newton_contact(
        &self,
        c: &ConvexBase<T>,
        x: Vec2<T>,
        start: Contact<T>,
    ) -> Option<Contact<T>> {
        let tol = T::resolvable(1e-13) * (T::one() + x.norm());
        let (mut t, mut s) = (start.t, start.s);
        for _ in 0..NEWTON_ITERS {
            let jet = self.jet_at(c, t, s);
            let u = Vec2::from_angle(s);
            let r = x - (u * jet.h + u.perp() * jet.dh);
            let rho = jet.radius();
            if !(rho > T::zero()) {
                return None;
            }
            let (ru, rj) = (r.dot(u), r.dot(u.perp()));
            let dt = ru / rho;
            let ds = (rj - jet.radius_slope() * dt) / rho;
            t = t + dt;
            s = s + ds;
            if !(t > T::zero() && t < self.config.t_max) {
                return None;
            }
            if r.norm() <= tol && dt.abs() <= tol {
                return Some(Contact {
                    t,
                    s: s.wrap_angle(),
                });
            }
        }
        None
    }

    /// Arrival time by bracketing and bisection, then a Newton polish of `(t, s)`.
    fn cold_contact(&self, c: &ConvexBase<T>, x: Vec2<T>) -> Result<Option<Contact<T>>> {
        let (phi0, _) = self.phi(c, x, T::zero());
        if phi0 <= T::zero() {
            return Ok(None);
        }
        let z0 = c.support.z0;
        let t_hi = ((x.norm() + c.wobble) / z0).ln().max(T::lit(1e-3));
        if t_hi > self.config.t_max {
            return Err(Error::HorizonExceeded {
                t_max: self.config.t_max.as_f64(),
            });
        }
        let t_hi = (t_hi + T::lit(1e-3)).min(self.config.t_max);
        let tol = T::resolvable(self.config.tau_tol.as_f64());
        let sign = |t: T| {
            if self.phi(c, x, t).0 > T::zero() {
                T::one()
            } else {
                -T::one()
            }
        };
        let t = bisect(T::zero(), t_hi, tol, self.config.max_bisection, sign)?;
        let (_, s) = self.phi(c, x, t);
        let rough = Contact { t, s };
        Ok(Some(match self.newton_contact(c, x, rough) {
            Some(polished) if (polished.t - t).abs() <= T::lit(1e3) * tol => polished,
            _ => rough,
        }))
    }

    /// Contact data with an optional warm start from a nearby point.
    fn locate(&self, x: Vec2<T>, hint: Option<Contact<T>>) -> Result<Option<Contact<T>>> {
        match &self.base {
            Base::Radial { center } => {
                let d = x - *center;
                let r = d.norm();
                if r == T::zero() {
                    return Ok(None);
                }
                Ok(Some(Contact {
                    t: (r / self.config.radial_scale).ln(),
                    s: d.angle().wrap_angle(),
                }))
            }
            Base::Convex(c) => {
                if let Some(h) = hint {
                    if let Some(found) = self.newton_contact(c, x, h) {
                        return Ok(Some(found));
                    }
                }
                self.cold_contact(c, x)
            }
        }
    }

    /// Arrival time `τ(x)`. Zero on the critical set; radial potentials
    /// return `ln(|x - q0| / r0)`, which is `-∞` at the center.
    pub fn tau(&self, x: Vec2<T>) -> Result<T> {
        Ok(match self.locate(x, None)? {
            Some(c) => c.t,
            None if self.is_radial() => T::neg_infinity(),
            None => T::zero(),
        })
    }

    /// `(τ(x), s)` with `γ_τ(s) = x`.
    pub fn contact(&self, x: Vec2<T>) -> Result<Contact<T>> {
        self.locate(x, None)?.ok_or(Error::InsideCriticalSet)
    }

    /// Value and gradient, warm-starting from `hint` and updating it.
    pub fn eval_hinted(&self, x: Vec2<T>, hint: &mut Option<Contact<T>>) -> Result<LeviEval<T>> {
        let contact = self.locate(x, *hint)?;
        *hint = contact;
        let Some(ct) = contact else {
            return Ok(LeviEval {
                tau: if self.is_radial() {
                    T::neg_infinity()
                } else {
                    T::zero()
                },
                value: T::zero(),
                grad: Vec2::zero(),
                contact: None,
                curvature: T::nan(),
            });
        };
        match &self.base {
            Base::Radial { center } => {
                let d = x - *center;
                Ok(LeviEval {
                    tau: ct.t,
                    value: d.norm_sq(),
                    grad: d * T::lit(2.0),
                    contact,
                    curvature: d.norm().recip(),
                })
            }
            Base::Convex(c) => {
                let rho = self.jet_at(c, ct.t, ct.s).radius();
                let k = rho.recip();
                Ok(LeviEval {
                    tau: ct.t,
                    value: self.profile.psi(ct.t),
                    grad: Vec2::from_angle(ct.s) * (self.profile.dpsi(ct.t) * k),
                    contact,
                    curvature: k,
                })
            }
        }
    }

    pub fn eval(&self, x: Vec2<T>) -> Result<LeviEval<T>> {
        self.eval_hinted(x, &mut None)
    }

    pub fn eval_u(&self, x: Vec2<T>) -> Result<T> {
        Ok(self.eval(x)?.value)
    }

    pub fn eval_grad_u(&self, x: Vec2<T>) -> Result<Vec2<T>> {
        Ok(self.eval(x)?.grad)
    }

    pub fn eval_fields(&self, x: Vec2<T>) -> Result<LeviFields<T>> {
        let e = self.eval(x)?;
        let ct = e.contact.ok_or(Error::InsideCriticalSet)?;
        let normal = Vec2::from_angle(ct.s);
        let speed = (e.grad.norm() / e.curvature).sqrt();
        Ok(LeviFields {
            normal,
            curvature: e.curvature,
            speed,
            velocity: normal.perp() * speed,
            w: normal / e.curvature,
        })
    }

    fn check_shift(&self, ct: Contact<T>, delta: T) -> Result<()> {
        if !self.is_radial() && !(ct.t + delta > T::zero()) {
            return Err(Error::Domain(format!(
                "flow would leave the exterior of the critical set: tau + delta = {}",
                ct.t + delta
            )));
        }
        if ct.t + delta > self.config.t_max {
            return Err(Error::HorizonExceeded {
                t_max: self.config.t_max.as_f64(),
            });
        }
        Ok(())
    }

    /// Time-`delta` flow of `W = N / K` starting at `x`.
    ///
    /// A point of `∂C_t` moving with `W` stays on `γ_t(s(t))` when
    /// `ds/dt = -ρ'/ρ`, which cancels the tangential part of `∂t γ`. The
    /// angle equation is integrated with classical Runge–Kutta.
    pub fn flow_phi(&self, x: Vec2<T>, delta: T) -> Result<Vec2<T>> {
        let ct = self.contact(x)?;
        self.check_shift(ct, delta)?;
        let c = match &self.base {
            Base::Radial { center } => return Ok(*center + (x - *center) * delta.exp()),
            Base::Convex(c) => c,
        };
        if delta == T::zero() {
            return Ok(x);
        }
        let rate = |t: T, s: T| {
            let jet = self.jet_at(c, t, s);
            -jet.radius_slope() / jet.radius()
        };
        let steps = (delta.abs() / T::lit(2e-3))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let h = delta / T::from_usize_exact(steps);
        let half = T::lit(0.5);
        let (mut t, mut s) = (ct.t, ct.s);
        for _ in 0..steps {
            let k1 = rate(t, s);
            let k2 = rate(t + h * half, s + h * half * k1);
            let k3 = rate(t + h * half, s + h * half * k2);
            let k4 = rate(t + h, s + h * k3);
            s = s + h / T::lit(6.0) * (k1 + (k2 + k3) * T::lit(2.0) + k4);
            t = t + h;
        }
        Ok(self.boundary_point(ct.t + delta, s))
    }

    /// `γ_{τ(x)+delta}(s)` at the contact angle `s` of `x`: the level-set map
    /// that keeps the normal angle fixed instead of following `W`.
    pub fn transport_normal_angle(&self, x: Vec2<T>, delta: T) -> Result<Vec2<T>> {
        let ct = self.contact(x)?;
        self.check_shift(ct, delta)?;
        Ok(self.boundary_point(ct.t + delta, ct.s))
    }

    /// Perimeter of the level curve `∂C_t`.
    pub fn perimeter(&self, t: T) -> T {
        self.level_support(t).perimeter()
    }

    /// `v` on the level `τ = t`: `√ψ'(t)` in general, `√2 r` for radial potentials.
    pub fn level_speed(&self, t: T) -> T {
        match self.base {
            Base::Radial { .. } => T::lit(2.0).sqrt() * self.config.radial_scale * t.exp(),
            Base::Convex(_) => self.profile.dpsi(t).sqrt(),
        }
    }

    /// Period of the level orbit through a point at arrival time `t`.
    pub fn level_period(&self, t: T) -> T {
        self.perimeter(t) / self.level_speed(t)
    }

    /// Field samples on an `nx × ny` grid over `[x0, x1] × [y0, y1]`, evaluated in parallel.
    pub fn grid_field(
        &self,
        lo: Vec2<T>,
        hi: Vec2<T>,
        nx: usize,
        ny: usize,
    ) -> Vec<FieldSample<T>> {
        let step = |a: T, b: T, n: usize, k: usize| {
            if n <= 1 {
                a
            } else {
                a + (b - a) * T::from_usize_exact(k) / T::from_usize_exact(n - 1)
            }
        };
        (0..nx * ny)
            .into_par_iter()
            .map(|idx| {
                let x = Vec2::new(
                    step(lo.x, hi.x, nx, idx % nx),
                    step(lo.y, hi.y, ny, idx / nx),
                );
                match self.eval(x) {
                    Ok(e) => {
                        let speed = if e.contact.is_some() {
                            (e.grad.norm() / e.curvature).sqrt()
                        } else {
                            T::zero()
                        };
                        FieldSample {
                            x,
                            tau: e.tau,
                            u: e.value,
                            grad: e.grad,
                            v: speed,
                            k: e.curvature,
                        }
                    }
                    Err(_) => FieldSample {
                        x,
                        tau: T::nan(),
                        u: T::nan(),
                        grad: Vec2::new(T::nan(), T::nan()),
                        v: T::nan(),
                        k: T::nan(),
                    },
                }
            })
            .collect()
    }

    /// Level curves at the given arrival times over the hull of the generators.
    pub fn to_svg(&self, levels: &[T], samples: usize) -> String {
        let mut plot = SvgPlot::new();
        match self.generators.as_slice() {
            [p] => {
                plot.dot(*p, "black");
            }
            g => {
                plot.polyline(g, true, "black");
            }
        }
        for (k, &t) in levels.iter().enumerate() {
            if let Ok(c) = self.level_curve(t, samples) {
                plot.polyline(c.points(), true, SvgPlot::palette(k));
            }
        }
        plot.render()
    }

    /// Serializable description that rebuilds this potential.
    pub fn spec(&self) -> PotentialSpec {
        PotentialSpec {
            generators: self
                .generators
                .iter()
                .map(|p| [p.x.as_f64(), p.y.as_f64()])
                .collect(),
            profile: self.profile.spec(),
            order: self.config.order,
            tau_tol: self.config.tau_tol.as_f64(),
            t_max: self.config.t_max.as_f64(),
            angle_grid: self.config.angle_grid,
            samples: self.config.samples,
            fejer: self.config.fejer,
        }
    }
}

/// One row of the grid-field CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample<T> {
    pub x: Vec2<T>,
    pub tau: T,
    pub u: T,
    pub grad: Vec2<T>,
    pub v: T,
    pub k: T,
}

/// CSV with header `x,y,tau,U,gradUx,gradUy,v,K`.
pub fn write_field_csv<T: Real, W: Write>(
    samples: &[FieldSample<T>],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "x,y,tau,U,gradUx,gradUy,v,K")?;
    for f in samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_real(f.x.x),
            fmt_real(f.x.y),
            fmt_real(f.tau),
            fmt_real(f.u),
            fmt_real(f.grad.x),
            fmt_real(f.grad.y),
            fmt_real(f.v),
            fmt_real(f.k)
        )?;
    }
    Ok(())
}

fn default_order() -> usize {
    64
}
fn default_tau_tol() -> f64 {
    1e-10
}
fn default_t_max() -> f64 {
    30.0
}
fn default_angle_grid() -> usize {
    1024
}
fn default_samples() -> usize {
    4096
}
fn default_profile() -> ProfileSpec {
    ProfileSpec {
        kind: "flat_exp".into(),
        params: vec![],
    }
}

/// JSON description of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub generators: Vec<[f64; 2]>,
    #[serde(default = "default_profile")]
    pub profile: ProfileSpec,
    #[serde(rename = "J", default = "default_order")]
    pub order: usize,
    #[serde(default = "default_tau_tol")]
    pub tau_tol: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_angle_grid")]
    pub angle_grid: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub fejer: bool,
}

impl PotentialSpec {
    pub fn build<T: Real>(&self) -> Result<LeviPotential<T>> {
        let points = self
            .generators
            .iter()
            .map(|&[x, y]| Vec2::new(T::lit(x), T::lit(y)))
            .collect();
        let body = ConvexBody::from_points(points)?;
        let config = LeviConfig {
            order: self.order,
            samples: self.samples,
            tau_tol: T::lit(self.tau_tol),
            t_max: T::lit(self.t_max),
            angle_grid: self.angle_grid,
            fejer: self.fejer,
            ..LeviConfig::default()
        };
        build_levi(&body, Profile::from_spec(&self.profile)?, config)
    }
}
