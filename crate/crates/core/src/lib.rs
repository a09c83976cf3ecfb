//! Inverse curvature flow in the plane, solved spectrally through support
//! functions and with marker particles, plus the construction of Levi
//! potentials with a prescribed convex critical set and the Newton dynamics
//! used to check their level orbits.
//!
//! Every solver is generic over [`Real`] (`f32` or `f64`); the crate root
//! re-exports double precision aliases.

// `!(x > 0)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod levi;
pub mod roots;
pub mod scalar;
pub mod spectral;
pub mod support;
pub mod vec2;

pub use curve::{hausdorff, run_icf, FlowConfig, FlowTrajectory, MarkerCurve, Parametrization};
pub use dynamics::{
    estimate_period, integrate, level_orbit_ic, run_level_orbit, verify_level, Orbit,
};
pub use error::{Error, Result};
pub use levi::{build_levi, LeviConfig, LeviPotential, Profile};
pub use scalar::Real;
pub use support::{support_from_points, BlowupTime, ConvexBody, FourierSupport};
pub use vec2::Vec2;

pub type Point = Vec2<f64>;
pub type Support = FourierSupport<f64>;
pub type Curve = MarkerCurve<f64>;
pub type Trajectory = FlowTrajectory<f64>;
pub type Levi = LeviPotential<f64>;

pub type Point32 = Vec2<f32>;
pub type Support32 = FourierSupport<f32>;
pub type Curve32 = MarkerCurve<f32>;
pub type Levi32 = LeviPotential<f32>;
