//! Constant-energy trajectories and periodic orbits of conservative
//! mechanical systems, computed as geodesics of the Jacobi metric.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the CLI and the
//! orbit searches use.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod orbits;
pub mod relaxation;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};
pub use scalar::Scalar;

pub type Vec2f = Vec2<f64>;
pub type MechParams64 = model::MechParams<f64>;
pub type DoublePendulum64 = model::DoublePendulum<f64>;
pub type State64 = model::State<f64>;
pub type DiscreteString64 = relaxation::DiscreteString<f64>;
pub type Trajectory64 = integrate::Trajectory<f64>;
pub type RelaxOptions64 = relaxation::RelaxOptions<f64>;
pub type Orbit64 = orbits::Orbit<f64>;
pub type OrbitFamily64 = orbits::OrbitFamily<f64>;
pub type OrbitOptions64 = orbits::OrbitOptions<f64>;
