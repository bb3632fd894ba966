//! Pointwise dynamics on concrete systems: dynamical balls and expansivity,
//! pseudo-orbit tracing and specification, chaos at a point, and entropy estimates.

pub mod chaos;
pub mod error;
pub mod expansivity;
pub mod interval;
pub mod point;
pub mod real;
pub mod sampling;
pub mod shadowing;
pub mod symbolic;
pub mod systems;
pub mod verdict;

pub use error::{DynError, Result};
pub use point::PointValue;
pub use real::{Rational, Real};
pub use systems::{Region, System};
