//! Minimizing-movement solver and entropy-decay diagnostics for a
//! chemotaxis system with a confining potential.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod domain;
pub mod entropy;
pub mod error;
pub mod jko;
pub mod kernels;
pub mod linalg;
pub mod scalar;
pub mod special;
pub mod stationary;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations of the main types.
pub type Grid = domain::Grid1D<f64>;
pub type Density = domain::ProbabilityDensity<f64>;
pub type Field = domain::ConcentrationField<f64>;
pub type State = domain::SystemState<f64>;
pub type Params = domain::ModelParams<f64>;
pub type StepperConfig = jko::JkoConfig<f64>;
pub type Trajectory = jko::TrajectoryRecord<f64>;
pub type Stationary = stationary::StationaryResult<f64>;
