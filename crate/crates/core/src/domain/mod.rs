//! Spatial discretization, state containers and model coefficients.

mod density;
mod field;
mod grid;
mod params;

pub use density::{ProbabilityDensity, QuantileSegment};
pub use field::{ConcentrationField, SystemState};
pub use grid::{Grid1D, MIN_CELLS};
pub use params::{
    validate_params, AssumptionCheck, Confinement, ModelParams, ParamsReport, ResponseFunction, RESPONSE_LATTICE,
};

/// Uniform grid on `[-R, R]` with `n` cells.
pub fn build_grid<T: crate::Real>(half_width: T, n_cells: usize) -> crate::Result<Grid1D<T>> {
    Grid1D::new(half_width, n_cells)
}
