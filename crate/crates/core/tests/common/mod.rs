#![allow(dead_code)]

use chemoflow::domain::{
    ConcentrationField, Confinement, ModelParams, ProbabilityDensity, ResponseFunction, SystemState,
};
use chemoflow::{Density, Field, Grid, Params, State};

pub fn params(epsilon: f64, response: ResponseFunction) -> Params {
    ModelParams::new(epsilon, 1.0, response, Confinement::quadratic(1.0, 0.0)).unwrap()
}

pub fn gaussian(x: f64, mean: f64, sigma: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * sigma * sigma)).exp()
}

pub fn gaussian_density(grid: Grid, mean: f64, sigma: f64) -> Density {
    ProbabilityDensity::from_function(grid, |x| gaussian(x, mean, sigma)).unwrap()
}

pub fn field(grid: Grid, f: impl Fn(f64) -> f64) -> Field {
    ConcentrationField::from_function(grid, f).unwrap()
}

pub fn state(u: Density, v: Field) -> State {
    SystemState::new(u, v).unwrap()
}
