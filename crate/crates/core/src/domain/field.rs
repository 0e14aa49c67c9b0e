use super::density::ProbabilityDensity;
use super::grid::Grid1D;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Chemical concentration sampled at the cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationField<T> {
    grid: Grid1D<T>,
    values: Vec<T>,
}

impl<T: Real> ConcentrationField<T> {
    pub fn new(grid: Grid1D<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "concentration value {bad} is not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_function<F: Fn(T) -> T>(grid: Grid1D<T>, f: F) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    pub fn zeros(grid: Grid1D<T>) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// True when every value is at least `-tol`.
    pub fn is_nonnegative(&self, tol: T) -> bool {
        self.values.iter().all(|&v| v >= -tol)
    }

    pub fn l2_norm(&self) -> T {
        self.grid.l2_norm(&self.values)
    }

    /// Discrete `W^{1,2}` norm.
    pub fn w12_norm(&self) -> T {
        (self.grid.dot(&self.values, &self.values) + self.grid.gradient_energy(&self.values)).sqrt()
    }

    pub fn gradient_lq_norm(&self, q: T) -> T {
        self.grid.gradient_lq_norm(&self.values, q)
    }
}

/// A point `(u, v)` of the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState<T> {
    pub u: ProbabilityDensity<T>,
    pub v: ConcentrationField<T>,
}

impl<T: Real> SystemState<T> {
    pub fn new(u: ProbabilityDensity<T>, v: ConcentrationField<T>) -> Result<Self> {
        if !u.grid().same_as(v.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { u, v })
    }

    pub fn grid(&self) -> &Grid1D<T> {
        self.u.grid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_requires_matching_grids() {
        let g1 = Grid1D::new(2.0, 32).unwrap();
        let g2 = Grid1D::new(2.0, 64).unwrap();
        let u = ProbabilityDensity::from_function(g1, |x: f64| (-x * x).exp()).unwrap();
        assert!(SystemState::new(u.clone(), ConcentrationField::zeros(g1)).is_ok());
        assert_eq!(
            SystemState::new(u, ConcentrationField::zeros(g2)),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn constant_field_norm() {
        let g = Grid1D::new(3.0, 60).unwrap();
        let v = ConcentrationField::from_function(g, |_| 2.0).unwrap();
        assert!((v.l2_norm() - 2.0 * 6f64.sqrt()).abs() < 1e-12);
        assert!((v.w12_norm() - v.l2_norm()).abs() < 1e-12);
        assert!(ConcentrationField::new(g, vec![f64::NAN; 60]).is_err());
    }
}
