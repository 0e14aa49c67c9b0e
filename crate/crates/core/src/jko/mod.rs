//! Minimizing-movement stepper in the product of the quadratic Wasserstein
//! space and L².

mod trajectory;
mod ublock;
mod vblock;

pub use trajectory::{run_trajectory, run_trajectory_with, StepRecord, TrajectoryRecord};
pub use ublock::{u_block, u_block_potential, UBlockStats};
pub use vblock::{solve_v, v_block, v_residual, V_RESIDUAL_TOL};

use crate::domain::{ConcentrationField, ModelParams, SystemState};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::transport::compound_dist;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JkoConfig<T> {
    pub tau: T,
    /// Relative compound-distance change that ends the block sweeps.
    pub inner_tol: T,
    pub max_sweeps: usize,
    /// Quantile resolution used for reporting; the solver itself works with
    /// the exact piecewise-linear quantile function.
    pub quantile_nodes: Option<usize>,
    pub u_floor: T,
}

impl<T: Real> JkoConfig<T> {
    pub fn new(tau: T) -> Result<Self> {
        let cfg = Self {
            tau,
            inner_tol: T::lit(1e-9),
            max_sweeps: 200,
            quantile_nodes: None,
            u_floor: T::lit(crate::entropy::U_FLOOR),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.tau
            )));
        }
        if !(self.inner_tol > T::zero()) {
            return Err(Error::InvalidParameter("inner tolerance must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter("at least one sweep is required".into()));
        }
        Ok(())
    }
}

/// Result of one minimizing-movement step.
#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    pub state: SystemState<T>,
    pub sweeps: usize,
    pub last_change: T,
}

/// One step of the scheme by alternating minimization over `u` and `v`,
/// each block solved to optimality; the `v` block always runs last.
pub fn jko_step<T: Real>(prev: &SystemState<T>, p: &ModelParams<T>, cfg: &JkoConfig<T>) -> Result<StepOutcome<T>> {
    cfg.validate()?;
    let grid = *prev.grid();
    let mut current = prev.clone();
    let mut last_change = T::infinity();
    for sweep in 1..=cfg.max_sweeps {
        let pot = p.potential(&grid, current.v.values());
        let (u, _) = u_block_potential(&prev.u, pot, cfg.tau, &current.u)?;
        let (v, _) = solve_v(
            &grid,
            u.values(),
            prev.v.values(),
            cfg.tau.recip(),
            p,
            current.v.values(),
        )?;
        let next = SystemState::new(u, ConcentrationField::new(grid, v)?)?;
        let change = compound_dist(&next, &current)?.total;
        let to_prev = compound_dist(&next, prev)?.total;
        current = next;
        last_change = change;
        // without coupling the blocks are independent: one sweep is exact
        if p.epsilon == T::zero() || change < cfg.inner_tol * (T::one() + to_prev) {
            return Ok(StepOutcome {
                state: current,
                sweeps: sweep,
                last_change,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "block sweeps",
        iterations: cfg.max_sweeps,
        last_change: last_change.as_f64(),
    })
}
