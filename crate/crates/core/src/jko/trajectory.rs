use super::{jko_step, JkoConfig};
use crate::domain::{ModelParams, SystemState};
use crate::entropy::{boltzmann_e, dirichlet_f, dissipation_du, dissipation_dv, entropy_h, lyapunov_unchecked};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stationary::solve_stationary;
use crate::transport::{compound_dist, w2};

/// Scalar diagnostics of one step (index 0 is the initial state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<T> {
    pub step: usize,
    pub time: T,
    pub h: T,
    pub l_u: T,
    pub l_v: T,
    pub l_star: T,
    /// `W₂(uⁿ, uⁿ⁻¹)`
    pub w2_step: T,
    /// `‖vⁿ − vⁿ⁻¹‖`
    pub dv_l2_step: T,
    pub d_u: T,
    pub d_v: T,
    pub w2_to_stat: T,
    pub u_l2_diff: T,
    pub v_w12_diff: T,
    /// `‖Dvⁿ‖` in `L^{6/5}`
    pub grad_v_l65: T,
    pub sweeps: usize,
    /// Left side over the bracket on the right side of the additional
    /// regularity estimate (its constant is unknown, so only the ratio is
    /// reported).
    pub reg_ratio: T,
}

impl<T: Real> StepRecord<T> {
    /// Auxiliary entropy `L_u + L_v`.
    pub fn l(&self) -> T {
        self.l_u + self.l_v
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord<T> {
    pub tau: T,
    pub records: Vec<StepRecord<T>>,
    pub states: Vec<SystemState<T>>,
    pub stationary: SystemState<T>,
    pub h_inf: T,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn times(&self) -> Vec<T> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn series<F: Fn(&StepRecord<T>) -> T>(&self, f: F) -> Vec<T> {
        self.records.iter().map(f).collect()
    }

    pub fn final_state(&self) -> &SystemState<T> {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Largest one-step increase of `H`.
    pub fn max_energy_increase(&self) -> T {
        self.records
            .windows(2)
            .map(|w| w[1].h - w[0].h)
            .fold(T::neg_infinity(), T::max)
    }
}

#[allow(clippy::too_many_arguments)]
fn record<T: Real>(
    step: usize,
    time: T,
    state: &SystemState<T>,
    prev: Option<&SystemState<T>>,
    stationary: &SystemState<T>,
    p: &ModelParams<T>,
    tau: T,
    sweeps: usize,
) -> Result<StepRecord<T>> {
    let g = state.grid();
    let lyap = lyapunov_unchecked(state, stationary, p);
    let (w2_step, dv_l2_step, reg_ratio) = match prev {
        Some(pr) => {
            let d = compound_dist(state, pr)?;
            (d.w2_part, d.l2_part, regularity_ratio(state, pr, p, tau))
        }
        None => (T::zero(), T::zero(), T::nan()),
    };
    let du: Vec<T> = state
        .u
        .values()
        .iter()
        .zip(stationary.u.values())
        .map(|(&a, &b)| a - b)
        .collect();
    let dv: Vec<T> = state
        .v
        .values()
        .iter()
        .zip(stationary.v.values())
        .map(|(&a, &b)| a - b)
        .collect();
    Ok(StepRecord {
        step,
        time,
        h: lyap.h,
        l_u: lyap.l_u,
        l_v: lyap.l_v,
        l_star: lyap.l_star,
        w2_step,
        dv_l2_step,
        d_u: dissipation_du(state, stationary, p)?,
        d_v: dissipation_dv(state, stationary, p)?,
        w2_to_stat: w2(&state.u, &stationary.u)?,
        u_l2_diff: g.l2_norm(&du),
        v_w12_diff: (g.dot(&dv, &dv) + g.gradient_energy(&dv)).sqrt(),
        grad_v_l65: state.v.gradient_lq_norm(T::lit(1.2)),
        sweeps,
        reg_ratio,
    })
}

fn regularity_ratio<T: Real>(state: &SystemState<T>, prev: &SystemState<T>, p: &ModelParams<T>, tau: T) -> T {
    let g = state.grid();
    let (u, v) = (state.u.values(), state.v.values());
    let lap = g.laplacian(v);
    let resolvent: Vec<T> = lap.iter().zip(v).map(|(&l, &x)| l - p.kappa * x).collect();
    let lhs = g.gradient_energy(u) + g.dot(&resolvent, &resolvent);
    let lap_w = g
        .centers()
        .into_iter()
        .map(|x| p.confinement.d2w(x).abs())
        .fold(T::zero(), T::max);
    let entropy_drop =
        boltzmann_e(&prev.u) - boltzmann_e(&state.u) + dirichlet_f(&prev.v, p.kappa) - dirichlet_f(&state.v, p.kappa);
    let rhs = g.dot(u, u) + state.v.w12_norm().powi(2) + lap_w + entropy_drop / tau;
    lhs / rhs
}

/// Runs `n_steps` steps, measuring everything against the stationary state
/// computed on the same grid.
pub fn run_trajectory<T: Real>(
    initial: &SystemState<T>,
    p: &ModelParams<T>,
    cfg: &JkoConfig<T>,
    n_steps: usize,
) -> Result<TrajectoryRecord<T>> {
    let stationary = solve_stationary(p, initial.grid(), T::lit(1e-12))?;
    run_trajectory_with(initial, &stationary.state, p, cfg, n_steps)
}

pub fn run_trajectory_with<T: Real>(
    initial: &SystemState<T>,
    stationary: &SystemState<T>,
    p: &ModelParams<T>,
    cfg: &JkoConfig<T>,
    n_steps: usize,
) -> Result<TrajectoryRecord<T>> {
    cfg.validate()?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut records = Vec::with_capacity(n_steps + 1);
    records.push(record(0, T::zero(), initial, None, stationary, p, cfg.tau, 0)?);
    states.push(initial.clone());
    for n in 1..=n_steps {
        let prev = states.last().expect("nonempty");
        let out = jko_step(prev, p, cfg).map_err(|e| Error::StepFailed {
            step: n,
            source: Box::new(e),
        })?;
        let time = cfg.tau * T::count(n);
        let rec = record(n, time, &out.state, Some(prev), stationary, p, cfg.tau, out.sweeps)?;
        records.push(rec);
        states.push(out.state);
    }
    Ok(TrajectoryRecord {
        tau: cfg.tau,
        records,
        states,
        stationary: stationary.clone(),
        h_inf: entropy_h(stationary, p).total,
    })
}
