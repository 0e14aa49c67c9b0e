//! Entropy functionals, Lyapunov components and dissipation integrals.

use crate::domain::{ConcentrationField, Grid1D, ModelParams, ProbabilityDensity, SystemState};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stationary::el_residual;

/// Cells with `u` at or below this value count as outside the support.
pub const U_FLOOR: f64 = 1e-12;

/// Largest Euler–Lagrange residual accepted for a stationary reference.
pub const STATIONARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBreakdown<T> {
    /// `∫ u²/2`
    pub internal: T,
    /// `∫ u W`
    pub potential: T,
    /// `∫ |Dv|²/2`
    pub dirichlet: T,
    /// `κ/2 ∫ v²`
    pub decay: T,
    /// `ε ∫ u φ(v)`
    pub coupling: T,
    pub total: T,
}

/// Entropy of raw cell values; `u` need not be normalized.
pub fn entropy_parts<T: Real>(grid: &Grid1D<T>, u: &[T], v: &[T], p: &ModelParams<T>) -> EntropyBreakdown<T> {
    let half = T::lit(0.5);
    let h = grid.h();
    let (mut internal, mut potential, mut decay, mut coupling) = (T::zero(), T::zero(), T::zero(), T::zero());
    for i in 0..grid.len() {
        let (ui, vi) = (u[i], v[i]);
        internal += half * ui * ui;
        potential += ui * p.confinement.w(grid.center(i));
        decay += vi * vi;
        if ui != T::zero() {
            coupling += ui * p.response.phi(vi);
        }
    }
    let internal = internal * h;
    let potential = potential * h;
    let decay = half * p.kappa * decay * h;
    let coupling = p.epsilon * coupling * h;
    let dirichlet = half * grid.gradient_energy(v);
    EntropyBreakdown {
        internal,
        potential,
        dirichlet,
        decay,
        coupling,
        total: internal + potential + dirichlet + decay + coupling,
    }
}

pub fn entropy_h<T: Real>(s: &SystemState<T>, p: &ModelParams<T>) -> EntropyBreakdown<T> {
    entropy_parts(s.grid(), s.u.values(), s.v.values(), p)
}

/// `∫ u log u` with `0 log 0 = 0`.
pub fn boltzmann_e<T: Real>(u: &ProbabilityDensity<T>) -> T {
    let floor = T::lit(U_FLOOR);
    u.values()
        .iter()
        .filter(|&&x| x > floor)
        .map(|&x| x * x.ln())
        .sum::<T>()
        * u.grid().h()
}

/// `∫ (|Dv|²/2 + κ v²/2)`.
pub fn dirichlet_f<T: Real>(v: &ConcentrationField<T>, kappa: T) -> T {
    let g = v.grid();
    let half = T::lit(0.5);
    half * g.gradient_energy(v.values()) + half * kappa * g.dot(v.values(), v.values())
}

fn check_grids<T: Real>(s: &SystemState<T>, st: &SystemState<T>) -> Result<()> {
    if s.grid() != st.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn check_stationary<T: Real>(st: &SystemState<T>, p: &ModelParams<T>) -> Result<()> {
    let r = el_residual(st, p).as_f64();
    if !(r <= STATIONARY_TOL) {
        return Err(Error::StationaryResidual(r));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovBreakdown<T> {
    pub l_u: T,
    pub l_v: T,
    pub l_star: T,
    pub h: T,
    pub h_inf: T,
    /// `(H − H∞) − (L_u + L_v + ε L_*)`
    pub decomposition_residual: T,
}

impl<T: Real> LyapunovBreakdown<T> {
    /// Auxiliary entropy `L_u + L_v`.
    pub fn auxiliary(&self) -> T {
        self.l_u + self.l_v
    }
}

/// Perturbed potential `W + ε φ(v∞)` at the cell centres.
pub fn perturbed_potential<T: Real>(st: &SystemState<T>, p: &ModelParams<T>) -> Vec<T> {
    p.potential(st.grid(), st.v.values())
}

pub fn lyapunov_u<T: Real>(u: &[T], st: &SystemState<T>, w_eps: &[T]) -> T {
    let half = T::lit(0.5);
    let ui = st.u.values();
    (0..u.len())
        .map(|i| half * (u[i] * u[i] - ui[i] * ui[i]) + w_eps[i] * (u[i] - ui[i]))
        .sum::<T>()
        * st.grid().h()
}

pub fn lyapunov_v<T: Real>(v: &[T], st: &SystemState<T>, kappa: T) -> T {
    let g = st.grid();
    let diff: Vec<T> = v.iter().zip(st.v.values()).map(|(&a, &b)| a - b).collect();
    let half = T::lit(0.5);
    half * g.gradient_energy(&diff) + half * kappa * g.dot(&diff, &diff)
}

pub fn lyapunov_star<T: Real>(u: &[T], v: &[T], st: &SystemState<T>, p: &ModelParams<T>) -> T {
    let phi = p.response;
    let (ui, vi) = (st.u.values(), st.v.values());
    (0..u.len())
        .map(|i| u[i] * (phi.phi(v[i]) - phi.phi(vi[i])) - ui[i] * phi.dphi(vi[i]) * (v[i] - vi[i]))
        .sum::<T>()
        * st.grid().h()
}

/// Lyapunov components relative to a stationary pair.
pub fn lyapunov<T: Real>(s: &SystemState<T>, st: &SystemState<T>, p: &ModelParams<T>) -> Result<LyapunovBreakdown<T>> {
    check_grids(s, st)?;
    check_stationary(st, p)?;
    Ok(lyapunov_unchecked(s, st, p))
}

pub(crate) fn lyapunov_unchecked<T: Real>(
    s: &SystemState<T>,
    st: &SystemState<T>,
    p: &ModelParams<T>,
) -> LyapunovBreakdown<T> {
    let w_eps = perturbed_potential(st, p);
    let (u, v) = (s.u.values(), s.v.values());
    let l_u = lyapunov_u(u, st, &w_eps);
    let l_v = lyapunov_v(v, st, p.kappa);
    let l_star = lyapunov_star(u, v, st, p);
    let h = entropy_h(s, p).total;
    let h_inf = entropy_h(st, p).total;
    LyapunovBreakdown {
        l_u,
        l_v,
        l_star,
        h,
        h_inf,
        decomposition_residual: (h - h_inf) - (l_u + l_v + p.epsilon * l_star),
    }
}

/// Gradient of `f` at the cell centres using only cells inside `mask`:
/// central differences where both neighbours are inside, one-sided where
/// only one is, zero for isolated cells.
pub fn masked_gradient<T: Real>(grid: &Grid1D<T>, f: &[T], mask: &[bool]) -> Vec<T> {
    let n = f.len();
    let h = grid.h();
    (0..n)
        .map(|i| {
            let left = i > 0 && mask[i - 1];
            let right = i + 1 < n && mask[i + 1];
            match (left, right) {
                (true, true) => (f[i + 1] - f[i - 1]) / (T::lit(2.0) * h),
                (true, false) => (f[i] - f[i - 1]) / h,
                (false, true) => (f[i + 1] - f[i]) / h,
                (false, false) => T::zero(),
            }
        })
        .collect()
}

/// `(1 − ε/2) ∫ u |D(u + W_ε)|² − ε/2 ∫ u |D(φ(v) − φ(v∞))|²`.
pub fn dissipation_du<T: Real>(s: &SystemState<T>, st: &SystemState<T>, p: &ModelParams<T>) -> Result<T> {
    check_grids(s, st)?;
    Ok(dissipation_du_raw(s.grid(), s.u.values(), s.v.values(), st, p))
}

pub(crate) fn dissipation_du_raw<T: Real>(
    grid: &Grid1D<T>,
    u: &[T],
    v: &[T],
    st: &SystemState<T>,
    p: &ModelParams<T>,
) -> T {
    let floor = T::lit(U_FLOOR);
    let mask: Vec<bool> = u.iter().map(|&x| x > floor).collect();
    let w_eps = perturbed_potential(st, p);
    let pressure: Vec<T> = u.iter().zip(&w_eps).map(|(&a, &b)| a + b).collect();
    let dp = masked_gradient(grid, &pressure, &mask);
    let half_eps = T::lit(0.5) * p.epsilon;
    let mut main = T::zero();
    for i in 0..u.len() {
        if mask[i] {
            main += u[i] * dp[i] * dp[i];
        }
    }
    let mut cross = T::zero();
    if p.epsilon > T::zero() {
        let phi = p.response;
        let g: Vec<T> = v
            .iter()
            .zip(st.v.values())
            .map(|(&a, &b)| phi.phi(a) - phi.phi(b))
            .collect();
        let dg = masked_gradient(grid, &g, &vec![true; u.len()]);
        for i in 0..u.len() {
            if mask[i] {
                cross += u[i] * dg[i] * dg[i];
            }
        }
    }
    ((T::one() - half_eps) * main - half_eps * cross) * grid.h()
}

/// `(1 − ε/2) ∫ (Δw − κw)² − ε/2 ∫ (u φ'(v) − u∞ φ'(v∞))²` with `w = v − v∞`.
pub fn dissipation_dv<T: Real>(s: &SystemState<T>, st: &SystemState<T>, p: &ModelParams<T>) -> Result<T> {
    check_grids(s, st)?;
    Ok(dissipation_dv_raw(s.grid(), s.u.values(), s.v.values(), st, p))
}

pub(crate) fn dissipation_dv_raw<T: Real>(
    grid: &Grid1D<T>,
    u: &[T],
    v: &[T],
    st: &SystemState<T>,
    p: &ModelParams<T>,
) -> T {
    let w: Vec<T> = v.iter().zip(st.v.values()).map(|(&a, &b)| a - b).collect();
    let lap = grid.laplacian(&w);
    let main: T = lap
        .iter()
        .zip(&w)
        .map(|(&l, &x)| {
            let r = l - p.kappa * x;
            r * r
        })
        .sum();
    let phi = p.response;
    let (ui, vi) = (st.u.values(), st.v.values());
    let cross: T = (0..u.len())
        .map(|i| {
            let r = u[i] * phi.dphi(v[i]) - ui[i] * phi.dphi(vi[i]);
            r * r
        })
        .sum();
    let half_eps = T::lit(0.5) * p.epsilon;
    ((T::one() - half_eps) * main - half_eps * cross) * grid.h()
}

/// Minimum over interior samples of the second difference of `H` along the
/// straight segment from `s0` to `s1`, divided by the squared flat distance
/// `‖u1 − u0‖² + ‖v1 − v0‖²`.
pub fn convexity_probe<T: Real>(
    s0: &SystemState<T>,
    s1: &SystemState<T>,
    p: &ModelParams<T>,
    n_samples: usize,
) -> Result<T> {
    check_grids(s0, s1)?;
    let g = s0.grid();
    let du: Vec<T> = s1.u.values().iter().zip(s0.u.values()).map(|(&a, &b)| a - b).collect();
    let dv: Vec<T> = s1.v.values().iter().zip(s0.v.values()).map(|(&a, &b)| a - b).collect();
    let dist2 = g.dot(&du, &du) + g.dot(&dv, &dv);
    if !(dist2 > T::zero()) {
        return Err(Error::InvalidParameter("flat distance between states is zero".into()));
    }
    let n = n_samples.max(2);
    let step = T::one() / T::count(n);
    let h_at = |t: T| {
        let u: Vec<T> = s0.u.values().iter().zip(&du).map(|(&a, &d)| a + t * d).collect();
        let v: Vec<T> = s0.v.values().iter().zip(&dv).map(|(&a, &d)| a + t * d).collect();
        entropy_parts(g, &u, &v, p).total
    };
    let values: Vec<T> = (0..=n).map(|k| h_at(T::count(k) * step)).collect();
    let ratio = values
        .windows(3)
        .map(|w| (w[0] - T::lit(2.0) * w[1] + w[2]) / (step * step) / dist2)
        .fold(T::infinity(), T::min);
    Ok(ratio)
}

/// Smallest eigenvalue of `[[1, εφ'(0)], [εφ'(0), κ]]`.
pub fn convexity_modulus<T: Real>(p: &ModelParams<T>) -> T {
    let b = p.epsilon * p.response.dphi0::<T>();
    let k = p.kappa;
    let half = T::lit(0.5);
    half * ((T::one() + k) - ((T::one() - k) * (T::one() - k) + T::lit(4.0) * b * b).sqrt())
}
