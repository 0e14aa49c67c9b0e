use crate::domain::{ConcentrationField, Grid1D, ModelParams, ProbabilityDensity};
use crate::error::{Error, Result};
use crate::linalg::TridiagonalFactor;
use crate::scalar::Real;

/// Residual below which the Newton iteration stops.
pub const V_RESIDUAL_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;

/// Residual of `(v − ṽ)/τ − Δ_h v + κ v + ε u φ'(v)` (`inv_tau = 1/τ`, zero for
/// the stationary equation).
pub fn v_residual<T: Real>(grid: &Grid1D<T>, u: &[T], v_prev: &[T], v: &[T], inv_tau: T, p: &ModelParams<T>) -> Vec<T> {
    let lap = grid.laplacian(v);
    (0..v.len())
        .map(|i| {
            let mut r = inv_tau * (v[i] - v_prev[i]) - lap[i] + p.kappa * v[i];
            if u[i] != T::zero() {
                r += p.epsilon * u[i] * p.response.dphi(v[i]);
            }
            r
        })
        .collect()
}

fn max_abs<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
}

fn objective<T: Real>(grid: &Grid1D<T>, u: &[T], v_prev: &[T], v: &[T], inv_tau: T, p: &ModelParams<T>) -> T {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for i in 0..v.len() {
        let dv = v[i] - v_prev[i];
        acc += half * inv_tau * dv * dv + half * p.kappa * v[i] * v[i];
        if u[i] != T::zero() && p.epsilon != T::zero() {
            acc += p.epsilon * u[i] * p.response.phi(v[i]);
        }
    }
    acc * grid.h() + half * grid.gradient_energy(v)
}

/// Minimizes `(1/2τ)‖v − ṽ‖² + ∫(|Dv|²/2 + κv²/2) + ε∫u φ(v)` by damped
/// Newton; returns the minimizer and its final max-norm residual.
pub fn solve_v<T: Real>(
    grid: &Grid1D<T>,
    u: &[T],
    v_prev: &[T],
    inv_tau: T,
    p: &ModelParams<T>,
    guess: &[T],
) -> Result<(Vec<T>, T)> {
    let n = grid.len();
    let inv_h2 = T::one() / (grid.h() * grid.h());
    let tol = T::lit(V_RESIDUAL_TOL);
    let mut v = guess.to_vec();
    let mut res = v_residual(grid, u, v_prev, &v, inv_tau, p);
    let mut rnorm = max_abs(&res);
    let mut f = objective(grid, u, v_prev, &v, inv_tau, p);
    for _ in 0..MAX_NEWTON {
        if rnorm <= tol {
            return Ok((v, rnorm));
        }
        let diag: Vec<T> = (0..n)
            .map(|i| {
                let stencil = if i == 0 || i + 1 == n {
                    inv_h2
                } else {
                    T::lit(2.0) * inv_h2
                };
                let mut d = inv_tau + p.kappa + stencil;
                if u[i] != T::zero() {
                    d += p.epsilon * u[i] * p.response.d2phi(v[i]);
                }
                d
            })
            .collect();
        let factor = TridiagonalFactor::new(diag, vec![-inv_h2; n - 1]).ok_or(Error::NewtonFailure {
            what: "v-block",
            residual: rnorm.as_f64(),
        })?;
        let step = factor.solve(&res);
        // Newton is exact when the problem is linear
        if p.epsilon == T::zero() || u.iter().all(|&x| x == T::zero()) {
            for (vi, s) in v.iter_mut().zip(&step) {
                *vi -= *s;
            }
            res = v_residual(grid, u, v_prev, &v, inv_tau, p);
            rnorm = max_abs(&res);
            continue;
        }
        let slope: T = -res.iter().zip(&step).map(|(&r, &s)| r * s).sum::<T>() * grid.h();
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<T> = v.iter().zip(&step).map(|(&a, &s)| a - alpha * s).collect();
            let ft = objective(grid, u, v_prev, &trial, inv_tau, p);
            if !ft.is_finite() {
                alpha *= T::lit(0.5);
                continue;
            }
            let r = v_residual(grid, u, v_prev, &trial, inv_tau, p);
            let rt = max_abs(&r);
            // near the minimizer objective changes drown in round-off, so a
            // drop of the residual also counts
            let armijo = ft <= f + T::lit(1e-4) * alpha * slope + T::lit(1e-15) * f.abs();
            if armijo || rt <= (T::one() - T::lit(1e-4) * alpha) * rnorm {
                v = trial;
                f = ft;
                rnorm = rt;
                res = r;
                accepted = true;
                break;
            }
            alpha *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    if rnorm <= tol {
        Ok((v, rnorm))
    } else {
        Err(Error::NewtonFailure {
            what: "v-block",
            residual: rnorm.as_f64(),
        })
    }
}

/// Implicit step for `v` with `u` frozen.
pub fn v_block<T: Real>(
    v_prev: &ConcentrationField<T>,
    u: &ProbabilityDensity<T>,
    p: &ModelParams<T>,
    tau: T,
) -> Result<ConcentrationField<T>> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {tau}"
        )));
    }
    let grid = v_prev.grid();
    let (v, _) = solve_v(grid, u.values(), v_prev.values(), tau.recip(), p, v_prev.values())?;
    ConcentrationField::new(*grid, v)
}
