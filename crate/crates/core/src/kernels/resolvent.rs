use crate::domain::Grid1D;
use crate::error::{Error, Result};
use crate::linalg::TridiagonalFactor;
use crate::scalar::Real;

/// Constant of the `L²` resolvent estimate from the Fourier multiplier bounds.
pub const REGULARITY_C2: f64 = 2.5;

/// Green's function `e^{−√κ|x|}/(2√κ)` of `−h'' + κh` on the line.
pub fn resolvent_1d_kernel<T: Real>(kappa: T, x: T) -> Result<T> {
    if !(kappa > T::zero()) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let a = kappa.sqrt();
    Ok((-a * x.abs()).exp() / (T::lit(2.0) * a))
}

/// Factorized `−Δ_h + κ` with Neumann closure.
#[derive(Debug, Clone)]
pub struct ResolventSolver1D<T> {
    grid: Grid1D<T>,
    kappa: T,
    factor: TridiagonalFactor<T>,
}

impl<T: Real> ResolventSolver1D<T> {
    pub fn new(grid: Grid1D<T>, kappa: T) -> Result<Self> {
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        let n = grid.len();
        let inv_h2 = (grid.h() * grid.h()).recip();
        let diag = (0..n)
            .map(|i| {
                kappa
                    + if i == 0 || i + 1 == n {
                        inv_h2
                    } else {
                        T::lit(2.0) * inv_h2
                    }
            })
            .collect();
        let factor = TridiagonalFactor::new(diag, vec![-inv_h2; n - 1])
            .ok_or_else(|| Error::InvalidParameter("resolvent operator is singular".into()))?;
        Ok(Self { grid, kappa, factor })
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    fn check_len(&self, f: &[T]) -> Result<()> {
        if f.len() == self.grid.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn solve(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f)?;
        Ok(self.factor.solve(f))
    }

    /// `(−Δ_h + κ) h`.
    pub fn apply(&self, h: &[T]) -> Result<Vec<T>> {
        self.check_len(h)?;
        Ok(self.factor.apply(h))
    }
}

/// `h` with `(−Δ_h + κ) h = f` on the solver's grid.
pub fn solve_resolvent_1d<T: Real>(grid: &Grid1D<T>, f: &[T], solver: &ResolventSolver1D<T>) -> Result<Vec<T>> {
    if grid != solver.grid() {
        return Err(Error::GridMismatch);
    }
    solver.solve(f)
}

/// `κ‖h‖ + √κ‖Dh‖ + ‖Δ_h h‖` divided by `‖f‖` for `h` the resolvent of `f`.
pub fn regularity_p2_ratio<T: Real>(solver: &ResolventSolver1D<T>, f: &[T]) -> Result<T> {
    let h = solver.solve(f)?;
    let g = solver.grid();
    let k = solver.kappa();
    let lhs = k * g.l2_norm(&h) + k.sqrt() * g.gradient_energy(&h).sqrt() + g.l2_norm(&g.laplacian(&h));
    Ok(lhs / g.l2_norm(f))
}

/// Lattice Green's function `c ρ^{|i−j|}` of `I − σΔ_h` on the infinite
/// uniform lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeResolvent<T> {
    pub amplitude: T,
    pub ratio: T,
}

pub fn lattice_resolvent<T: Real>(sigma: T, h: T) -> Result<LatticeResolvent<T>> {
    if !(sigma > T::zero()) || !(h > T::zero()) {
        return Err(Error::InvalidParameter(
            "lattice resolvent needs σ > 0 and h > 0".into(),
        ));
    }
    let s = sigma / (h * h);
    let root = (T::one() + T::lit(4.0) * s).sqrt();
    // (1 + 2s − root)/(2s) rewritten without cancellation
    let ratio = T::lit(2.0) * s / (T::one() + T::lit(2.0) * s + root);
    Ok(LatticeResolvent {
        amplitude: root.recip(),
        ratio,
    })
}

/// `(I − σΔ_h)⁻¹ f` with Neumann closure, written as the lattice kernel
/// summed over all mirror images of the grid.
pub fn neumann_resolvent_apply<T: Real>(grid: &Grid1D<T>, sigma: T, f: &[T]) -> Result<Vec<T>> {
    let n = grid.len();
    if f.len() != n {
        return Err(Error::GridMismatch);
    }
    let k = lattice_resolvent(sigma, grid.h())?;
    let period = 2 * n;
    let wrap = T::one() - k.ratio.powi(period as i32);
    let powers: Vec<T> = (0..=period).map(|d| k.ratio.powi(d as i32)).collect();
    // Σ_m ρ^{|d − 2nm|}
    let periodic = |d: i64| {
        let d = d.rem_euclid(period as i64) as usize;
        (powers[d] + powers[period - d]) / wrap
    };
    Ok((0..n)
        .map(|i| {
            let (ii, mut acc) = (i as i64, T::zero());
            for (j, &fj) in f.iter().enumerate() {
                let jj = j as i64;
                acc += fj * (periodic(ii - jj) + periodic(ii + jj + 1));
            }
            k.amplitude * acc
        })
        .collect())
}

/// `n` implicit Euler steps of `∂_t v = Δv − κv` with step `τ`, evaluated
/// through the image-summed lattice kernel:
/// `(1+κτ)^{−n} [(I − σΔ_h)⁻¹]ⁿ v₀`, `σ = τ/(1+κτ)`.
pub fn implicit_heat_kernel_sum<T: Real>(grid: &Grid1D<T>, kappa: T, tau: T, v0: &[T], steps: usize) -> Result<Vec<T>> {
    if !(tau > T::zero()) || !(kappa >= T::zero()) {
        return Err(Error::InvalidParameter("need τ > 0 and κ ≥ 0".into()));
    }
    let damp = T::one() + kappa * tau;
    let sigma = tau / damp;
    let mut v = v0.to_vec();
    for _ in 0..steps {
        v = neumann_resolvent_apply(grid, sigma, &v)?;
        for x in &mut v {
            *x /= damp;
        }
    }
    Ok(v)
}
