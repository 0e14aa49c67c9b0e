use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum number of cells accepted by [`Grid1D::new`].
pub const MIN_CELLS: usize = 16;

/// Uniform cell-centred grid on `[-R, R]`.
///
/// All spatial integrals use the midpoint rule on the cell centres; the
/// discrete gradient lives on the `n - 1` interior faces and the Laplacian is
/// the three-point stencil with homogeneous Neumann closure, so that
/// `Σ h |Dv|² = -Σ h v Δv` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    half_width: T,
    n_cells: usize,
    h: T,
}

impl<T: Real> Grid1D<T> {
    pub fn new(half_width: T, n_cells: usize) -> Result<Self> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "{n_cells} cells is below the minimum of {MIN_CELLS}"
            )));
        }
        let h = T::lit(2.0) * half_width / T::count(n_cells);
        Ok(Self { half_width, n_cells, h })
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        self.n_cells == 0
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Centre of cell `i` (0-based).
    pub fn center(&self, i: usize) -> T {
        -self.half_width + self.h * (T::count(i) + T::lit(0.5))
    }

    /// Edge `k`, `k = 0..=n`; edge `k` is the left boundary of cell `k`.
    pub fn edge(&self, k: usize) -> T {
        if k == self.n_cells {
            self.half_width
        } else {
            -self.half_width + self.h * T::count(k)
        }
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn sample<F: Fn(T) -> T>(&self, f: F) -> Vec<T> {
        (0..self.n_cells).map(|i| f(self.center(i))).collect()
    }

    /// Cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: T) -> usize {
        let idx = ((x + self.half_width) / self.h).floor();
        if idx < T::zero() {
            0
        } else {
            idx.to_usize().unwrap_or(usize::MAX).min(self.n_cells - 1)
        }
    }

    /// Midpoint-rule integral of a cell function.
    pub fn integrate(&self, f: &[T]) -> T {
        debug_assert_eq!(f.len(), self.n_cells);
        f.iter().copied().sum::<T>() * self.h
    }

    /// Midpoint-rule inner product.
    pub fn dot(&self, f: &[T], g: &[T]) -> T {
        f.iter().zip(g).map(|(&a, &b)| a * b).sum::<T>() * self.h
    }

    pub fn l2_norm(&self, f: &[T]) -> T {
        self.dot(f, f).sqrt()
    }

    /// Discrete L^q norm of a cell function.
    pub fn lq_norm(&self, f: &[T], q: T) -> T {
        (f.iter().map(|&a| a.abs().powf(q)).sum::<T>() * self.h).powf(T::one() / q)
    }

    /// Differences `(f[i+1] - f[i]) / h` on the interior faces.
    pub fn face_gradient(&self, f: &[T]) -> Vec<T> {
        f.windows(2).map(|w| (w[1] - w[0]) / self.h).collect()
    }

    /// `∫ |Df|²` with the face gradient (boundary faces carry zero flux).
    pub fn gradient_energy(&self, f: &[T]) -> T {
        f.windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                d * d
            })
            .sum::<T>()
            / self.h
    }

    /// L^q norm of the face gradient.
    pub fn gradient_lq_norm(&self, f: &[T], q: T) -> T {
        self.lq_norm_faces(&self.face_gradient(f), q)
    }

    fn lq_norm_faces(&self, g: &[T], q: T) -> T {
        (g.iter().map(|&a| a.abs().powf(q)).sum::<T>() * self.h).powf(T::one() / q)
    }

    /// Three-point Laplacian with homogeneous Neumann closure.
    pub fn laplacian(&self, f: &[T]) -> Vec<T> {
        let n = f.len();
        let inv_h2 = T::one() / (self.h * self.h);
        (0..n)
            .map(|i| {
                let left = if i == 0 { f[0] } else { f[i - 1] };
                let right = if i + 1 == n { f[n - 1] } else { f[i + 1] };
                (left - T::lit(2.0) * f[i] + right) * inv_h2
            })
            .collect()
    }

    /// Eigenvalue of `-Δ_h` for the Neumann cosine mode `cos(kπ(x+R)/(2R))`.
    pub fn laplacian_eigenvalue(&self, k: usize) -> T {
        let arg = T::PI() * T::count(k) / (T::lit(2.0) * T::count(self.n_cells));
        let s = arg.sin();
        T::lit(4.0) * s * s / (self.h * self.h)
    }

    pub(crate) fn same_as(&self, other: &Self) -> bool {
        self.n_cells == other.n_cells && self.half_width == other.half_width
    }
}
