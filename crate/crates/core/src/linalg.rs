//! Tridiagonal systems.

use crate::scalar::Real;

/// Solves `A x = rhs` for symmetric tridiagonal `A` given by its diagonal
/// and off-diagonal (`off[i]` couples rows `i` and `i + 1`). Thomas algorithm,
/// no pivoting; intended for diagonally dominant or SPD matrices.
pub fn solve_symmetric_tridiagonal<T: Real>(diag: &[T], off: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert!(n == 0 || off.len() + 1 == n);
    if n == 0 {
        return Vec::new();
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut denom = diag[0];
    c[0] = if n > 1 { off[0] / denom } else { T::zero() };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    d
}

/// LDLᵀ factorization of a symmetric tridiagonal matrix, reusable for many
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalFactor<T> {
    diag: Vec<T>,
    off: Vec<T>,
    pivots: Vec<T>,
    lower: Vec<T>,
}

impl<T: Real> TridiagonalFactor<T> {
    /// Returns `None` when a non-positive pivot shows the matrix is not SPD.
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Option<Self> {
        let n = diag.len();
        assert!(n == 0 || off.len() + 1 == n);
        let mut pivots = vec![T::zero(); n];
        let mut lower = vec![T::zero(); n.saturating_sub(1)];
        for i in 0..n {
            let p = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i - 1] * off[i - 1]
            };
            if !(p > T::zero()) {
                return None;
            }
            pivots[i] = p;
            if i + 1 < n {
                lower[i] = off[i] / p;
            }
        }
        Some(Self {
            diag,
            off,
            pivots,
            lower,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 1..n {
            let prev = y[i - 1];
            y[i] -= self.lower[i - 1] * prev;
        }
        for (yi, &d) in y.iter_mut().zip(&self.pivots) {
            *yi /= d;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = y[i + 1];
            y[i] -= self.lower[i] * next;
        }
        y
    }

    /// Matrix-vector product with the original (unfactored) matrix.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }
}
