use super::grid::Grid1D;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One linear piece of a quantile function: on `s ∈ [s0, s1]` the quantile
/// runs linearly from `x0` to `x1`. Pieces of a grid density are its
/// positively charged cells; gaps between consecutive pieces are jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileSegment<T> {
    pub s0: T,
    pub s1: T,
    pub x0: T,
    pub x1: T,
}

impl<T: Real> QuantileSegment<T> {
    pub fn at(&self, s: T) -> T {
        if self.s1 <= self.s0 {
            return self.x0;
        }
        self.x0 + (self.x1 - self.x0) * (s - self.s0) / (self.s1 - self.s0)
    }
}

/// Piecewise-constant probability density on a [`Grid1D`].
///
/// The cumulative distribution at the cell edges is stored alongside the
/// cell values, with `F_0 = 0` and `F_n = 1` exactly. The quantile function
/// is the piecewise-linear inverse of `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDensity<T> {
    grid: Grid1D<T>,
    values: Vec<T>,
    cdf: Vec<T>,
}

impl<T: Real> ProbabilityDensity<T> {
    /// Samples `f` at the cell centres and normalizes to unit mass.
    pub fn from_function<F: Fn(T) -> T>(grid: Grid1D<T>, f: F) -> Result<Self> {
        Self::from_values(grid, grid.sample(f))
    }

    /// Normalizes nonnegative cell values to unit mass.
    pub fn from_values(grid: Grid1D<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::NotNormalizable(format!(
                "cell value {bad} is negative or not finite"
            )));
        }
        let mut cdf = Vec::with_capacity(values.len() + 1);
        let mut acc = T::zero();
        cdf.push(acc);
        for &v in &values {
            acc += v * grid.h();
            cdf.push(acc);
        }
        if !(acc > T::zero()) {
            return Err(Error::NotNormalizable("zero total mass".into()));
        }
        Self::from_cdf(grid, cdf.into_iter().map(|f| f / acc).collect())
    }

    /// Builds a density from its distribution function at the cell edges.
    /// `cdf[0]` must vanish, `cdf[n]` must equal one (within 1e-10) and the
    /// sequence must be nondecreasing up to rounding.
    pub fn from_cdf(grid: Grid1D<T>, mut cdf: Vec<T>) -> Result<Self> {
        let n = grid.len();
        if cdf.len() != n + 1 {
            return Err(Error::GridMismatch);
        }
        let tol = T::lit(1e-10);
        if cdf[0].abs() > tol || (cdf[n] - T::one()).abs() > tol {
            return Err(Error::NotNormalizable(format!(
                "distribution function runs from {} to {}",
                cdf[0], cdf[n]
            )));
        }
        cdf[0] = T::zero();
        cdf[n] = T::one();
        for k in 1..=n {
            if !cdf[k].is_finite() || cdf[k] < cdf[k - 1] - tol {
                return Err(Error::NotNormalizable(format!(
                    "distribution function decreases at edge {k}"
                )));
            }
            cdf[k] = cdf[k].max(cdf[k - 1]).min(T::one());
        }
        Ok(Self::from_cdf_unchecked(grid, cdf))
    }

    pub(crate) fn from_cdf_unchecked(grid: Grid1D<T>, cdf: Vec<T>) -> Self {
        let values = cdf.windows(2).map(|w| (w[1] - w[0]) / grid.h()).collect();
        Self { grid, values, cdf }
    }

    /// Builds the grid density whose quantile function is the piecewise-linear
    /// interpolant of `points = [(s, x)]`. The `s` coordinates must run from 0
    /// to 1 and both coordinates must be nondecreasing; equal `s` with
    /// increasing `x` is a gap in the support, equal `x` with increasing `s`
    /// would be an atom and is rejected.
    pub fn from_quantile_points(grid: Grid1D<T>, points: &[(T, T)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::NotNormalizable("fewer than two quantile points".into()));
        }
        let tol = T::lit(1e-10);
        let (s_first, x_first) = points[0];
        let (s_last, x_last) = points[points.len() - 1];
        if s_first.abs() > tol || (s_last - T::one()).abs() > tol {
            return Err(Error::NotNormalizable(format!(
                "quantile levels run from {s_first} to {s_last}"
            )));
        }
        let r = grid.half_width();
        let slack = tol * (T::one() + r);
        if x_first < -r - slack {
            return Err(Error::OutsideDomain(x_first.as_f64()));
        }
        if x_last > r + slack {
            return Err(Error::OutsideDomain(x_last.as_f64()));
        }

        let mut pieces = Vec::with_capacity(points.len());
        for w in points.windows(2) {
            let ((sa, xa), (sb, xb)) = (w[0], w[1]);
            if sb < sa || xb < xa || !xb.is_finite() {
                return Err(Error::NonMonotoneMap(xa.as_f64()));
            }
            if sb > sa {
                if xb <= xa {
                    return Err(Error::NonMonotoneMap(xa.as_f64()));
                }
                pieces.push(QuantileSegment {
                    s0: sa,
                    s1: sb,
                    x0: xa.max(-r),
                    x1: xb.min(r),
                });
            }
        }

        let n = grid.len();
        let mut cdf = vec![T::zero(); n + 1];
        let mut p = 0;
        for (k, f) in cdf.iter_mut().enumerate().skip(1) {
            let e = grid.edge(k);
            while p < pieces.len() && pieces[p].x1 <= e {
                p += 1;
            }
            *f = if p == pieces.len() {
                T::one()
            } else {
                let seg = &pieces[p];
                if e > seg.x0 {
                    seg.s0 + (seg.s1 - seg.s0) * (e - seg.x0) / (seg.x1 - seg.x0)
                } else {
                    seg.s0
                }
            };
        }
        cdf[n] = s_last;
        Self::from_cdf(grid, cdf)
    }

    /// Builds a density from quantile values at the nodes `s_j = (j - 1/2)/m`.
    /// The quantile function is extended linearly by half a node gap at both
    /// ends.
    pub fn from_quantiles(grid: Grid1D<T>, nodes: &[T]) -> Result<Self> {
        let m = nodes.len();
        if m < 2 {
            return Err(Error::NotNormalizable("fewer than two quantile nodes".into()));
        }
        let mf = T::count(m);
        let half = T::lit(0.5);
        let mut points = Vec::with_capacity(m + 2);
        points.push((T::zero(), nodes[0] - half * (nodes[1] - nodes[0])));
        for (j, &x) in nodes.iter().enumerate() {
            points.push(((T::count(j) + half) / mf, x));
        }
        points.push((T::one(), nodes[m - 1] + half * (nodes[m - 1] - nodes[m - 2])));
        Self::from_quantile_points(grid, &points)
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Distribution function at the `n + 1` cell edges.
    pub fn cdf(&self) -> &[T] {
        &self.cdf
    }

    /// Cell masses `u_i h`.
    pub fn masses(&self) -> Vec<T> {
        self.cdf.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn mass(&self) -> T {
        self.grid.integrate(&self.values)
    }

    pub fn mean(&self) -> T {
        let x = self.grid.centers();
        self.grid.dot(&x, &self.values)
    }

    /// Midpoint-rule second moment `Σ x_i² u_i h`.
    pub fn second_moment(&self) -> T {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let x = self.grid.center(i);
                x * x * u
            })
            .sum::<T>()
            * self.grid.h()
    }

    /// Linear pieces of the quantile function, one per charged cell.
    pub fn segments(&self) -> Vec<QuantileSegment<T>> {
        (0..self.grid.len())
            .filter(|&k| self.cdf[k + 1] > self.cdf[k])
            .map(|k| QuantileSegment {
                s0: self.cdf[k],
                s1: self.cdf[k + 1],
                x0: self.grid.edge(k),
                x1: self.grid.edge(k + 1),
            })
            .collect()
    }

    /// `inf { x : F(x) ≥ s }`.
    pub fn quantile(&self, s: T) -> T {
        let n = self.grid.len();
        let k = self.cdf[1..].partition_point(|&f| f < s).min(n - 1);
        let d = self.cdf[k + 1] - self.cdf[k];
        if d > T::zero() {
            let t = ((s - self.cdf[k]) / d).max(T::zero()).min(T::one());
            self.grid.edge(k) + self.grid.h() * t
        } else {
            self.grid.edge(k)
        }
    }

    /// Quantile values at `s_j = (j - 1/2)/m`, `j = 1..=m`.
    pub fn quantiles(&self, m: usize) -> Vec<T> {
        let mf = T::count(m);
        (0..m)
            .map(|j| self.quantile((T::count(j) + T::lit(0.5)) / mf))
            .collect()
    }

    /// Quantile representation at the default resolution `m = n_cells`.
    pub fn quantile_rep(&self) -> Vec<T> {
        self.quantiles(self.grid.len())
    }

    /// Smallest and largest edge bounding the support.
    pub fn support(&self) -> (T, T) {
        let n = self.grid.len();
        let lo = self.cdf[1..].partition_point(|&f| f <= T::zero());
        let hi = self.cdf[..n].partition_point(|&f| f < T::one());
        (self.grid.edge(lo), self.grid.edge(hi.max(lo + 1)))
    }
}
