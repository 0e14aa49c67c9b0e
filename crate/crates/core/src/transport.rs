//! One-dimensional optimal transport and the product metric on states.

use crate::domain::{ProbabilityDensity, QuantileSegment, SystemState};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Distance between two states split into its transport and L² parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompoundDistance<T> {
    pub w2_part: T,
    pub l2_part: T,
    pub total: T,
}

impl<T: Real> CompoundDistance<T> {
    pub fn from_parts(w2_part: T, l2_part: T) -> Self {
        Self {
            w2_part,
            l2_part,
            total: w2_part.hypot(l2_part),
        }
    }
}

/// `∫₀¹ (X₁ − X₂)² ds` for two piecewise-linear quantile functions, integrated
/// exactly over the merged breakpoints.
pub fn w2_squared_segments<T: Real>(a: &[QuantileSegment<T>], b: &[QuantileSegment<T>]) -> T {
    let third = T::one() / T::lit(3.0);
    let (mut i, mut j) = (0, 0);
    let mut s = T::zero();
    let mut acc = T::zero();
    while i < a.len() && j < b.len() {
        let (sa, sb) = (&a[i], &b[j]);
        let next = sa.s1.min(sb.s1);
        if next > s {
            let d0 = sa.at(s) - sb.at(s);
            let d1 = sa.at(next) - sb.at(next);
            acc += (next - s) * (d0 * d0 + d0 * d1 + d1 * d1) * third;
            s = next;
        }
        if sa.s1 <= next {
            i += 1;
        }
        if sb.s1 <= next {
            j += 1;
        }
    }
    acc
}

pub fn w2_squared<T: Real>(u1: &ProbabilityDensity<T>, u2: &ProbabilityDensity<T>) -> Result<T> {
    if u1.grid() != u2.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(w2_squared_segments(&u1.segments(), &u2.segments()))
}

/// Quadratic Wasserstein distance between two grid densities.
pub fn w2<T: Real>(u1: &ProbabilityDensity<T>, u2: &ProbabilityDensity<T>) -> Result<T> {
    w2_squared(u1, u2).map(|x| x.sqrt())
}

/// Discrete measure: point masses at `positions`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<T> {
    pub positions: Vec<T>,
    pub masses: Vec<T>,
}

impl<T: Real> Histogram<T> {
    pub fn new(positions: Vec<T>, masses: Vec<T>) -> Result<Self> {
        if positions.len() != masses.len() || positions.is_empty() {
            return Err(Error::InvalidParameter(
                "histogram needs matching, nonempty position and mass lists".into(),
            ));
        }
        if masses.iter().any(|m| !(*m >= T::zero())) {
            return Err(Error::InvalidParameter("negative histogram mass".into()));
        }
        Ok(Self { positions, masses })
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().copied().sum()
    }

    fn sorted(&self) -> Vec<(T, T)> {
        let mut bins: Vec<(T, T)> = self
            .positions
            .iter()
            .copied()
            .zip(self.masses.iter().copied())
            .filter(|(_, m)| *m > T::zero())
            .collect();
        bins.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        bins
    }
}

/// Transport cost between two small histograms by the north-west-corner
/// rule on sorted bins, which is optimal for convex costs on the line.
pub fn w2_bruteforce<T: Real>(h1: &Histogram<T>, h2: &Histogram<T>) -> Result<T> {
    let (m1, m2) = (h1.total_mass(), h2.total_mass());
    if (m1 - m2).abs() > T::lit(1e-10) * m1.max(m2).max(T::one()) {
        return Err(Error::MassMismatch(m1.as_f64(), m2.as_f64()));
    }
    let a = h1.sorted();
    let b = h2.sorted();
    let (mut i, mut j) = (0, 0);
    let mut ra = a.first().map_or(T::zero(), |p| p.1);
    let mut rb = b.first().map_or(T::zero(), |p| p.1);
    let mut cost = T::zero();
    while i < a.len() && j < b.len() {
        let moved = ra.min(rb);
        let d = a[i].0 - b[j].0;
        cost += moved * d * d;
        ra -= moved;
        rb -= moved;
        if ra <= T::zero() {
            i += 1;
            if i < a.len() {
                ra = a[i].1;
            }
        }
        if rb <= T::zero() {
            j += 1;
            if j < b.len() {
                rb = b[j].1;
            }
        }
    }
    Ok((cost / m1).sqrt())
}

pub fn compound_dist<T: Real>(a: &SystemState<T>, b: &SystemState<T>) -> Result<CompoundDistance<T>> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let w = w2(&a.u, &b.u)?;
    let diff: Vec<T> = a.v.values().iter().zip(b.v.values()).map(|(&x, &y)| x - y).collect();
    Ok(CompoundDistance::from_parts(w, a.grid().l2_norm(&diff)))
}

/// Image of `u` under an increasing map, rebinned on the same grid.
pub fn pushforward<T: Real, F: Fn(T) -> T>(u: &ProbabilityDensity<T>, map: F) -> Result<ProbabilityDensity<T>> {
    let segs = u.segments();
    let mut points = Vec::with_capacity(2 * segs.len());
    let mut last = T::neg_infinity();
    for seg in &segs {
        let (y0, y1) = (map(seg.x0), map(seg.x1));
        if !(y1 > y0) || y0 < last {
            return Err(Error::NonMonotoneMap(seg.x0.as_f64()));
        }
        last = y1;
        points.push((seg.s0, y0));
        points.push((seg.s1, y1));
    }
    ProbabilityDensity::from_quantile_points(*u.grid(), &points)
}

/// Translation by `a`.
pub fn shift<T: Real>(u: &ProbabilityDensity<T>, a: T) -> Result<ProbabilityDensity<T>> {
    pushforward(u, move |x| x + a)
}

/// Dilation `x ↦ λ x`, `λ > 0`.
pub fn dilate<T: Real>(u: &ProbabilityDensity<T>, lambda: T) -> Result<ProbabilityDensity<T>> {
    pushforward(u, move |x| lambda * x)
}
