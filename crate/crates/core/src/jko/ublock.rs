//! Transport-penalized step for the density with the concentration frozen.
//!
//! The unknowns are the distribution-function values `F_k` at the interior
//! cell edges. With `d_k = F_{k+1} − F_k` the cell masses, the objective is
//!
//! `J(F) = W₂²(F, F̃)/(2τ) + Σ_k [d_k²/(2h) + d_k V_k]`,
//!
//! where `W₂²` is written as `Σ d_k m2_k − 2∫X̃X + const` and the cross term as
//! an integral of the convex primitive `Ψ(s) = ∫₀^s X̃` of the old quantile
//! function. `J` is convex and the Hessian in `F` is tridiagonal. Cells with
//! zero mass tie their two edges together; the solver is a primal active-set
//! Newton method on the tied groups.

use crate::domain::{Grid1D, ModelParams, ProbabilityDensity, QuantileSegment};
use crate::error::{Error, Result};
use crate::linalg::TridiagonalFactor;
use crate::scalar::Real;
use crate::transport::w2_squared_segments;

const MAX_ITER: usize = 20_000;
/// Positive cells thinner than this are tied before a line search when the
/// Newton direction would shrink them.
const THIN_CELL: f64 = 1e-14;
/// Empty-cell groups this close (in mass) to a jump of the old quantile
/// function are moved onto it.
const SNAP: f64 = 1e-12;

pub(crate) fn segments_from_cdf<T: Real>(grid: &Grid1D<T>, cdf: &[T]) -> Vec<QuantileSegment<T>> {
    (0..grid.len())
        .filter(|&k| cdf[k + 1] > cdf[k])
        .map(|k| QuantileSegment {
            s0: cdf[k],
            s1: cdf[k + 1],
            x0: grid.edge(k),
            x1: grid.edge(k + 1),
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct CellTerms<T> {
    /// `∫₀¹ (1−t) X̃(a + t d) dt`
    i1: T,
    /// `∫₀¹ t X̃(a + t d) dt`
    i2: T,
    k11: T,
    k12: T,
    k22: T,
    /// Jump of the old quantile function at an empty cell's position.
    kink: T,
}

/// Statistics of one u-block solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UBlockStats {
    pub iterations: usize,
    pub releases: usize,
    pub objective: f64,
}

pub(crate) struct UProblem<'a, T> {
    grid: &'a Grid1D<T>,
    tau: T,
    m2: Vec<T>,
    pot: Vec<T>,
    target: Vec<QuantileSegment<T>>,
    /// `jump[j]` is the gap `target[j].x0 − target[j−1].x1` (0 for `j = 0`).
    jump: Vec<T>,
    /// Mass coordinates of the jumps, increasing.
    jump_at: Vec<T>,
}

impl<T: Real> CellTerms<T> {
    fn zero() -> Self {
        let z = T::zero();
        Self {
            i1: z,
            i2: z,
            k11: z,
            k12: z,
            k22: z,
            kink: z,
        }
    }
}

impl<'a, T: Real> UProblem<'a, T> {
    pub(crate) fn new(grid: &'a Grid1D<T>, target: &ProbabilityDensity<T>, pot: Vec<T>, tau: T) -> Self {
        let h = grid.h();
        let h2_12 = h * h / T::lit(12.0);
        let m2 = (0..grid.len())
            .map(|i| {
                let x = grid.center(i);
                x * x + h2_12
            })
            .collect();
        let target = target.segments();
        let mut jump = vec![T::zero(); target.len()];
        for j in 1..target.len() {
            jump[j] = (target[j].x0 - target[j - 1].x1).max(T::zero());
        }
        let jump_at = (1..target.len())
            .filter(|&j| jump[j] > T::zero())
            .map(|j| target[j].s0)
            .collect();
        Self {
            grid,
            tau,
            m2,
            pot,
            target,
            jump,
            jump_at,
        }
    }

    fn slope(&self, j: usize) -> T {
        let s = &self.target[j];
        (s.x1 - s.x0) / (s.s1 - s.s0)
    }

    pub(crate) fn objective(&self, cdf: &[T]) -> T {
        let h = self.grid.h();
        let half = T::lit(0.5);
        let w2 = w2_squared_segments(&segments_from_cdf(self.grid, cdf), &self.target);
        let mut acc = T::zero();
        for k in 0..self.grid.len() {
            let d = cdf[k + 1] - cdf[k];
            acc += half * d * d / h + d * self.pot[k];
        }
        half * w2 / self.tau + acc
    }

    /// Per-cell integrals against the old quantile function.
    fn cell_terms(&self, cdf: &[T]) -> Vec<CellTerms<T>> {
        let n = self.grid.len();
        let nt = self.target.len();
        let third = T::one() / T::lit(3.0);
        let sixth = T::one() / T::lit(6.0);
        let half = T::lit(0.5);
        let four = T::lit(4.0);
        let mut out = vec![CellTerms::zero(); n];
        let mut j = 0;
        for (k, terms) in out.iter_mut().enumerate() {
            let (a, b) = (cdf[k], cdf[k + 1]);
            while j + 1 < nt && self.target[j].s1 <= a {
                j += 1;
            }
            let d = b - a;
            if d <= T::zero() {
                let x = self.target[j].at(a.max(self.target[j].s0));
                let c = self.slope(j);
                let kink = if j > 0 && a <= self.target[j].s0 {
                    self.jump[j]
                } else {
                    T::zero()
                };
                *terms = CellTerms {
                    i1: half * x,
                    i2: half * x,
                    k11: c * third,
                    k12: c * sixth,
                    k22: c * third,
                    kink,
                };
                continue;
            }
            let mut t = CellTerms::zero();
            let mut jj = j;
            while jj < nt && self.target[jj].s0 < b {
                let seg = &self.target[jj];
                if jj > 0 && seg.s0 >= a && self.jump[jj] > T::zero() {
                    let ts = (seg.s0 - a) / d;
                    let w = self.jump[jj] / d;
                    t.k11 += (T::one() - ts) * (T::one() - ts) * w;
                    t.k12 += ts * (T::one() - ts) * w;
                    t.k22 += ts * ts * w;
                }
                let p = seg.s0.max(a);
                let q = seg.s1.min(b);
                if q > p {
                    let (tp, tq) = ((p - a) / d, (q - a) / d);
                    let tm = half * (tp + tq);
                    let (xp, xq, xm) = (seg.at(p), seg.at(q), seg.at(half * (p + q)));
                    // Simpson is exact for these quadratic integrands
                    let wdt = (tq - tp) / T::lit(6.0);
                    t.i1 += wdt * ((T::one() - tp) * xp + four * (T::one() - tm) * xm + (T::one() - tq) * xq);
                    t.i2 += wdt * (tp * xp + four * tm * xm + tq * xq);
                    let c = self.slope(jj);
                    let (up, uq) = (T::one() - tp, T::one() - tq);
                    t.k11 += c * (up * up * up - uq * uq * uq) * third;
                    t.k22 += c * (tq * tq * tq - tp * tp * tp) * third;
                    t.k12 += c * ((tq * tq - tp * tp) * half - (tq * tq * tq - tp * tp * tp) * third);
                }
                if seg.s1 >= b {
                    break;
                }
                jj += 1;
            }
            *terms = t;
        }
        out
    }

    /// Gradient at the edges `0..=n` (end entries unused) and the tridiagonal
    /// Hessian (`diag[k]`, `off[k]` coupling edges `k` and `k + 1`).
    #[cfg(test)]
    fn derivatives(&self, cdf: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let (g, _, diag, off) = self.derivatives_both(cdf);
        (g, diag, off)
    }

    /// As `derivatives`, plus the gradient for downward moves: empty cells
    /// sitting on a jump of the old quantile function make the objective
    /// kink there, and `g` is the derivative for upward moves.
    fn derivatives_both(&self, cdf: &[T]) -> (Vec<T>, Vec<T>, Vec<T>, Vec<T>) {
        let n = self.grid.len();
        let h = self.grid.h();
        let inv_h = h.recip();
        let inv_2tau = T::lit(0.5) / self.tau;
        let h_tau = h / self.tau;
        let half_h_tau = T::lit(0.5) * h_tau;
        let two = T::lit(2.0);
        let terms = self.cell_terms(cdf);
        let mut g = vec![T::zero(); n + 1];
        let mut diag = vec![T::zero(); n + 1];
        let mut off = vec![T::zero(); n];
        for k in 1..n {
            let (dl, dr) = (cdf[k] - cdf[k - 1], cdf[k + 1] - cdf[k]);
            g[k] = inv_2tau * (self.m2[k - 1] - self.m2[k] + two * h * (terms[k - 1].i2 + terms[k].i1))
                + (dl - dr) * inv_h
                + self.pot[k - 1]
                - self.pot[k];
            diag[k] = h_tau * (terms[k - 1].k22 + terms[k].k11) + two * inv_h;
        }
        for (k, o) in off.iter_mut().enumerate() {
            *o = h_tau * terms[k].k12 - inv_h;
        }
        let mut g_down = g.clone();
        for k in 1..n {
            g_down[k] -= half_h_tau * (terms[k - 1].kink + terms[k].kink);
        }
        (g, g_down, diag, off)
    }
}

#[derive(Debug, Clone, Copy)]
struct Group {
    lo: usize,
    hi: usize,
}

/// What limits a line search: a cell closing, or an empty-cell group
/// reaching a jump of the old quantile function.
#[derive(Debug, Clone, Copy)]
enum Block<T> {
    Close(usize),
    Kink { group: Group, at: T },
}

fn groups<T: Real>(cdf: &[T]) -> Vec<Group> {
    let mut out = Vec::new();
    let mut lo = 0;
    for k in 0..cdf.len() - 1 {
        if cdf[k + 1] > cdf[k] {
            out.push(Group { lo, hi: k });
            lo = k + 1;
        }
    }
    out.push(Group { lo, hi: cdf.len() - 1 });
    out
}

/// Moves the group holding edge `k + 1` onto `F_k` (or the lower group onto
/// `F_{k+1}` when the upper one is pinned at 1), closing cell `k`.
fn close_cell<T: Real>(cdf: &mut [T], k: usize) {
    let n = cdf.len() - 1;
    let mut hi = k + 1;
    while hi < n && cdf[hi + 1] == cdf[k + 1] {
        hi += 1;
    }
    if hi < n {
        let target = cdf[k];
        for f in &mut cdf[k + 1..=hi] {
            *f = target;
        }
    } else {
        let mut lo = k;
        while lo > 0 && cdf[lo - 1] == cdf[k] {
            lo -= 1;
        }
        let target = cdf[k + 1];
        for f in &mut cdf[lo..=k] {
            *f = target;
        }
    }
}

/// Puts free empty-cell groups lying within `SNAP` of a kink exactly on it.
fn snap_to_jumps<T: Real>(prob: &UProblem<'_, T>, cdf: &mut [T]) -> bool {
    let n = cdf.len() - 1;
    let tol = T::lit(SNAP);
    let mut moved = false;
    for grp in groups(cdf) {
        if grp.lo == grp.hi || grp.lo == 0 || grp.hi == n {
            continue;
        }
        let f = cdf[grp.lo];
        let i = prob.jump_at.partition_point(|&s| s < f);
        let nearest = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| prob.jump_at.get(j).copied())
            .min_by(|a, b| (*a - f).abs().partial_cmp(&(*b - f).abs()).expect("finite"));
        if let Some(s) = nearest {
            if s != f && (s - f).abs() <= tol && s > cdf[grp.lo - 1] && s < cdf[grp.hi + 1] {
                cdf[grp.lo..=grp.hi].iter_mut().for_each(|x| *x = s);
                moved = true;
            }
        }
    }
    moved
}

/// Newton direction on the free groups (positive entries move a group down).
fn reduced_newton<T: Real>(gs: &[Group], free: &[usize], group_grad: &[T], hd: &[T], ho: &[T]) -> Vec<T> {
    let m = free.len();
    let mut rg = vec![T::zero(); m];
    let mut rd = vec![T::zero(); m];
    let mut ro = vec![T::zero(); m.saturating_sub(1)];
    for (r, &j) in free.iter().enumerate() {
        let Group { lo, hi } = gs[j];
        rg[r] = group_grad[j];
        for k in lo..=hi {
            rd[r] += hd[k];
            if k < hi {
                rd[r] += T::lit(2.0) * ho[k];
            }
        }
        if r + 1 < m && gs[free[r + 1]].lo == hi + 1 {
            ro[r] = ho[hi];
        }
    }
    match TridiagonalFactor::new(rd.clone(), ro) {
        Some(f) => f.solve(&rg),
        None => rg
            .iter()
            .zip(&rd)
            .map(|(&a, &b)| a / b.abs().max(T::epsilon()))
            .collect(),
    }
}

pub(crate) fn solve_u<T: Real>(prob: &UProblem<'_, T>, start: &[T]) -> Result<(Vec<T>, UBlockStats)> {
    let n = prob.grid.len();
    let mut cdf = start.to_vec();
    let mut value = prob.objective(&cdf);
    let mut releases = 0;
    let thin = T::lit(THIN_CELL);
    let mut last_release = T::infinity();
    for iter in 0..MAX_ITER {
        let mut snapped = cdf.clone();
        if snap_to_jumps(prob, &mut snapped) {
            let sv = prob.objective(&snapped);
            if sv <= value {
                cdf = snapped;
                value = sv;
            }
        }
        let (g, gd, hd, ho) = prob.derivatives_both(&cdf);
        let scale = T::one() + value.abs();
        let grad_tol = T::lit(1e-11) * (T::one() + prob.grid.half_width().powi(2) / prob.tau) * prob.grid.h();

        let gs = groups(&cdf);
        // one-sided group gradients; a group whose two sides disagree on
        // the descent direction sits at a kink and stays put
        let mut group_grad = Vec::with_capacity(gs.len());
        let mut kinked = Vec::with_capacity(gs.len());
        let mut free = Vec::new();
        for (j, grp) in gs.iter().enumerate() {
            let up: T = g[grp.lo..=grp.hi].iter().copied().sum();
            let down: T = gd[grp.lo..=grp.hi].iter().copied().sum();
            group_grad.push(if up < T::zero() { up } else { down.max(T::zero()) });
            kinked.push(up != down);
            if grp.lo != 0 && grp.hi != n && (up < T::zero() || down > T::zero() || up == down) {
                free.push(j);
            }
        }

        let mut step = vec![T::zero(); n + 1];
        let mut decrement = T::zero();
        loop {
            if free.is_empty() {
                break;
            }
            let dir = reduced_newton(&gs, &free, &group_grad, &hd, &ho);
            // a kinked group must move the way its one-sided gradient assumed
            let before = free.len();
            let mut keep = Vec::with_capacity(before);
            for (r, &j) in free.iter().enumerate() {
                let moves_up = dir[r] < T::zero();
                let assumed_up = group_grad[j] < T::zero();
                if !kinked[j] || dir[r] == T::zero() || moves_up == assumed_up {
                    keep.push(j);
                }
            }
            if keep.len() < before {
                free = keep;
                continue;
            }
            for (r, &j) in free.iter().enumerate() {
                let Group { lo, hi } = gs[j];
                for s in &mut step[lo..=hi] {
                    *s = -dir[r];
                }
                decrement += group_grad[j] * dir[r];
            }
            break;
        }

        // tie thin cells the direction would close
        let mut tied = false;
        for k in 0..n {
            let d = cdf[k + 1] - cdf[k];
            if d > T::zero() && d < thin && step[k + 1] < step[k] {
                close_cell(&mut cdf, k);
                tied = true;
            }
        }
        if tied {
            value = prob.objective(&cdf);
            continue;
        }

        let converged_newton = decrement <= T::lit(1e-13) * scale;
        if !converged_newton {
            let mut alpha_max = T::one();
            let mut blocking = None;
            for k in 0..n {
                let d = cdf[k + 1] - cdf[k];
                let rate = step[k + 1] - step[k];
                if d > T::zero() && rate < T::zero() {
                    let a = -d / rate;
                    if a < alpha_max {
                        alpha_max = a;
                        blocking = Some(Block::Close(k));
                    }
                }
            }
            // empty-cell groups stop at the first kink they would cross
            for grp in &gs {
                let (f, s) = (cdf[grp.lo], step[grp.lo]);
                if grp.lo == grp.hi || s == T::zero() {
                    continue;
                }
                let next = if s > T::zero() {
                    prob.jump_at.get(prob.jump_at.partition_point(|&x| x <= f)).copied()
                } else {
                    prob.jump_at
                        .partition_point(|&x| x < f)
                        .checked_sub(1)
                        .map(|i| prob.jump_at[i])
                };
                if let Some(at) = next {
                    let a = (at - f) / s;
                    if a < alpha_max {
                        alpha_max = a;
                        blocking = Some(Block::Kink { group: *grp, at });
                    }
                }
            }
            let slope = -decrement;
            let mut alpha = alpha_max;
            let mut accepted = false;
            for _ in 0..80 {
                let mut trial: Vec<T> = cdf.iter().zip(&step).map(|(&f, &s)| f + alpha * s).collect();
                trial[0] = T::zero();
                trial[n] = T::one();
                let at_bound = alpha == alpha_max && blocking.is_some();
                match blocking {
                    Some(Block::Close(k)) if at_bound => close_cell(&mut trial, k),
                    Some(Block::Kink { group, at }) if at_bound => {
                        trial[group.lo..=group.hi].iter_mut().for_each(|x| *x = at)
                    }
                    _ => {}
                }
                for k in 1..=n {
                    if trial[k] < trial[k - 1] {
                        trial[k] = trial[k - 1];
                    }
                }
                let tv = prob.objective(&trial);
                if tv <= value + T::lit(1e-4) * alpha * slope + T::lit(4.0) * T::epsilon() * scale {
                    // a step that passes only on the round-off allowance is not progress
                    if tv > value {
                        break;
                    }
                    accepted = tv < value || at_bound;
                    cdf = trial;
                    value = tv;
                    break;
                }
                alpha *= T::lit(0.5);
            }
            if accepted {
                continue;
            }
            if decrement > T::lit(1e-9) * scale {
                return Err(Error::NewtonFailure {
                    what: "u-block line search",
                    residual: decrement.as_f64(),
                });
            }
        }

        // release the most violated tied cell, if any
        let gs = groups(&cdf);
        let min_gain = T::lit(1e-14) * scale;
        let mut best: Option<(T, usize, bool)> = None;
        for grp in &gs {
            if grp.hi == grp.lo {
                continue;
            }
            let left_fixed = grp.lo == 0;
            let right_fixed = grp.hi == n;
            if left_fixed && right_fixed {
                continue;
            }
            let room_up = if right_fixed {
                T::zero()
            } else {
                cdf[grp.hi + 1] - cdf[grp.hi]
            };
            let room_down = if left_fixed {
                T::zero()
            } else {
                cdf[grp.lo] - cdf[grp.lo - 1]
            };
            let mut upper: T = g[grp.lo..=grp.hi].iter().copied().sum();
            let mut lower = T::zero();
            for k in grp.lo..grp.hi {
                upper -= g[k];
                lower += gd[k];
                // moves that could gain less than the objective resolves are
                // not violations
                for (v, room, up) in [(-upper, room_up, true), (lower, room_down, false)] {
                    if v > grad_tol && v * room > min_gain && best.is_none_or(|(bv, _, _)| v > bv) {
                        best = Some((v, k, up));
                    }
                }
            }
        }
        match best {
            // a release that bought nothing since the previous one ends the
            // solve instead of cycling
            Some(_) if value > last_release - min_gain => return Ok((cdf, stats(iter, releases, value))),
            Some((viol, k, move_upper)) => {
                last_release = value;
                // open cell k by a Newton step along the moving sub-group,
                // capped by the mass of the neighbouring cell it borrows from
                let grp = gs.iter().find(|g| g.lo <= k && k < g.hi).copied().unwrap();
                let (a, b, room) = if move_upper {
                    (k + 1, grp.hi, cdf[grp.hi + 1] - cdf[grp.hi])
                } else {
                    (grp.lo, k, cdf[grp.lo] - cdf[grp.lo - 1])
                };
                let mut curv = T::zero();
                for i in a..=b {
                    curv += hd[i];
                    if i < b {
                        curv += T::lit(2.0) * ho[i];
                    }
                }
                let mut delta = (viol / curv.max(T::epsilon())).min(room);
                let mut opened = false;
                for _ in 0..60 {
                    let mut trial = cdf.clone();
                    for f in &mut trial[a..=b] {
                        if move_upper {
                            *f += delta;
                        } else {
                            *f -= delta;
                        }
                    }
                    if move_upper && delta == room {
                        trial[a..=b].iter_mut().for_each(|f| *f = cdf[b + 1]);
                    } else if !move_upper && delta == room {
                        trial[a..=b].iter_mut().for_each(|f| *f = cdf[a - 1]);
                    }
                    let tv = prob.objective(&trial);
                    if tv < value {
                        cdf = trial;
                        value = tv;
                        opened = true;
                        break;
                    }
                    delta *= T::lit(0.5);
                }
                if opened {
                    releases += 1;
                    continue;
                }
                return Ok((cdf, stats(iter, releases, value)));
            }
            None => return Ok((cdf, stats(iter, releases, value))),
        }
    }
    Err(Error::NoConvergence {
        what: "u-block",
        iterations: MAX_ITER,
        last_change: value.as_f64(),
    })
}

fn stats<T: Real>(iterations: usize, releases: usize, value: T) -> UBlockStats {
    UBlockStats {
        iterations,
        releases,
        objective: value.as_f64(),
    }
}

/// Transport-penalized step for `u` with the potential `V = W + εφ(v)`
/// frozen, started from `guess`.
pub fn u_block_potential<T: Real>(
    u_prev: &ProbabilityDensity<T>,
    potential: Vec<T>,
    tau: T,
    guess: &ProbabilityDensity<T>,
) -> Result<(ProbabilityDensity<T>, UBlockStats)> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {tau}"
        )));
    }
    let grid = u_prev.grid();
    let prob = UProblem::new(grid, u_prev, potential, tau);
    let (cdf, st) = solve_u(&prob, guess.cdf())?;
    Ok((ProbabilityDensity::from_cdf_unchecked(*grid, cdf), st))
}

/// Implicit transport step for `u` with `v` frozen.
pub fn u_block<T: Real>(
    u_prev: &ProbabilityDensity<T>,
    v: &[T],
    p: &ModelParams<T>,
    tau: T,
) -> Result<ProbabilityDensity<T>> {
    let pot = p.potential(u_prev.grid(), v);
    u_block_potential(u_prev, pot, tau, u_prev).map(|(u, _)| u)
}
