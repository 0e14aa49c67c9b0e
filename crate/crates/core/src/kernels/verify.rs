use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    dh1_lq_norm, dh1_lq_norm_quadrature, grad_iterate_lq, heat_kernel3d, implicit_heat_kernel_sum,
    iterate_bound_sequence, radial_convolution, regularity_p2_ratio, resolvent_1d_kernel, solve_resolvent_1d,
    yq_constant, yukawa_derivatives, yukawa_g, RadialKernel, ResolventSolver1D, REGULARITY_C2,
};
use crate::domain::Grid1D;
use crate::error::Result;
use crate::linalg::TridiagonalFactor;
use crate::special::log_trapezoid;

const PI: f64 = std::f64::consts::PI;
const SEED: u64 = 0x6b65726e;

/// One line of the kernel verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `|lhs − rhs| ≤ tol`.
    pub fn equal(check: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            check: check.into(),
            lhs,
            rhs,
            tol,
            pass: (lhs - rhs).abs() <= tol,
        }
    }

    /// Passes when `lhs ≤ rhs + tol`.
    pub fn at_most(check: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            check: check.into(),
            lhs,
            rhs,
            tol,
            pass: lhs <= rhs + tol,
        }
    }
}

/// Worst pair `(computed, reference)` by absolute difference.
fn worst(pairs: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    pairs.into_iter().fold((0.0, 0.0), |acc, p| {
        if (p.0 - p.1).abs() > (acc.0 - acc.1).abs() {
            p
        } else {
            acc
        }
    })
}

fn random_point(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let x = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if r2 > 0.25 {
            return x;
        }
    }
}

fn yukawa_rows(rows: &mut Vec<CheckRow>) -> Result<()> {
    let e1 = (-1.0f64).exp();
    rows.push(CheckRow::equal(
        "yukawa_G_k1_r1",
        yukawa_g(1.0, 1.0)?,
        e1 / (4.0 * PI),
        1e-15,
    ));
    rows.push(CheckRow::equal(
        "yukawa_G_k4_r0.5",
        yukawa_g(4.0, 0.5)?,
        e1 / (2.0 * PI),
        1e-15,
    ));
    let y2 = RadialKernel::iterate(2.0, 1)?.value(1.0);
    rows.push(CheckRow::equal(
        "yukawa_scaling_sigma2_r1",
        y2,
        yukawa_g(0.5, 1.0)? / 2.0,
        1e-10,
    ));
    let g = yukawa_derivatives(1.0, [1.0, 0.0, 0.0])?;
    rows.push(CheckRow::equal(
        "yukawa_gradient_x100",
        g.gradient[0],
        -2.0 * e1 / (4.0 * PI),
        1e-15,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let step = 1e-5;
    let (mut grad_err, mut hess_err, mut third_err, mut trace_err, mut sym_err) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let kappa = rng.gen_range(0.25..4.0);
        let x = random_point(&mut rng);
        let d = yukawa_derivatives(kappa, x)?;
        for i in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[i] += step;
            xm[i] -= step;
            let (dp, dm) = (yukawa_derivatives(kappa, xp)?, yukawa_derivatives(kappa, xm)?);
            grad_err = grad_err.max(((dp.value - dm.value) / (2.0 * step) - d.gradient[i]).abs());
            for j in 0..3 {
                let fd = (dp.gradient[j] - dm.gradient[j]) / (2.0 * step);
                hess_err = hess_err.max((fd - d.hessian[i][j]).abs());
                for k in 0..3 {
                    let fd = (dp.hessian[j][k] - dm.hessian[j][k]) / (2.0 * step);
                    third_err = third_err.max((fd - d.third[i][j][k]).abs());
                    let t = d.third[i][j][k];
                    sym_err = sym_err
                        .max((t - d.third[j][i][k]).abs())
                        .max((t - d.third[i][k][j]).abs())
                        .max((t - d.third[k][j][i]).abs());
                }
                sym_err = sym_err.max((d.hessian[i][j] - d.hessian[j][i]).abs());
            }
        }
        let tr = d.hessian[0][0] + d.hessian[1][1] + d.hessian[2][2];
        trace_err = trace_err.max((tr - kappa * d.value).abs());
    }
    rows.push(CheckRow::at_most("yukawa_gradient_fd", grad_err, 0.0, 1e-6));
    rows.push(CheckRow::at_most("yukawa_hessian_fd", hess_err, 0.0, 1e-6));
    rows.push(CheckRow::at_most("yukawa_third_fd", third_err, 0.0, 1e-6));
    rows.push(CheckRow::at_most("yukawa_hessian_trace", trace_err, 0.0, 1e-8));
    rows.push(CheckRow::at_most("yukawa_tensor_symmetry", sym_err, 0.0, 1e-14));
    Ok(())
}

fn heat_rows(rows: &mut Vec<CheckRow>) -> Result<()> {
    rows.push(CheckRow::equal(
        "heat_origin_t1",
        heat_kernel3d(1.0, 0.0)?,
        (4.0 * PI).powf(-1.5),
        1e-16,
    ));
    let h1 = RadialKernel::heat(1.0)?;
    rows.push(CheckRow::equal("heat_mass_t1", h1.mass(), 1.0, 1e-8));
    let (lhs, rhs) = worst(
        [0.1, 0.5, 1.0, 2.0, 4.0]
            .into_iter()
            .map(|r| (h1.convolve(&h1, r), heat_kernel3d(2.0, r).unwrap_or(f64::NAN))),
    );
    rows.push(CheckRow::equal("heat_semigroup_t1_t1", lhs, rhs, 1e-6));
    Ok(())
}

fn iterate_rows(rows: &mut Vec<CheckRow>) -> Result<()> {
    let sigma = 1.0;
    let y1 = RadialKernel::iterate(sigma, 1)?;
    rows.push(CheckRow::equal(
        "iterate_k1_equals_yukawa",
        y1.value(1.0),
        yukawa_g(1.0, 1.0)?,
        1e-10,
    ));
    let yuk = RadialKernel::yukawa(1.0 / sigma)?;
    let y2 = RadialKernel::iterate(sigma, 2)?;
    let radii = [0.1, 0.5, 1.0, 2.0, 4.0];
    let (lhs, rhs) = worst(radii.iter().map(|&r| {
        let self_conv = radial_convolution(|s| yuk.value(s) / sigma, yuk.extent(), 1.0, &yuk, r) / sigma;
        (self_conv, y2.value(r))
    }));
    rows.push(CheckRow::equal("iterate_k2_self_convolution", lhs, rhs, 1e-6));
    for k in [1, 2, 4] {
        let m = RadialKernel::iterate(sigma, k)?.mass();
        rows.push(CheckRow::equal(format!("iterate_mass_k{k}"), m, 1.0, 1e-6));
    }
    for total in 2..=6u32 {
        let direct = RadialKernel::iterate(sigma, total)?;
        let mut pairs = Vec::new();
        for k1 in 1..=total / 2 {
            let a = RadialKernel::iterate(sigma, k1)?;
            let b = RadialKernel::iterate(sigma, total - k1)?;
            for &r in &radii {
                pairs.push((a.convolve(&b, r), direct.value(r)));
            }
        }
        let (lhs, rhs) = worst(pairs);
        rows.push(CheckRow::equal(format!("iterate_semigroup_k{total}"), lhs, rhs, 1e-5));
    }
    Ok(())
}

fn gradient_bound_rows(rows: &mut Vec<CheckRow>) -> Result<()> {
    let qs = [1.0, 1.2, 1.4];
    for q in qs {
        rows.push(CheckRow::equal(
            format!("DH1_L{q}_closed_form"),
            dh1_lq_norm_quadrature(q)?,
            dh1_lq_norm(q)?,
            1e-10,
        ));
    }
    rows.push(CheckRow::equal(
        "DH1_L1_equals_2_over_sqrt_pi",
        dh1_lq_norm(1.0)?,
        2.0 / PI.sqrt(),
        1e-14,
    ));
    rows.push(CheckRow::equal("Y1_equals_2", yq_constant(1.0)?, 2.0, 1e-8));
    let tight = grad_iterate_lq(1.0, 1, 1.0)?;
    rows.push(CheckRow::equal("Yq_tight_q1_sigma1_k1", tight.norm, 2.0, 1e-8));
    for q in qs {
        for sigma in [0.5, 1.0, 2.0] {
            for k in [1u32, 2, 4] {
                let b = grad_iterate_lq(sigma, k, q)?;
                rows.push(CheckRow::at_most(
                    format!("Yq_bound_q{q}_sigma{sigma}_k{k}"),
                    b.norm,
                    b.bound,
                    1e-8,
                ));
            }
        }
    }
    for q in qs {
        let a = iterate_bound_sequence(q, 50)?;
        let rise = a.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        rows.push(CheckRow::at_most(format!("iterate_ak_decreasing_q{q}"), rise, 0.0, 0.0));
    }
    Ok(())
}

/// `−Δu + κu − f` for `u = G_κ ∗ f` with a smooth compactly supported bump.
fn pde_row(rows: &mut Vec<CheckRow>) -> Result<()> {
    let kappa = 1.5;
    let g = RadialKernel::yukawa(kappa)?;
    let bump = |s: f64| if s < 1.0 { (-1.0 / (1.0 - s * s)).exp() } else { 0.0 };
    let u = |r: f64| radial_convolution(bump, 1.0, 0.05, &g, r);
    let d = 1e-3;
    let mut err = 0.0f64;
    for r in [0.25, 0.5, 0.75, 0.9, 1.25, 2.0] {
        let (um, u0, up) = (u(r - d), u(r), u(r + d));
        let lap = (up - 2.0 * u0 + um) / (d * d) + (up - um) / (d * r);
        err = err.max((-lap + kappa * u0 - bump(r)).abs());
    }
    rows.push(CheckRow::at_most("yukawa_pde_residual", err, 0.0, 1e-4));
    Ok(())
}

fn resolvent_rows(rows: &mut Vec<CheckRow>) -> Result<()> {
    // point source on a fine grid centred at 0
    let grid = Grid1D::<f64>::new(20.0, 40001)?;
    let solver = ResolventSolver1D::new(grid, 1.0)?;
    let mid = grid.len() / 2;
    let mut delta = vec![0.0; grid.len()];
    delta[mid] = 1.0 / grid.h();
    let h = solver.solve(&delta)?;
    let one = (1.0 / grid.h()).round() as usize;
    rows.push(CheckRow::equal(
        "resolvent_1d_kernel_x0",
        h[mid],
        resolvent_1d_kernel(1.0, 0.0)?,
        1e-5,
    ));
    rows.push(CheckRow::equal(
        "resolvent_1d_kernel_x1",
        h[mid + one],
        resolvent_1d_kernel(1.0, grid.center(mid + one))?,
        1e-5,
    ));
    let kappa = 2.0;
    let half = log_trapezoid(1e-12, 60.0, 0.01, |x| resolvent_1d_kernel(kappa, x).unwrap_or(f64::NAN));
    rows.push(CheckRow::equal(
        "resolvent_1d_kernel_integral",
        2.0 * half,
        1.0 / kappa,
        1e-10,
    ));

    let grid = Grid1D::<f64>::new(5.0, 200)?;
    let solver = ResolventSolver1D::new(grid, kappa)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut ident = 0.0f64;
    let mut ratio = 0.0f64;
    for _ in 0..20 {
        let f: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = solver.apply(&solve_resolvent_1d(&grid, &f, &solver)?)?;
        ident = ident.max(back.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        ratio = ratio.max(regularity_p2_ratio(&solver, &f)?);
    }
    rows.push(CheckRow::at_most("resolvent_identity", ident, 0.0, 1e-10));
    rows.push(CheckRow::at_most("regularity_p2", ratio, REGULARITY_C2, 0.0));
    let c = solve_resolvent_1d(&grid, &vec![3.0; grid.len()], &solver)?;
    let (lhs, rhs) = worst(c.iter().map(|&x| (x, 3.0 / kappa)));
    rows.push(CheckRow::equal("resolvent_constant", lhs, rhs, 1e-12));
    let r = grid.half_width();
    let f = grid.sample(|x| (PI * x / r).cos());
    let h = solve_resolvent_1d(&grid, &f, &solver)?;
    let lambda = grid.laplacian_eigenvalue(2);
    let (lhs, rhs) = worst(h.iter().zip(&f).map(|(&a, &b)| (a, b / (kappa + lambda))));
    rows.push(CheckRow::equal("resolvent_cosine_mode", lhs, rhs, 1e-8));
    Ok(())
}

/// Implicit Euler for `∂_t v = Δv − κv` by repeated tridiagonal solves
/// against the image-summed lattice kernel, for up to 20 steps.
fn kernel_sum_row(rows: &mut Vec<CheckRow>) -> Result<()> {
    let (kappa, tau) = (1.0, 0.01);
    let grid = Grid1D::<f64>::new(5.0, 200)?;
    let n = grid.len();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let diag = (0..n)
        .map(|i| 1.0 + tau * kappa + tau * inv_h2 * if i == 0 || i + 1 == n { 1.0 } else { 2.0 })
        .collect();
    let factor = TridiagonalFactor::new(diag, vec![-tau * inv_h2; n - 1])
        .ok_or_else(|| crate::Error::InvalidParameter("singular step operator".into()))?;
    let v0 = grid.sample(|x| (-x * x / 2.0).exp());
    let mut v = v0.clone();
    let mut err = 0.0f64;
    for steps in 1..=20 {
        v = factor.solve(&v);
        let sum = implicit_heat_kernel_sum(&grid, kappa, tau, &v0, steps)?;
        err = err.max(v.iter().zip(&sum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    rows.push(CheckRow::at_most("implicit_steps_kernel_sum", err, 0.0, 1e-8));
    Ok(())
}

/// Every kernel identity and bound, in a fixed order with fixed seeds.
pub fn verify_suite() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    yukawa_rows(&mut rows)?;
    heat_rows(&mut rows)?;
    iterate_rows(&mut rows)?;
    gradient_bound_rows(&mut rows)?;
    pde_row(&mut rows)?;
    resolvent_rows(&mut rows)?;
    kernel_sum_row(&mut rows)?;
    Ok(rows)
}
