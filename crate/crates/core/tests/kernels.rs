use std::f64::consts::PI;

use chemoflow::kernels::{
    dh1_lq_norm, grad_iterate_lq, heat_kernel3d, implicit_heat_kernel_sum, iterate_bound_sequence, lattice_resolvent,
    neumann_resolvent_apply, regularity_p2_ratio, resolvent_1d_kernel, solve_resolvent_1d, yq_constant,
    yukawa_derivatives, yukawa_g, RadialKernel, ResolventSolver1D, REGULARITY_C2,
};
use chemoflow::{Error, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn yukawa(kappa: f64, x: [f64; 3]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    (-kappa.sqrt() * r).exp() / (4.0 * PI * r)
}

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h))
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Thomas algorithm for `diag x_i + off (x_{i−1} + x_{i+1}) = rhs`.
fn thomas(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (mut c, mut d) = (vec![0.0; n], vec![0.0; n]);
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off * c[i - 1];
        c[i] = off / m;
        d[i] = (rhs[i] - off * d[i - 1]) / m;
    }
    let mut x = d.clone();
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// `(I − σΔ_h)⁻¹ f` with the reflecting ghost-cell closure.
fn neumann_solve(n: usize, h: f64, sigma: f64, f: &[f64]) -> Vec<f64> {
    let s = sigma / (h * h);
    let diag: Vec<f64> = (0..n)
        .map(|i| 1.0 + if i == 0 || i + 1 == n { s } else { 2.0 * s })
        .collect();
    thomas(&diag, -s, f)
}

#[test]
fn yukawa_value_is_the_screened_potential() {
    for (kappa, r) in [(1.0, 1.0), (4.0, 0.5), (0.3, 2.7)] {
        let want = (-f64::sqrt(kappa) * r).exp() / (4.0 * PI * r);
        assert!((yukawa_g(kappa, r).unwrap() - want).abs() < 1e-15);
    }
    assert!(yukawa_g(0.0, 1.0).is_err());
    assert!(yukawa_g(1.0, 0.0).is_err());
}

#[test]
fn yukawa_derivatives_match_finite_differences() {
    let kappa = 1.7;
    let x = [0.4, -0.7, 0.9];
    let d = yukawa_derivatives(kappa, x).unwrap();
    let e = 1e-5;
    let bump = |i: usize, s: f64| {
        let mut y = x;
        y[i] += s;
        y
    };
    for i in 0..3 {
        let fd = (yukawa(kappa, bump(i, e)) - yukawa(kappa, bump(i, -e))) / (2.0 * e);
        assert!((d.gradient[i] - fd).abs() < 1e-8);
        for j in 0..3 {
            let gp = yukawa_derivatives(kappa, bump(j, e)).unwrap().gradient[i];
            let gm = yukawa_derivatives(kappa, bump(j, -e)).unwrap().gradient[i];
            assert!((d.hessian[i][j] - (gp - gm) / (2.0 * e)).abs() < 1e-7);
            for k in 0..3 {
                let hp = yukawa_derivatives(kappa, bump(k, e)).unwrap().hessian[i][j];
                let hm = yukawa_derivatives(kappa, bump(k, -e)).unwrap().hessian[i][j];
                assert!((d.third[i][j][k] - (hp - hm) / (2.0 * e)).abs() < 1e-6);
            }
        }
    }
    let trace = d.hessian[0][0] + d.hessian[1][1] + d.hessian[2][2];
    assert!((trace - kappa * d.value).abs() < 1e-12);
}

#[test]
fn heat_kernel_has_unit_mass_and_semigroup() {
    for t in [0.3f64, 1.0, 2.5] {
        let mass = simpson(0.0, 30.0 * t.sqrt(), 4000, |r| {
            4.0 * PI * r * r * heat_kernel3d(t, r).unwrap()
        });
        assert!((mass - 1.0).abs() < 1e-10);
    }
    let (a, b) = (RadialKernel::heat(0.4).unwrap(), RadialKernel::heat(0.9).unwrap());
    for r in [0.0, 0.5, 1.5, 3.0] {
        assert!(
            (a.convolve(&b, r) - heat_kernel3d(1.3f64, r).unwrap()).abs() < 1e-8,
            "r={r}"
        );
    }
}

#[test]
fn first_two_iterates_have_closed_forms() {
    for sigma in [0.5, 1.0, 2.0] {
        let sq = f64::sqrt(sigma);
        let y1 = RadialKernel::iterate(sigma, 1).unwrap();
        let y2 = RadialKernel::iterate(sigma, 2).unwrap();
        for r in [0.05, 0.3, 1.0, 2.0, 5.0] {
            let one = (-r / sq).exp() / (4.0 * PI * sigma * r);
            let two = (-r / sq).exp() / (8.0 * PI * sigma * sq);
            assert!((y1.value(r) / one - 1.0).abs() < 1e-8, "k=1 σ={sigma} r={r}");
            assert!((y2.value(r) / two - 1.0).abs() < 1e-6, "k=2 σ={sigma} r={r}");
        }
        for k in [2, 3, 5] {
            let y = RadialKernel::iterate(sigma, k).unwrap();
            let mass = simpson(0.0, y.extent(), 20_000, |r| 4.0 * PI * r * r * y.value(r));
            assert!((mass - 1.0).abs() < 1e-6, "σ={sigma} k={k}: {mass}");
        }
    }
    assert!(RadialKernel::iterate(1.0, 0).is_err());
}

#[test]
fn heat_gradient_norms_match_quadrature() {
    assert!((dh1_lq_norm(1.0).unwrap() - 2.0 / PI.sqrt()).abs() < 1e-14);
    for q in [1.0f64, 1.1, 1.25, 1.4] {
        let grad = |r: f64| 0.5 * r * heat_kernel3d(1.0, r).unwrap();
        let integral = simpson(0.0, 30.0, 20_000, |r| 4.0 * PI * r * r * grad(r).powf(q));
        assert!(
            (dh1_lq_norm(q).unwrap() - integral.powf(1.0 / q)).abs() < 1e-10,
            "q={q}"
        );
    }
    assert!((yq_constant(1.0f64).unwrap() - 2.0).abs() < 1e-13);
    assert!(matches!(dh1_lq_norm(1.5), Err(Error::InvalidParameter(_))));
    assert!(dh1_lq_norm(0.9).is_err());
}

#[test]
fn iterate_gradient_bound_off_the_tabulated_grid() {
    for (sigma, k, q) in [(0.7, 3, 1.3), (1.5, 5, 1.1), (0.25, 2, 1.45)] {
        let b = grad_iterate_lq(sigma, k, q).unwrap();
        assert!(
            b.norm <= b.bound * (1.0 + 1e-8),
            "σ={sigma} k={k} q={q}: {} > {}",
            b.norm,
            b.bound
        );
    }
    let a = iterate_bound_sequence(1.2, 30).unwrap();
    assert!(a.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn one_dimensional_resolvent_kernel() {
    let kappa = 2.0f64;
    for x in [-1.5, 0.0, 0.4] {
        let want = (-kappa.sqrt() * f64::abs(x)).exp() / (2.0 * kappa.sqrt());
        assert!((resolvent_1d_kernel(kappa, x).unwrap() - want).abs() < 1e-15);
    }
}

#[test]
fn lattice_green_function_matches_direct_solve() {
    let (n, h, sigma) = (801, 0.05, 0.02);
    let mut rhs = vec![0.0; n];
    rhs[n / 2] = 1.0;
    let x = neumann_solve(n, h, sigma, &rhs);
    let k = lattice_resolvent(sigma, h).unwrap();
    for d in 0..40usize {
        let want = k.amplitude * k.ratio.powi(d as i32);
        assert!((x[n / 2 + d] - want).abs() < 1e-13);
    }
}

#[test]
fn image_sum_matches_reflecting_solve() {
    let grid = Grid::new(2.0, 50).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for sigma in [1e-3, 0.05, 2.0] {
        let got = neumann_resolvent_apply(&grid, sigma, &f).unwrap();
        let want = neumann_solve(50, grid.h(), sigma, &f);
        let err = got.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "σ={sigma}: {err}");
    }
    assert_eq!(neumann_resolvent_apply(&grid, 0.1, &f[..10]), Err(Error::GridMismatch));
}

#[test]
fn kernel_sum_matches_repeated_implicit_steps() {
    let grid = Grid::new(3.0, 60).unwrap();
    let (kappa, tau) = (0.8, 0.07);
    let v0 = grid.sample(|x| (-(x - 0.4) * (x - 0.4)).exp() + 0.2);
    let mut v = v0.clone();
    for n in 1..=12 {
        let rhs: Vec<f64> = v.iter().map(|x| x / (1.0 + kappa * tau)).collect();
        v = neumann_solve(60, grid.h(), tau / (1.0 + kappa * tau), &rhs);
        let sum = implicit_heat_kernel_sum(&grid, kappa, tau, &v0, n).unwrap();
        let err = sum.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "n={n}: {err}");
    }
}

#[test]
fn resolvent_solver_inverts_its_operator() {
    let grid = Grid::new(4.0, 120).unwrap();
    let solver = ResolventSolver1D::new(grid, 1.3).unwrap();
    let f = grid.sample(|x| x.sin() * (-x * x / 4.0).exp());
    let h = solve_resolvent_1d(&grid, &f, &solver).unwrap();
    let back = solver.apply(&h).unwrap();
    assert!(back.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-12));
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let g: Vec<f64> = (0..120).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(regularity_p2_ratio(&solver, &g).unwrap() <= REGULARITY_C2);
    }
    let other = Grid::new(4.0, 100).unwrap();
    assert_eq!(solve_resolvent_1d(&other, &f[..100], &solver), Err(Error::GridMismatch));
    assert!(ResolventSolver1D::new(grid, 0.0).is_err());
}
