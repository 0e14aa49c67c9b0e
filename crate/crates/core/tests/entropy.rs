mod common;

use chemoflow::domain::{ProbabilityDensity, ResponseFunction};
use chemoflow::entropy::{
    boltzmann_e, convexity_modulus, dirichlet_f, entropy_h, lyapunov, lyapunov_u, perturbed_potential,
};
use chemoflow::stationary::{
    el_residual, gradient_scaling_sweep, normalization_bisect, solve_stationary, verify_stationary_bounds,
};
use chemoflow::{Error, Grid};
use common::{field, gaussian, gaussian_density, params, state};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn entropy_parts_match_direct_sums() {
    let grid = Grid::new(3.0, 75).unwrap();
    let h = grid.h();
    let s = state(gaussian_density(grid, 0.4, 0.7), field(grid, |x| 1.0 + 0.5 * x.sin()));
    for phi in ResponseFunction::ALL {
        let p = params(0.2, phi);
        let e = entropy_h(&s, &p);
        let (u, v) = (s.u.values(), s.v.values());
        let x = grid.centers();
        let internal: f64 = u.iter().map(|a| 0.5 * a * a * h).sum();
        let potential: f64 = u.iter().zip(&x).map(|(a, x)| a * 0.5 * x * x * h).sum();
        let dirichlet: f64 = v.windows(2).map(|w| 0.5 * (w[1] - w[0]).powi(2) / h).sum();
        let decay: f64 = v.iter().map(|b| 0.5 * b * b * h).sum();
        let coupling: f64 = u.iter().zip(v).map(|(a, b)| 0.2 * a * phi.phi(*b) * h).sum();
        for (got, want) in [
            (e.internal, internal),
            (e.potential, potential),
            (e.dirichlet, dirichlet),
            (e.decay, decay),
            (e.coupling, coupling),
            (e.total, internal + potential + dirichlet + decay + coupling),
        ] {
            assert!((got - want).abs() < 1e-13, "{}: {got} vs {want}", phi.name());
        }
    }
}

#[test]
fn simple_functionals_have_closed_forms() {
    let grid = Grid::new(2.5, 50).unwrap();
    let flat = ProbabilityDensity::from_values(grid, vec![1.0; 50]).unwrap();
    assert!((boltzmann_e(&flat) - (1.0f64 / 5.0).ln()).abs() < 1e-14);
    let c = field(grid, |_| 0.6);
    assert!((dirichlet_f(&c, 3.0) - 0.5 * 3.0 * 0.36 * 5.0).abs() < 1e-13);
}

#[test]
fn uncoupled_level_is_the_truncated_parabola() {
    let grid = Grid::new(3.0, 2400).unwrap();
    let p = params(0.0, ResponseFunction::Linear);
    let level = normalization_bisect(&field(grid, |_| 0.0), &p).unwrap();
    // ∫ [U − x²/2]₊ = (4/3) U √(2U) = 1
    let exact = (3.0 / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0);
    assert!((level - exact).abs() < 1e-6, "{level} vs {exact}");
}

#[test]
fn coupled_stationary_state_solves_its_system() {
    let grid = Grid::new(3.0, 300).unwrap();
    let h2 = grid.h() * grid.h();
    for phi in ResponseFunction::ALL {
        let p = params(0.1, phi);
        let r = solve_stationary(&p, &grid, 1e-12).unwrap();
        let (u, v) = (r.state.u.values(), r.state.v.values());
        let n = grid.len();
        assert!(r.mass_error < 1e-13);
        for i in 0..n {
            let x = grid.center(i);
            let want = (r.level - 0.5 * x * x - 0.1 * phi.phi(v[i])).max(0.0);
            assert!((u[i] - want).abs() < 1e-13, "{} cell {i}", phi.name());
            let lap = (v[i.saturating_sub(1)] - 2.0 * v[i] + v[(i + 1).min(n - 1)]) / h2;
            let res = -lap + v[i] + 0.1 * u[i] * phi.dphi(v[i]);
            assert!(res.abs() < 1e-9, "{} cell {i}: {res}", phi.name());
        }
        assert!(el_residual(&r.state, &p) < 1e-9);
        let b = verify_stationary_bounds(&r, &p).unwrap();
        assert!(b.bound_a_holds && b.max_u <= b.bound_a + 1e-12);
        assert!((b.v_sup - v.iter().copied().fold(f64::MIN, f64::max)).abs() < 1e-15);
    }
}

#[test]
fn lyapunov_vanishes_at_the_stationary_state_and_is_nonnegative_nearby() {
    let grid = Grid::new(3.0, 180).unwrap();
    let p = params(0.05, ResponseFunction::LogSaturation);
    let st = solve_stationary(&p, &grid, 1e-12).unwrap().state;
    let at = lyapunov(&st, &st, &p).unwrap();
    assert!(at.l_u.abs() < 1e-14 && at.l_v.abs() < 1e-14 && at.l_star.abs() < 1e-14);
    assert!(at.decomposition_residual.abs() < 1e-14);

    let w = perturbed_potential(&st, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let (m, s) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.0));
        let u = gaussian_density(grid, m, s);
        let diff: f64 = u
            .values()
            .iter()
            .zip(st.u.values())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            * grid.h();
        assert!(lyapunov_u(u.values(), &st, &w) >= 0.5 * diff - 1e-12);
        let a: f64 = rng.gen_range(0.0..1.0);
        let v = field(grid, |x| a * gaussian(x, m, s));
        let l = lyapunov(&state(u, v), &st, &p).unwrap();
        assert!(l.l_v >= 0.0);
        assert!(l.decomposition_residual.abs() < 1e-9 * (1.0 + (l.h - l.h_inf).abs()));
    }
}

#[test]
fn lyapunov_rejects_bad_references() {
    let grid = Grid::new(3.0, 90).unwrap();
    let p = params(0.05, ResponseFunction::Linear);
    let s = state(gaussian_density(grid, 0.0, 0.5), field(grid, |_| 0.2));
    assert!(matches!(lyapunov(&s, &s, &p), Err(Error::StationaryResidual(_))));
    let other = Grid::new(3.0, 100).unwrap();
    let st = solve_stationary(&p, &other, 1e-12).unwrap().state;
    assert_eq!(lyapunov(&s, &st, &p).unwrap_err(), Error::GridMismatch);
}

#[test]
fn stationary_gradient_scales_linearly_in_coupling() {
    let grid = Grid::new(3.0, 240).unwrap();
    let p = params(0.0, ResponseFunction::RationalSaturation);
    let (rows, ok) = gradient_scaling_sweep(&p, &grid, &[0.01, 0.02, 0.04, 0.08]).unwrap();
    assert!(ok);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.1 > 0.0));
}

#[test]
fn convexity_modulus_is_the_smallest_hessian_eigenvalue() {
    for (eps, kappa) in [(0.1, 1.0), (0.5, 0.2), (1.0, 0.5), (0.0, 3.0)] {
        let mut p = params(eps, ResponseFunction::Linear);
        p.kappa = kappa;
        // eigenvalues of [[1, b], [b, κ]] with b = εφ'(0)
        let b = -eps;
        let (tr, det) = (1.0 + kappa, kappa - b * b);
        let low = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
        assert!((convexity_modulus(&p) - low).abs() < 1e-14);
        assert_eq!(low > 0.0, p.convexity_certified());
    }
}
