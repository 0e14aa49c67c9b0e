//! Radial 3-D resolvent and heat kernels, their iterates, and the 1-D
//! resolvent used by the dynamics.

mod resolvent;
mod verify;

pub use resolvent::{
    implicit_heat_kernel_sum, lattice_resolvent, neumann_resolvent_apply, regularity_p2_ratio, resolvent_1d_kernel,
    solve_resolvent_1d, LatticeResolvent, ResolventSolver1D, REGULARITY_C2,
};
pub use verify::{verify_suite, CheckRow};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{gamma, ln_gamma, log_trapezoid, PanelRule};

/// Step of the log-scale trapezoidal rule used for gamma mixtures.
const MIXTURE_STEP: f64 = 0.1;
const MIXTURE_FLOOR: f64 = 1e-30;

fn four_pi<T: Real>() -> T {
    T::lit(4.0) * T::PI()
}

fn positive<T: Real>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

/// `e^{−√κ r}/(4πr)`.
pub fn yukawa_g<T: Real>(kappa: T, r: T) -> Result<T> {
    positive("kappa", kappa)?;
    positive("radius", r)?;
    Ok((-kappa.sqrt() * r).exp() / (four_pi::<T>() * r))
}

/// Value and Cartesian derivatives up to third order of the 3-D Yukawa
/// potential at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YukawaDerivatives<T> {
    pub value: T,
    pub gradient: [T; 3],
    pub hessian: [[T; 3]; 3],
    pub third: [[[T; 3]; 3]; 3],
}

pub fn yukawa_derivatives<T: Real>(kappa: T, x: [T; 3]) -> Result<YukawaDerivatives<T>> {
    positive("kappa", kappa)?;
    let r = x.iter().map(|&c| c * c).sum::<T>().sqrt();
    if !(r > T::zero()) {
        return Err(Error::InvalidParameter(
            "Yukawa derivatives are singular at the origin".into(),
        ));
    }
    let a = kappa.sqrt();
    let ar = a * r;
    let e = (-ar).exp() / four_pi::<T>();
    let (c3, c6, c15) = (T::lit(3.0), T::lit(6.0), T::lit(15.0));
    let g1 = -e * (ar + T::one()) / r.powi(3);
    let f2 = e * (ar * ar + c3 * ar + c3) / r.powi(5);
    let f3 = -e * (ar * ar * ar + c6 * ar * ar + c15 * ar + c15) / r.powi(7);
    let delta = |i: usize, j: usize| if i == j { T::one() } else { T::zero() };
    let mut out = YukawaDerivatives {
        value: e / r,
        gradient: [T::zero(); 3],
        hessian: [[T::zero(); 3]; 3],
        third: [[[T::zero(); 3]; 3]; 3],
    };
    for i in 0..3 {
        out.gradient[i] = g1 * x[i];
        for j in 0..3 {
            out.hessian[i][j] = f2 * x[i] * x[j] + g1 * delta(i, j);
            for k in 0..3 {
                out.third[i][j][k] =
                    f3 * x[i] * x[j] * x[k] + f2 * (delta(i, j) * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i]);
            }
        }
    }
    Ok(out)
}

/// `(4πt)^{−3/2} e^{−r²/(4t)}`.
pub fn heat_kernel3d<T: Real>(t: T, r: T) -> Result<T> {
    positive("time", t)?;
    Ok((four_pi::<T>() * t).powf(T::lit(-1.5)) * (-r * r / (T::lit(4.0) * t)).exp())
}

/// `∫₀ᵗ s H_τ(s) ds`.
fn heat_shell_moment<T: Real>(tau: T, t: T) -> T {
    T::lit(2.0) * tau * (four_pi::<T>() * tau).powf(T::lit(-1.5)) * -(-t * t / (T::lit(4.0) * tau)).exp_m1()
}

/// `∫ f(ρ) ρ^{k−1} e^{−ρ}/Γ(k) dρ` over `[lo, hi]`, with `f` returning the
/// logarithm of a positive integrand factor.
fn gamma_mixture<T: Real, F: Fn(T) -> T>(k: u32, lo: T, hi: T, log_f: F) -> T {
    let km1 = T::count(k as usize - 1);
    let lg = ln_gamma(T::count(k as usize));
    log_trapezoid(lo, hi, T::lit(MIXTURE_STEP), |rho| {
        (log_f(rho) + km1 * rho.ln() - rho - lg).exp()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind<T> {
    Yukawa3d {
        kappa: T,
    },
    Heat3d {
        t: T,
    },
    /// `k`-fold self-convolution of `Y_σ = σ⁻¹ G_{1/σ}`.
    Iterate {
        sigma: T,
        k: u32,
    },
}

/// Radially symmetric kernel on ℝ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialKernel<T> {
    kind: KernelKind<T>,
}

impl<T: Real> RadialKernel<T> {
    pub fn yukawa(kappa: T) -> Result<Self> {
        positive("kappa", kappa)?;
        Ok(Self {
            kind: KernelKind::Yukawa3d { kappa },
        })
    }

    pub fn heat(t: T) -> Result<Self> {
        positive("time", t)?;
        Ok(Self {
            kind: KernelKind::Heat3d { t },
        })
    }

    pub fn iterate(sigma: T, k: u32) -> Result<Self> {
        positive("sigma", sigma)?;
        if k == 0 {
            return Err(Error::InvalidParameter("iterate order must be at least 1".into()));
        }
        Ok(Self {
            kind: KernelKind::Iterate { sigma, k },
        })
    }

    pub fn kind(&self) -> KernelKind<T> {
        self.kind
    }

    /// Length beyond which the kernel is below e^{−80} of its scale.
    pub fn extent(&self) -> T {
        match self.kind {
            KernelKind::Yukawa3d { kappa } => T::lit(80.0) / kappa.sqrt(),
            KernelKind::Heat3d { t } => (T::lit(320.0) * t).sqrt(),
            KernelKind::Iterate { sigma, k } => sigma.sqrt() * T::lit(80.0 + 10.0 * f64::from(k)),
        }
    }

    fn scale(&self) -> T {
        match self.kind {
            KernelKind::Yukawa3d { kappa } => kappa.sqrt().recip(),
            KernelKind::Heat3d { t } => t.sqrt(),
            KernelKind::Iterate { sigma, .. } => sigma.sqrt(),
        }
    }

    fn mixture_range(sigma: T, k: u32, r: T) -> (T, T) {
        let lo = if r > T::zero() {
            r * r / (T::lit(200.0) * sigma)
        } else {
            T::lit(MIXTURE_FLOOR)
        };
        let hi = T::lit(50.0 + 3.0 * f64::from(k)) + T::lit(2.0) * r / sigma.sqrt();
        (lo, hi)
    }

    fn log_heat(sigma: T, rho: T, r: T) -> T {
        let tau = sigma * rho;
        T::lit(-1.5) * (four_pi::<T>() * tau).ln() - r * r / (T::lit(4.0) * tau)
    }

    pub fn value(&self, r: T) -> T {
        match self.kind {
            KernelKind::Yukawa3d { kappa } => (-kappa.sqrt() * r).exp() / (four_pi::<T>() * r),
            KernelKind::Heat3d { t } => (four_pi::<T>() * t).powf(T::lit(-1.5)) * (-r * r / (T::lit(4.0) * t)).exp(),
            KernelKind::Iterate { sigma, k } => {
                let (lo, hi) = Self::mixture_range(sigma, k, r);
                gamma_mixture(k, lo, hi, |rho| Self::log_heat(sigma, rho, r))
            }
        }
    }

    /// Radial derivative `∂_r g(r)`.
    pub fn radial_derivative(&self, r: T) -> T {
        match self.kind {
            KernelKind::Yukawa3d { kappa } => {
                let a = kappa.sqrt();
                -(-a * r).exp() * (a * r + T::one()) / (four_pi::<T>() * r * r)
            }
            KernelKind::Heat3d { t } => -r / (T::lit(2.0) * t) * self.value(r),
            KernelKind::Iterate { sigma, k } => {
                if !(r > T::zero()) {
                    return T::zero();
                }
                let (lo, hi) = Self::mixture_range(sigma, k, r);
                -gamma_mixture(k, lo, hi, |rho| {
                    Self::log_heat(sigma, rho, r) + r.ln() - (T::lit(2.0) * sigma * rho).ln()
                })
            }
        }
    }

    /// `∫₀ᵗ s g(s) ds`, so that `4π` times it is the mass inside radius `t`.
    pub fn shell_moment(&self, t: T) -> T {
        match self.kind {
            KernelKind::Yukawa3d { kappa } => {
                let a = kappa.sqrt();
                -(-a * t).exp_m1() / (four_pi::<T>() * a)
            }
            KernelKind::Heat3d { t: tau } => heat_shell_moment(tau, t),
            KernelKind::Iterate { sigma, k } => {
                let hi = T::lit(50.0 + 3.0 * f64::from(k));
                gamma_mixture(k, T::lit(MIXTURE_FLOOR), hi, |rho| {
                    heat_shell_moment(sigma * rho, t).ln()
                })
            }
        }
    }

    /// `4π ∫₀^∞ r² g(r) dr` by quadrature.
    pub fn mass(&self) -> T {
        let s = self.scale();
        four_pi::<T>()
            * log_trapezoid(s * T::lit(1e-12), self.extent(), T::lit(0.05), |r| {
                r * r * self.value(r)
            })
    }

    /// `(self ∗ other)(r)` for radial kernels.
    pub fn convolve(&self, other: &Self, r: T) -> T {
        radial_convolution(|s| self.value(s), self.extent(), self.scale(), other, r)
    }
}

/// `(f ∗ g)(r) = (2π/r) ∫₀^{s_max} s f(s) [Φ_g(r+s) − Φ_g(|r−s|)] ds` with
/// `Φ_g(t) = ∫₀ᵗ t' g(t') dt'`; `f` is radial and negligible beyond `s_max`,
/// `scale` its characteristic length. Small `r` uses the limit at the origin.
pub fn radial_convolution<T: Real, F: Fn(T) -> T>(f: F, s_max: T, scale: T, g: &RadialKernel<T>, r: T) -> T {
    let rule = PanelRule::<T>::new(20);
    // Φ_g(s+r) − Φ_g(|s−r|) → 2r s g(s); the limit is O(r²) accurate.
    if r <= scale * T::lit(1e-6) {
        let mut breaks = vec![T::zero()];
        let mut s = scale;
        while s < s_max {
            breaks.push(s);
            s *= T::lit(1.25);
        }
        breaks.push(s_max);
        let integral = rule.piecewise(&breaks, 1, |s| s * s * f(s) * g.value(s));
        return four_pi::<T>() * integral;
    }
    let mut breaks = vec![T::zero(), s_max];
    let mut step = scale;
    let mut s = T::zero();
    while s < s_max {
        breaks.push(s);
        s += step;
        if s > T::lit(4.0) * scale + r {
            step *= T::lit(1.25);
        }
    }
    if r < s_max {
        breaks.push(r);
        for j in 0..8 {
            let d = scale * T::lit(0.5f64.powi(j));
            breaks.push((r - d).max(T::zero()));
            breaks.push((r + d).min(s_max));
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    breaks.dedup();
    let integral = rule.piecewise(&breaks, 1, |s| {
        s * f(s) * (g.shell_moment(r + s) - g.shell_moment((r - s).abs()))
    });
    T::lit(2.0) * T::PI() / r * integral
}

/// `Q = 2 − 3/(2q)`.
pub fn q_exponent<T: Real>(q: T) -> T {
    T::lit(2.0) - T::lit(1.5) / q
}

fn check_q<T: Real>(q: T) -> Result<()> {
    if q >= T::one() && q < T::lit(1.5) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "gradient exponent must lie in [1, 3/2), got {q}"
        )))
    }
}

/// `‖D H₁‖_{L^q(ℝ³)}` in closed form.
pub fn dh1_lq_norm<T: Real>(q: T) -> Result<T> {
    check_q(q)?;
    let pi4 = four_pi::<T>();
    let half = T::lit(0.5);
    let e = (T::lit(3.0) + q) * half;
    let inner = pi4 * pi4.powf(T::lit(-1.5) * q) * T::lit(2.0).powf(-q) * half * (T::lit(4.0) / q).powf(e) * gamma(e);
    Ok(inner.powf(q.recip()))
}

/// `‖D H₁‖_{L^q}` by radial quadrature.
pub fn dh1_lq_norm_quadrature<T: Real>(q: T) -> Result<T> {
    check_q(q)?;
    let h1 = RadialKernel::heat(T::one())?;
    let integral = log_trapezoid(T::lit(1e-12), T::lit(60.0), T::lit(0.02), |r| {
        r * r * h1.radial_derivative(r).abs().powf(q)
    });
    Ok((four_pi::<T>() * integral).powf(q.recip()))
}

/// `Y_q = Γ(1−Q) ‖D H₁‖_{L^q}`.
pub fn yq_constant<T: Real>(q: T) -> Result<T> {
    Ok(gamma(T::one() - q_exponent(q)) * dh1_lq_norm(q)?)
}

/// Gradient norm of an iterate next to its explicit bound `Y_q (σk)^{−Q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqBound<T> {
    pub norm: T,
    pub bound: T,
}

pub fn grad_iterate_lq<T: Real>(sigma: T, k: u32, q: T) -> Result<LqBound<T>> {
    check_q(q)?;
    let kernel = RadialKernel::iterate(sigma, k)?;
    let s = sigma.sqrt();
    // the k = 1 gradient behaves like r⁻² at the origin
    let lo = if k == 1 { s * T::lit(1e-60) } else { s * T::lit(1e-12) };
    let integral = log_trapezoid(lo, kernel.extent(), T::lit(0.05), |r| {
        r * r * kernel.radial_derivative(r).abs().powf(q)
    });
    let norm = (four_pi::<T>() * integral).powf(q.recip());
    let bound = yq_constant(q)? * (sigma * T::count(k as usize)).powf(-q_exponent(q));
    Ok(LqBound { norm, bound })
}

/// `a_k = k^Q Γ(k−Q)/Γ(k)` for `k = 1..=k_max`.
pub fn iterate_bound_sequence<T: Real>(q: T, k_max: usize) -> Result<Vec<T>> {
    check_q(q)?;
    let big_q = q_exponent(q);
    Ok((1..=k_max)
        .map(|k| {
            let kf = T::count(k);
            (big_q * kf.ln() + ln_gamma(kf - big_q) - ln_gamma(kf)).exp()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yukawa_examples() {
        let e1 = (-1.0f64).exp();
        assert!((yukawa_g(1.0, 1.0).unwrap() - e1 / (4.0 * std::f64::consts::PI)).abs() < 1e-16);
        assert!((yukawa_g(4.0, 0.5).unwrap() - e1 / (2.0 * std::f64::consts::PI)).abs() < 1e-16);
        assert!(yukawa_g(1.0, 0.0).is_err());
        assert!(yukawa_g(-1.0, 1.0).is_err());
        let d = yukawa_derivatives(1.0, [1.0, 0.0, 0.0]).unwrap();
        assert!((d.gradient[0] + 2.0 * e1 / (4.0 * std::f64::consts::PI)).abs() < 1e-16);
        assert!(yukawa_derivatives(1.0, [0.0; 3]).is_err());
    }

    #[test]
    fn hessian_trace_is_kappa_times_value() {
        for (kappa, x) in [
            (1.0f64, [0.3, -0.2, 0.5]),
            (4.0, [1.0, 2.0, -0.5]),
            (0.3, [0.01, 0.0, 0.02]),
        ] {
            let d = yukawa_derivatives(kappa, x).unwrap();
            let tr = d.hessian[0][0] + d.hessian[1][1] + d.hessian[2][2];
            assert!((tr - kappa * d.value).abs() <= 1e-10 * d.value.abs().max(1.0));
        }
    }

    #[test]
    fn heat_values() {
        let h = heat_kernel3d(1.0f64, 0.0).unwrap();
        assert!((h - (4.0 * std::f64::consts::PI).powf(-1.5)).abs() < 1e-16);
        assert!(heat_kernel3d(0.0f64, 1.0).is_err());
        assert!((RadialKernel::heat(0.7f64).unwrap().mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn first_iterate_is_rescaled_yukawa() {
        let sigma = 2.0f64;
        let it = RadialKernel::iterate(sigma, 1).unwrap();
        for r in [1e-3, 0.1, 1.0, 3.0, 10.0] {
            let direct = yukawa_g(1.0 / sigma, r).unwrap() / sigma;
            assert!((it.value(r) - direct).abs() <= 1e-10 * direct, "r = {r}");
        }
    }

    #[test]
    fn gradient_norm_closed_forms() {
        assert!((dh1_lq_norm(1.0f64).unwrap() - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((yq_constant(1.0f64).unwrap() - 2.0).abs() < 1e-13);
        assert!(dh1_lq_norm(1.5f64).is_err());
        assert!(dh1_lq_norm(0.9f64).is_err());
        let b = grad_iterate_lq(1.0f64, 1, 1.0).unwrap();
        assert!((b.norm - 2.0).abs() < 1e-8 && (b.bound - 2.0).abs() < 1e-12);
    }
}
