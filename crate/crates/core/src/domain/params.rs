use std::fmt;
use std::sync::Arc;

use super::grid::Grid1D;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Chemotactic response families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResponseFunction {
    /// `φ(w) = -w`
    Linear,
    /// `φ(w) = -ln(1 + w)`
    LogSaturation,
    /// `φ(w) = 1 / (1 + w)`
    RationalSaturation,
}

impl ResponseFunction {
    pub const ALL: [ResponseFunction; 3] = [
        ResponseFunction::Linear,
        ResponseFunction::LogSaturation,
        ResponseFunction::RationalSaturation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::LogSaturation => "log_saturation",
            Self::RationalSaturation => "rational_saturation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn phi<T: Real>(self, w: T) -> T {
        match self {
            Self::Linear => -w,
            Self::LogSaturation => -(w.ln_1p()),
            Self::RationalSaturation => (T::one() + w).recip(),
        }
    }

    pub fn dphi<T: Real>(self, w: T) -> T {
        match self {
            Self::Linear => -T::one(),
            Self::LogSaturation => -(T::one() + w).recip(),
            Self::RationalSaturation => -(T::one() + w).powi(2).recip(),
        }
    }

    pub fn d2phi<T: Real>(self, w: T) -> T {
        match self {
            Self::Linear => T::zero(),
            Self::LogSaturation => (T::one() + w).powi(2).recip(),
            Self::RationalSaturation => T::lit(2.0) * (T::one() + w).powi(3).recip(),
        }
    }

    /// `φ'(0)`; equal to −1 for all three families.
    pub fn dphi0<T: Real>(self) -> T {
        self.dphi(T::zero())
    }

    /// Upper bound of `φ''` on `[0, ∞)`.
    pub fn d2phi_bound<T: Real>(self) -> T {
        match self {
            Self::Linear => T::zero(),
            Self::LogSaturation => T::one(),
            Self::RationalSaturation => T::lit(2.0),
        }
    }
}

impl fmt::Display for ResponseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// External potential `W` with its first two derivatives and the claimed
/// convexity modulus `λ₀`.
#[derive(Clone)]
pub struct Confinement<T> {
    w: ScalarFn<T>,
    dw: ScalarFn<T>,
    d2w: ScalarFn<T>,
    lambda0: T,
    label: String,
}

impl<T: Real> Confinement<T> {
    pub fn new<W, D, D2>(label: impl Into<String>, lambda0: T, w: W, dw: D, d2w: D2) -> Self
    where
        W: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
        D2: Fn(T) -> T + Send + Sync + 'static,
    {
        Self {
            w: Arc::new(w),
            dw: Arc::new(dw),
            d2w: Arc::new(d2w),
            lambda0,
            label: label.into(),
        }
    }

    /// `W(x) = λ₀ (x - c)² / 2`.
    pub fn quadratic(lambda0: T, center: T) -> Self {
        let half = T::lit(0.5);
        Self::new(
            "quadratic",
            lambda0,
            move |x| half * lambda0 * (x - center) * (x - center),
            move |x| lambda0 * (x - center),
            move |_| lambda0,
        )
    }

    pub fn w(&self, x: T) -> T {
        (self.w)(x)
    }

    pub fn dw(&self, x: T) -> T {
        (self.dw)(x)
    }

    pub fn d2w(&self, x: T) -> T {
        (self.d2w)(x)
    }

    pub fn lambda0(&self) -> T {
        self.lambda0
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<T: fmt::Debug> fmt::Debug for Confinement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Confinement")
            .field("label", &self.label)
            .field("lambda0", &self.lambda0)
            .finish()
    }
}

/// Coefficients of the coupled system.
#[derive(Debug, Clone)]
pub struct ModelParams<T> {
    pub epsilon: T,
    pub kappa: T,
    pub response: ResponseFunction,
    pub confinement: Confinement<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn new(epsilon: T, kappa: T, response: ResponseFunction, confinement: Confinement<T>) -> Result<Self> {
        if !(kappa > T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        if !(epsilon >= T::zero()) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be nonnegative, got {epsilon}"
            )));
        }
        Ok(Self {
            epsilon,
            kappa,
            response,
            confinement,
        })
    }

    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        Self::new(epsilon, self.kappa, self.response, self.confinement.clone())
    }

    /// `V = W + ε φ(v)` at the cell centres.
    pub fn potential(&self, grid: &Grid1D<T>, v: &[T]) -> Vec<T> {
        v.iter()
            .enumerate()
            .map(|(i, &vi)| self.confinement.w(grid.center(i)) + self.epsilon * self.response.phi(vi))
            .collect()
    }

    /// Sufficient condition for joint convexity of the entropy:
    /// `ε² φ'(0)² < κ`.
    pub fn convexity_certified(&self) -> bool {
        let d = self.response.dphi0::<T>();
        self.epsilon * self.epsilon * d * d < self.kappa
    }
}

/// Outcome of one sampled assumption check.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Sample point with the largest violation.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsReport {
    pub checks: Vec<AssumptionCheck>,
    pub dphi0: f64,
    pub d2phi_bound: f64,
    pub lambda0: f64,
}

impl ParamsReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Number of lattice points used to sample `w ∈ [0, 100]`.
pub const RESPONSE_LATTICE: usize = 1000;

/// Samples the standing assumptions on `φ` (over `w ∈ [0, 100]`) and on `W`
/// (over the grid centres).
pub fn validate_params<T: Real>(p: &ModelParams<T>, grid: &Grid1D<T>) -> ParamsReport {
    let phi = p.response;
    let d0 = phi.dphi0::<T>();
    let bound = phi.d2phi_bound::<T>();
    let slack = T::lit(1e-12);
    let lattice: Vec<T> = (0..RESPONSE_LATTICE)
        .map(|j| T::lit(100.0) * T::count(j) / T::count(RESPONSE_LATTICE - 1))
        .collect();

    // witness = sample point with the most negative margin
    let worst = |pts: &[T], margin: &dyn Fn(T) -> T| {
        let mut best: Option<(T, T)> = None;
        for &x in pts {
            let m = margin(x);
            if !(m >= T::zero()) && best.is_none_or(|(_, bm)| m < bm || m.is_nan()) {
                best = Some((x, m));
            }
        }
        best.map(|(x, _)| x)
    };
    let make = |name, witness: Option<T>, detail: String| AssumptionCheck {
        name,
        passed: witness.is_none(),
        witness: witness.map(Real::as_f64),
        detail,
    };

    let mut checks = Vec::new();
    checks.push(make(
        "phi_decreasing",
        worst(&lattice, &|w| {
            let d = phi.dphi(w);
            (-d).min(-d0 + slack + d)
        }),
        format!("0 < -phi'(w) <= -phi'(0) = {}", -d0),
    ));
    checks.push(make(
        "phi_convex_bounded",
        worst(&lattice, &|w| {
            let c = phi.d2phi(w);
            c.min(bound + slack - c)
        }),
        format!("0 <= phi''(w) <= {bound}"),
    ));
    let centers = grid.centers();
    let conf = &p.confinement;
    checks.push(make(
        "confinement_nonnegative",
        worst(&centers, &|x| conf.w(x)),
        "W(x) >= 0 on the grid".into(),
    ));
    let lam = conf.lambda0();
    checks.push(make(
        "confinement_uniformly_convex",
        worst(&centers, &|x| {
            if lam > T::zero() {
                conf.d2w(x) - lam * (T::one() - slack)
            } else {
                lam
            }
        }),
        format!("W''(x) >= lambda0 = {lam} on the grid"),
    ));
    ParamsReport {
        checks,
        dphi0: d0.as_f64(),
        d2phi_bound: bound.as_f64(),
        lambda0: conf.lambda0().as_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D<f64> {
        Grid1D::new(2.0, 41).unwrap()
    }

    #[test]
    fn rational_saturation_passes() {
        let p = ModelParams::new(
            0.1,
            1.0,
            ResponseFunction::RationalSaturation,
            Confinement::quadratic(1.0, 0.0),
        )
        .unwrap();
        let r = validate_params(&p, &grid());
        assert!(r.all_passed(), "{r:?}");
        assert_eq!(r.dphi0, -1.0);
        assert_eq!(r.lambda0, 1.0);
    }

    #[test]
    fn all_families_satisfy_assumptions() {
        for f in ResponseFunction::ALL {
            let p = ModelParams::new(0.5, 2.0, f, Confinement::quadratic(1.0, 0.0)).unwrap();
            assert!(validate_params(&p, &grid()).all_passed(), "{f}");
            assert_eq!(f.dphi0::<f64>(), -1.0);
            assert_eq!(ResponseFunction::from_name(f.name()), Some(f));
        }
    }

    #[test]
    fn quartic_fails_convexity_at_origin() {
        let w = Confinement::new(
            "quartic",
            1.0,
            |x: f64| x.powi(4),
            |x| 4.0 * x.powi(3),
            |x| 12.0 * x * x,
        );
        let p = ModelParams::new(0.1, 1.0, ResponseFunction::Linear, w).unwrap();
        let r = validate_params(&p, &grid());
        let c = r.check("confinement_uniformly_convex").unwrap();
        assert!(!c.passed);
        // odd cell count puts a centre at the origin
        assert!(c.witness.unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let w = Confinement::quadratic(1.0, 0.0);
        assert!(ModelParams::new(0.1, 0.0, ResponseFunction::Linear, w.clone()).is_err());
        assert!(ModelParams::new(-0.1, 1.0, ResponseFunction::Linear, w.clone()).is_err());
        assert!(ModelParams::new(0.0, 1.0, ResponseFunction::Linear, w).is_ok());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for f in ResponseFunction::ALL {
            for w in [0.0, 0.3, 2.0, 17.0] {
                let h = 1e-5;
                let fd: f64 = (f.phi(w + h) - f.phi(w - h)) / (2.0 * h);
                assert!((fd - f.dphi(w)).abs() < 1e-8);
                let fd2: f64 = (f.dphi(w + h) - f.dphi(w - h)) / (2.0 * h);
                assert!((fd2 - f.d2phi(w)).abs() < 1e-8);
            }
        }
    }
}
