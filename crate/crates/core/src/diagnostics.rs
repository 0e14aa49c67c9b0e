//! Decay-rate fits, explicit constants of the gradient estimates, and
//! trajectory-level checks.

use crate::domain::ModelParams;
use crate::error::{Error, Result};
use crate::jko::{StepRecord, TrajectoryRecord};
use crate::kernels::{dh1_lq_norm_quadrature, q_exponent, yq_constant};
use crate::scalar::Real;
use crate::special::gamma;
use crate::transport::w2;

/// Caveat attached to every gradient-control report.
pub const DIMENSION_CAVEAT: &str = "3-D-constant heuristic applied to 1-D run";

const MIN_SAMPLES: usize = 10;

/// Scalar series that decays to zero along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayQuantity {
    /// `L_u + L_v`
    L,
    Lu,
    Lv,
    /// `H − H∞`
    EnergyGap,
}

impl DecayQuantity {
    pub const ALL: [Self; 4] = [Self::L, Self::Lu, Self::Lv, Self::EnergyGap];

    pub fn name(self) -> &'static str {
        match self {
            Self::L => "L",
            Self::Lu => "L_u",
            Self::Lv => "L_v",
            Self::EnergyGap => "H-H_inf",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == name)
    }

    pub fn eval<T: Real>(self, r: &StepRecord<T>, h_inf: T) -> T {
        match self {
            Self::L => r.l(),
            Self::Lu => r.l_u,
            Self::Lv => r.l_v,
            Self::EnergyGap => r.h - h_inf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit<T> {
    /// First and last time actually used.
    pub t_start: T,
    pub t_end: T,
    pub samples: usize,
    /// `−d/dt log(quantity)`
    pub rate: T,
    pub r_squared: T,
    pub reference_rate: T,
}

impl<T: Real> DecayFit<T> {
    /// Rate of the distance to equilibrium, half the functional rate.
    pub fn distance_rate(&self) -> T {
        T::lit(0.5) * self.rate
    }
}

/// Least-squares fit of `log y` against `t` over samples with
/// `t ∈ [window.0, window.1]`, stopping at the first non-positive value.
pub fn fit_series<T: Real>(times: &[T], values: &[T], window: (T, T), reference_rate: T) -> Result<DecayFit<T>> {
    let pts: Vec<(T, T)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= window.0 && t <= window.1)
        .map(|(&t, &y)| (t, y))
        .take_while(|&(_, y)| y > T::zero() && y.is_finite())
        .map(|(t, y)| (t, y.ln()))
        .collect();
    if pts.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples(pts.len()));
    }
    let m = T::count(pts.len());
    let tm = pts.iter().map(|p| p.0).sum::<T>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<T>() / m;
    let (mut stt, mut sty, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(t, y) in &pts {
        let (dt, dy) = (t - tm, y - ym);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let ss_res: T = pts
        .iter()
        .map(|&(t, y)| {
            let e = y - ym - slope * (t - tm);
            e * e
        })
        .sum();
    let r_squared = if syy > T::zero() {
        T::one() - ss_res / syy
    } else {
        T::one()
    };
    Ok(DecayFit {
        t_start: pts[0].0,
        t_end: pts[pts.len() - 1].0,
        samples: pts.len(),
        rate: -slope,
        r_squared,
        reference_rate,
    })
}

pub fn fit_decay_rate<T: Real>(
    traj: &TrajectoryRecord<T>,
    quantity: DecayQuantity,
    window: (T, T),
    p: &ModelParams<T>,
) -> Result<DecayFit<T>> {
    let values = traj.series(|r| quantity.eval(r, traj.h_inf));
    fit_series(&traj.times(), &values, window, reference_rate(p))
}

/// `min(κ, λ₀)`, the small-coupling limit of the contraction rate.
pub fn reference_rate<T: Real>(p: &ModelParams<T>) -> T {
    p.kappa.min(p.confinement.lambda0())
}

/// `(1/τ) ln(1 + aτ)`.
pub fn discrete_rate<T: Real>(a: T, tau: T) -> T {
    (a * tau).ln_1p() / tau
}

/// Constants of the gradient estimates for the chemical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperConstants<T> {
    pub kappa: T,
    pub y1: T,
    pub y65: T,
    /// `(1+κ) Y₁`
    pub a: T,
    pub m1: T,
    pub t1: T,
    pub v0_norm_65: T,
}

impl<T: Real> PaperConstants<T> {
    pub fn q_exponent(&self, q: T) -> T {
        q_exponent(q)
    }

    pub fn y_q(&self, q: T) -> Result<T> {
        yq_constant(q)
    }

    /// `[a]_τ` for the given rate.
    pub fn bracket(&self, rate: T, tau: T) -> T {
        discrete_rate(rate, tau)
    }
}

/// `a`, `M₁` and `T₁` for the given coefficients and `‖v₀‖_{L^{6/5}}`.
pub fn paper_constants<T: Real>(p: &ModelParams<T>, v0_norm_65: T) -> Result<PaperConstants<T>> {
    let kappa = p.kappa;
    if !(kappa > T::zero()) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let y1 = gamma(T::lit(0.5)) * dh1_lq_norm_quadrature(T::one())?;
    let y65 = gamma(T::lit(0.25)) * dh1_lq_norm_quadrature(T::lit(1.2))?;
    let one_k = T::one() + kappa;
    let a = one_k * y1;
    let time_integral = gamma(T::lit(0.25)) / one_k.ln().powf(T::lit(0.25));
    let m1 = p.response.dphi0::<T>().abs() * y65 * one_k.powf(T::lit(0.75)) * time_integral;
    let t1 = ((a * v0_norm_65 / m1).ln() / kappa).max(T::zero());
    Ok(PaperConstants {
        kappa,
        y1,
        y65,
        a,
        m1,
        t1,
        v0_norm_65,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientControlReport<T> {
    pub caveat: &'static str,
    pub t1: T,
    pub m1: T,
    /// Short-time bound at each step `n ≥ 1`.
    pub decay_bound_holds: Vec<bool>,
    /// `‖Dvⁿ‖ ≤ 2M₁` at each step with `nτ ≥ T₁`.
    pub control_holds: Vec<bool>,
    pub steps_past_t1: usize,
    pub max_grad_past_t1: T,
    pub all_decay: bool,
    pub all_control: bool,
}

/// Checks `‖Dvⁿ‖ ≤ a‖v₀‖ e^{−[κ]_τ nτ}(nτ)^{−1/2} + εM₁` for all `n ≥ 1` and
/// `‖Dvⁿ‖ ≤ 2M₁` once `nτ ≥ T₁`, with `‖·‖` the `L^{6/5}` norm.
pub fn gradient_control_check<T: Real>(
    traj: &TrajectoryRecord<T>,
    c: &PaperConstants<T>,
    epsilon: T,
) -> GradientControlReport<T> {
    let tau = traj.tau;
    let kb = discrete_rate(c.kappa, tau);
    let mut decay = Vec::new();
    let mut control = Vec::new();
    let mut max_grad = T::zero();
    for r in traj.records.iter().skip(1) {
        let t = r.time;
        let bound = c.a * c.v0_norm_65 * (-kb * t).exp() / t.sqrt() + epsilon * c.m1;
        decay.push(r.grad_v_l65 <= bound);
        if t >= c.t1 {
            control.push(r.grad_v_l65 <= T::lit(2.0) * c.m1);
            max_grad = max_grad.max(r.grad_v_l65);
        }
    }
    GradientControlReport {
        caveat: DIMENSION_CAVEAT,
        t1: c.t1,
        m1: c.m1,
        all_decay: decay.iter().all(|&b| b),
        all_control: control.iter().all(|&b| b),
        steps_past_t1: control.len(),
        max_grad_past_t1: max_grad,
        decay_bound_holds: decay,
        control_holds: control,
    }
}

/// Energy-budget and Hölder checks on the discrete trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriReport<T> {
    /// `2τ(H₀ − H∞)`
    pub budget: T,
    pub w2_increments: T,
    pub v_increments: T,
    /// Largest `dist(sₘ, sₙ) − [2(H₀−H∞) max(τ, |tₙ−tₘ|)]^{1/2}` over sampled
    /// pairs, for the transport and the `L²` part.
    pub holder_excess_u: T,
    pub holder_excess_v: T,
    pub pairs: usize,
    pub max_energy_increase: T,
}

impl<T: Real> AprioriReport<T> {
    pub fn holds(&self, tol: T) -> bool {
        self.w2_increments <= self.budget + tol
            && self.v_increments <= self.budget + tol
            && self.holder_excess_u <= tol
            && self.holder_excess_v <= tol
    }
}

/// Sums of squared increments and Hölder bounds on all pairs of every
/// `stride`-th stored state.
pub fn apriori_check<T: Real>(traj: &TrajectoryRecord<T>, stride: usize) -> Result<AprioriReport<T>> {
    let stride = stride.max(1);
    let h0 = traj.records[0].h;
    let gap = (h0 - traj.h_inf).max(T::zero());
    let budget = T::lit(2.0) * traj.tau * gap;
    let sq = |x: T| x * x;
    let w2_increments = traj.records.iter().skip(1).map(|r| sq(r.w2_step)).sum();
    let v_increments = traj.records.iter().skip(1).map(|r| sq(r.dv_l2_step)).sum();
    let idx: Vec<usize> = (0..traj.states.len()).step_by(stride).collect();
    let (mut eu, mut ev) = (T::neg_infinity(), T::neg_infinity());
    let mut pairs = 0;
    for (a, &m) in idx.iter().enumerate() {
        for &n in &idx[a + 1..] {
            let (sm, sn) = (&traj.states[m], &traj.states[n]);
            let dt = (traj.records[n].time - traj.records[m].time).abs().max(traj.tau);
            let bound = (T::lit(2.0) * gap * dt).sqrt();
            eu = eu.max(w2(&sm.u, &sn.u)? - bound);
            let diff: Vec<T> = sm.v.values().iter().zip(sn.v.values()).map(|(&x, &y)| x - y).collect();
            ev = ev.max(sm.grid().l2_norm(&diff) - bound);
            pairs += 1;
        }
    }
    Ok(AprioriReport {
        budget,
        w2_increments,
        v_increments,
        holder_excess_u: eu,
        holder_excess_v: ev,
        pairs,
        max_energy_increase: traj.max_energy_increase(),
    })
}
