//! Special functions and quadrature rules.

use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of |Γ(x)| (Lanczos approximation, reflection below 1/2).
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Γ(x)Γ(1-x) = π / sin(πx)
        let s = (T::PI() * x).sin().abs();
        return T::PI().ln() - s.ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::count(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::lit(2.0) * T::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Γ(x) for real x that is not a non-positive integer.
pub fn gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        T::PI() / ((T::PI() * x).sin() * gamma(T::one() - x))
    } else {
        ln_gamma(x).exp()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n (in f64 for all scalar types)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-order Gauss–Legendre rule reused across many panels.
#[derive(Debug, Clone)]
pub struct PanelRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> PanelRule<T> {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    /// Integral of `f` over [a, b] with a single panel.
    pub fn panel<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = T::lit(0.5) * (b - a);
        let mid = T::lit(0.5) * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<T>()
            * half
    }

    /// Integral over [a, b] split into `panels` equal panels.
    pub fn composite<F: FnMut(T) -> T>(&self, a: T, b: T, panels: usize, mut f: F) -> T {
        let width = (b - a) / T::count(panels);
        (0..panels)
            .map(|i| {
                let lo = a + width * T::count(i);
                self.panel(lo, lo + width, &mut f)
            })
            .sum()
    }

    /// Integral over consecutive breakpoints, `panels` panels per interval.
    pub fn piecewise<F: FnMut(T) -> T>(&self, breaks: &[T], panels: usize, mut f: F) -> T {
        breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.composite(w[0], w[1], panels, &mut f))
            .sum()
    }
}

/// Integral of `f` over (lo, hi) ⊂ (0, ∞) by the trapezoidal rule in the
/// variable y = ln x. Exponentially accurate for integrands that decay
/// at both ends of the log-scale range.
pub fn log_trapezoid<T: Real, F: FnMut(T) -> T>(lo: T, hi: T, step: T, mut f: F) -> T {
    let (ya, yb) = (lo.ln(), hi.ln());
    let n = ((yb - ya) / step).ceil().to_usize().unwrap_or(1).max(2);
    let dy = (yb - ya) / T::count(n);
    let mut acc = T::zero();
    for i in 0..=n {
        let y = ya + dy * T::count(i);
        let x = y.exp();
        let w = if i == 0 || i == n { T::lit(0.5) } else { T::one() };
        acc += w * f(x) * x;
    }
    acc * dy
}
