//! Error analysis against a known signal, the local (Taylor) error model, and
//! the three-point noise-variance estimator.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, WeightSet};
use crate::selection::HalfwidthGrid;
use crate::series::TimeSeries;
use crate::smoother::{estimator_variance, HalfwidthProfile, LinearSmoother};

/// `4^{1/5} · 5/4`, the constant in the ESE at the optimal halfwidth.
pub const ESE_OPT_CONSTANT: f64 = 1.649_384_888_466_117_7;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A known signal together with its analytic derivatives.
#[derive(Clone)]
pub struct TrueSignal {
    name: String,
    g: RealFn,
    g1: Option<RealFn>,
    g2: RealFn,
    g4: Option<RealFn>,
}

impl fmt::Debug for TrueSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrueSignal").field("name", &self.name).finish()
    }
}

impl TrueSignal {
    pub fn new<G, G2>(name: impl Into<String>, g: G, g2: G2) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        G2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TrueSignal {
            name: name.into(),
            g: Arc::new(g),
            g1: None,
            g2: Arc::new(g2),
            g4: None,
        }
    }

    pub fn with_g1<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, g1: F) -> Self {
        self.g1 = Some(Arc::new(g1));
        self
    }

    pub fn with_g4<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, g4: F) -> Self {
        self.g4 = Some(Arc::new(g4));
        self
    }

    /// `sin(4πt²)`.
    pub fn chirp() -> Self {
        use std::f64::consts::PI;
        let phase = |t: f64| 4.0 * PI * t * t;
        let dphase = |t: f64| 8.0 * PI * t;
        let ddphase = 8.0 * PI;
        TrueSignal::new(
            "chirp",
            move |t| phase(t).sin(),
            move |t| ddphase * phase(t).cos() - dphase(t).powi(2) * phase(t).sin(),
        )
        .with_g1(move |t| dphase(t) * phase(t).cos())
        .with_g4(move |t| {
            let (p1, p2) = (dphase(t), ddphase);
            (p1.powi(4) - 3.0 * p2 * p2) * phase(t).sin() - 6.0 * p1 * p1 * p2 * phase(t).cos()
        })
    }

    pub fn linear(slope: f64, intercept: f64) -> Self {
        TrueSignal::new("linear", move |t| slope * t + intercept, |_| 0.0)
            .with_g1(move |_| slope)
            .with_g4(|_| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        TrueSignal::new("constant", move |_| c, |_| 0.0)
            .with_g1(|_| 0.0)
            .with_g4(|_| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn g(&self, t: f64) -> f64 {
        (self.g)(t)
    }

    pub fn g2(&self, t: f64) -> f64 {
        (self.g2)(t)
    }

    pub fn g1(&self, t: f64) -> Option<f64> {
        self.g1.as_ref().map(|f| f(t))
    }

    pub fn g4(&self, t: f64) -> Option<f64> {
        self.g4.as_ref().map(|f| f(t))
    }

    /// The `q`-th derivative, when available.
    pub fn derivative(&self, q: usize, t: f64) -> Option<f64> {
        match q {
            0 => Some(self.g(t)),
            1 => self.g1(t),
            2 => Some(self.g2(t)),
            4 => self.g4(t),
            _ => None,
        }
    }

    pub fn sample(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.g(t)).collect()
    }
}

/// Aligned bias, variance and ESE curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub times: Vec<f64>,
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
    pub ese: Vec<f64>,
}

/// Bias `Σ w_j g(t_j) - g^{(q)}(t_i)` of weights estimating the `q`-th derivative.
///
/// # Panics
/// If the signal lacks the derivative the weights estimate.
pub fn exact_bias(signal: &TrueSignal, weights: &WeightSet, times: &[f64]) -> f64 {
    let target = signal
        .derivative(weights.q, times[weights.center])
        .unwrap_or_else(|| panic!("signal '{}' has no derivative of order {}", signal.name, weights.q));
    let mean: f64 = weights
        .weights
        .iter()
        .zip(&times[weights.indices()])
        .map(|(w, &t)| w * signal.g(t))
        .sum();
    mean - target
}

/// `bias² + σ² Σ w_j²`.
pub fn exact_ese(signal: &TrueSignal, weights: &WeightSet, times: &[f64], sigma2: f64) -> f64 {
    exact_bias(signal, weights, times).powi(2) + estimator_variance(weights, sigma2)
}

/// Exact error curve of a linear smoother.
pub fn error_curve(signal: &TrueSignal, smoother: &LinearSmoother, times: &[f64], sigma2: f64) -> ErrorCurve {
    let sets = smoother.weight_sets();
    let bias: Vec<f64> = sets.iter().map(|w| exact_bias(signal, w, times)).collect();
    let variance: Vec<f64> = sets.iter().map(|w| estimator_variance(w, sigma2)).collect();
    let ese = bias.iter().zip(&variance).map(|(b, v)| b * b + v).collect();
    ErrorCurve {
        times: times.to_vec(),
        bias,
        variance,
        ese,
    }
}

/// Exact error curve of the fixed-halfwidth smoother.
pub fn error_curve_fixed(
    signal: &TrueSignal,
    series: &TimeSeries,
    kernel: &Kernel,
    h: f64,
    sigma2: f64,
) -> Result<ErrorCurve> {
    let sm = LinearSmoother::fixed(series, kernel, h)?;
    Ok(error_curve(signal, &sm, series.times(), sigma2))
}

/// Leading-order ESE `[B g''(t) h²]² + σ² C Δ / h`.
pub fn local_ese(signal: &TrueSignal, t: f64, h: f64, b: f64, c: f64, sigma2: f64, delta: f64) -> Result<f64> {
    local_ese_g2(signal.g2(t), h, b, c, sigma2, delta)
}

pub(crate) fn local_ese_g2(g2: f64, h: f64, b: f64, c: f64, sigma2: f64, delta: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("halfwidth must be positive, got {h}")));
    }
    Ok((b * g2 * h * h).powi(2) + sigma2 * c * delta / h)
}

/// Halfwidth minimizing the local ESE: `[σ² C Δ / (4 B² |g''|²)]^{1/5}`.
pub fn h_opt_local(g2_abs: f64, b: f64, c: f64, sigma2: f64, delta: f64) -> Result<f64> {
    if g2_abs == 0.0 {
        return Err(Error::Unbounded);
    }
    Ok((sigma2 * c * delta / (4.0 * b * b * g2_abs * g2_abs)).powf(0.2))
}

/// Local ESE at the optimal halfwidth: `K |B g''|^{2/5} (σ² C Δ)^{4/5}`.
pub fn ese_at_opt(g2_abs: f64, b: f64, c: f64, sigma2: f64, delta: f64) -> Result<f64> {
    if g2_abs == 0.0 {
        return Err(Error::Unbounded);
    }
    Ok(ESE_OPT_CONSTANT * (b * g2_abs).abs().powf(0.4) * (sigma2 * c * delta).powf(0.8))
}

/// Per-point grid halfwidth minimizing the exact ESE (ties go to the smaller h).
pub fn h_opt_exact(
    signal: &TrueSignal,
    series: &TimeSeries,
    kernel: &Kernel,
    sigma2: f64,
    grid: &HalfwidthGrid,
) -> Result<HalfwidthProfile> {
    let n = series.len();
    let mut best = vec![(f64::INFINITY, 0.0); n];
    for &h in grid.values() {
        let sm = LinearSmoother::fixed(series, kernel, h)?;
        let curve = error_curve(signal, &sm, series.times(), sigma2);
        for (b, &e) in best.iter_mut().zip(&curve.ese) {
            if e < b.0 {
                *b = (e, h);
            }
        }
    }
    HalfwidthProfile::new(series.times().to_vec(), best.into_iter().map(|b| b.1).collect())
}

/// Noise variance from three-point residuals `y_i - (y_{i+1} + y_{i-1})/2`.
///
/// Non-equispaced samples use the linear interpolant between the neighbours,
/// normalized by the residual's variance factor `1 + α² + β²`.
pub fn estimate_noise_variance(series: &TimeSeries) -> Result<f64> {
    let n = series.len();
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 samples, got {n}")));
    }
    let (t, y) = (series.times(), series.values());
    let total: f64 = if series.is_equispaced() {
        let sum: f64 = (1..n - 1)
            .map(|i| (y[i] - 0.5 * (y[i + 1] + y[i - 1])).powi(2))
            .sum();
        2.0 / 3.0 * sum
    } else {
        (1..n - 1)
            .map(|i| {
                let alpha = (t[i + 1] - t[i]) / (t[i + 1] - t[i - 1]);
                let beta = 1.0 - alpha;
                let r = y[i] - (alpha * y[i - 1] + beta * y[i + 1]);
                r * r / (1.0 + alpha * alpha + beta * beta)
            })
            .sum()
    };
    Ok(total / (n - 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::discrete_weights;

    fn equispaced(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// Golden-section minimum, independent of the closed forms under test.
    fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..300 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn constant_matches_closed_form() {
        let k = 4f64.powf(0.2) * 1.25;
        assert!((ESE_OPT_CONSTANT - k).abs() < 1e-15);
    }

    #[test]
    fn chirp_derivatives_match_finite_differences() {
        let s = TrueSignal::chirp();
        let h = 1e-4;
        for t in [0.1, 0.37, 0.6, 0.93] {
            let fd2 = (s.g(t + h) - 2.0 * s.g(t) + s.g(t - h)) / (h * h);
            assert!((fd2 - s.g2(t)).abs() < 1e-3 * (1.0 + s.g2(t).abs()));
            let fd1 = (s.g(t + h) - s.g(t - h)) / (2.0 * h);
            assert!((fd1 - s.g1(t).unwrap()).abs() < 1e-5 * (1.0 + fd1.abs()));
            let h4 = 1e-3;
            let fd4 = (s.g2(t + h4) - 2.0 * s.g2(t) + s.g2(t - h4)) / (h4 * h4);
            assert!((fd4 - s.g4(t).unwrap()).abs() < 1e-3 * (1.0 + fd4.abs()));
        }
    }

    #[test]
    fn bias_examples() {
        let t = equispaced(101);
        let k = Kernel::parabolic();
        let lin = TrueSignal::linear(2.0, -1.0);
        let cst = TrueSignal::constant(4.0);
        for i in [0, 10, 50, 99] {
            let w = discrete_weights(&k, &t, i, 0.1).unwrap();
            assert!(exact_bias(&lin, &w, &t).abs() < 1e-10);
            assert!(exact_bias(&cst, &w, &t).abs() < 1e-12);
            assert!(exact_ese(&lin, &w, &t, 0.0).abs() < 1e-20);
        }
        let single = WeightSet {
            center: 4,
            first: 4,
            weights: vec![1.0],
            halfwidth: 0.001,
            q: 0,
            placement: crate::kernels::Placement::Interior,
        };
        assert!((exact_ese(&TrueSignal::chirp(), &single, &t, 0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn local_model_properties() {
        let s = TrueSignal::linear(1.0, 0.0);
        let v = local_ese(&s, 0.3, 0.1, 0.1, 0.6, 0.25, 0.01).unwrap();
        assert!((v - 0.25 * 0.6 * 0.01 / 0.1).abs() < 1e-15);
        assert!(local_ese(&s, 0.3, 0.0, 0.1, 0.6, 0.25, 0.01).is_err());

        let bias_term = |h: f64| local_ese_g2(30.0, h, 0.1, 0.6, 0.0, 0.01).unwrap();
        assert!((bias_term(0.2) / bias_term(0.1) - 16.0).abs() < 1e-12);

        let h1 = h_opt_local(30.0, 0.1, 0.6, 0.25, 0.01).unwrap();
        let h32 = h_opt_local(30.0, 0.1, 0.6, 0.25, 0.32).unwrap();
        assert!((h32 / h1 - 2.0).abs() < 1e-12);
        assert!(matches!(h_opt_local(0.0, 0.1, 0.6, 0.25, 0.01), Err(Error::Unbounded)));
        assert_eq!(ese_at_opt(30.0, 0.1, 0.6, 0.0, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn optimal_halfwidth_is_the_minimizer() {
        for &(g2, s2, d) in &[(30.0, 0.25, 1.0 / 149.0), (400.0, 0.01, 0.001), (2.5, 1.0, 0.02)] {
            let (b, c) = (0.1, 0.6);
            let h = h_opt_local(g2, b, c, s2, d).unwrap();
            let f = |x: f64| local_ese_g2(g2, x, b, c, s2, d).unwrap();
            let numeric = golden_min(f, h / 10.0, h * 10.0);
            assert!((numeric - h).abs() / h < 1e-6);
            let eps = h * 1e-4;
            let deriv = (f(h + eps) - f(h - eps)) / (2.0 * eps);
            assert!(deriv.abs() * h / f(h) < 1e-8);
            let best = ese_at_opt(g2, b, c, s2, d).unwrap();
            assert!((best - f(h)).abs() / best < 1e-12);
            for k in 1..200 {
                let x = h * k as f64 / 50.0;
                assert!(best <= f(x) + 1e-12);
            }
        }
    }

    #[test]
    fn noise_variance_examples() {
        let t = equispaced(40);
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x - 2.0).collect();
        let s = TimeSeries::new(t, y).unwrap();
        assert!(estimate_noise_variance(&s).unwrap() < 1e-20);

        let t: Vec<f64> = (0..40).map(|i| (i as f64 / 39.0).powi(2)).collect();
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x - 2.0).collect();
        let s = TimeSeries::new(t, y).unwrap();
        assert!(estimate_noise_variance(&s).unwrap() < 1e-20);
    }

    #[test]
    fn exact_optimum_for_linear_signal_is_grid_max() {
        let t = equispaced(150);
        let s = TimeSeries::new(t.clone(), vec![0.0; 150]).unwrap();
        let grid = HalfwidthGrid::for_series(&s).unwrap();
        let p = h_opt_exact(&TrueSignal::linear(1.0, 0.5), &s, &Kernel::parabolic(), 0.25, &grid).unwrap();
        let max = *grid.values().last().unwrap();
        assert!(p.values().iter().all(|&h| h == max));
    }
}
