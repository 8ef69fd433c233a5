//! Applying kernel weights to data.
//!
//! Equispaced series use the discrete kernel weights of [`crate::kernels`]
//! (boundary kernels at the edges). Non-equispaced series are smoothed by
//! local linear regression, whose equivalent weights are recorded so the
//! variance machinery works unchanged.

use crate::error::{Error, Result};
use crate::kernels::{discrete_weights, window_range, Kernel, Placement, WeightSet};
use crate::series::TimeSeries;

/// Per-sample halfwidth function `h(t_i)`, in time units.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfwidthProfile {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl HalfwidthProfile {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Domain(format!(
                "profile has {} values for {} times",
                values.len(),
                times.len()
            )));
        }
        if let Some(i) = values.iter().position(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::Domain(format!(
                "profile value {} at index {i} is not a positive halfwidth",
                values[i]
            )));
        }
        Ok(HalfwidthProfile { times, values })
    }

    pub fn constant(times: &[f64], h: f64) -> Result<Self> {
        HalfwidthProfile::new(times.to_vec(), vec![h; times.len()])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Estimated curve at the sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothEstimate {
    pub times: Vec<f64>,
    pub ghat: Vec<f64>,
    /// Standard-error bars, when a noise level is known.
    pub stderr: Option<Vec<f64>>,
    pub halfwidths: Vec<f64>,
    /// Derivative order estimated.
    pub q: usize,
}

/// Weights used at sample `i` for halfwidth `h`.
pub fn point_weights(series: &TimeSeries, kernel: &Kernel, i: usize, h: f64) -> Result<WeightSet> {
    if series.is_equispaced() || kernel.q() != 0 {
        discrete_weights(kernel, series.times(), i, h)
    } else {
        local_linear_weights(series.times(), i, h, kernel)
    }
}

/// Equivalent weights of a weighted local linear fit centred on sample `i`.
///
/// Interior points weight by the kernel shape over `[t - h, t + h]`. Within
/// `h` of an edge the window becomes `[edge, edge + 2h]` and the weighting is
/// a parabola centred on `t` that vanishes at the far end of the window.
fn local_linear_weights(times: &[f64], i: usize, h: f64, kernel: &Kernel) -> Result<WeightSet> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("halfwidth must be positive, got {h}")));
    }
    let n = times.len();
    let t = times[i];
    let (t1, tn) = (times[0], times[n - 1]);
    let (dl, dr) = (t - t1, tn - t);

    let (range, w): (_, Vec<f64>) = if dl < h && dl <= dr {
        let r = window_range(times, t1, t1 + 2.0 * h, h);
        let reach = 2.0 * h - dl;
        let w = r.clone().map(|j| parabola((times[j] - t) / reach)).collect();
        (r, w)
    } else if dr < h {
        let r = window_range(times, tn - 2.0 * h, tn, h);
        let reach = 2.0 * h - dr;
        let w = r.clone().map(|j| parabola((times[j] - t) / reach)).collect();
        (r, w)
    } else {
        let r = window_range(times, t - h, t + h, h);
        let w = r
            .clone()
            .map(|j| kernel.eval(((times[j] - t) / h).clamp(-1.0, 1.0)))
            .collect();
        (r, w)
    };

    if range.len() < 3 {
        return Err(Error::InsufficientWindow {
            index: i,
            found: range.len(),
            required: 3,
        });
    }
    let d: Vec<f64> = range.clone().map(|j| times[j] - t).collect();
    let (ell, _) = linear_fit_weights(&w, &d).ok_or(Error::DegenerateWindow { t })?;
    Ok(WeightSet {
        center: i,
        first: range.start,
        weights: ell,
        halfwidth: h,
        q: 0,
        placement: Placement::LocalLinear,
    })
}

fn parabola(s: f64) -> f64 {
    (1.0 - s * s).max(0.0)
}

/// Equivalent weights `(ℓ, ℓ')` with `a = Σ ℓ_j y_j`, `b = Σ ℓ'_j y_j` for the
/// weighted fit `argmin Σ W_j (a + b d_j - y_j)^2`.
fn linear_fit_weights(w: &[f64], d: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let s0: f64 = w.iter().sum();
    let s1: f64 = w.iter().zip(d).map(|(w, d)| w * d).sum();
    let s2: f64 = w.iter().zip(d).map(|(w, d)| w * d * d).sum();
    let det = s0 * s2 - s1 * s1;
    if !(det > 1e-12 * s0.abs() * s2.abs()) || !det.is_finite() {
        return None;
    }
    let a = w
        .iter()
        .zip(d)
        .map(|(w, d)| w * (s2 - d * s1) / det)
        .collect();
    let b = w
        .iter()
        .zip(d)
        .map(|(w, d)| w * (s0 * d - s1) / det)
        .collect();
    Some((a, b))
}

/// Weighted local linear regression at an arbitrary time `t`.
///
/// Uses the samples with `|t_j - t| <= h` weighted by `W((t - t_j)/h)` and
/// returns `(ĝ(t), ĝ'(t))`.
pub fn local_poly_fit<W>(series: &TimeSeries, t: f64, h: f64, weighting: W) -> Result<(f64, f64)>
where
    W: Fn(f64) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("halfwidth must be positive, got {h}")));
    }
    let times = series.times();
    let range = window_range(times, t - h, t + h, h);
    if range.len() < 3 {
        return Err(Error::InsufficientWindow {
            index: range.start.min(times.len() - 1),
            found: range.len(),
            required: 3,
        });
    }
    let w: Vec<f64> = range
        .clone()
        .map(|j| weighting(((t - times[j]) / h).clamp(-1.0, 1.0)))
        .collect();
    let d: Vec<f64> = range.clone().map(|j| times[j] - t).collect();
    let (ell, ell_prime) = linear_fit_weights(&w, &d).ok_or(Error::DegenerateWindow { t })?;
    let y = &series.values()[range];
    let a = ell.iter().zip(y).map(|(l, y)| l * y).sum();
    let b = ell_prime.iter().zip(y).map(|(l, y)| l * y).sum();
    Ok((a, b))
}

/// `σ² Σ w_j²`.
pub fn estimator_variance(weights: &WeightSet, sigma2: f64) -> f64 {
    sigma2 * weights.sum_sq()
}

/// The full weight matrix of a linear smoother over a fixed geometry.
///
/// Weights depend only on the sample times, so one instance can be reused
/// across many realizations of the noise.
#[derive(Debug, Clone)]
pub struct LinearSmoother {
    weights: Vec<WeightSet>,
    q: usize,
}

impl LinearSmoother {
    pub fn fixed(series: &TimeSeries, kernel: &Kernel, h: f64) -> Result<Self> {
        let weights = (0..series.len())
            .map(|i| point_weights(series, kernel, i, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(LinearSmoother {
            weights,
            q: kernel.q(),
        })
    }

    pub fn variable(series: &TimeSeries, kernel: &Kernel, profile: &HalfwidthProfile) -> Result<Self> {
        if profile.len() != series.len() {
            return Err(Error::Domain(format!(
                "profile defined at {} points, series has {}",
                profile.len(),
                series.len()
            )));
        }
        let weights = profile
            .values()
            .iter()
            .enumerate()
            .map(|(i, &h)| point_weights(series, kernel, i, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(LinearSmoother {
            weights,
            q: kernel.q(),
        })
    }

    pub fn weight_sets(&self) -> &[WeightSet] {
        &self.weights
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| w.apply(values)).collect()
    }

    pub fn halfwidths(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.halfwidth).collect()
    }

    /// Mean weight each sample receives in its own estimate.
    pub fn mean_self_weight(&self) -> f64 {
        self.weights.iter().map(WeightSet::self_weight).sum::<f64>() / self.weights.len() as f64
    }

    /// `σ² Σ_j (w_j - δ_{ij})²` averaged over the estimation points.
    pub fn mean_residual_variance(&self, sigma2: f64) -> f64 {
        let total: f64 = self
            .weights
            .iter()
            .map(|w| {
                let s = w.self_weight();
                w.sum_sq() - 2.0 * s + 1.0
            })
            .sum();
        sigma2 * total / self.weights.len() as f64
    }

    fn estimate(&self, series: &TimeSeries) -> SmoothEstimate {
        let stderr = series.sigma().map(|s| {
            self.weights
                .iter()
                .map(|w| estimator_variance(w, s * s).sqrt())
                .collect()
        });
        SmoothEstimate {
            times: series.times().to_vec(),
            ghat: self.apply(series.values()),
            stderr,
            halfwidths: self.halfwidths(),
            q: self.q,
        }
    }
}

/// Smooths with a constant halfwidth `h` at every sample time.
pub fn smooth_fixed(series: &TimeSeries, kernel: &Kernel, h: f64) -> Result<SmoothEstimate> {
    Ok(LinearSmoother::fixed(series, kernel, h)?.estimate(series))
}

/// Smooths with halfwidth `profile[i]` at sample `i`.
pub fn smooth_variable(
    series: &TimeSeries,
    kernel: &Kernel,
    profile: &HalfwidthProfile,
) -> Result<SmoothEstimate> {
    Ok(LinearSmoother::variable(series, kernel, profile)?.estimate(series))
}
