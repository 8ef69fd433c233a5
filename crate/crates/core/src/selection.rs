//! Goodness-of-fit selection of a constant halfwidth.
//!
//! All criteria are built on the average square residual
//! `ASR(h) = (1/N) Σ |y_i - ĝ(t_i|h)|²`. The penalty term `2κ(0)Δ/h` is
//! evaluated as twice the mean weight a sample receives in its own estimate,
//! which is what `κ(0)Δ/h` approximates in the interior and keeps
//! `E[ASR] = EASE + σ²(1 - penalty)` exact at the data edges.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::oracle::estimate_noise_variance;
use crate::series::TimeSeries;
use crate::smoother::LinearSmoother;

/// Number of points in the default halfwidth grid.
pub const GRID_POINTS: usize = 40;

/// Minimum number of grid points.
pub const MIN_GRID_POINTS: usize = 10;

const GRID_SLACK: f64 = 1e-9;

/// Increasing, equispaced halfwidths `h_j` (time units).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfwidthGrid {
    values: Vec<f64>,
}

impl HalfwidthGrid {
    pub fn linear(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < MIN_GRID_POINTS {
            return Err(Error::Grid(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {count}"
            )));
        }
        if !(min > 0.0 && max > min && max.is_finite()) {
            return Err(Error::Grid(format!("invalid grid range [{min}, {max}]")));
        }
        let step = (max - min) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|k| min + step * k as f64).collect();
        values[count - 1] = max;
        Ok(HalfwidthGrid { values })
    }

    /// Default grid: 40 points from `3Δ` to a quarter of the data span.
    pub fn for_series(series: &TimeSeries) -> Result<Self> {
        let min = 3.0 * series.delta();
        let max = series.span() / 4.0;
        if min >= max {
            return Err(Error::Grid(format!(
                "series too short for a halfwidth grid: 3Δ = {min} >= span/4 = {max}"
            )));
        }
        HalfwidthGrid::linear(min, max, GRID_POINTS)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn spacing(&self) -> f64 {
        self.values[1] - self.values[0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_for(&self, series: &TimeSeries) -> Result<()> {
        let lo = 2.0 * series.delta();
        let hi = series.span() / 4.0;
        if self.min() < lo * (1.0 - GRID_SLACK) {
            return Err(Error::Grid(format!("grid minimum {} below 2Δ = {lo}", self.min())));
        }
        if self.max() > hi * (1.0 + GRID_SLACK) {
            return Err(Error::Grid(format!("grid maximum {} above span/4 = {hi}", self.max())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMethod {
    Rice,
    Fitted,
}

/// Curves over the halfwidth grid and the chosen halfwidth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionDiagnostics {
    pub method: SelectionMethod,
    pub grid: Vec<f64>,
    pub asr: Vec<f64>,
    pub rice: Vec<f64>,
    /// `2κ(0)Δ/h`, evaluated as twice the mean self-weight.
    pub penalty: Vec<f64>,
    pub rice_h: f64,
    pub sigma2: Option<f64>,
    /// `σ² Σ (w_j - δ_{0j})²` averaged over the samples.
    pub vhat: Option<Vec<f64>>,
    /// Estimated EASE `a V(h) + b h⁴` from the fitted model.
    pub fitted_ease: Option<Vec<f64>>,
    pub fitted_a: Option<f64>,
    pub fitted_b: Option<f64>,
    pub b_clamped: bool,
    pub cutoff_h: Option<f64>,
    pub chosen_h: f64,
}

/// Result of the two-parameter least-squares fit `ASR ≈ a V̂ + b h⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsrFit {
    pub a: f64,
    pub b: f64,
    pub b_clamped: bool,
}

/// Nonnegative least squares for `asr_j ≈ a vhat_j + b h_j⁴`.
pub fn fit_asr_model(h: &[f64], vhat: &[f64], asr: &[f64]) -> Result<AsrFit> {
    if h.len() < 3 || vhat.len() != h.len() || asr.len() != h.len() {
        return Err(Error::FitUnderdetermined { found: h.len() });
    }
    // quartic column scaled to O(1) for conditioning
    let hmax = h.iter().cloned().fold(0.0, f64::max);
    let x2: Vec<f64> = h.iter().map(|v| (v / hmax).powi(4)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (s11, s12, s22) = (dot(vhat, vhat), dot(vhat, &x2), dot(&x2, &x2));
    let (r1, r2) = (dot(vhat, asr), dot(&x2, asr));
    let det = s11 * s22 - s12 * s12;
    let (mut a, mut b) = if det.abs() > 1e-14 * s11 * s22 {
        ((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det)
    } else {
        (f64::NAN, f64::NAN)
    };
    let mut b_clamped = false;
    if !(b >= 0.0) {
        b = 0.0;
        b_clamped = true;
        a = if s11 > 0.0 { r1 / s11 } else { 0.0 };
    }
    if !(a >= 0.0) {
        a = 0.0;
        b = if s22 > 0.0 { (r2 / s22).max(0.0) } else { 0.0 };
    }
    Ok(AsrFit {
        a,
        b: b / hmax.powi(4),
        b_clamped,
    })
}

/// Reusable selector for one sample geometry and kernel.
///
/// Precomputes the smoother weights for every grid halfwidth, so repeated
/// selections on new data with the same times are cheap.
#[derive(Debug, Clone)]
pub struct Selector {
    geometry: TimeSeries,
    kernel: Kernel,
    grid: HalfwidthGrid,
    smoothers: Vec<LinearSmoother>,
    penalty: Vec<f64>,
}

impl Selector {
    pub fn new(series: &TimeSeries, kernel: &Kernel, grid: &HalfwidthGrid) -> Result<Self> {
        grid.check_for(series)?;
        let smoothers = grid
            .values()
            .iter()
            .map(|&h| LinearSmoother::fixed(series, kernel, h))
            .collect::<Result<Vec<_>>>()?;
        let penalty: Vec<f64> = smoothers.iter().map(|s| 2.0 * s.mean_self_weight()).collect();
        if let Some(k) = penalty.iter().position(|&p| p >= 1.0) {
            return Err(Error::Grid(format!(
                "Rice penalty denominator is not positive at h = {}",
                grid.values()[k]
            )));
        }
        Ok(Selector {
            geometry: series.clone(),
            kernel: kernel.clone(),
            grid: grid.clone(),
            smoothers,
            penalty,
        })
    }

    pub fn grid(&self) -> &HalfwidthGrid {
        &self.grid
    }

    pub fn smoothers(&self) -> &[LinearSmoother] {
        &self.smoothers
    }

    pub fn penalty(&self) -> &[f64] {
        &self.penalty
    }

    fn check_geometry(&self, series: &TimeSeries) -> Result<()> {
        if series.times() != self.geometry.times() {
            return Err(Error::Domain("series times differ from the selector geometry".into()));
        }
        Ok(())
    }

    pub fn asr_curve(&self, values: &[f64]) -> Vec<f64> {
        self.smoothers.iter().map(|s| asr_with(s, values)).collect()
    }

    /// Minimizes `C_R(h) = ASR(h) / (1 - penalty(h))` over the grid.
    pub fn rice(&self, series: &TimeSeries) -> Result<(f64, SelectionDiagnostics)> {
        self.check_geometry(series)?;
        let asr = self.asr_curve(series.values());
        let rice: Vec<f64> = asr.iter().zip(&self.penalty).map(|(a, p)| a / (1.0 - p)).collect();
        let k = argmin(&rice);
        let h = self.grid.values()[k];
        Ok((
            h,
            SelectionDiagnostics {
                method: SelectionMethod::Rice,
                grid: self.grid.values().to_vec(),
                asr,
                rice,
                penalty: self.penalty.clone(),
                rice_h: h,
                sigma2: None,
                vhat: None,
                fitted_ease: None,
                fitted_a: None,
                fitted_b: None,
                b_clamped: false,
                cutoff_h: None,
                chosen_h: h,
            },
        ))
    }

    /// Two-parameter fitted selector.
    ///
    /// Fits `ASR(h_j) ≈ a V̂(h_j) + b h_j⁴` on the grid points up to the cutoff
    /// (first `h > h_Rice` with `C_R(h) >= 2 C_R(h_Rice)`), then minimizes the
    /// fitted EASE `a V(h) + b h⁴`, with `V(h) = σ² Σ w_j²`, over the grid range.
    pub fn fitted(&self, series: &TimeSeries, sigma2: Option<f64>) -> Result<(f64, SelectionDiagnostics)> {
        let sigma2 = resolve_sigma2(series, sigma2)?;
        let (_, mut diag) = self.rice(series)?;
        let hs = self.grid.values();
        let k_rice = hs.iter().position(|&h| h == diag.rice_h).unwrap_or(0);
        let target = 2.0 * diag.rice[k_rice];
        let k_cut = (k_rice + 1..hs.len())
            .find(|&k| diag.rice[k] >= target)
            .unwrap_or(hs.len() - 1);
        let used = k_cut + 1;
        if used < 3 {
            return Err(Error::FitUnderdetermined { found: used });
        }

        let vhat: Vec<f64> = self
            .smoothers
            .iter()
            .map(|s| s.mean_residual_variance(sigma2))
            .collect();
        let fit = fit_asr_model(&hs[..used], &vhat[..used], &diag.asr[..used])?;

        let variance = |h: f64| -> Result<f64> {
            let sm = LinearSmoother::fixed(&self.geometry, &self.kernel, h)?;
            Ok(sigma2 * mean_sum_sq(&sm))
        };
        let objective = |h: f64| -> Result<f64> { Ok(fit.a * variance(h)? + fit.b * h.powi(4)) };
        let chosen = golden_section(&objective, self.grid.min(), self.grid.max(), 1e-6 * self.grid.max())?;

        let fitted_ease = self
            .smoothers
            .iter()
            .zip(hs)
            .map(|(s, &h)| fit.a * sigma2 * mean_sum_sq(s) + fit.b * h.powi(4))
            .collect();

        diag.method = SelectionMethod::Fitted;
        diag.sigma2 = Some(sigma2);
        diag.vhat = Some(vhat);
        diag.fitted_ease = Some(fitted_ease);
        diag.fitted_a = Some(fit.a);
        diag.fitted_b = Some(fit.b);
        diag.b_clamped = fit.b_clamped;
        diag.cutoff_h = Some(hs[k_cut]);
        diag.chosen_h = chosen;
        Ok((chosen, diag))
    }
}

fn mean_sum_sq(sm: &LinearSmoother) -> f64 {
    let sets = sm.weight_sets();
    sets.iter().map(|w| w.sum_sq()).sum::<f64>() / sets.len() as f64
}

fn asr_with(sm: &LinearSmoother, values: &[f64]) -> f64 {
    let fit = sm.apply(values);
    fit.iter().zip(values).map(|(g, y)| (y - g).powi(2)).sum::<f64>() / values.len() as f64
}

/// First index of the minimum (ties go to the smaller halfwidth).
fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = k;
        }
    }
    best
}

/// Golden-section search on `[lo, hi]`, with the endpoints checked at the end.
fn golden_section<F>(f: &F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let candidates = [(lo, f(lo)?), (mid, f(mid)?), (hi, f(hi)?)];
    let mut best = candidates[0];
    for &cand in &candidates[1..] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    Ok(best.0)
}

fn resolve_sigma2(series: &TimeSeries, sigma2: Option<f64>) -> Result<f64> {
    let s2 = match (sigma2, series.sigma()) {
        (Some(s2), _) => s2,
        (None, Some(s)) => s * s,
        (None, None) => estimate_noise_variance(series)?,
    };
    if !(s2 >= 0.0 && s2.is_finite()) {
        return Err(Error::Domain(format!("noise variance must be >= 0, got {s2}")));
    }
    Ok(s2)
}

/// Average square residual at halfwidth `h`.
pub fn asr(series: &TimeSeries, kernel: &Kernel, h: f64) -> Result<f64> {
    let sm = LinearSmoother::fixed(series, kernel, h)?;
    Ok(asr_with(&sm, series.values()))
}

/// `σ² Σ_j (w_j - δ_{0j})²`, averaged over the estimation points.
pub fn vhat(series: &TimeSeries, kernel: &Kernel, h: f64, sigma2: f64) -> Result<f64> {
    Ok(LinearSmoother::fixed(series, kernel, h)?.mean_residual_variance(sigma2))
}

/// Penalty term `2κ(0)Δ/h` (twice the mean self-weight) at halfwidth `h`.
pub fn penalty(series: &TimeSeries, kernel: &Kernel, h: f64) -> Result<f64> {
    Ok(2.0 * LinearSmoother::fixed(series, kernel, h)?.mean_self_weight())
}

/// Naive corrected EASE `ASR(h) (1 + 2κ(0)Δ/h)`.
pub fn naive_ease(series: &TimeSeries, kernel: &Kernel, h: f64) -> Result<f64> {
    let sm = LinearSmoother::fixed(series, kernel, h)?;
    Ok(asr_with(&sm, series.values()) * (1.0 + 2.0 * sm.mean_self_weight()))
}

pub fn rice_select(
    series: &TimeSeries,
    kernel: &Kernel,
    grid: &HalfwidthGrid,
) -> Result<(f64, SelectionDiagnostics)> {
    Selector::new(series, kernel, grid)?.rice(series)
}

/// Fitted two-parameter selector; `sigma2 = None` uses the series' known
/// noise level or the three-point estimate.
pub fn fitted_select(
    series: &TimeSeries,
    kernel: &Kernel,
    grid: &HalfwidthGrid,
    sigma2: Option<f64>,
) -> Result<(f64, SelectionDiagnostics)> {
    Selector::new(series, kernel, grid)?.fitted(series, sigma2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equispaced(n: usize, f: impl Fn(f64) -> f64) -> TimeSeries {
        let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let y = t.iter().map(|&x| f(x)).collect();
        TimeSeries::new(t, y).unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let s = equispaced(150, |_| 0.0);
        let g = HalfwidthGrid::for_series(&s).unwrap();
        assert_eq!(g.len(), 40);
        assert!((g.min() - 3.0 / 149.0).abs() < 1e-15);
        assert_eq!(g.max(), 0.25);
        assert!(HalfwidthGrid::linear(0.1, 0.2, 5).is_err());
        assert!(HalfwidthGrid::for_series(&equispaced(10, |_| 0.0)).is_err());
    }

    #[test]
    fn grid_outside_bounds_is_rejected() {
        let s = equispaced(150, |t| t);
        let g = HalfwidthGrid::linear(0.001, 0.2, 20).unwrap();
        assert!(matches!(rice_select(&s, &Kernel::parabolic(), &g), Err(Error::Grid(_))));
        let g = HalfwidthGrid::linear(0.05, 0.4, 20).unwrap();
        assert!(matches!(rice_select(&s, &Kernel::parabolic(), &g), Err(Error::Grid(_))));
    }

    #[test]
    fn asr_examples() {
        let s = equispaced(60, |_| 2.5);
        assert!(asr(&s, &Kernel::parabolic(), 0.2).unwrap() < 1e-28);
        let s = equispaced(60, |t| (30.0 * t).sin());
        let small = asr(&s, &Kernel::parabolic(), 2.0 * s.delta()).unwrap();
        assert!(small < asr(&s, &Kernel::parabolic(), 0.2).unwrap());
    }

    #[test]
    fn vhat_uniform_weights() {
        // interior-only geometry: every point has a full rectangular window
        let s = equispaced(101, |_| 0.0);
        let l = 4;
        let h = l as f64 * s.delta();
        let sm = LinearSmoother::fixed(&s, &Kernel::rectangular(), h).unwrap();
        let w = &sm.weight_sets()[50];
        let direct: f64 = w
            .indices()
            .zip(&w.weights)
            .map(|(j, x)| (x - if j == 50 { 1.0 } else { 0.0 }).powi(2))
            .sum();
        assert!((direct - (1.0 - 1.0 / (2 * l + 1) as f64)).abs() < 1e-12);
    }

    #[test]
    fn vhat_parabolic_continuum_limit() {
        let n = 1001;
        let s = equispaced(n, |_| 0.0);
        let delta = s.delta();
        let h = 200.0 * delta;
        let sm = LinearSmoother::fixed(&s, &Kernel::parabolic(), h).unwrap();
        let w = &sm.weight_sets()[500];
        let per_point = w.sum_sq() - 2.0 * w.self_weight() + 1.0;
        let continuum = 1.0 + 0.6 * delta / h - 1.5 * delta / h;
        assert!((per_point - continuum).abs() < 1e-5);
        assert!(vhat(&s, &Kernel::parabolic(), 1.0000001 * delta, 0.3).unwrap() < 0.3);
    }

    #[test]
    fn naive_multiplier() {
        let s = equispaced(301, |t| (5.0 * t).cos());
        let k = Kernel::parabolic();
        let h = 0.1;
        let p = penalty(&s, &k, h).unwrap();
        let ratio = naive_ease(&s, &k, h).unwrap() / asr(&s, &k, h).unwrap();
        assert!((ratio - (1.0 + p)).abs() < 1e-12);
        // interior self-weight approaches κ(0)Δ/h
        let sm = LinearSmoother::fixed(&s, &k, h).unwrap();
        let w0 = sm.weight_sets()[150].self_weight();
        assert!((w0 - 0.75 * s.delta() / h).abs() / w0 < 0.01);
    }

    #[test]
    fn synthetic_asr_model_is_recovered() {
        let h: Vec<f64> = (0..20).map(|k| 0.02 + 0.01 * k as f64).collect();
        let vhat: Vec<f64> = h.iter().map(|x| 0.25 * (1.0 - 0.006 / x)).collect();
        let asr: Vec<f64> = h.iter().zip(&vhat).map(|(x, v)| 2.0 * v + 5.0 * x.powi(4)).collect();
        let fit = fit_asr_model(&h, &vhat, &asr).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-8 && (fit.b - 5.0).abs() < 1e-8);
        assert!(!fit.b_clamped);

        let asr: Vec<f64> = h.iter().zip(&vhat).map(|(x, v)| v - 3.0 * x.powi(4)).collect();
        let fit = fit_asr_model(&h, &vhat, &asr).unwrap();
        assert!(fit.b_clamped && fit.b == 0.0 && fit.a > 0.0);
        assert!(fit_asr_model(&h[..2], &vhat[..2], &asr[..2]).is_err());
    }

    #[test]
    fn noiseless_rice_picks_grid_minimum() {
        let s = equispaced(150, |t| (2.0 * std::f64::consts::PI * t).sin());
        let g = HalfwidthGrid::for_series(&s).unwrap();
        let (h, d) = rice_select(&s, &Kernel::parabolic(), &g).unwrap();
        assert_eq!(h, g.min());
        assert!(d.rice.windows(2).skip(1).all(|w| w[1] >= w[0]));
        for (c, a) in d.rice.iter().zip(&d.asr) {
            assert!(c >= a);
        }
    }

    #[test]
    fn fitted_is_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = equispaced(150, |t| (4.0 * std::f64::consts::PI * t * t).sin());
        let noisy: Vec<f64> = s.values().iter().map(|v| v + rng.random_range(-0.8..0.8)).collect();
        let s = s.with_values(noisy).unwrap();
        let g = HalfwidthGrid::for_series(&s).unwrap();
        let a = fitted_select(&s, &Kernel::parabolic(), &g, None).unwrap();
        let b = fitted_select(&s, &Kernel::parabolic(), &g, None).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, b.1);
        assert!(a.0 >= g.min() && a.0 <= g.max());
    }
}
