//! The three-stage data-adaptive estimator.
//!
//! 1. Goodness-of-fit initialization: noise variance and the halfwidth `h₂`
//!    used for the second derivative.
//! 2. Kernel estimate of `g''(t)`.
//! 3. Regularized plug-in halfwidth profile and the final variable-halfwidth
//!    smooth with error bars.

use crate::error::{Error, Result, Stage};
use crate::kernels::{interior_kernel, Kernel};
use crate::oracle::{ese_at_opt, estimate_noise_variance, local_ese_g2};
use crate::selection::{HalfwidthGrid, SelectionDiagnostics, Selector};
use crate::series::TimeSeries;
use crate::smoother::{smooth_fixed, smooth_variable, HalfwidthProfile, SmoothEstimate};

/// Below this fraction of the mean square of the data, the noise estimate is
/// treated as zero and the data as noise-free.
const NOISE_FREE_RATIO: f64 = 1e-20;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Regularization constant in `|ĝ''|² + k₂ h₂⁵`.
    pub k2: f64,
    /// Selection grid; `None` uses [`HalfwidthGrid::for_series`].
    pub grid: Option<HalfwidthGrid>,
    pub kernel_q0: Kernel,
    pub kernel_q2: Kernel,
    pub sigma2_override: Option<f64>,
    pub h2_override: Option<f64>,
    /// Reference length `ℓ` in `h₂ = h_fit^{5/9} ℓ^{4/9}`; `None` uses the
    /// largest grid halfwidth.
    pub h2_reference: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k2: 1.0,
            grid: None,
            kernel_q0: Kernel::parabolic(),
            kernel_q2: interior_kernel(2).expect("order 2 is supported"),
            sigma2_override: None,
            h2_override: None,
            h2_reference: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k2 >= 0.0 && self.k2.is_finite()) {
            return Err(Error::Config(format!("k2 must be >= 0, got {}", self.k2)));
        }
        if let Some(s2) = self.sigma2_override {
            if !(s2 > 0.0 && s2.is_finite()) {
                return Err(Error::Config(format!("sigma2 override must be positive, got {s2}")));
            }
        }
        if let Some(h) = self.h2_override {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("h2 override must be positive, got {h}")));
            }
        }
        if let Some(l) = self.h2_reference {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("h2 reference length must be positive, got {l}")));
            }
        }
        if self.kernel_q0.q() != 0 {
            return Err(Error::Config(format!("kernel_q0 has order {}", self.kernel_q0.q())));
        }
        if self.kernel_q2.q() != 2 {
            return Err(Error::Config(format!("kernel_q2 has order {}", self.kernel_q2.q())));
        }
        Ok(())
    }
}

/// Plug-in halfwidths before and after the filtering rules.
#[derive(Debug, Clone, PartialEq)]
pub struct PluginProfile {
    /// Regularized curvature `R(t) = |ĝ''(t)|² + k₂ h₂⁵`.
    pub curvature: Vec<f64>,
    /// `h_as(t)` straight from the plug-in formula (may be infinite).
    pub raw: Vec<f64>,
    pub profile: HalfwidthProfile,
    /// Points whose halfwidth was frozen by the touch-point rule.
    pub frozen: Vec<bool>,
    /// Points whose halfwidth was clipped to `[2Δ, span/2]`.
    pub clipped: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct AdaptiveEstimate {
    pub estimate: SmoothEstimate,
    pub g2hat: SmoothEstimate,
    pub h_profile: HalfwidthProfile,
    pub plugin: Option<PluginProfile>,
    pub h2_used: f64,
    pub sigma2: f64,
    /// Stage-1 selection curves; absent when `h₂` was given by hand.
    pub diagnostics: Option<SelectionDiagnostics>,
}

/// Second-derivative estimate with constant halfwidth `h2`.
pub fn estimate_g2(series: &TimeSeries, h2: f64, kernel_q2: &Kernel) -> Result<SmoothEstimate> {
    if kernel_q2.q() != 2 {
        return Err(Error::Config(format!("expected an order-2 kernel, got order {}", kernel_q2.q())));
    }
    smooth_fixed(series, kernel_q2, h2)
}

/// Running median over `|t_j - t_i| <= half`.
fn median_filter(times: &[f64], values: &[f64], half: f64) -> Vec<f64> {
    let n = times.len();
    let mut out = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0, 0);
    let mut buf = Vec::new();
    for i in 0..n {
        while times[i] - times[lo] > half {
            lo += 1;
        }
        while hi + 1 < n && times[hi + 1] - times[i] <= half {
            hi += 1;
        }
        buf.clear();
        buf.extend_from_slice(&values[lo..=hi]);
        buf.sort_by(f64::total_cmp);
        let m = buf.len();
        out.push(if m % 2 == 1 {
            buf[m / 2]
        } else {
            let (a, b) = (buf[m / 2 - 1], buf[m / 2]);
            if a.is_infinite() || b.is_infinite() { a.max(b) } else { 0.5 * (a + b) }
        });
    }
    out
}

/// Regularized plug-in halfwidth profile.
///
/// `h_as(t) = [σ² C Δ / (4 B² R(t))]^{1/5}` with `R(t) = |ĝ''(t)|² + k₂ h₂⁵`,
/// median-filtered over a window of total length `h₂`, frozen beyond the
/// touch points `h_as(t) = t - t₁` and `h_as(t) = t_N - t`, and clipped to
/// `[2Δ, (t_N - t₁)/2]`.
pub fn plugin_profile(
    g2hat: &SmoothEstimate,
    sigma2: f64,
    moments: (f64, f64),
    delta: f64,
    h2: f64,
    k2: f64,
    interval: (f64, f64),
) -> Result<PluginProfile> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::Domain(format!("noise variance must be positive, got {sigma2}")));
    }
    if !(k2 >= 0.0) {
        return Err(Error::Domain(format!("k2 must be >= 0, got {k2}")));
    }
    let (b, c) = moments;
    let (t1, tn) = interval;
    let times = &g2hat.times;
    let n = times.len();
    let reg = k2 * h2.powi(5);
    let curvature: Vec<f64> = g2hat.ghat.iter().map(|g| g * g + reg).collect();
    let numer = sigma2 * c * delta / (4.0 * b * b);
    let raw: Vec<f64> = curvature
        .iter()
        .map(|&r| if r > 0.0 { (numer / r).powf(0.2) } else { f64::INFINITY })
        .collect();

    let mut h = median_filter(times, &raw, 0.5 * h2);
    let mut frozen = vec![false; n];
    let mid = n / 2;
    if let Some(p) = (0..=mid).find(|&i| h[i] <= times[i] - t1) {
        for i in 0..p {
            h[i] = h[p];
            frozen[i] = true;
        }
    }
    if let Some(p) = (mid..n).rev().find(|&i| h[i] <= tn - times[i]) {
        for i in p + 1..n {
            h[i] = h[p];
            frozen[i] = true;
        }
    }
    let (floor, cap) = (2.0 * delta, 0.5 * (tn - t1));
    let mut clipped = vec![false; n];
    for (v, cl) in h.iter_mut().zip(clipped.iter_mut()) {
        if *v > cap || *v < floor {
            *v = v.clamp(floor, cap);
            *cl = true;
        }
    }
    Ok(PluginProfile {
        curvature,
        raw,
        profile: HalfwidthProfile::new(times.clone(), h)?,
        frozen,
        clipped,
    })
}

/// Error bars: the optimal-ESE formula where the halfwidth is the plug-in
/// optimum, the local ESE at the actual halfwidth elsewhere.
fn error_bars(plugin: &PluginProfile, moments: (f64, f64), sigma2: f64, delta: f64) -> Result<Vec<f64>> {
    let (b, c) = moments;
    let h = plugin.profile.values();
    (0..h.len())
        .map(|i| {
            let g2 = plugin.curvature[i].sqrt();
            let ese = if g2 > 0.0 && !plugin.frozen[i] && !plugin.clipped[i] {
                ese_at_opt(g2, b, c, sigma2, delta)?
            } else {
                local_ese_g2(g2, h[i], b, c, sigma2, delta)?
            };
            Ok(ese.max(0.0).sqrt())
        })
        .collect()
}

/// `h₂ = h_fit^{5/9} ℓ^{4/9}`, kept at most half the span.
///
/// The optimal halfwidth scales as `Δ^{1/5}` for the curve and as `Δ^{1/9}`
/// for its second derivative; `ℓ` is the length at which the two coincide.
pub fn second_derivative_halfwidth(h_fit: f64, reference: f64, span: f64) -> f64 {
    (h_fit.powf(5.0 / 9.0) * reference.powf(4.0 / 9.0)).min(0.5 * span)
}

pub fn run_pipeline(series: &TimeSeries, config: &PipelineConfig) -> Result<AdaptiveEstimate> {
    config.validate()?;
    let span = series.span();
    let moments = (config.kernel_q0.b(), config.kernel_q0.c());

    // Stage 1
    let init = || -> Result<(f64, f64, Option<SelectionDiagnostics>)> {
        let sigma2 = match (config.sigma2_override, series.sigma()) {
            (Some(s2), _) => s2,
            (None, Some(s)) => s * s,
            (None, None) => estimate_noise_variance(series)?,
        };
        let scale = series.values().iter().map(|y| y * y).sum::<f64>() / series.len() as f64;
        let noise_free = sigma2 <= NOISE_FREE_RATIO * scale;
        if let Some(h2) = config.h2_override {
            return Ok((sigma2, h2, None));
        }
        let grid = match &config.grid {
            Some(g) => g.clone(),
            None => HalfwidthGrid::for_series(series)?,
        };
        let reference = config.h2_reference.unwrap_or(grid.max());
        if noise_free {
            return Ok((sigma2, second_derivative_halfwidth(grid.min(), reference, span), None));
        }
        let selector = Selector::new(series, &config.kernel_q0, &grid)?;
        let (h_fit, diag) = selector.fitted(series, Some(sigma2))?;
        Ok((sigma2, second_derivative_halfwidth(h_fit, reference, span), Some(diag)))
    };
    let (sigma2, h2, diagnostics) = init().map_err(|e| e.at_stage(Stage::Initialization))?;

    // Stage 2
    let g2hat = estimate_g2(series, h2, &config.kernel_q2).map_err(|e| e.at_stage(Stage::SecondDerivative))?;

    // Stage 3
    let finish = || -> Result<(SmoothEstimate, HalfwidthProfile, Option<PluginProfile>)> {
        let scale = series.values().iter().map(|y| y * y).sum::<f64>() / series.len() as f64;
        if sigma2 <= NOISE_FREE_RATIO * scale {
            let profile = HalfwidthProfile::constant(series.times(), 2.0 * series.delta())?;
            let mut estimate = smooth_variable(series, &config.kernel_q0, &profile)?;
            estimate.stderr = Some(vec![0.0; series.len()]);
            return Ok((estimate, profile, None));
        }
        let plugin = plugin_profile(
            &g2hat,
            sigma2,
            moments,
            series.delta(),
            h2,
            config.k2,
            (series.start(), series.end()),
        )?;
        let mut estimate = smooth_variable(series, &config.kernel_q0, &plugin.profile)?;
        estimate.stderr = Some(error_bars(&plugin, moments, sigma2, series.delta())?);
        Ok((estimate, plugin.profile.clone(), Some(plugin)))
    };
    let (estimate, h_profile, plugin) = finish().map_err(|e| e.at_stage(Stage::PlugIn))?;

    Ok(AdaptiveEstimate {
        estimate,
        g2hat,
        h_profile,
        plugin,
        h2_used: h2,
        sigma2,
        diagnostics,
    })
}
