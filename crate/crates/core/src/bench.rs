//! Benchmark signals, seeded noise, Monte Carlo replications and figure data.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::oracle::{error_curve, h_opt_exact, h_opt_local, local_ese, TrueSignal};
use crate::pipeline::{plugin_profile, run_pipeline, PipelineConfig};
use crate::selection::{HalfwidthGrid, Selector};
use crate::series::{TimeSeries, MIN_SAMPLES};
use crate::smoother::LinearSmoother;

/// Fixed halfwidths compared throughout the chirp figures.
pub const CHIRP_HALFWIDTHS: [f64; 3] = [0.04, 0.08, 0.12];

/// Rectangular half-window lengths (in samples) of the running-average figure.
pub const RECTANGULAR_LENGTHS: [usize; 3] = [4, 9, 14];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Chirp,
    /// `g(t) = t`.
    Linear,
    /// `g(t) = 1`.
    Constant,
    /// `g(t) = 0`.
    PureNoise,
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chirp" => Ok(SignalKind::Chirp),
            "linear" => Ok(SignalKind::Linear),
            "constant" => Ok(SignalKind::Constant),
            "pure-noise" => Ok(SignalKind::PureNoise),
            other => Err(Error::Config(format!("unknown signal kind {other:?}"))),
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalKind::Chirp => "chirp",
            SignalKind::Linear => "linear",
            SignalKind::Constant => "constant",
            SignalKind::PureNoise => "pure-noise",
        })
    }
}

impl SignalKind {
    pub fn signal(self) -> TrueSignal {
        match self {
            SignalKind::Chirp => TrueSignal::chirp(),
            SignalKind::Linear => TrueSignal::linear(1.0, 0.0),
            SignalKind::Constant => TrueSignal::constant(1.0),
            SignalKind::PureNoise => TrueSignal::constant(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    pub interval: (f64, f64),
}

impl SignalSpec {
    /// 150 samples of the chirp on `[0, 1]` with noise level 0.5.
    pub fn chirp(seed: u64) -> Self {
        SignalSpec {
            kind: SignalKind::Chirp,
            n: 150,
            sigma: 0.5,
            seed,
            interval: (0.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_SAMPLES {
            return Err(Error::Config(format!("need n >= {MIN_SAMPLES}, got {}", self.n)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        let (a, b) = self.interval;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::Config(format!("invalid interval [{a}, {b}]")));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let (a, b) = self.interval;
        let step = (b - a) / (self.n - 1) as f64;
        let mut t: Vec<f64> = (0..self.n).map(|i| a + step * i as f64).collect();
        t[self.n - 1] = b;
        t
    }

    /// Same spec with another seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        SignalSpec { seed, ..self.clone() }
    }
}

/// `n` independent normal draws with standard deviation `sigma`.
pub fn gaussian_noise(seed: u64, n: usize, sigma: f64) -> Result<Vec<f64>> {
    if sigma == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("noise sigma {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
}

/// Samples the signal at equispaced times and adds seeded Gaussian noise.
///
/// The returned series does not carry the noise level; estimators see only
/// the data.
pub fn generate(spec: &SignalSpec) -> Result<(TimeSeries, TrueSignal)> {
    spec.validate()?;
    let signal = spec.kind.signal();
    let times = spec.times();
    let noise = gaussian_noise(spec.seed, spec.n, spec.sigma)?;
    let values = times.iter().zip(&noise).map(|(&t, e)| signal.g(t) + e).collect();
    Ok((TimeSeries::new(times, values)?, signal))
}

/// SplitMix64 output for `state`.
fn splitmix64(state: u64) -> u64 {
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `index`, derived from the base seed so every
/// replication owns an independent stream regardless of execution order.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut s = CompensatedSum::default();
    for x in values {
        s.add(x);
    }
    s.value()
}

/// Runs `f` on `replications` independent noisy realizations of `spec`, in
/// parallel, returning results in replication order.
pub fn replicate<T, F>(spec: &SignalSpec, replications: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &TimeSeries) -> Result<T> + Sync,
{
    spec.validate()?;
    let signal = spec.kind.signal();
    let times = spec.times();
    let clean = signal.sample(&times);
    let geometry = TimeSeries::new(times, clean.clone())?;
    let results: Vec<Result<T>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let noise = gaussian_noise(replication_seed(spec.seed, r as u64), spec.n, spec.sigma)?;
            let values = clean.iter().zip(&noise).map(|(g, e)| g + e).collect();
            f(r, &geometry.with_values(values)?)
        })
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(r, res)| {
            res.map_err(|e| Error::Replication {
                index: r,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Per-point mean and Monte-Carlo standard error over replications.
pub fn pointwise_mean(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let r = samples.len();
    let n = samples.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; n];
    let mut stderr = vec![0.0; n];
    for i in 0..n {
        // shifted by the first sample so identical samples give zero spread
        let shift = samples[0][i];
        let m = shift + compensated_sum(samples.iter().map(|s| s[i] - shift)) / r as f64;
        let ss = compensated_sum(samples.iter().map(|s| (s[i] - m).powi(2)));
        mean[i] = m;
        stderr[i] = if r > 1 { (ss / ((r - 1) * r) as f64).sqrt() } else { 0.0 };
    }
    (mean, stderr)
}

/// What to run in each Monte Carlo replication.
#[derive(Debug, Clone)]
pub enum Estimator {
    /// `ĝ = y`.
    Identity,
    Fixed { kernel: Kernel, h: f64 },
    Rice { kernel: Kernel, grid: Option<HalfwidthGrid> },
    Fitted {
        kernel: Kernel,
        grid: Option<HalfwidthGrid>,
        sigma2: Option<f64>,
    },
    Pipeline(PipelineConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub replications: usize,
    pub times: Vec<f64>,
    pub per_point_mse: Vec<f64>,
    pub per_point_mse_stderr: Vec<f64>,
    /// Chosen halfwidth per replication (`h₂` for the pipeline).
    pub selector_halfwidths: Option<Vec<f64>>,
    /// Mean halfwidth at each sample time (pipeline only).
    pub mean_profile: Option<Vec<f64>>,
}

struct Replication {
    sq_err: Vec<f64>,
    chosen: Option<f64>,
    profile: Option<Vec<f64>>,
}

pub fn monte_carlo(spec: &SignalSpec, estimator: &Estimator, replications: usize) -> Result<MonteCarloReport> {
    if replications < 2 {
        return Err(Error::Config(format!("need at least 2 replications, got {replications}")));
    }
    spec.validate()?;
    let signal = spec.kind.signal();
    let times = spec.times();
    let truth = signal.sample(&times);
    let geometry = TimeSeries::new(times.clone(), truth.clone())?;
    let sq = |ghat: &[f64]| -> Vec<f64> { ghat.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).collect() };
    let grid_for = |grid: &Option<HalfwidthGrid>| match grid {
        Some(g) => Ok(g.clone()),
        None => HalfwidthGrid::for_series(&geometry),
    };

    let reps: Vec<Replication> = match estimator {
        Estimator::Identity => replicate(spec, replications, |_, s| {
            Ok(Replication { sq_err: sq(s.values()), chosen: None, profile: None })
        })?,
        Estimator::Fixed { kernel, h } => {
            let sm = LinearSmoother::fixed(&geometry, kernel, *h)?;
            replicate(spec, replications, |_, s| {
                Ok(Replication { sq_err: sq(&sm.apply(s.values())), chosen: None, profile: None })
            })?
        }
        Estimator::Rice { kernel, grid } => {
            let selector = Selector::new(&geometry, kernel, &grid_for(grid)?)?;
            replicate(spec, replications, |_, s| {
                let (h, _) = selector.rice(s)?;
                let k = selector.grid().values().iter().position(|&x| x == h).unwrap_or(0);
                let ghat = selector.smoothers()[k].apply(s.values());
                Ok(Replication { sq_err: sq(&ghat), chosen: Some(h), profile: None })
            })?
        }
        Estimator::Fitted { kernel, grid, sigma2 } => {
            let selector = Selector::new(&geometry, kernel, &grid_for(grid)?)?;
            replicate(spec, replications, |_, s| {
                let (h, _) = selector.fitted(s, *sigma2)?;
                let ghat = LinearSmoother::fixed(s, kernel, h)?.apply(s.values());
                Ok(Replication { sq_err: sq(&ghat), chosen: Some(h), profile: None })
            })?
        }
        Estimator::Pipeline(config) => replicate(spec, replications, |_, s| {
            let out = run_pipeline(s, config)?;
            Ok(Replication {
                sq_err: sq(&out.estimate.ghat),
                chosen: Some(out.h2_used),
                profile: Some(out.h_profile.values().to_vec()),
            })
        })?,
    };

    let sq_errs: Vec<Vec<f64>> = reps.iter().map(|r| r.sq_err.clone()).collect();
    let (per_point_mse, per_point_mse_stderr) = pointwise_mean(&sq_errs);
    let chosen: Option<Vec<f64>> = reps.iter().map(|r| r.chosen).collect();
    let profiles: Option<Vec<Vec<f64>>> = reps.iter().map(|r| r.profile.clone()).collect();
    Ok(MonteCarloReport {
        replications,
        times,
        per_point_mse,
        per_point_mse_stderr,
        selector_halfwidths: chosen,
        mean_profile: profiles.map(|p| pointwise_mean(&p).0),
    })
}

/// Identifier of a reproducible figure dataset (`fig1` .. `fig11`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FigureId(u8);

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix("fig")
            .and_then(|k| k.parse::<u8>().ok())
            .filter(|k| (1..=11).contains(k))
            .map(FigureId)
            .ok_or_else(|| Error::Config(format!("unknown figure {s:?}, expected fig1..fig11")))
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fig{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct FigureConfig {
    /// 1 → single realization from `spec.seed`; more → averaged over
    /// replications (figures 7 and 11 only; the others always use one).
    pub replications: usize,
    pub pipeline: PipelineConfig,
}

impl Default for FigureConfig {
    fn default() -> Self {
        FigureConfig {
            replications: 1,
            pipeline: PipelineConfig::default(),
        }
    }
}

/// Named, equal-length numeric columns plus scalar metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub figure: String,
    pub columns: Vec<(String, Vec<f64>)>,
    pub meta: BTreeMap<String, f64>,
}

impl Table {
    fn new(figure: FigureId) -> Self {
        Table {
            figure: figure.to_string(),
            columns: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.columns.push((name.into(), values));
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }
}

struct Columns<'a>(&'a [(String, Vec<f64>)]);

impl Serialize for Columns<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, values) in self.0 {
            map.serialize_entry(name, values)?;
        }
        map.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("figure", &self.figure)?;
        map.serialize_entry("meta", &self.meta)?;
        map.serialize_entry("columns", &Columns(&self.columns))?;
        map.end()
    }
}

fn tag(h: f64) -> String {
    format!("h{:03}", (h * 100.0).round() as i64)
}

/// Data behind one figure of the chirp study. Deterministic in
/// `(figure, spec, config)`.
pub fn figure_data(figure: FigureId, spec: &SignalSpec, config: &FigureConfig) -> Result<Table> {
    let (series, signal) = generate(spec)?;
    let times = series.times().to_vec();
    let sigma2 = spec.sigma * spec.sigma;
    let parabolic = Kernel::parabolic();
    let mut table = Table::new(figure);
    table.meta.insert("seed".into(), spec.seed as f64);
    table.meta.insert("n".into(), spec.n as f64);
    table.meta.insert("sigma".into(), spec.sigma);
    let fixed_ese = |h: f64| -> Result<Vec<f64>> {
        let sm = LinearSmoother::fixed(&series, &parabolic, h)?;
        Ok(error_curve(&signal, &sm, &times, sigma2).ese)
    };

    match figure.0 {
        1 => {
            table.push("t", times.clone());
            table.push("g", signal.sample(&times));
            table.push("y", series.values().to_vec());
        }
        2 | 3 => {
            table.push("t", times.clone());
            table.push("g", signal.sample(&times));
            table.push("y", series.values().to_vec());
            if figure.0 == 2 {
                for l in RECTANGULAR_LENGTHS {
                    let h = l as f64 * series.delta();
                    let sm = LinearSmoother::fixed(&series, &Kernel::rectangular(), h)?;
                    table.push(format!("ghat_l{l}"), sm.apply(series.values()));
                }
            } else {
                for h in CHIRP_HALFWIDTHS {
                    let sm = LinearSmoother::fixed(&series, &parabolic, h)?;
                    table.push(format!("ghat_{}", tag(h)), sm.apply(series.values()));
                }
            }
        }
        4 => {
            table.push("t", times.clone());
            for h in CHIRP_HALFWIDTHS {
                table.push(format!("ese_{}", tag(h)), fixed_ese(h)?);
            }
        }
        5 => {
            let h = 0.08;
            let local = times
                .iter()
                .map(|&t| local_ese(&signal, t, h, parabolic.b(), parabolic.c(), sigma2, series.delta()))
                .collect::<Result<Vec<_>>>()?;
            table.push("t", times.clone());
            table.push("ese_exact", fixed_ese(h)?);
            table.push("ese_local", local);
        }
        6 => {
            let grid = HalfwidthGrid::linear(2.0 * series.delta(), 0.25, 200)?;
            let exact = h_opt_exact(&signal, &series, &parabolic, sigma2, &grid)?;
            let asymptotic = times
                .iter()
                .map(|&t| match h_opt_local(signal.g2(t).abs(), parabolic.b(), parabolic.c(), sigma2, series.delta()) {
                    Err(Error::Unbounded) => Ok(f64::INFINITY),
                    other => other,
                })
                .collect::<Result<Vec<_>>>()?;
            table.push("t", times.clone());
            table.push("h_exact", exact.values().to_vec());
            table.push("h_asymptotic", asymptotic);
        }
        7 => {
            let grid = match &config.pipeline.grid {
                Some(g) => g.clone(),
                None => HalfwidthGrid::for_series(&series)?,
            };
            let selector = Selector::new(&series, &parabolic, &grid)?;
            let ease: Vec<f64> = selector
                .smoothers()
                .iter()
                .map(|sm| {
                    let e = error_curve(&signal, sm, &times, sigma2).ese;
                    compensated_sum(e) / times.len() as f64
                })
                .collect();
            let curves = |s: &TimeSeries| -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
                let (h_rice, _) = selector.rice(s)?;
                let (h_fit, d) = selector.fitted(s, None)?;
                let s2 = d.sigma2.unwrap_or(0.0);
                let rice = d.rice.iter().map(|c| c - s2).collect();
                Ok((rice, d.fitted_ease.unwrap_or_default(), h_rice, h_fit))
            };
            let runs = if config.replications > 1 {
                replicate(spec, config.replications, |_, s| curves(s))?
            } else {
                vec![curves(&series)?]
            };
            let rice: Vec<Vec<f64>> = runs.iter().map(|r| r.0.clone()).collect();
            let fitted: Vec<Vec<f64>> = runs.iter().map(|r| r.1.clone()).collect();
            table.push("h", grid.values().to_vec());
            table.push("ease", ease);
            table.push("rice_minus_sigma2", pointwise_mean(&rice).0);
            table.push("fitted_ease", pointwise_mean(&fitted).0);
            let reps = runs.len() as f64;
            table.meta.insert("replications".into(), reps);
            table.meta.insert("rice_h".into(), compensated_sum(runs.iter().map(|r| r.2)) / reps);
            table.meta.insert("fitted_h".into(), compensated_sum(runs.iter().map(|r| r.3)) / reps);
        }
        8..=10 => {
            let out = run_pipeline(&series, &config.pipeline)?;
            table.meta.insert("h2".into(), out.h2_used);
            table.meta.insert("sigma2_hat".into(), out.sigma2);
            table.push("t", times.clone());
            match figure.0 {
                8 => {
                    table.push("g2", times.iter().map(|&t| signal.g2(t)).collect());
                    table.push("g2hat", out.g2hat.ghat.clone());
                }
                9 => {
                    let moments = (parabolic.b(), parabolic.c());
                    let interval = (series.start(), series.end());
                    let simple = if out.sigma2 > 0.0 {
                        plugin_profile(&out.g2hat, out.sigma2, moments, series.delta(), out.h2_used, 0.0, interval)?.raw
                    } else {
                        vec![f64::INFINITY; times.len()]
                    };
                    let regularized = match &out.plugin {
                        Some(p) => p.raw.clone(),
                        None => out.h_profile.values().to_vec(),
                    };
                    table.meta.insert("k2".into(), config.pipeline.k2);
                    table.push("h_simple", simple);
                    table.push("h_regularized", regularized);
                    table.push("h_final", out.h_profile.values().to_vec());
                }
                _ => {
                    table.push("g", signal.sample(&times));
                    table.push("y", series.values().to_vec());
                    table.push("ghat", out.estimate.ghat.clone());
                    table.push("stderr", out.estimate.stderr.clone().unwrap_or_default());
                    table.push("halfwidth", out.h_profile.values().to_vec());
                }
            }
        }
        _ => {
            let truth = signal.sample(&times);
            let (adaptive, adaptive_se, profile) = if config.replications > 1 {
                let rep = monte_carlo(spec, &Estimator::Pipeline(config.pipeline.clone()), config.replications)?;
                (rep.per_point_mse, rep.per_point_mse_stderr, rep.mean_profile.unwrap_or_default())
            } else {
                let out = run_pipeline(&series, &config.pipeline)?;
                let sq = out.estimate.ghat.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).collect();
                (sq, vec![0.0; times.len()], out.h_profile.values().to_vec())
            };
            table.meta.insert("replications".into(), config.replications.max(1) as f64);
            table.push("t", times.clone());
            table.push("ese_adaptive", adaptive);
            table.push("ese_adaptive_stderr", adaptive_se);
            for h in CHIRP_HALFWIDTHS {
                table.push(format!("ese_{}", tag(h)), fixed_ese(h)?);
            }
            table.push("halfwidth", profile);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chirp_has_two_periods() {
        let (s, sig) = generate(&SignalSpec { sigma: 0.0, ..SignalSpec::chirp(0) }).unwrap();
        assert!(s.values()[149].abs() < 1e-12);
        assert!((sig.g(1.0)).abs() < 1e-12);
        assert!((s.delta() - 1.0 / 149.0).abs() < 1e-15);
        // phase 4πt² crosses 2π once in (0,1): sign pattern + - + -
        let crossings = s.values().windows(2).filter(|w| w[0] > 0.0 && w[1] <= 0.0).count();
        assert_eq!(crossings, 2);
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let a = generate(&SignalSpec::chirp(11)).unwrap().0;
        let b = generate(&SignalSpec::chirp(11)).unwrap().0;
        let c = generate(&SignalSpec::chirp(12)).unwrap().0;
        assert_eq!(a, b);
        assert_ne!(a, c);
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| replication_seed(5, r)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn noise_moments() {
        let sigma = 0.7;
        let x = gaussian_noise(42, 1_000_000, sigma).unwrap();
        let n = x.len() as f64;
        let mean = compensated_sum(x.iter().copied()) / n;
        let var = compensated_sum(x.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
        assert!(mean.abs() < 4.0 * sigma / 1000.0);
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.01);
    }

    #[test]
    fn compensated_sum_is_order_stable() {
        let x: Vec<f64> = (0..10_000).map(|k| 1e-3 * ((k * 7919 % 1000) as f64 + 0.1)).collect();
        let mut y = x.clone();
        y.reverse();
        assert_eq!(compensated_sum(x.iter().copied()), compensated_sum(y.iter().copied()));
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!("sawtooth".parse::<SignalKind>().is_err());
        assert!("fig12".parse::<FigureId>().is_err());
        assert!("fig0".parse::<FigureId>().is_err());
        assert_eq!("fig7".parse::<FigureId>().unwrap().to_string(), "fig7");
    }

    #[test]
    fn noiseless_deterministic_estimator_has_zero_stderr() {
        let spec = SignalSpec { sigma: 0.0, ..SignalSpec::chirp(1) };
        let rep = monte_carlo(&spec, &Estimator::Fixed { kernel: Kernel::parabolic(), h: 0.08 }, 5).unwrap();
        assert!(rep.per_point_mse_stderr.iter().all(|&s| s == 0.0));
        assert!(monte_carlo(&spec, &Estimator::Identity, 1).is_err());
    }

    #[test]
    fn figure_shapes() {
        let spec = SignalSpec::chirp(3);
        let cfg = FigureConfig::default();
        let f1 = figure_data("fig1".parse().unwrap(), &spec, &cfg).unwrap();
        assert_eq!(f1.names(), ["t", "g", "y"]);
        let f4 = figure_data("fig4".parse().unwrap(), &spec, &cfg).unwrap();
        assert_eq!(f4.names(), ["t", "ese_h004", "ese_h008", "ese_h012"]);
        for id in 1..=11 {
            let t = figure_data(format!("fig{id}").parse().unwrap(), &spec, &cfg).unwrap();
            let rows = t.rows();
            assert!(rows > 0);
            assert!(t.columns.iter().all(|(_, v)| v.len() == rows), "fig{id}");
        }
    }
}
