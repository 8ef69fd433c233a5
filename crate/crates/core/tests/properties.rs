use approx::assert_relative_eq;
use proptest::prelude::*;

use kernsmooth::bench::{generate, replicate, SignalKind, SignalSpec};
use kernsmooth::io::{read_series, write_series};
use kernsmooth::pipeline::{estimate_g2, plugin_profile, run_pipeline, PipelineConfig};
use kernsmooth::smoother::smooth_fixed;
use kernsmooth::kernels::interior_kernel;
use kernsmooth::{Kernel, TimeSeries};

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fixed_smoother_is_linear_in_the_data(
        a in values(60), b in values(60), c in -5.0..5.0f64, h in 0.04..0.3f64, rect in any::<bool>()
    ) {
        let k = if rect { Kernel::rectangular() } else { Kernel::parabolic() };
        let t = grid(60);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + c * y).collect();
        let ga = smooth_fixed(&TimeSeries::new(t.clone(), a).unwrap(), &k, h).unwrap().ghat;
        let gb = smooth_fixed(&TimeSeries::new(t.clone(), b).unwrap(), &k, h).unwrap().ghat;
        let gm = smooth_fixed(&TimeSeries::new(t, mix).unwrap(), &k, h).unwrap().ghat;
        for i in 0..60 {
            prop_assert!((gm[i] - (ga[i] + c * gb[i])).abs() <= 1e-9 * (1.0 + gm[i].abs()));
        }
    }

    #[test]
    fn smoother_reproduces_linear_trends(slope in -3.0..3.0f64, icpt in -3.0..3.0f64, h in 0.05..0.45f64) {
        let t = grid(41);
        let y: Vec<f64> = t.iter().map(|x| slope * x + icpt).collect();
        let g = smooth_fixed(&TimeSeries::new(t, y.clone()).unwrap(), &Kernel::parabolic(), h).unwrap().ghat;
        for (gi, yi) in g.iter().zip(&y) {
            prop_assert!((gi - yi).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_round_trip_is_exact(y in values(12), step in 1e-3..10.0f64, start in -1e3..1e3f64) {
        let t: Vec<f64> = (0..12).map(|i| start + step * i as f64).collect();
        let s = TimeSeries::new(t, y).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        let back = read_series(buf.as_slice()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn larger_k2_never_raises_the_raw_halfwidth(k2a in 0.0..50.0f64, dk in 0.0..50.0f64, seed in 0u64..1000) {
        let (s, _) = generate(&SignalSpec::chirp(seed)).unwrap();
        let g2 = estimate_g2(&s, 0.15, &interior_kernel(2).unwrap()).unwrap();
        let k = Kernel::parabolic();
        let lo = plugin_profile(&g2, 0.25, (k.b(), k.c()), s.delta(), 0.15, k2a, (0.0, 1.0)).unwrap();
        let hi = plugin_profile(&g2, 0.25, (k.b(), k.c()), s.delta(), 0.15, k2a + dk, (0.0, 1.0)).unwrap();
        for (a, b) in lo.raw.iter().zip(&hi.raw) {
            prop_assert!(b <= a);
        }
    }
}

#[test]
fn generation_is_deterministic_per_seed() {
    let spec = SignalSpec::chirp(99);
    assert_eq!(generate(&spec).unwrap().0, generate(&spec).unwrap().0);
    assert_ne!(generate(&spec).unwrap().0, generate(&spec.reseeded(100)).unwrap().0);
    let a = run_pipeline(&generate(&spec).unwrap().0, &PipelineConfig::default()).unwrap();
    let b = run_pipeline(&generate(&spec).unwrap().0, &PipelineConfig::default()).unwrap();
    assert_eq!(a.estimate, b.estimate);
}

#[test]
fn error_bars_scale_as_sigma_to_four_fifths() {
    let (s, _) = generate(&SignalSpec::chirp(3)).unwrap();
    let run = |s2: f64| {
        let cfg = PipelineConfig {
            sigma2_override: Some(s2),
            h2_override: Some(0.15),
            ..PipelineConfig::default()
        };
        run_pipeline(&s, &cfg).unwrap()
    };
    let (a, b) = (run(0.25), run(1.0));
    let (pa, pb) = (a.plugin.unwrap(), b.plugin.unwrap());
    let (ea, eb) = (a.estimate.stderr.unwrap(), b.estimate.stderr.unwrap());
    let mut checked = 0;
    for i in 0..s.len() {
        if pa.frozen[i] || pa.clipped[i] || pb.frozen[i] || pb.clipped[i] {
            continue;
        }
        // sigma doubles, so the optimal error bar grows by 2^{4/5}
        assert_relative_eq!(eb[i] / ea[i], 2f64.powf(0.8), max_relative = 1e-10);
        checked += 1;
    }
    assert!(checked > s.len() / 2, "only {checked} comparable points");
}

#[test]
fn second_derivative_halfwidth_exceeds_fitted_halfwidth() {
    let spec = SignalSpec::chirp(21);
    let pairs = replicate(&spec, 40, |_, s| {
        let r = run_pipeline(s, &PipelineConfig::default())?;
        Ok((r.h2_used, r.diagnostics.expect("selection ran").chosen_h))
    })
    .unwrap();
    let above = pairs.iter().filter(|(h2, hf)| h2 > hf).count();
    assert!(above * 10 >= pairs.len() * 9, "{above}/{}", pairs.len());
}

#[test]
fn regularization_removes_the_dominant_spikes() {
    let (s, _) = generate(&SignalSpec::chirp(7)).unwrap();
    let g2 = estimate_g2(&s, 0.15, &interior_kernel(2).unwrap()).unwrap();
    let k = Kernel::parabolic();
    let prof = |k2| plugin_profile(&g2, 0.25, (k.b(), k.c()), s.delta(), 0.15, k2, (0.0, 1.0)).unwrap();
    let (simple, reg) = (prof(0.0), prof(1.0));
    let peak = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // the unregularized maximum sits where the curvature estimate crosses zero
    let i = simple.raw.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let others: Vec<f64> = simple.raw.iter().enumerate().filter(|(j, _)| j.abs_diff(i) > 3).map(|(_, v)| *v).collect();
    let median = {
        let mut o = others.clone();
        o.sort_by(f64::total_cmp);
        o[o.len() / 2]
    };
    assert!(simple.raw[i] > 2.0 * median);
    assert!(peak(&reg.raw) < peak(&simple.raw));
    assert!(reg.raw.iter().all(|h| h.is_finite()));
}

#[test]
fn curvature_estimate_grows_along_the_chirp() {
    let (s, _) = generate(&SignalSpec::chirp(5)).unwrap();
    let g2 = estimate_g2(&s, 0.15, &interior_kernel(2).unwrap()).unwrap();
    let mean_abs = |lo: f64, hi: f64| {
        let v: Vec<f64> = g2.times.iter().zip(&g2.ghat).filter(|(t, _)| **t >= lo && **t <= hi).map(|(_, g)| g.abs()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean_abs(0.7, 1.0) > 3.0 * mean_abs(0.0, 0.5));
}

#[test]
fn noise_free_line_is_reproduced_without_error() {
    let spec = SignalSpec { kind: SignalKind::Linear, n: 60, sigma: 0.0, seed: 0, interval: (0.0, 1.0) };
    let (s, _) = generate(&spec).unwrap();
    let r = run_pipeline(&s, &PipelineConfig::default()).unwrap();
    for (g, y) in r.estimate.ghat.iter().zip(s.values()) {
        assert!((g - y).abs() < 1e-12);
    }
    assert!(r.estimate.stderr.unwrap().iter().all(|e| *e == 0.0));
}
