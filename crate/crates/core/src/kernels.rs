//! Kernel shapes on `[-1, 1]`, their moments, and discrete weight sets.
//!
//! The optimal family for estimating the `q`-th derivative is
//! `κ_q(t) = (2q+1)! / (2^{q+1} q!) · [P_q(t) - P_{q+2}(t)]`, where `P_n` are the
//! Legendre polynomials. Near a data edge the window is shifted so that it
//! starts at the edge, and the boundary shape `G(z, y)` replaces `κ_q`; `z` is
//! the position of the estimation point inside the shifted window.
//!
//! Discrete weights are the sampled shape projected (in the Euclidean sense)
//! onto the affine set of weights that satisfy the `q+2` discrete moment
//! conditions `Σ (t_j - t_i)^m w_j = q! δ_{mq}`, `m = 0..=q+1`. Weights for
//! `q > 0` already include the `1/h^q` factor, so `Σ w_j y_j` estimates
//! `g^{(q)}(t_i)` directly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, KERNEL_TOL};

/// Largest derivative order exposed by the kernel constructors.
pub const MAX_ORDER: usize = 2;

/// Relative slack used when deciding whether a sample lies on a window edge.
const EDGE_SLACK: f64 = 1e-9;

/// Legendre polynomial `P_n(t)` by the three-term recurrence.
pub fn legendre(n: usize, t: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut prev, mut cur) = (1.0, t);
            for k in 1..n {
                let k = k as f64;
                let next = ((2.0 * k + 1.0) * t * cur - k * prev) / (k + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `(2q+1)! / (2^{q+1} q!)`.
fn optimal_prefactor(q: usize) -> f64 {
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    fact(2 * q + 1) / (2f64.powi(q as i32 + 1) * fact(q))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Shape of a kernel on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    /// `κ ≡ 1/2`.
    Rectangular,
    /// The Legendre-optimal kernel of the kernel's derivative order.
    Optimal,
    /// Polynomial with coefficients in ascending powers.
    Polynomial(Vec<f64>),
}

/// A continuous weighting shape on `[-1, 1]`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    q: usize,
    shape: KernelShape,
    name: String,
    b: f64,
    c: f64,
}

impl Kernel {
    fn build(q: usize, shape: KernelShape, name: String) -> Self {
        let mut k = Kernel {
            q,
            shape,
            name,
            b: 0.0,
            c: 0.0,
        };
        let (b, c) = kernel_moments(&k);
        k.b = b;
        k.c = c;
        k
    }

    /// The parabolic kernel `(3/4)(1 - t^2)`, optimal for `q = 0`.
    pub fn parabolic() -> Self {
        Kernel::build(0, KernelShape::Optimal, "parabolic".into())
    }

    /// The rectangular kernel `1/2` on `[-1, 1]`.
    pub fn rectangular() -> Self {
        Kernel::build(0, KernelShape::Rectangular, "rectangular".into())
    }

    /// A polynomial shape for derivative order `q`. Used for custom weightings.
    pub fn polynomial(q: usize, coeffs: Vec<f64>, name: impl Into<String>) -> Self {
        Kernel::build(q, KernelShape::Polynomial(coeffs), name.into())
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "parabolic" => Ok(Kernel::parabolic()),
            "rectangular" => Ok(Kernel::rectangular()),
            "optimal-0" => interior_kernel(0),
            "optimal-1" => interior_kernel(1),
            "optimal-2" => interior_kernel(2),
            other => Err(Error::Config(format!("unknown kernel '{other}'"))),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    /// Bias moment `½∫ s² κ(s) ds`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Variance moment `∫ κ(s)² ds`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn kappa0(&self) -> f64 {
        self.eval(0.0)
    }

    /// Whether boundary kernels from the optimal family apply near the data edges.
    pub fn has_boundary_family(&self) -> bool {
        self.shape == KernelShape::Optimal
    }

    pub fn eval(&self, s: f64) -> f64 {
        if !(-1.0..=1.0).contains(&s) {
            return 0.0;
        }
        match &self.shape {
            KernelShape::Rectangular => 0.5,
            KernelShape::Optimal => {
                optimal_prefactor(self.q) * (legendre(self.q, s) - legendre(self.q + 2, s))
            }
            KernelShape::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * s + a),
        }
    }
}

/// Optimal interior kernel for the `q`-th derivative.
pub fn interior_kernel(q: usize) -> Result<Kernel> {
    if q > MAX_ORDER {
        return Err(Error::Config(format!(
            "derivative order {q} unsupported (max {MAX_ORDER})"
        )));
    }
    let name = if q == 0 {
        "parabolic".to_string()
    } else {
        format!("optimal-{q}")
    };
    Ok(Kernel::build(q, KernelShape::Optimal, name))
}

/// Boundary kernel `G(z, ·)` for an estimation point at relative position
/// `z ∈ [-1, 0]` inside a window that starts at the left data edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryKernel {
    q: usize,
    z: f64,
}

impl BoundaryKernel {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn eval(&self, y: f64) -> f64 {
        if !(-1.0..=1.0).contains(&y) {
            return 0.0;
        }
        let q = self.q;
        let k = (2 * q + 3) as f64;
        optimal_prefactor(q)
            * (legendre(q, y)
                + k * self.z * legendre(q + 1, y)
                + (k * self.z * self.z - 1.0) * legendre(q + 2, y))
    }
}

pub fn boundary_kernel(q: usize, z: f64) -> Result<BoundaryKernel> {
    if q > MAX_ORDER {
        return Err(Error::Config(format!(
            "derivative order {q} unsupported (max {MAX_ORDER})"
        )));
    }
    if !(-1.0..=0.0).contains(&z) {
        return Err(Error::Domain(format!(
            "boundary position z = {z} outside [-1, 0]; use the interior kernel"
        )));
    }
    Ok(BoundaryKernel { q, z })
}

/// `(B, C) = (½∫s²κ, ∫κ²)` by adaptive quadrature.
pub fn kernel_moments(kernel: &Kernel) -> (f64, f64) {
    let b = 0.5 * adaptive_simpson(|s| s * s * kernel.eval(s), -1.0, 1.0, KERNEL_TOL);
    let c = adaptive_simpson(|s| kernel.eval(s).powi(2), -1.0, 1.0, KERNEL_TOL);
    (b, c)
}

/// Which kernel produced a weight set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    Interior,
    /// Boundary kernel at the left edge with relative position `z`.
    LeftBoundary { z: f64 },
    /// Mirrored boundary kernel at the right edge.
    RightBoundary { z: f64 },
    /// Interior shape truncated at a data edge (kernels without a boundary family).
    Truncated,
    /// Equivalent weights of a local linear regression.
    LocalLinear,
}

/// Discrete weights for one estimation point at one halfwidth.
///
/// The window is the contiguous index range `first..first + weights.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub center: usize,
    pub first: usize,
    pub weights: Vec<f64>,
    pub halfwidth: f64,
    pub q: usize,
    pub placement: Placement,
}

impl WeightSet {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.weights.len()
    }

    /// `Σ w_j y_j`.
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&values[self.indices()])
            .map(|(w, y)| w * y)
            .sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    /// Weight given to the sample at the estimation point itself.
    pub fn self_weight(&self) -> f64 {
        if self.indices().contains(&self.center) {
            self.weights[self.center - self.first]
        } else {
            0.0
        }
    }

    /// `Σ (t_j - t_center)^m w_j`.
    pub fn moment(&self, times: &[f64], m: i32) -> f64 {
        let tc = times[self.center];
        self.weights
            .iter()
            .zip(&times[self.indices()])
            .map(|(w, t)| (t - tc).powi(m) * w)
            .sum()
    }
}

/// Index range of samples with `lo <= t <= hi`, with a small relative slack.
pub(crate) fn window_range(times: &[f64], lo: f64, hi: f64, scale: f64) -> std::ops::Range<usize> {
    let eps = EDGE_SLACK * scale;
    let a = times.partition_point(|&t| t < lo - eps);
    let b = times.partition_point(|&t| t <= hi + eps);
    a..b.max(a)
}

/// Local sample spacing used as the quadrature weight of sample `j`.
fn local_spacing(times: &[f64], j: usize) -> f64 {
    let n = times.len();
    if n < 2 {
        return 1.0;
    }
    if j == 0 {
        times[1] - times[0]
    } else if j == n - 1 {
        times[n - 1] - times[n - 2]
    } else {
        0.5 * (times[j + 1] - times[j - 1])
    }
}

/// Discrete weights of `kernel` at sample `i` with halfwidth `h` (time units).
///
/// Interior points use `κ((t_j - t_i)/h)`. Points closer than `h` to a data
/// edge use the boundary family when the kernel has one, otherwise the
/// truncated interior shape. The sampled shape is then corrected onto the
/// discrete moment conditions.
pub fn discrete_weights(kernel: &Kernel, times: &[f64], i: usize, h: f64) -> Result<WeightSet> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("halfwidth must be positive, got {h}")));
    }
    if i >= times.len() {
        return Err(Error::Domain(format!(
            "index {i} outside series of length {}",
            times.len()
        )));
    }
    let q = kernel.q();
    let n = times.len();
    let t = times[i];
    let (t1, tn) = (times[0], times[n - 1]);
    let (dl, dr) = (t - t1, tn - t);

    let placement = if kernel.has_boundary_family() && dl < h && dl <= dr {
        Placement::LeftBoundary { z: dl / h - 1.0 }
    } else if kernel.has_boundary_family() && dr < h {
        Placement::RightBoundary { z: dr / h - 1.0 }
    } else if dl < h || dr < h {
        Placement::Truncated
    } else {
        Placement::Interior
    };

    let range = match placement {
        Placement::LeftBoundary { .. } => window_range(times, t1, t1 + 2.0 * h, h),
        Placement::RightBoundary { .. } => window_range(times, tn - 2.0 * h, tn, h),
        _ => window_range(times, t - h, t + h, h),
    };
    let required = q + 3;
    if range.len() < required {
        return Err(Error::InsufficientWindow {
            index: i,
            found: range.len(),
            required,
        });
    }

    let sign = if q % 2 == 1 { -1.0 } else { 1.0 };
    let mut raw: Vec<f64> = range
        .clone()
        .map(|j| {
            let shape = match placement {
                Placement::LeftBoundary { z } => {
                    let y = ((times[j] - t1) / h - 1.0).clamp(-1.0, 1.0);
                    BoundaryKernel { q, z }.eval(y)
                }
                Placement::RightBoundary { z } => {
                    let y = ((tn - times[j]) / h - 1.0).clamp(-1.0, 1.0);
                    sign * BoundaryKernel { q, z }.eval(y)
                }
                _ => kernel.eval(((times[j] - t) / h).clamp(-1.0, 1.0)),
            };
            shape * local_spacing(times, j) / h
        })
        .collect();

    if q == 0 {
        let total: f64 = raw.iter().sum();
        if total.abs() > f64::EPSILON {
            raw.iter_mut().for_each(|w| *w /= total);
        }
    }

    let offsets: Vec<f64> = range.clone().map(|j| (times[j] - t) / h).collect();
    let mut v = project_onto_moments(&raw, &offsets, q).ok_or(Error::DegenerateWindow { t })?;
    if q > 0 {
        let scale = h.powi(q as i32);
        v.iter_mut().for_each(|w| *w /= scale);
    }

    Ok(WeightSet {
        center: i,
        first: range.start,
        weights: v,
        halfwidth: h,
        q,
        placement,
    })
}

/// Closest weights (Euclidean) to `raw` satisfying `Σ u_j^m v_j = q! δ_{mq}` for `m = 0..=q+1`.
fn project_onto_moments(raw: &[f64], u: &[f64], q: usize) -> Option<Vec<f64>> {
    let m = q + 2;
    let n = raw.len();
    let a = DMatrix::from_fn(m, n, |r, j| u[j].powi(r as i32));
    let v0 = DVector::from_column_slice(raw);
    let mut target = DVector::zeros(m);
    target[q] = factorial(q);
    let resid = target - &a * &v0;
    let gram = &a * a.transpose();
    let lambda = gram.lu().solve(&resid)?;
    if lambda.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let v = v0 + a.transpose() * lambda;
    Some(v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
    }

    /// Explicit P_4 used as an independent oracle for the recurrence.
    fn p4(t: f64) -> f64 {
        (35.0 * t.powi(4) - 30.0 * t * t + 3.0) / 8.0
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(0, 0.37), 1.0);
        assert_eq!(legendre(2, 1.0), 1.0);
        assert!((legendre(4, 0.0) - 0.375).abs() < 1e-15);
        for t in grid(101) {
            assert!((legendre(4, t) - p4(t)).abs() < 1e-14);
            assert!((legendre(7, 1.0) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn optimal_kernels_match_closed_forms() {
        let k0 = interior_kernel(0).unwrap();
        let k2 = interior_kernel(2).unwrap();
        for t in grid(1001) {
            assert!((k0.eval(t) - 0.75 * (1.0 - t * t)).abs() < 1e-12);
            let closed = 105.0 / 16.0 * (-1.0 + 6.0 * t * t - 5.0 * t.powi(4));
            assert!((k2.eval(t) - closed).abs() < 1e-12);
        }
        assert_eq!(k0.eval(1.0), 0.0);
        assert_eq!(k0.eval(-1.0), 0.0);
        assert_eq!(k0.eval(1.5), 0.0);
        assert!(interior_kernel(3).is_err());
    }

    #[test]
    fn continuous_moment_conditions() {
        let integ = |k: &Kernel, m: i32| {
            adaptive_simpson(|s| s.powi(m) * k.eval(s), -1.0, 1.0, KERNEL_TOL)
        };
        let k0 = interior_kernel(0).unwrap();
        assert!((integ(&k0, 0) - 1.0).abs() < 1e-9);
        assert!(integ(&k0, 1).abs() < 1e-9);
        let k2 = interior_kernel(2).unwrap();
        for m in [0, 1, 3] {
            assert!(integ(&k2, m).abs() < 1e-9, "m = {m}");
        }
        assert!((0.5 * integ(&k2, 2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn moments_of_named_kernels() {
        let (b, c) = kernel_moments(&Kernel::parabolic());
        assert!((b - 0.1).abs() < 1e-10 && (c - 0.6).abs() < 1e-10);
        let (b, c) = kernel_moments(&Kernel::rectangular());
        assert!((b - 1.0 / 6.0).abs() < 1e-10 && (c - 0.5).abs() < 1e-10);
        let zero = Kernel::polynomial(0, vec![0.0], "zero");
        assert_eq!(kernel_moments(&zero), (0.0, 0.0));
    }

    #[test]
    fn boundary_kernel_touch_point_and_edge() {
        for q in [0, 2] {
            let g = boundary_kernel(q, 0.0).unwrap();
            let k = interior_kernel(q).unwrap();
            for y in grid(1001) {
                assert!((g.eval(y) - k.eval(y)).abs() < 1e-12);
            }
        }
        let g = boundary_kernel(0, -1.0).unwrap();
        assert!(g.eval(0.0).abs() < 1e-15);
        assert!(boundary_kernel(0, 0.1).is_err());
        assert!(boundary_kernel(0, -1.1).is_err());
    }

    #[test]
    fn boundary_kernel_integrates_to_one() {
        for k in 0..=20 {
            let z = -(k as f64) / 20.0;
            let g = boundary_kernel(0, z).unwrap();
            let total = adaptive_simpson(|y| g.eval(y), -1.0, 1.0, KERNEL_TOL);
            assert!((total - 1.0).abs() < 1e-10, "z = {z}");
            // first moment about the estimation point vanishes
            let m1 = adaptive_simpson(|y| (y - z) * g.eval(y), -1.0, 1.0, KERNEL_TOL);
            assert!(m1.abs() < 1e-10, "z = {z}");
        }
    }

    fn equispaced(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn rectangular_weights_are_uniform() {
        let t = equispaced(101);
        let delta = 0.01;
        for l in [1usize, 3, 7, 12] {
            let w = discrete_weights(&Kernel::rectangular(), &t, 50, l as f64 * delta).unwrap();
            assert_eq!(w.weights.len(), 2 * l + 1);
            for &x in &w.weights {
                assert!((x - 1.0 / (2 * l + 1) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parabolic_interior_weights_are_normalized_shape() {
        let t = equispaced(101);
        let h = 0.0596;
        let w = discrete_weights(&Kernel::parabolic(), &t, 40, h).unwrap();
        assert_eq!(w.placement, Placement::Interior);
        let raw: Vec<f64> = w
            .indices()
            .map(|j| 0.75 * (1.0 - ((t[j] - t[40]) / h).powi(2)))
            .collect();
        let total: f64 = raw.iter().sum();
        for (a, r) in w.weights.iter().zip(&raw) {
            assert!((a - r / total).abs() < 1e-13);
        }
    }

    #[test]
    fn q0_moment_conditions_everywhere() {
        let t = equispaced(60);
        for i in 0..60 {
            let w = discrete_weights(&Kernel::parabolic(), &t, i, 0.1).unwrap();
            assert!((w.moment(&t, 0) - 1.0).abs() < 1e-12);
            assert!(w.moment(&t, 1).abs() < 1e-10);
        }
        let irregular: Vec<f64> = (0..40).map(|i| (i as f64 / 39.0).powf(1.3)).collect();
        for i in 0..40 {
            let w = discrete_weights(&Kernel::rectangular(), &irregular, i, 0.12).unwrap();
            assert!((w.moment(&irregular, 0) - 1.0).abs() < 1e-12);
            assert!(w.moment(&irregular, 1).abs() < 1e-10);
        }
    }

    #[test]
    fn q2_weights_differentiate_quadratics() {
        let t = equispaced(101);
        let k2 = interior_kernel(2).unwrap();
        let y: Vec<f64> = t.iter().map(|x| x * x).collect();
        for i in 0..101 {
            let w = discrete_weights(&k2, &t, i, 0.15).unwrap();
            assert!(w.moment(&t, 0).abs() < 1e-9);
            assert!(w.moment(&t, 1).abs() < 1e-9);
            assert!((0.5 * w.moment(&t, 2) - 1.0).abs() < 1e-9);
            assert!(w.moment(&t, 3).abs() < 1e-9);
            assert!((w.apply(&y) - 2.0).abs() < 1e-8, "i = {i}");
        }
    }

    #[test]
    fn boundary_placement() {
        let t = equispaced(101);
        let k = Kernel::parabolic();
        let w = discrete_weights(&k, &t, 0, 0.1).unwrap();
        assert_eq!(w.placement, Placement::LeftBoundary { z: -1.0 });
        assert_eq!(w.first, 0);
        let w = discrete_weights(&k, &t, 100, 0.1).unwrap();
        assert!(matches!(w.placement, Placement::RightBoundary { .. }));
        assert_eq!(w.indices().end, 101);
        let w = discrete_weights(&Kernel::rectangular(), &t, 0, 0.1).unwrap();
        assert_eq!(w.placement, Placement::Truncated);
    }

    #[test]
    fn too_small_window_is_reported() {
        let t = equispaced(101);
        let err = discrete_weights(&interior_kernel(2).unwrap(), &t, 50, 0.015).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientWindow {
                index: 50,
                found: 3,
                required: 5
            }
        ));
        assert!(discrete_weights(&Kernel::parabolic(), &t, 50, 0.0).is_err());
    }

    #[test]
    fn discrete_moments_converge() {
        // B_L = (1/2h²) Σ d² w, C_L = L Σ w² on an equispaced grid with h = LΔ
        let mut prev: Option<(f64, f64)> = None;
        for l in [10usize, 20, 50, 100] {
            let n = 2 * l + 1;
            let delta = 1.0;
            let t: Vec<f64> = (0..n).map(|i| i as f64 * delta).collect();
            let h = l as f64 * delta;
            let w = discrete_weights(&Kernel::parabolic(), &t, l, h).unwrap();
            let b_l = w.moment(&t, 2) / (2.0 * h * h);
            let c_l = l as f64 * w.sum_sq();
            let err = ((b_l - 0.1).abs() / 0.1, (c_l - 0.6).abs() / 0.6);
            if l == 50 {
                assert!(err.0 <= 0.02 && err.1 <= 0.02, "{err:?}");
            }
            if let Some(p) = prev {
                assert!(err.0 < p.0 && err.1 < p.1);
            }
            prev = Some(err);
        }
    }
}
