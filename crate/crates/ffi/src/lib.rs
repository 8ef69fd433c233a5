//! C ABI for `kernsmooth`.
//!
//! Series and estimates are opaque heap handles created by `ks_*_new` /
//! `ks_smooth_*` / `ks_run_pipeline` and released with the matching `*_free`.
//! Every fallible call returns a [`KsStatus`]; after a failure,
//! [`ks_last_error_message`] describes it on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kernsmooth::oracle::estimate_noise_variance;
use kernsmooth::pipeline::{run_pipeline, PipelineConfig};
use kernsmooth::selection::{fitted_select, rice_select, HalfwidthGrid};
use kernsmooth::smoother::{smooth_fixed, SmoothEstimate};
use kernsmooth::{Error, Kernel, TimeSeries};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad configuration value (halfwidth, sigma, k2, enum value, ...).
    InvalidArgument = 2,
    /// Invalid series: too short, unsorted, duplicate or non-finite values.
    InvalidInput = 3,
    /// A kernel window or fit could not be formed.
    Estimation = 4,
    /// Halfwidth selection failed.
    Selection = 5,
    /// The requested quantity was not computed (e.g. error bars).
    Unavailable = 6,
    /// Caller buffer is shorter than the data.
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsKernel {
    Parabolic = 0,
    Rectangular = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsSelector {
    Rice = 0,
    Fitted = 1,
}

/// Opaque time series.
pub struct KsSeries(TimeSeries);

/// Opaque smoothing result.
pub struct KsEstimate {
    estimate: SmoothEstimate,
    h2: f64,
    sigma2: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> KsStatus {
    match err.root() {
        Error::Config(_) => KsStatus::InvalidArgument,
        Error::TooShort { .. } | Error::DuplicateTime { .. } | Error::InvalidSeries(_) | Error::Parse { .. } => {
            KsStatus::InvalidInput
        }
        Error::Grid(_) | Error::FitUnderdetermined { .. } => KsStatus::Selection,
        _ => KsStatus::Estimation,
    }
}

fn guard<F: FnOnce() -> Result<(), (KsStatus, String)>>(f: F) -> KsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside kernsmooth");
            KsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (KsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (KsStatus, String) {
    (KsStatus::NullPointer, format!("{name} is null"))
}

fn kernel(k: KsKernel) -> Kernel {
    match k {
        KsKernel::Parabolic => Kernel::parabolic(),
        KsKernel::Rectangular => Kernel::rectangular(),
    }
}

unsafe fn series_ref<'a>(series: *const KsSeries) -> Result<&'a TimeSeries, (KsStatus, String)> {
    series.as_ref().map(|s| &s.0).ok_or_else(|| null("series"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `ks_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ks_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ks_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `len` samples into a new series handle.
///
/// # Safety
/// `times` and `values` must point to `len` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ks_series_new(
    times: *const f64,
    values: *const f64,
    len: usize,
    out: *mut *mut KsSeries,
) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if times.is_null() || values.is_null() {
            return Err(null("times/values"));
        }
        let t = std::slice::from_raw_parts(times, len).to_vec();
        let y = std::slice::from_raw_parts(values, len).to_vec();
        let s = TimeSeries::new(t, y).map_err(lib_err)?;
        put(out, KsSeries(s));
        Ok(())
    })
}

/// Attaches a known noise standard deviation (enables error bars for fixed
/// smoothing and skips noise estimation in the pipeline).
///
/// # Safety
/// `series` must be a live handle from [`ks_series_new`].
#[no_mangle]
pub unsafe extern "C" fn ks_series_set_sigma(series: *mut KsSeries, sigma: f64) -> KsStatus {
    guard(|| {
        let s = series.as_mut().ok_or_else(|| null("series"))?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err((KsStatus::InvalidArgument, format!("sigma must be finite and >= 0, got {sigma}")));
        }
        s.0 = s.0.clone().with_sigma(sigma).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `series` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ks_series_free(series: *mut KsSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of samples, or 0 for NULL.
///
/// # Safety
/// `series` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_series_len(series: *const KsSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Three-point estimate of the noise variance.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_noise_variance(series: *const KsSeries, out: *mut f64) -> KsStatus {
    guard(|| {
        let s = series_ref(series)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = estimate_noise_variance(s).map_err(lib_err)?;
        Ok(())
    })
}

/// Chooses a constant halfwidth on the default 40-point grid. `sigma2 <= 0`
/// means "use the series' sigma or estimate it" (fitted selector only).
///
/// # Safety
/// `series` must be a live handle; `out_h` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_select(
    series: *const KsSeries,
    kern: KsKernel,
    selector: KsSelector,
    sigma2: f64,
    out_h: *mut f64,
) -> KsStatus {
    guard(|| {
        let s = series_ref(series)?;
        let out = out_h.as_mut().ok_or_else(|| null("out_h"))?;
        let k = kernel(kern);
        let grid = HalfwidthGrid::for_series(s).map_err(lib_err)?;
        let (h, _) = match selector {
            KsSelector::Rice => rice_select(s, &k, &grid),
            KsSelector::Fitted => fitted_select(s, &k, &grid, (sigma2 > 0.0).then_some(sigma2)),
        }
        .map_err(lib_err)?;
        *out = h;
        Ok(())
    })
}

/// Smooths with constant halfwidth `h` (time units).
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_smooth_fixed(
    series: *const KsSeries,
    kern: KsKernel,
    h: f64,
    out: *mut *mut KsEstimate,
) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = series_ref(series)?;
        if !(h > 0.0 && h.is_finite()) {
            return Err((KsStatus::InvalidArgument, format!("halfwidth must be positive, got {h}")));
        }
        let estimate = smooth_fixed(s, &kernel(kern), h).map_err(lib_err)?;
        let sigma2 = s.sigma().map_or(f64::NAN, |x| x * x);
        put(out, KsEstimate { estimate, h2: f64::NAN, sigma2 });
        Ok(())
    })
}

/// Runs the three-stage adaptive estimator with regularization constant
/// `k2` (1.0 is the default).
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_run_pipeline(series: *const KsSeries, k2: f64, out: *mut *mut KsEstimate) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = series_ref(series)?;
        let config = PipelineConfig {
            k2,
            ..PipelineConfig::default()
        };
        let r = run_pipeline(s, &config).map_err(lib_err)?;
        put(
            out,
            KsEstimate {
                estimate: r.estimate,
                h2: r.h2_used,
                sigma2: r.sigma2,
            },
        );
        Ok(())
    })
}

/// # Safety
/// `estimate` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ks_estimate_free(estimate: *mut KsEstimate) {
    if !estimate.is_null() {
        drop(Box::from_raw(estimate));
    }
}

/// Number of estimation points, or 0 for NULL.
///
/// # Safety
/// `estimate` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_estimate_len(estimate: *const KsEstimate) -> usize {
    estimate.as_ref().map_or(0, |e| e.estimate.ghat.len())
}

/// Second-derivative halfwidth used by the pipeline (NaN for fixed smoothing).
///
/// # Safety
/// `estimate` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_estimate_h2(estimate: *const KsEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.h2)
}

/// Noise variance used for the error bars (NaN when unknown).
///
/// # Safety
/// `estimate` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ks_estimate_sigma2(estimate: *const KsEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.sigma2)
}

unsafe fn copy_out(src: Option<&[f64]>, buf: *mut f64, len: usize) -> Result<(), (KsStatus, String)> {
    let src = src.ok_or((KsStatus::Unavailable, "quantity was not computed".to_string()))?;
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < src.len() {
        return Err((KsStatus::BufferTooSmall, format!("buffer holds {len}, need {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the estimate `ĝ(t_i)` into `buf` (capacity `len`).
///
/// # Safety
/// `estimate` must be a live handle; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_estimate_copy_values(estimate: *const KsEstimate, buf: *mut f64, len: usize) -> KsStatus {
    guard(|| {
        let e = estimate.as_ref().ok_or_else(|| null("estimate"))?;
        copy_out(Some(&e.estimate.ghat), buf, len)
    })
}

/// Copies the standard-error bars; `KS_STATUS_UNAVAILABLE` when none were
/// computed.
///
/// # Safety
/// `estimate` must be a live handle; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_estimate_copy_stderr(estimate: *const KsEstimate, buf: *mut f64, len: usize) -> KsStatus {
    guard(|| {
        let e = estimate.as_ref().ok_or_else(|| null("estimate"))?;
        copy_out(e.estimate.stderr.as_deref(), buf, len)
    })
}

/// Copies the halfwidth used at each point.
///
/// # Safety
/// `estimate` must be a live handle; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_estimate_copy_halfwidths(
    estimate: *const KsEstimate,
    buf: *mut f64,
    len: usize,
) -> KsStatus {
    guard(|| {
        let e = estimate.as_ref().ok_or_else(|| null("estimate"))?;
        copy_out(Some(&e.estimate.halfwidths), buf, len)
    })
}
