//! C ABI for the tautline regression library.
//!
//! Fits are returned as opaque handles; every entry point reports a status
//! code, and a thread-local message carries the detail of the last failure.
//! All slices are caller-allocated.

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use tautline::{
    count_extrema, fit_expfam, fit_quantile, fit_taut, local_squeeze, Error, Family, Fit,
    LambdaVector, PseudoHuber, Quadratic, SignalKind, SqueezeKind, SqueezeOptions,
};

/// Status codes of every C entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidData = 3,
    CoercivityError = 4,
    NonCoerciveData = 5,
    Unsupported = 6,
    NoConvergence = 7,
    SizeLimit = 8,
}

/// Fitting methods of the adaptive entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TlMethod {
    Mean = 0,
    Quantile = 1,
    Poisson = 2,
    Binary = 3,
}

/// Benchmark signals.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TlSignal {
    Blocks = 0,
    Bumps = 1,
    Heavisine = 2,
    Doppler = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg.replace('\0', " ")).unwrap();
    });
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::InvalidParameter(_) => TlStatus::InvalidArgument,
        Error::InvalidData(_) => TlStatus::InvalidData,
        Error::Coercivity(_) => TlStatus::CoercivityError,
        Error::NonCoerciveData(_) => TlStatus::NonCoerciveData,
        Error::DegenerateRange(_) | Error::UnsupportedCertificate(_) => TlStatus::Unsupported,
        Error::NonTermination(_) => TlStatus::NoConvergence,
        Error::SizeLimit(_) => TlStatus::SizeLimit,
    }
}

fn fail(e: Error) -> TlStatus {
    let code = status_of(&e);
    set_error(&e.to_string());
    code
}

/// An owned fit: values plus diagnostics. Opaque to C.
pub struct TlFit {
    fit: Fit,
    lambda: Vec<f64>,
    certificate_violation: f64,
    iterations: usize,
}

/// Message of the most recent failure on this thread. Valid until the next
/// failing call; never null.
#[no_mangle]
pub extern "C" fn tl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn slice_arg<'a>(ptr: *const f64, n: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, n))
    }
}

fn finish(
    fit: Fit,
    lambda: &LambdaVector,
    certificate_violation: f64,
    iterations: usize,
    out: *mut *mut TlFit,
) -> TlStatus {
    let handle = Box::new(TlFit {
        fit,
        lambda: lambda.gaps().to_vec(),
        certificate_violation,
        iterations,
    });
    unsafe {
        *out = Box::into_raw(handle);
    }
    TlStatus::Ok
}

fn certify_smooth<M: tautline::LossModel + ?Sized>(
    model: &M,
    lambda: &LambdaVector,
    values: &[f64],
) -> f64 {
    tautline::check_optimality_smooth(model, lambda, values, 1e-8)
        .map(|c| c.worst)
        .unwrap_or(f64::NAN)
}

/// Least-squares fit at a constant penalty.
///
/// # Safety
/// `y` must point to `n` doubles and `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_mean(
    y: *const f64,
    n: usize,
    lambda: f64,
    out: *mut *mut TlFit,
) -> TlStatus {
    if out.is_null() {
        return TlStatus::NullPointer;
    }
    let Some(y) = slice_arg(y, n) else {
        return TlStatus::NullPointer;
    };
    let run = || -> Result<(Fit, LambdaVector, f64), Error> {
        let model = Quadratic::new(y.to_vec())?;
        let lam = LambdaVector::constant(lambda, n)?;
        let fit = fit_taut(&model, &lam)?;
        let worst = certify_smooth(&model, &lam, &fit.values);
        Ok((fit, lam, worst))
    };
    match run() {
        Ok((fit, lam, worst)) => finish(fit, &lam, worst, 1, out),
        Err(e) => fail(e),
    }
}

/// Smoothed absolute-value fit at scale `delta` and a constant penalty.
///
/// # Safety
/// `y` must point to `n` doubles and `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_huber(
    y: *const f64,
    n: usize,
    delta: f64,
    lambda: f64,
    out: *mut *mut TlFit,
) -> TlStatus {
    if out.is_null() {
        return TlStatus::NullPointer;
    }
    let Some(y) = slice_arg(y, n) else {
        return TlStatus::NullPointer;
    };
    let run = || -> Result<(Fit, LambdaVector, f64), Error> {
        let model = PseudoHuber::new(y.to_vec(), delta)?;
        let lam = LambdaVector::constant(lambda, n)?;
        let fit = fit_taut(&model, &lam)?;
        let worst = certify_smooth(&model, &lam, &fit.values);
        Ok((fit, lam, worst))
    };
    match run() {
        Ok((fit, lam, worst)) => finish(fit, &lam, worst, 1, out),
        Err(e) => fail(e),
    }
}

/// Exact quantile fit at level `beta` and a constant penalty.
///
/// # Safety
/// `y` must point to `n` doubles and `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_quantile(
    y: *const f64,
    n: usize,
    beta: f64,
    lambda: f64,
    out: *mut *mut TlFit,
) -> TlStatus {
    if out.is_null() {
        return TlStatus::NullPointer;
    }
    let Some(y) = slice_arg(y, n) else {
        return TlStatus::NullPointer;
    };
    let run = || -> Result<(Fit, LambdaVector, f64), Error> {
        let lam = LambdaVector::constant(lambda, n)?;
        let q = fit_quantile(y, beta, &lam)?;
        let model = tautline::QuantileLoss::new(y.to_vec(), beta)?;
        let worst = tautline::check_optimality(&model, &lam, &q.fit.values, 1e-9).worst;
        Ok((q.fit, lam, worst))
    };
    match run() {
        Ok((fit, lam, worst)) => finish(fit, &lam, worst, 1, out),
        Err(e) => fail(e),
    }
}

/// Penalized maximum likelihood for counts (`poisson` nonzero) or binary
/// labels, on the natural-parameter scale.
///
/// # Safety
/// `y` must point to `n` doubles and `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_likelihood(
    y: *const f64,
    n: usize,
    poisson: i32,
    lambda: f64,
    out: *mut *mut TlFit,
) -> TlStatus {
    if out.is_null() {
        return TlStatus::NullPointer;
    }
    let Some(y) = slice_arg(y, n) else {
        return TlStatus::NullPointer;
    };
    let family = if poisson != 0 {
        Family::Poisson
    } else {
        Family::Bernoulli
    };
    let run = || -> Result<(Fit, LambdaVector, f64), Error> {
        let lam = LambdaVector::constant(lambda, n)?;
        let f = fit_expfam(y, &lam, family)?;
        let model = tautline::ExpFamily::new(y.to_vec(), family)?;
        let worst = certify_smooth(&model, &lam, &f.fit.values);
        Ok((f.fit, lam, worst))
    };
    match run() {
        Ok((fit, lam, worst)) => finish(fit, &lam, worst, 1, out),
        Err(e) => fail(e),
    }
}

/// Adaptive fit by multiscale local squeezing with dyadic intervals.
/// `beta` is only read for the quantile method; `gamma` is the squeeze
/// factor (pass 0 for the default 0.9).
///
/// # Safety
/// `y` must point to `n` doubles and `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_adaptive(
    y: *const f64,
    n: usize,
    method: TlMethod,
    beta: f64,
    gamma: f64,
    out: *mut *mut TlFit,
) -> TlStatus {
    if out.is_null() {
        return TlStatus::NullPointer;
    }
    let Some(y) = slice_arg(y, n) else {
        return TlStatus::NullPointer;
    };
    let kind = match method {
        TlMethod::Mean => SqueezeKind::Mean,
        TlMethod::Quantile => SqueezeKind::Quantile(beta),
        TlMethod::Poisson => SqueezeKind::Poisson,
        TlMethod::Binary => SqueezeKind::Bernoulli,
    };
    let opts = SqueezeOptions {
        gamma: if gamma > 0.0 { gamma } else { 0.9 },
        ..SqueezeOptions::default()
    };
    match local_squeeze(y, kind, &opts) {
        Ok((res, _)) => {
            let worst = match kind {
                SqueezeKind::Quantile(beta) => tautline::QuantileLoss::new(y.to_vec(), beta)
                    .map(|m| tautline::check_optimality(&m, &res.lambda, &res.fit.values, 1e-9).worst)
                    .unwrap_or(f64::NAN),
                SqueezeKind::Mean => Quadratic::new(y.to_vec())
                    .map(|m| certify_smooth(&m, &res.lambda, &res.fit.values))
                    .unwrap_or(f64::NAN),
                SqueezeKind::Poisson | SqueezeKind::Bernoulli => {
                    let family = if kind == SqueezeKind::Poisson {
                        Family::Poisson
                    } else {
                        Family::Bernoulli
                    };
                    tautline::ExpFamily::new(y.to_vec(), family)
                        .map(|m| certify_smooth(&m, &res.lambda, &res.fit.values))
                        .unwrap_or(f64::NAN)
                }
            };
            let iters = res.iterations;
            let lam = res.lambda.clone();
            finish(res.fit, &lam, worst, iters, out)
        }
        Err(e) => fail(e),
    }
}

/// Number of observations in a fit.
///
/// # Safety
/// `fit` must be a live handle from a fitting call.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_len(fit: *const TlFit) -> usize {
    if fit.is_null() {
        return 0;
    }
    (*fit).fit.values.len()
}

/// Copies the fitted values into a caller buffer of length `tl_fit_len`.
///
/// # Safety
/// `fit` must be live; `out` must hold `tl_fit_len(fit)` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_values(fit: *const TlFit, out: *mut f64) -> TlStatus {
    if fit.is_null() || out.is_null() {
        return TlStatus::NullPointer;
    }
    let v = &(*fit).fit.values;
    std::ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    TlStatus::Ok
}

/// Copies the per-gap penalties into a caller buffer of length
/// `tl_fit_len - 1`.
///
/// # Safety
/// `fit` must be live; `out` must hold `tl_fit_len(fit) - 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_lambda(fit: *const TlFit, out: *mut f64) -> TlStatus {
    if fit.is_null() || out.is_null() {
        return TlStatus::NullPointer;
    }
    let v = &(*fit).lambda;
    std::ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    TlStatus::Ok
}

/// Penalized objective value of the fit.
///
/// # Safety
/// `fit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_objective(fit: *const TlFit) -> f64 {
    if fit.is_null() {
        return f64::NAN;
    }
    (*fit).fit.objective
}

/// Number of maximal constant segments.
///
/// # Safety
/// `fit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_segment_count(fit: *const TlFit) -> usize {
    if fit.is_null() {
        return 0;
    }
    (*fit).fit.segments.len()
}

/// Number of local extreme segments; pass a nonzero `interior_only` to
/// exclude segments touching the boundary.
///
/// # Safety
/// `fit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_extrema(fit: *const TlFit, interior_only: i32) -> usize {
    if fit.is_null() {
        return 0;
    }
    let s = count_extrema(&(*fit).fit.values, 1e-9);
    if interior_only != 0 {
        s.interior()
    } else {
        s.total()
    }
}

/// Worst violation of the exact optimality conditions; effectively zero
/// for a correct fit.
///
/// # Safety
/// `fit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_certificate_violation(fit: *const TlFit) -> f64 {
    if fit.is_null() {
        return f64::NAN;
    }
    (*fit).certificate_violation
}

/// Squeeze iterations (1 for fixed-penalty fits).
///
/// # Safety
/// `fit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_iterations(fit: *const TlFit) -> usize {
    if fit.is_null() {
        return 0;
    }
    (*fit).iterations
}

/// Releases a fit handle.
///
/// # Safety
/// `fit` must come from a fitting call and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_free(fit: *mut TlFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Samples a benchmark signal into a caller buffer of length `n`.
///
/// # Safety
/// `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tl_signal(kind: TlSignal, n: usize, out: *mut f64) -> TlStatus {
    if out.is_null() {
        return TlStatus::NullPointer;
    }
    let kind = match kind {
        TlSignal::Blocks => SignalKind::Blocks,
        TlSignal::Bumps => SignalKind::Bumps,
        TlSignal::Heavisine => SignalKind::Heavisine,
        TlSignal::Doppler => SignalKind::Doppler,
    };
    match tautline::signal_values(kind, n) {
        Ok(v) => {
            std::ptr::copy_nonoverlapping(v.as_ptr(), out, n);
            TlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
