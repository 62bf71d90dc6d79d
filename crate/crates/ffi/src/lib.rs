//! C ABI over `hybrid_emd`.
//!
//! Objects cross the boundary as opaque heap handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`HemdStatus`]; on failure a description is available from
//! [`hemd_last_error`] until the next failing call on the same thread.
//! Panics are caught and reported as [`HemdStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use hybrid_emd::envelope::{iterative_slope_upper_envelope, lower_envelope};
use hybrid_emd::specops::extract_frequency;
use hybrid_emd::{
    decompose, BasisEnv, Decomposition, EmdConfig, EnvelopeConfig, Error, FitConfig, Spline,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HemdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    FitFailed = 4,
    EnvelopeFailed = 5,
    FrequencyFailed = 6,
    Panic = 7,
}

/// Basis environment: knots, order and the precomputed extgrid tables.
pub struct HemdEnv(Arc<BasisEnv>);

pub struct HemdSpline(Spline);

pub struct HemdDecomposition(Decomposition);

/// Which function of a decomposition component to copy out.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HemdPart {
    Imf = 0,
    Amplitude = 1,
    Frequency = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> HemdStatus {
    match err {
        Error::OutOfDomain { .. } => HemdStatus::OutOfDomain,
        Error::FitFailed { .. } | Error::InvalidSeries(_) => HemdStatus::FitFailed,
        Error::EmptyTangentSet | Error::EnvelopeFailure { .. } => HemdStatus::EnvelopeFailed,
        Error::DegenerateOmega { .. }
        | Error::NonpositiveOmega { .. }
        | Error::AmplitudeNearZero { .. }
        | Error::FrequencyNearZero { .. }
        | Error::NonpositiveFrequency { .. } => HemdStatus::FrequencyFailed,
        _ => HemdStatus::InvalidArgument,
    }
}

struct Failure(HemdStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HemdStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HemdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HemdStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {message}"));
            HemdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(Failure(
            HemdStatus::InvalidArgument,
            format!("output buffer holds {len} values, {} needed", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

fn envelope_config(eps: f64) -> EnvelopeConfig {
    EnvelopeConfig::with_eps(eps)
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hemd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Uniform knots on `[start, end]` sized so that the basis has `basis_size` functions.
///
/// # Safety
/// `out` must be a valid pointer to writable handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_env_new_uniform(
    start: f64,
    end: f64,
    order: usize,
    basis_size: usize,
    infill: usize,
    out: *mut *mut HemdEnv,
) -> HemdStatus {
    guard(|| {
        let env = BasisEnv::uniform(start, end, order, basis_size, infill)?;
        put(out, HemdEnv(env))
    })
}

/// # Safety
/// `env` must be null or a handle from `hemd_env_new_uniform` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hemd_env_free(env: *mut HemdEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Number of basis functions (spline coefficients).
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hemd_env_basis_count(env: *const HemdEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.basis_count())
}

/// Number of extgrid points.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hemd_env_extgrid_len(env: *const HemdEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.extgrid().len())
}

/// Copies the extgrid into `out` (capacity `len`).
///
/// # Safety
/// `env` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hemd_env_extgrid(
    env: *const HemdEnv,
    out: *mut f64,
    len: usize,
) -> HemdStatus {
    guard(|| copy_out(deref(env, "env")?.0.extgrid(), out, len))
}

/// Least-squares fit of `len` samples whose first and last times are the domain ends.
///
/// # Safety
/// `env` must be a live handle, `times`/`values` valid for `len` reads and
/// `out` valid handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_fit(
    env: *const HemdEnv,
    times: *const f64,
    values: *const f64,
    len: usize,
    out: *mut *mut HemdSpline,
) -> HemdStatus {
    guard(|| {
        let env = deref(env, "env")?;
        let series = hybrid_emd::SampleSeries::new(
            slice(times, len, "times")?.to_vec(),
            slice(values, len, "values")?.to_vec(),
        )?;
        let spline = hybrid_emd::fitting::fit(&series, &env.0, &FitConfig::default())?;
        put(out, HemdSpline(spline))
    })
}

/// Spline from `len` B-spline coefficients on `env`.
///
/// # Safety
/// `env` must be a live handle, `coeffs` valid for `len` reads and `out`
/// valid handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_spline_from_coeffs(
    env: *const HemdEnv,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut HemdSpline,
) -> HemdStatus {
    guard(|| {
        let env = deref(env, "env")?;
        let spline = Spline::new(Arc::clone(&env.0), slice(coeffs, len, "coeffs")?.to_vec())?;
        put(out, HemdSpline(spline))
    })
}

/// # Safety
/// `spline` must be null or a live spline handle.
#[no_mangle]
pub unsafe extern "C" fn hemd_spline_free(spline: *mut HemdSpline) {
    if !spline.is_null() {
        drop(Box::from_raw(spline));
    }
}

/// `deriv`-th derivative (0, 1 or 2) at `t`.
///
/// # Safety
/// `spline` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hemd_spline_eval(
    spline: *const HemdSpline,
    t: f64,
    deriv: usize,
    out: *mut f64,
) -> HemdStatus {
    guard(|| {
        let value = deref(spline, "spline")?.0.eval(t, deriv)?;
        copy_out(&[value], out, 1)
    })
}

/// Copies the coefficients into `out` (capacity `len`, at least the basis count).
///
/// # Safety
/// `spline` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hemd_spline_coeffs(
    spline: *const HemdSpline,
    out: *mut f64,
    len: usize,
) -> HemdStatus {
    guard(|| copy_out(deref(spline, "spline")?.0.coeffs(), out, len))
}

/// Iterative slope upper envelope; `eps = INFINITY` gives the classic envelope.
///
/// # Safety
/// `signal` must be a live handle and `out` valid handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_upper_envelope(
    signal: *const HemdSpline,
    eps: f64,
    out: *mut *mut HemdSpline,
) -> HemdStatus {
    guard(|| {
        let s = &deref(signal, "signal")?.0;
        let estimate = iterative_slope_upper_envelope(s, &envelope_config(eps))?;
        put(out, HemdSpline(estimate.envelope))
    })
}

/// Lower envelope as the negated upper envelope of the negated signal.
///
/// # Safety
/// `signal` must be a live handle and `out` valid handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_lower_envelope(
    signal: *const HemdSpline,
    eps: f64,
    out: *mut *mut HemdSpline,
) -> HemdStatus {
    guard(|| {
        let s = &deref(signal, "signal")?.0;
        let estimate = lower_envelope(s, &envelope_config(eps))?;
        put(out, HemdSpline(estimate.envelope))
    })
}

/// Instantaneous frequency of a unit-amplitude oscillation.
///
/// # Safety
/// `unit_imf` must be a live handle and `out` valid handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_frequency(
    unit_imf: *const HemdSpline,
    out: *mut *mut HemdSpline,
) -> HemdStatus {
    guard(|| {
        let u = &deref(unit_imf, "unit_imf")?.0;
        let freq = extract_frequency(u, &FitConfig::default())?;
        put(out, HemdSpline(freq))
    })
}

/// Full decomposition with envelope tolerance `eps` and at most `max_imfs` components.
///
/// # Safety
/// `signal` must be a live handle and `out` valid handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_decompose(
    signal: *const HemdSpline,
    eps: f64,
    max_imfs: usize,
    out: *mut *mut HemdDecomposition,
) -> HemdStatus {
    guard(|| {
        let s = &deref(signal, "signal")?.0;
        let cfg = EmdConfig {
            envelope: envelope_config(eps),
            max_imfs,
            ..EmdConfig::default()
        };
        put(out, HemdDecomposition(decompose(s, &cfg)?))
    })
}

/// # Safety
/// `d` must be null or a live decomposition handle.
#[no_mangle]
pub unsafe extern "C" fn hemd_decomposition_free(d: *mut HemdDecomposition) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of extracted components.
///
/// # Safety
/// `d` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hemd_decomposition_len(d: *const HemdDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.0.components.len())
}

/// Copies one function of component `index` into a new spline handle.
/// Fails with `FrequencyFailed` when the component has no frequency.
///
/// # Safety
/// `d` must be a live handle and `out` valid handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_decomposition_component(
    d: *const HemdDecomposition,
    index: usize,
    part: HemdPart,
    out: *mut *mut HemdSpline,
) -> HemdStatus {
    guard(|| {
        let d = &deref(d, "decomposition")?.0;
        let c = d.components.get(index).ok_or_else(|| {
            Failure(
                HemdStatus::InvalidArgument,
                format!(
                    "component {index} out of range ({} extracted)",
                    d.components.len()
                ),
            )
        })?;
        let spline = match part {
            HemdPart::Imf => c.u.clone(),
            HemdPart::Amplitude => c.a.clone(),
            HemdPart::Frequency => c.freq.clone().ok_or_else(|| {
                Failure(
                    HemdStatus::FrequencyFailed,
                    c.freq_error
                        .as_ref()
                        .map_or("frequency unavailable".into(), ToString::to_string),
                )
            })?,
        };
        put(out, HemdSpline(spline))
    })
}

/// Writes `(μ₀, μ₁, μ₂)` of component `index` into `out[0..3]`.
///
/// # Safety
/// `d` must be a live handle and `out` valid for 3 writes.
#[no_mangle]
pub unsafe extern "C" fn hemd_decomposition_characteristic(
    d: *const HemdDecomposition,
    index: usize,
    out: *mut f64,
) -> HemdStatus {
    guard(|| {
        let d = &deref(d, "decomposition")?.0;
        let mu = d
            .components
            .get(index)
            .ok_or_else(|| {
                Failure(
                    HemdStatus::InvalidArgument,
                    format!("component {index} out of range"),
                )
            })?
            .characteristic
            .ok_or_else(|| Failure(HemdStatus::FrequencyFailed, "frequency unavailable".into()))?;
        copy_out(&mu.as_array(), out, 3)
    })
}

/// Copies the final residual into a new spline handle.
///
/// # Safety
/// `d` must be a live handle and `out` valid handle storage.
#[no_mangle]
pub unsafe extern "C" fn hemd_decomposition_residual(
    d: *const HemdDecomposition,
    out: *mut *mut HemdSpline,
) -> HemdStatus {
    guard(|| {
        let d = &deref(d, "decomposition")?.0;
        put(out, HemdSpline(d.residual.clone()))
    })
}
