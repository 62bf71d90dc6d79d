use std::f64::consts::PI;
use std::ffi::CStr;
use std::ptr;

use hybrid_emd_ffi::*;

fn env() -> *mut HemdEnv {
    let mut env = ptr::null_mut();
    assert_eq!(
        unsafe { hemd_env_new_uniform(0.0, 1.0, 4, 180, 4, &mut env) },
        HemdStatus::Ok
    );
    env
}

fn fit(env: *const HemdEnv, f: impl Fn(f64) -> f64) -> *mut HemdSpline {
    let times: Vec<f64> = (0..2000).map(|i| i as f64 / 1999.0).collect();
    let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
    let mut s = ptr::null_mut();
    let status = unsafe { hemd_fit(env, times.as_ptr(), values.as_ptr(), times.len(), &mut s) };
    assert_eq!(status, HemdStatus::Ok);
    s
}

fn eval(s: *const HemdSpline, t: f64, d: usize) -> f64 {
    let mut v = f64::NAN;
    assert_eq!(unsafe { hemd_spline_eval(s, t, d, &mut v) }, HemdStatus::Ok);
    v
}

fn last_error() -> String {
    let p = hemd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn env_and_fit_round_trip() {
    let env = env();
    let n = unsafe { hemd_env_basis_count(env) };
    assert_eq!(n, 180);
    let len = unsafe { hemd_env_extgrid_len(env) };
    assert_eq!(len, 178 + 4 * 177);
    let mut grid = vec![0.0; len];
    assert_eq!(
        unsafe { hemd_env_extgrid(env, grid.as_mut_ptr(), len) },
        HemdStatus::Ok
    );
    assert_eq!((grid[0], grid[len - 1]), (0.0, 1.0));

    let s = fit(env, |t| t * t);
    assert!((eval(s, 0.3, 0) - 0.09).abs() < 1e-6);
    assert!((eval(s, 0.3, 1) - 0.6).abs() < 1e-4);

    let mut coeffs = vec![0.0; n];
    assert_eq!(
        unsafe { hemd_spline_coeffs(s, coeffs.as_mut_ptr(), n) },
        HemdStatus::Ok
    );
    let mut copy = ptr::null_mut();
    assert_eq!(
        unsafe { hemd_spline_from_coeffs(env, coeffs.as_ptr(), n, &mut copy) },
        HemdStatus::Ok
    );
    assert_eq!(eval(copy, 0.7, 0), eval(s, 0.7, 0));

    unsafe {
        hemd_spline_free(copy);
        hemd_spline_free(s);
        hemd_env_free(env);
    }
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { hemd_env_new_uniform(1.0, 0.0, 4, 180, 4, &mut out) },
        HemdStatus::InvalidArgument
    );
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let env = env();
    let s = fit(env, |t| t);
    let mut v = 0.0;
    assert_eq!(
        unsafe { hemd_spline_eval(s, 2.0, 0, &mut v) },
        HemdStatus::OutOfDomain
    );
    assert!(last_error().contains('2'));
    assert_eq!(
        unsafe { hemd_spline_eval(ptr::null(), 0.5, 0, &mut v) },
        HemdStatus::NullPointer
    );
    let mut small = [0.0; 3];
    assert_eq!(
        unsafe { hemd_spline_coeffs(s, small.as_mut_ptr(), small.len()) },
        HemdStatus::InvalidArgument
    );
    let mut wrong = ptr::null_mut();
    assert_eq!(
        unsafe { hemd_spline_from_coeffs(env, small.as_ptr(), small.len(), &mut wrong) },
        HemdStatus::InvalidArgument
    );
    unsafe {
        hemd_spline_free(s);
        hemd_env_free(env);
        // null is a no-op
        hemd_env_free(ptr::null_mut());
        hemd_spline_free(ptr::null_mut());
        hemd_decomposition_free(ptr::null_mut());
    }
    assert_eq!(unsafe { hemd_env_basis_count(ptr::null()) }, 0);
}

#[test]
fn envelopes_and_frequency() {
    let env = env();
    let w = 40.0 * PI;
    let s = fit(env, |t| (w * t).cos());
    let (mut upper, mut lower, mut freq) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(hemd_upper_envelope(s, 0.01, &mut upper), HemdStatus::Ok);
        assert_eq!(
            hemd_lower_envelope(s, f64::INFINITY, &mut lower),
            HemdStatus::Ok
        );
        assert_eq!(hemd_frequency(s, &mut freq), HemdStatus::Ok);
    }
    for t in [0.25, 0.5, 0.75] {
        assert!((eval(upper, t, 0) - 1.0).abs() < 1e-2);
        assert!((eval(lower, t, 0) + 1.0).abs() < 1e-2);
        assert!(
            (eval(freq, t, 0) / w - 1.0).abs() < 5e-3,
            "{}",
            eval(freq, t, 0) / w
        );
    }
    unsafe {
        hemd_spline_free(upper);
        hemd_spline_free(lower);
        hemd_spline_free(freq);
        hemd_spline_free(s);
        hemd_env_free(env);
    }
}

#[test]
fn decomposition_handle() {
    let env = env();
    let s = fit(env, |t| (30.0 * PI * t).cos() + 2.0 * t);
    let mut d = ptr::null_mut();
    assert_eq!(
        unsafe { hemd_decompose(s, 0.01, 8, &mut d) },
        HemdStatus::Ok
    );
    let count = unsafe { hemd_decomposition_len(d) };
    assert!(count >= 1);

    // reconstruction through the ABI
    let mut parts = Vec::new();
    for i in 0..count {
        let mut u = ptr::null_mut();
        assert_eq!(
            unsafe { hemd_decomposition_component(d, i, HemdPart::Imf, &mut u) },
            HemdStatus::Ok
        );
        parts.push(u);
    }
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { hemd_decomposition_residual(d, &mut r) },
        HemdStatus::Ok
    );
    for t in [0.1, 0.37, 0.9] {
        let total: f64 = parts.iter().map(|&u| eval(u, t, 0)).sum::<f64>() + eval(r, t, 0);
        assert!((total - eval(s, t, 0)).abs() < 1e-10);
    }

    let mut mu = [0.0; 3];
    assert_eq!(
        unsafe { hemd_decomposition_characteristic(d, 0, mu.as_mut_ptr()) },
        HemdStatus::Ok
    );
    assert!(mu.iter().all(|m| m.is_finite()) && mu[0] > 0.0);

    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { hemd_decomposition_component(d, count, HemdPart::Amplitude, &mut none) },
        HemdStatus::InvalidArgument
    );
    assert!(none.is_null());

    unsafe {
        for u in parts {
            hemd_spline_free(u);
        }
        hemd_spline_free(r);
        hemd_decomposition_free(d);
        hemd_spline_free(s);
        hemd_env_free(env);
    }
}

#[test]
fn header_is_generated() {
    let header = include_str!("../include/hybrid_emd.h");
    for name in [
        "hemd_decompose",
        "hemd_last_error",
        "HEMD_STATUS_PANIC",
        "HemdSpline",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
