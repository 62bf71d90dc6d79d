#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use hybrid_emd::fitting::fit;
use hybrid_emd::{BasisEnv, FitConfig, SampleSeries, Spline};

pub const SAMPLES: usize = 2000;

pub fn env_on(lo: f64, hi: f64) -> Arc<BasisEnv> {
    BasisEnv::uniform(lo, hi, 4, 180, 4).expect("valid basis")
}

pub fn fitted_on(env: &Arc<BasisEnv>, f: impl Fn(f64) -> f64) -> Spline {
    let (lo, hi) = env.domain();
    let series = SampleSeries::sample(lo, hi, SAMPLES, f).expect("valid samples");
    fit(&series, env, &FitConfig::default()).expect("fit")
}

pub fn fitted(f: impl Fn(f64) -> f64) -> Spline {
    fitted_on(&env_on(0.0, 1.0), f)
}

// Test signals on [0, 1] as (signal, analytic instantaneous frequency).

pub fn constant_tone(t: f64) -> f64 {
    (40.0 * t).cos()
}

pub fn harmonic_peaks(t: f64) -> f64 {
    (3.0 * (3.0 * PI * t).sin() + 16.0 * PI * t).cos()
}

pub fn harmonic_peaks_freq(t: f64) -> f64 {
    9.0 * PI * (3.0 * PI * t).cos() + 16.0 * PI
}

pub fn sigmoid_chirp(t: f64) -> f64 {
    // ln(1 + e^x) written to stay finite for large x
    let x = 90.0 * (t - 0.5);
    let softplus = x.max(0.0) + (-x.abs()).exp().ln_1p();
    (40.0 * t + 100.0 / 90.0 * softplus).cos()
}

pub fn sigmoid_chirp_freq(t: f64) -> f64 {
    40.0 + 100.0 / (1.0 + (-90.0 * (t - 0.5)).exp())
}

/// Rising oscillation whose classic envelope cuts the signal.
pub fn rising_tone(t: f64) -> f64 {
    40.0 * t + (20.0 + 10.0 * (5.0 * PI * t).cos()) * (25.0 * PI * t).cos()
}

pub fn rising_upper(t: f64) -> f64 {
    40.0 * t + 20.0 + 10.0 * (5.0 * PI * t).cos()
}

/// Two IMFs over a linear trend.
pub fn two_tone(t: f64) -> f64 {
    (t + 1.0) * ((15.0 * t + 21.0) * PI * t).cos()
        + (3.0 * t + 1.0) * (5.0 * PI * t).cos()
        + 20.0 * (t + 1.0)
}

/// (amplitude, frequency) of each IMF of [`two_tone`], highest frequency first.
pub type Profile = fn(f64) -> f64;

pub const TWO_TONE_PARTS: [(Profile, Profile); 2] = [
    (|t| t + 1.0, |t| (30.0 * t + 21.0) * PI),
    (|t| 3.0 * t + 1.0, |_| 5.0 * PI),
];

pub fn two_tone_trend(t: f64) -> f64 {
    20.0 * (t + 1.0)
}

/// Largest `|f(t)/g(t) − 1|` over grid points in `[lo, hi]`.
pub fn max_rel_error(
    grid: &[f64],
    values: &[f64],
    exact: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> f64 {
    grid.iter()
        .zip(values)
        .filter(|(t, _)| (lo..=hi).contains(*t))
        .map(|(&t, v)| ((v - exact(t)) / exact(t)).abs())
        .fold(0.0, f64::max)
}

/// Central 80% of `[lo, hi]`.
pub fn interior(lo: f64, hi: f64) -> (f64, f64) {
    let pad = 0.1 * (hi - lo);
    (lo + pad, hi - pad)
}
