//! Discrete samples to splines: smoothness-penalized least squares and
//! boundary extension by mirroring.

use std::sync::Arc;

use crate::basis::{BasisEnv, Spline};
use crate::error::{Error, Result};
use crate::linalg::BandedSystem;

/// Strictly increasing sample times with one value each.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampleSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 samples, got {}",
                times.len()
            )));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidSeries(format!("time {i} is not finite")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("value {i} is not finite")));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries(format!(
                "times not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` at `count` equidistant times over `[start, end]`.
    pub fn sample(start: f64, end: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 samples, got {count}"
            )));
        }
        let step = (end - start) / (count - 1) as f64;
        let mut times: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
        times[count - 1] = end;
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Weight of the second-derivative penalty. The penalty rows are made
    /// dimensionless by the squared mean knot spacing, so the weight does not
    /// depend on the time unit.
    pub smooth_weight: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            smooth_weight: 1e-8,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.smooth_weight >= 0.0 && self.smooth_weight.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "smoothing weight {} must be finite and nonnegative",
                self.smooth_weight
            )))
        }
    }
}

/// Endpoint agreement between series and domain, relative to the domain length.
const ENDPOINT_TOL: f64 = 1e-9;

/// Fits a series whose first and last sample sit on the domain ends.
pub fn fit(series: &SampleSeries, env: &Arc<BasisEnv>, cfg: &FitConfig) -> Result<Spline> {
    let (lo, hi) = env.domain();
    let tol = ENDPOINT_TOL * (hi - lo).max(1.0);
    if (series.start() - lo).abs() > tol {
        return Err(Error::OutOfDomain {
            t: series.start(),
            lo,
            hi,
        });
    }
    if (series.end() - hi).abs() > tol {
        return Err(Error::OutOfDomain {
            t: series.end(),
            lo,
            hi,
        });
    }
    fit_points(series.times(), series.values(), env, cfg)
}

/// Fits arbitrary points inside the domain; nothing is required of the endpoints.
///
/// Minimizes `Σⱼ (f(tⱼ) − vⱼ)² + w·Σ_g (h²·f″(g))²` over the extgrid points `g`,
/// with `h` the mean knot spacing.
pub fn fit_points(
    times: &[f64],
    values: &[f64],
    env: &Arc<BasisEnv>,
    cfg: &FitConfig,
) -> Result<Spline> {
    cfg.validate()?;
    if times.len() != values.len() {
        return Err(Error::InvalidSeries(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let k = env.order();
    let mut system = BandedSystem::new(env.basis_count(), k);
    for (&t, &v) in times.iter().zip(values) {
        let block = env.basis_at(t)?;
        system.push_row(block.first, &block.values, v);
    }
    if cfg.smooth_weight > 0.0 && k >= 3 {
        let h = env.knots().mean_spacing();
        let scale = cfg.smooth_weight.sqrt() * h * h;
        let mut scaled = vec![0.0; k];
        for j in 0..env.extgrid().len() {
            let row = env.grid_basis(j);
            for (dst, src) in scaled.iter_mut().zip(row.d2) {
                *dst = scale * src;
            }
            system.push_row(row.first, &scaled, 0.0);
        }
    }
    let coeffs = system
        .solve()
        .map_err(|e| Error::FitFailed { column: e.column })?;
    Spline::new(Arc::clone(env), coeffs)
}

/// Fits values given at every extgrid point of `env`.
pub fn fit_on_grid(values: &[f64], env: &Arc<BasisEnv>, cfg: &FitConfig) -> Result<Spline> {
    fit_points(env.extgrid(), values, env, cfg)
}

/// Mirrors `⌊ratio·N⌋` samples past each end of the series.
pub fn extend_boundary(series: &SampleSeries, ratio: f64) -> Result<SampleSeries> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidParameter(format!(
            "extension ratio {ratio} must lie in [0, 1)"
        )));
    }
    let n = series.len();
    let m = (ratio * n as f64).floor() as usize;
    let (t, v) = (series.times(), series.values());
    let (t0, t_end) = (t[0], t[n - 1]);

    let mut times = Vec::with_capacity(n + 2 * m);
    let mut values = Vec::with_capacity(n + 2 * m);
    for i in (1..=m).rev() {
        times.push(2.0 * t0 - t[i]);
        values.push(v[i]);
    }
    times.extend_from_slice(t);
    values.extend_from_slice(v);
    for i in 1..=m {
        times.push(2.0 * t_end - t[n - 1 - i]);
        values.push(v[n - 1 - i]);
    }
    SampleSeries::new(times, values)
}
