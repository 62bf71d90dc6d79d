//! Upper and lower envelopes by local-maxima interpolation and by the
//! iterative slope method.
//!
//! The iterative slope method starts from `m ≡ 0` and repeatedly refits `m`
//! through the points where the signal's slope matches `m`'s slope under
//! negative signal curvature. Its first iterate is exactly the classic
//! local-maxima envelope; later iterates become tangent to the signal and
//! stop cutting through it.

use crate::basis::Spline;
use crate::error::{Error, Result};
use crate::fitting::{fit_points, FitConfig};

/// Bisection steps used to refine a slope match inside one grid cell.
const MAX_BISECTIONS: usize = 80;

/// Consecutive non-shrinking iterate updates tolerated before giving up.
const STAGNATION_LIMIT: usize = 5;

/// Points `(t, s(t))` where a slope-matching condition holds, ordered by time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TangentPointSet {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TangentPointSet {
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

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConfig {
    /// Stop once successive iterates differ by less than this in the
    /// coefficient sup norm. `f64::INFINITY` gives the classic envelope.
    pub eps: f64,
    pub max_iter: usize,
    pub fit: FitConfig,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            eps: 0.01,
            max_iter: 50,
            fit: FitConfig::default(),
        }
    }
}

impl EnvelopeConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "envelope tolerance {} must be positive",
                self.eps
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "envelope iteration cap must be at least 1".into(),
            ));
        }
        self.fit.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeStatus {
    Converged,
    /// `max_iter` reached; the last iterate is returned.
    MaxIterations,
    /// Updates stopped shrinking; the iterate with the smallest envelope
    /// violation is returned.
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct EnvelopeEstimate {
    pub envelope: Spline,
    pub iterations: usize,
    pub status: EnvelopeStatus,
    /// Tangent points the returned envelope was fitted through.
    pub tangent_points: TangentPointSet,
}

impl EnvelopeEstimate {
    pub fn converged(&self) -> bool {
        self.status == EnvelopeStatus::Converged
    }
}

/// All `t` with `s′(t) = m′(t)` and `s″(t) < 0`, paired with `s(t)`.
///
/// Sign changes of `s′ − m′` are located between consecutive extgrid points
/// and refined by bisection. A domain end where `s − m` falls away into the
/// interior is a one-sided maximum and is included on the same curvature test.
pub fn slope_match_points(s: &Spline, m: &Spline) -> Result<TangentPointSet> {
    s.ensure_same_env(m)?;
    let env = s.env();
    env.require_smooth()?;

    let diff = s - m;
    let grid = env.extgrid();
    let slope = diff.grid_values(1);
    let scale = slope.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let last = grid.len() - 1;

    let mut roots = Vec::new();
    for j in 0..last {
        let (g0, g1) = (slope[j], slope[j + 1]);
        if g0 == 0.0 {
            if j > 0 {
                roots.push(grid[j]);
            }
        } else if g0 * g1 < 0.0 {
            roots.push(bisect_slope(&diff, grid[j], grid[j + 1], g0, scale)?);
        }
    }

    // One-sided maxima of s − m at the domain ends.
    if slope[0] < 0.0 {
        roots.insert(0, grid[0]);
    }
    if slope[last] > 0.0 {
        roots.push(grid[last]);
    }

    let mut points = TangentPointSet::default();
    for t in roots {
        if s.eval(t, 2)? < 0.0 {
            points.times.push(t);
            points.values.push(s.eval(t, 0)?);
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyTangentSet);
    }
    Ok(points)
}

fn bisect_slope(diff: &Spline, mut lo: f64, mut hi: f64, g_lo: f64, scale: f64) -> Result<f64> {
    let lo_sign = g_lo.signum();
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = diff.eval(mid, 1)?;
        if g == 0.0 || g.abs() < 1e-14 * scale {
            return Ok(mid);
        }
        if g.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn interpolate(points: &TangentPointSet, s: &Spline, fit: &FitConfig) -> Result<Spline> {
    if points.len() < 2 {
        return Err(Error::EnvelopeFailure {
            found: points.len(),
        });
    }
    fit_points(points.times(), points.values(), s.env(), fit)
}

/// Local-maxima envelope: a spline fitted through all `t` with `s′(t) = 0`
/// and `s″(t) < 0`.
pub fn classic_upper_envelope(s: &Spline, fit: &FitConfig) -> Result<Spline> {
    let zero = Spline::zeros(s.env().clone());
    let maxima = match slope_match_points(s, &zero) {
        Err(Error::EmptyTangentSet) => return Err(Error::EnvelopeFailure { found: 0 }),
        other => other?,
    };
    interpolate(&maxima, s, fit)
}

/// Largest amount by which `s` rises above `m` on the extgrid.
pub fn envelope_violation(s: &Spline, m: &Spline) -> f64 {
    s.grid_values(0)
        .iter()
        .zip(m.grid_values(0))
        .fold(f64::NEG_INFINITY, |acc, (sv, mv)| acc.max(sv - mv))
}

/// Iterative slope upper envelope of `s`.
pub fn iterative_slope_upper_envelope(
    s: &Spline,
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeEstimate> {
    cfg.validate()?;
    s.env().require_smooth()?;

    let mut current = Spline::zeros(s.env().clone());
    let mut previous_step = f64::INFINITY;
    let mut non_shrinking = 0;
    let mut best: Option<(f64, Spline, TangentPointSet, usize)> = None;

    for iteration in 1..=cfg.max_iter {
        let points = match slope_match_points(s, &current) {
            Err(Error::EmptyTangentSet) => return Err(Error::EnvelopeFailure { found: 0 }),
            other => other?,
        };
        let next = interpolate(&points, s, &cfg.fit)?;
        let step = (&next - &current).sup_norm_bound();
        current = next;

        if step < cfg.eps {
            return Ok(EnvelopeEstimate {
                envelope: current,
                iterations: iteration,
                status: EnvelopeStatus::Converged,
                tangent_points: points,
            });
        }

        let violation = envelope_violation(s, &current);
        if best.as_ref().is_none_or(|(v, ..)| violation < *v) {
            best = Some((violation, current.clone(), points.clone(), iteration));
        }

        non_shrinking = if step >= previous_step {
            non_shrinking + 1
        } else {
            0
        };
        previous_step = step;
        if non_shrinking >= STAGNATION_LIMIT {
            let (_, envelope, tangent_points, iterations) =
                best.take().expect("at least one iterate recorded");
            log::warn!("iterative slope envelope stagnated after {iteration} iterations");
            return Ok(EnvelopeEstimate {
                envelope,
                iterations,
                status: EnvelopeStatus::Stagnated,
                tangent_points,
            });
        }

        if iteration == cfg.max_iter {
            log::warn!(
                "iterative slope envelope did not converge in {} iterations (last step {step:e})",
                cfg.max_iter
            );
            return Ok(EnvelopeEstimate {
                envelope: current,
                iterations: iteration,
                status: EnvelopeStatus::MaxIterations,
                tangent_points: points,
            });
        }
    }
    unreachable!("max_iter >= 1 is validated")
}

/// Lower envelope as the negated upper envelope of `−s`.
pub fn lower_envelope(s: &Spline, cfg: &EnvelopeConfig) -> Result<EnvelopeEstimate> {
    let mut estimate = iterative_slope_upper_envelope(&-s, cfg)?;
    estimate.envelope = -&estimate.envelope;
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::basis::BasisEnv;
    use crate::fitting::{fit, SampleSeries};

    fn fitted(f: impl Fn(f64) -> f64) -> Spline {
        let env = BasisEnv::uniform(0.0, 1.0, 4, 180, 4).unwrap();
        let series = SampleSeries::sample(0.0, 1.0, 2000, f).unwrap();
        fit(&series, &env, &FitConfig::default()).unwrap()
    }

    #[test]
    fn zero_slope_matches_are_maxima() {
        let s = fitted(|t| (25.0 * PI * t).cos());
        let zero = Spline::zeros(s.env().clone());
        let points = slope_match_points(&s, &zero).unwrap();
        // maxima of cos(25πt) sit at t = 2m/25, m = 0..=12
        // plus the boundary maximum at t = 0, which the fit resolves just inside
        assert_eq!(points.len(), 13);
        assert!(points.times()[0] < 1e-3);
        for (m, (t, v)) in points.iter().skip(1).enumerate() {
            let expected = 2.0 * (m + 1) as f64 / 25.0;
            assert!((t - expected).abs() < 1e-4, "{t} vs {expected}");
            assert!((v - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn linear_signal_has_no_tangent_points() {
        let s = fitted(|t| 3.0 * t - 1.0);
        let zero = Spline::zeros(s.env().clone());
        assert_eq!(slope_match_points(&s, &zero), Err(Error::EmptyTangentSet));
        assert_eq!(
            classic_upper_envelope(&s, &FitConfig::default()).unwrap_err(),
            Error::EnvelopeFailure { found: 0 }
        );
    }

    #[test]
    fn cosine_envelopes_are_flat() {
        let s = fitted(|t| (40.0 * PI * t).cos());
        let upper = classic_upper_envelope(&s, &FitConfig::default()).unwrap();
        let lower = lower_envelope(&s, &EnvelopeConfig::default()).unwrap();
        for (j, &t) in s.env().extgrid().iter().enumerate() {
            if (0.1..=0.9).contains(&t) {
                let u = upper.grid_values(0)[j];
                let l = lower.envelope.grid_values(0)[j];
                assert!((u - 1.0).abs() < 1e-2, "upper {u} at {t}");
                assert!((l + 1.0).abs() < 1e-2, "lower {l} at {t}");
            }
        }
    }

    #[test]
    fn infinite_tolerance_is_classic() {
        let s = fitted(|t| 40.0 * t + (20.0 + 10.0 * (5.0 * PI * t).cos()) * (25.0 * PI * t).cos());
        let classic = classic_upper_envelope(&s, &FitConfig::default()).unwrap();
        let first =
            iterative_slope_upper_envelope(&s, &EnvelopeConfig::with_eps(f64::INFINITY)).unwrap();
        assert_eq!(first.iterations, 1);
        assert_eq!(first.envelope.coeffs(), classic.coeffs());
    }

    #[test]
    fn config_validation() {
        assert!(EnvelopeConfig::with_eps(0.0).validate().is_err());
        assert!(EnvelopeConfig::with_eps(f64::NAN).validate().is_err());
        assert!(EnvelopeConfig::with_eps(f64::INFINITY).validate().is_ok());
        let cfg = EnvelopeConfig {
            max_iter: 0,
            ..EnvelopeConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn order_two_is_rejected() {
        let env = BasisEnv::uniform(0.0, 1.0, 2, 50, 2).unwrap();
        let s = Spline::zeros(env);
        assert!(matches!(
            slope_match_points(&s, &s),
            Err(Error::InsufficientOrder { .. })
        ));
    }
}
