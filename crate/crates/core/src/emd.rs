//! Hybrid EMD: envelope-mean sifting for the IMF and its amplitude, the
//! operator least-squares problem for its frequency, and the driver that
//! peels off components until only a trend is left.

use crate::basis::Spline;
use crate::envelope::{
    iterative_slope_upper_envelope, lower_envelope, EnvelopeConfig, EnvelopeEstimate,
};
use crate::error::{Error, Result};
use crate::fitting::{fit_on_grid, FitConfig};
use crate::specops::{characteristic, extract_frequency, Characteristic};

/// Amplitudes below this fraction of `‖u‖∞` block normalization by `a`.
const AMPLITUDE_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdConfig {
    pub envelope: EnvelopeConfig,
    /// Cap on extraction steps.
    pub max_imfs: usize,
    /// Stop once the residual has at most this many interior extrema.
    pub stop_extrema: usize,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self {
            envelope: EnvelopeConfig::default(),
            max_imfs: 8,
            stop_extrema: 1,
        }
    }
}

impl EmdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_imfs == 0 {
            return Err(Error::InvalidParameter(
                "at least one extraction step must be allowed".into(),
            ));
        }
        self.envelope.validate()
    }
}

/// One envelope-mean subtraction.
#[derive(Debug, Clone)]
pub struct Sift {
    pub u: Spline,
    pub a: Spline,
    pub residual: Spline,
    pub upper: EnvelopeEstimate,
    pub lower: EnvelopeEstimate,
}

/// `r = ½(ā + a̲)`, `u = s − r`, `a = ā − r`, all on coefficients.
pub fn sift_step(s: &Spline, cfg: &EnvelopeConfig) -> Result<Sift> {
    let upper = iterative_slope_upper_envelope(s, cfg)?;
    let lower = lower_envelope(s, cfg)?;
    let residual = upper.envelope.lin_comb(0.5, &lower.envelope, 0.5)?;
    let u = s - &residual;
    let a = &upper.envelope - &residual;
    Ok(Sift {
        u,
        a,
        residual,
        upper,
        lower,
    })
}

#[derive(Debug, Clone)]
pub struct ImfComponent {
    pub u: Spline,
    pub a: Spline,
    /// Instantaneous frequency `φ′`; `None` when it could not be extracted.
    pub freq: Option<Spline>,
    pub characteristic: Option<Characteristic>,
    /// Why `freq` is missing.
    pub freq_error: Option<Error>,
    /// Both envelopes met the tolerance.
    pub converged: bool,
}

/// One extraction step: sift, then recover the frequency of `u/a`.
pub fn emd_step(s: &Spline, cfg: &EmdConfig) -> Result<(ImfComponent, Spline)> {
    cfg.validate()?;
    let sift = sift_step(s, &cfg.envelope)?;
    let converged = sift.upper.converged() && sift.lower.converged();

    let spectral = normalized_frequency(&sift.u, &sift.a, &cfg.envelope.fit)
        .and_then(|f| characteristic(&sift.a, &f).map(|mu| (f, mu)));
    let (freq, characteristic, freq_error) = match spectral {
        Ok((f, c)) => (Some(f), Some(c), None),
        Err(e) => {
            log::warn!("frequency unavailable for this component: {e}");
            (None, None, Some(e))
        }
    };
    let component = ImfComponent {
        u: sift.u,
        a: sift.a,
        freq,
        characteristic,
        freq_error,
        converged,
    };
    Ok((component, sift.residual))
}

/// Frequency of `u = a·cos(φ)`: `u/a` is formed on the extgrid, refitted and
/// handed to the operator least-squares problem. Fails when `a` comes within
/// `1e−3·‖u‖∞` of zero anywhere.
pub fn normalized_frequency(u: &Spline, a: &Spline, fit: &FitConfig) -> Result<Spline> {
    u.ensure_same_env(a)?;
    let grid = u.env().extgrid();
    let (uv, av) = (u.grid_values(0), a.grid_values(0));
    let a_min = AMPLITUDE_GUARD * u.grid_sup_norm();
    if let Some(j) = av.iter().position(|&v| v.is_nan() || v <= a_min) {
        return Err(Error::AmplitudeNearZero { t: grid[j] });
    }
    let normalized: Vec<f64> = uv.iter().zip(&av).map(|(x, y)| x / y).collect();
    let unit = fit_on_grid(&normalized, u.env(), fit)?;
    extract_frequency(&unit, fit)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    /// The residual has at most `stop_extrema` interior extrema.
    Trend,
    /// `max_imfs` components were extracted.
    MaxImfs,
    /// An envelope could not be formed; the residual is terminal.
    EnvelopeFailure(Error),
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// High frequency first.
    pub components: Vec<ImfComponent>,
    pub residual: Spline,
    pub stop: StopReason,
}

impl Decomposition {
    /// `Σ uᵢ + r`.
    pub fn reconstruct(&self) -> Spline {
        self.components
            .iter()
            .fold(self.residual.clone(), |acc, c| &acc + &c.u)
    }
}

/// Repeated [`emd_step`] on the running residual.
pub fn decompose(s: &Spline, cfg: &EmdConfig) -> Result<Decomposition> {
    cfg.validate()?;
    s.env().require_smooth()?;
    let mut components = Vec::new();
    let mut residual = s.clone();
    loop {
        let extrema = count_interior_extrema(&residual);
        if extrema <= cfg.stop_extrema {
            log::info!("residual has {extrema} interior extrema, stopping");
            return Ok(Decomposition {
                components,
                residual,
                stop: StopReason::Trend,
            });
        }
        if components.len() == cfg.max_imfs {
            return Ok(Decomposition {
                components,
                residual,
                stop: StopReason::MaxImfs,
            });
        }
        log::info!(
            "extracting component {} ({extrema} interior extrema left)",
            components.len() + 1
        );
        match emd_step(&residual, cfg) {
            Ok((component, next)) => {
                components.push(component);
                residual = next;
            }
            Err(e @ (Error::EnvelopeFailure { .. } | Error::EmptyTangentSet)) => {
                log::warn!("stopping early: {e}");
                return Ok(Decomposition {
                    components,
                    residual,
                    stop: StopReason::EnvelopeFailure(e),
                });
            }
            Err(e) => return Err(e),
        }
    }
}

/// Interior local extrema of `f`: sign changes of `f′` between interior
/// extgrid points, located by bisection. The end points are skipped since the
/// fitted slope there is dominated by boundary effects; slopes below a
/// relative noise floor count as zero and do not start a new sign.
pub fn interior_extrema(f: &Spline) -> Vec<f64> {
    let grid = f.env().extgrid();
    let d = f.grid_values(1);
    let (lo, hi) = f.env().domain();
    let magnitude = f.grid_sup_norm() / (hi - lo);
    let floor = 1e-8 * d.iter().fold(magnitude, |m, v| m.max(v.abs()));

    let mut extrema = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for j in 1..grid.len().saturating_sub(1) {
        let dj = d[j];
        if dj.abs() <= floor {
            continue;
        }
        if let Some((i, di)) = last {
            if di.signum() != dj.signum() {
                extrema.push(bisect_root(f, grid[i], grid[j], di));
            }
        }
        last = Some((j, dj));
    }
    extrema
}

fn bisect_root(f: &Spline, mut a: f64, mut b: f64, da: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let dm = f.eval(mid, 1).unwrap_or(0.0);
        if dm == 0.0 {
            return mid;
        }
        if dm.signum() == da.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

pub fn count_interior_extrema(f: &Spline) -> usize {
    interior_extrema(f).len()
}
