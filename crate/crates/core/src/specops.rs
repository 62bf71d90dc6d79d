//! The IMF differential operator and everything built on it: frequency
//! extraction by linear least squares, the IMF characteristic, feasibility of
//! IMF souls and the EMD cost functions.
//!
//! For an IMF `u = a·cos(φ)` the operator
//!
//! ```text
//! D(a,φ) = Ω·D² + (−2ΩA + ½Ω′)·D¹ + (Ω(A² − A′) − ½Ω′A + 1)·D⁰,
//! Ω = 1/(φ′)², A = a′/a
//! ```
//!
//! annihilates `u`. With `a ≡ 1` it reduces to `Ω·u″ + ½Ω′·u′ + u`, which is
//! linear in the B-spline coefficients of `Ω`. Evaluating it on the extgrid
//! gives an overdetermined banded system whose solution yields `φ′ = 1/√Ω`.

use std::sync::Arc;

use crate::basis::{BasisEnv, Spline};
use crate::error::{Error, Result};
use crate::fitting::{fit_on_grid, FitConfig};
use crate::linalg::BandedSystem;

/// Relative magnitude below which amplitude or frequency count as zero.
const SINGULAR_TOL: f64 = 1e-9;

/// Relative slack used by the feasibility check.
const FEASIBILITY_TOL: f64 = 1e-9;

/// Fraction of grid points allowed to need clipping before Ω is rejected.
const MAX_CLIPPED_FRACTION: f64 = 0.01;

/// Instantaneous amplitude `a` and phase `φ` generating `a·cos(φ)`.
#[derive(Debug, Clone)]
pub struct ImfSoul {
    pub amplitude: Spline,
    pub phase: Spline,
}

impl ImfSoul {
    pub fn new(amplitude: Spline, phase: Spline) -> Result<Self> {
        amplitude.ensure_same_env(&phase)?;
        amplitude.env().require_smooth()?;
        Ok(Self { amplitude, phase })
    }

    pub fn env(&self) -> &Arc<BasisEnv> {
        self.amplitude.env()
    }
}

/// `(μ₀, μ₁, μ₂)`: frequency lower bound and the bounds on `|a′/φ′|` and `|φ″/φ′|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Characteristic {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl Characteristic {
    pub fn as_array(&self) -> [f64; 3] {
        [self.mu0, self.mu1, self.mu2]
    }
}

/// Discretized simplified operator: row `j` reads
/// `Σᵢ Ωᵢ·[Bᵢ(tⱼ)·u″(tⱼ) + ½·Bᵢ′(tⱼ)·u′(tⱼ)] = −u(tⱼ)` over the extgrid.
#[derive(Debug, Clone)]
pub struct OmegaSystem {
    env: Arc<BasisEnv>,
    system: BandedSystem,
}

impl OmegaSystem {
    pub fn nrows(&self) -> usize {
        self.system.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.system.ncols()
    }

    /// Dense row-major copy of the system matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.system.dense_matrix()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.system.rhs()
    }

    /// Row residuals `A·Ω − b` for a coefficient vector.
    pub fn residual(&self, omega: &[f64]) -> Vec<f64> {
        self.system
            .apply(omega)
            .into_iter()
            .zip(self.system.rhs())
            .map(|(ax, b)| ax - b)
            .collect()
    }

    pub fn env(&self) -> &Arc<BasisEnv> {
        &self.env
    }
}

/// `a(t)·cos(φ(t))` at each grid time.
pub fn imf_eval(soul: &ImfSoul, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&t| Ok(soul.amplitude.eval(t, 0)? * soul.phase.eval(t, 0)?.cos()))
        .collect()
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Applies the full operator `D(a,φ)` to `f` at each grid time.
///
/// `A = a′/a` and `Ω = 1/(φ′)²` are formed pointwise from spline derivatives.
pub fn apply_full_operator(soul: &ImfSoul, f: &Spline, grid: &[f64]) -> Result<Vec<f64>> {
    f.ensure_same_env(&soul.amplitude)?;
    let a = &soul.amplitude;
    let phi = &soul.phase;

    let amp: Vec<[f64; 3]> = grid
        .iter()
        .map(|&t| Ok([a.eval(t, 0)?, a.eval(t, 1)?, a.eval(t, 2)?]))
        .collect::<Result<_>>()?;
    let freq: Vec<[f64; 2]> = grid
        .iter()
        .map(|&t| Ok([phi.eval(t, 1)?, phi.eval(t, 2)?]))
        .collect::<Result<_>>()?;
    let amp_scale = max_abs(amp.iter().map(|v| v[0]));
    let freq_scale = max_abs(freq.iter().map(|v| v[0]));

    grid.iter()
        .zip(amp.iter().zip(&freq))
        .map(|(&t, (&[a0, a1, a2], &[p1, p2]))| {
            if a0.abs() <= SINGULAR_TOL * amp_scale || a0 == 0.0 {
                return Err(Error::AmplitudeNearZero { t });
            }
            if p1.abs() <= SINGULAR_TOL * freq_scale || p1 == 0.0 {
                return Err(Error::FrequencyNearZero { t });
            }
            let omega = 1.0 / (p1 * p1);
            let d_omega = -2.0 * p2 / (p1 * p1 * p1);
            let big_a = a1 / a0;
            let d_big_a = (a2 * a0 - a1 * a1) / (a0 * a0);
            let (f0, f1, f2) = (f.eval(t, 0)?, f.eval(t, 1)?, f.eval(t, 2)?);
            Ok(omega * f2
                + (-2.0 * omega * big_a + 0.5 * d_omega) * f1
                + (omega * (big_a * big_a - d_big_a) - 0.5 * d_omega * big_a + 1.0) * f0)
        })
        .collect()
}

/// Applies the unit-amplitude operator `Ω·D² + ½Ω′·D¹ + D⁰` with `Ω = 1/(φ′)²`.
pub fn apply_simplified_operator(phase: &Spline, f: &Spline, grid: &[f64]) -> Result<Vec<f64>> {
    f.ensure_same_env(phase)?;
    grid.iter()
        .map(|&t| {
            let (p1, p2) = (phase.eval(t, 1)?, phase.eval(t, 2)?);
            if p1 == 0.0 {
                return Err(Error::FrequencyNearZero { t });
            }
            let omega = 1.0 / (p1 * p1);
            let d_omega = -2.0 * p2 / (p1 * p1 * p1);
            Ok(omega * f.eval(t, 2)? + 0.5 * d_omega * f.eval(t, 1)? + f.eval(t, 0)?)
        })
        .collect()
}

/// Assembles the least-squares system for the coefficients of `Ω` from a
/// unit-amplitude IMF `u`.
pub fn build_omega_system(u: &Spline) -> Result<OmegaSystem> {
    let env = u.env();
    env.require_smooth()?;
    let (u0, u1, u2) = (u.grid_values(0), u.grid_values(1), u.grid_values(2));
    let k = env.order();
    let mut system = BandedSystem::new(env.basis_count(), k);
    let mut row = vec![0.0; k];
    for j in 0..env.extgrid().len() {
        let basis = env.grid_basis(j);
        for (r, slot) in row.iter_mut().enumerate() {
            *slot = basis.values[r] * u2[j] + 0.5 * basis.d1[r] * u1[j];
        }
        system.push_row(basis.first, &row, -u0[j]);
    }
    Ok(OmegaSystem {
        env: Arc::clone(env),
        system,
    })
}

/// Unique least-squares solution `Ω*` of the system, as a spline.
pub fn solve_omega(sys: &OmegaSystem) -> Result<Spline> {
    let coeffs = sys
        .system
        .solve()
        .map_err(|e| Error::DegenerateOmega { column: e.column })?;
    Spline::new(Arc::clone(&sys.env), coeffs)
}

/// `φ′ = 1/√Ω`, evaluated on the extgrid and refitted.
///
/// Values below `1e−12·median(Ω)` are clipped; if more than 1% of the grid
/// needs clipping the extraction fails.
pub fn frequency_from_omega(omega: &Spline, fit: &FitConfig) -> Result<Spline> {
    let values = omega.grid_values(0);
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if median.is_nan() || median <= 0.0 {
        return Err(Error::NonpositiveOmega { fraction: 100.0 });
    }
    let floor = 1e-12 * median;
    let clipped = values.iter().filter(|&&w| w.is_nan() || w < floor).count();
    let fraction = clipped as f64 / values.len() as f64;
    if fraction > MAX_CLIPPED_FRACTION {
        return Err(Error::NonpositiveOmega {
            fraction: 100.0 * fraction,
        });
    }
    if clipped > 0 {
        log::warn!("clipped {clipped} nonpositive inverse squared frequency values");
    }
    let freq: Vec<f64> = values.iter().map(|&w| 1.0 / w.max(floor).sqrt()).collect();
    fit_on_grid(&freq, omega.env(), fit)
}

/// Instantaneous frequency of a unit-amplitude oscillation: assemble the
/// operator system, solve for `Ω` and invert.
pub fn extract_frequency(u: &Spline, fit: &FitConfig) -> Result<Spline> {
    let omega = solve_omega(&build_omega_system(u)?)?;
    frequency_from_omega(&omega, fit)
}

/// Characteristic of an amplitude/frequency pair, taken as extrema over the extgrid.
pub fn characteristic(a: &Spline, freq: &Spline) -> Result<Characteristic> {
    a.ensure_same_env(freq)?;
    let grid = a.env().extgrid();
    let (f0, f1) = (freq.grid_values(0), freq.grid_values(1));
    let a1 = a.grid_values(1);
    if let Some(j) = f0.iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::NonpositiveFrequency { t: grid[j] });
    }
    let mu0 = f0.iter().copied().fold(f64::INFINITY, f64::min);
    let mu1 = max_abs(a1.iter().zip(&f0).map(|(d, w)| d / w));
    let mu2 = max_abs(f1.iter().zip(&f0).map(|(d, w)| d / w));
    Ok(Characteristic { mu0, mu1, mu2 })
}

/// Outcome of the four IMF-soul constraints, each as its worst margin
/// (`rhs − lhs`, negative when violated) over the extgrid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoulCheck {
    pub feasible: bool,
    /// `a ≥ 0`, `φ′ ≥ μ₀`, `|a′| ≤ μ₁|φ′|`, `|φ″| ≤ μ₂|φ′|`.
    pub margins: [f64; 4],
    pub tolerance: f64,
}

impl SoulCheck {
    /// Indices (0-based) of violated constraints.
    pub fn violated(&self) -> Vec<usize> {
        (0..4)
            .filter(|&i| self.margins[i] < -self.tolerance)
            .collect()
    }
}

/// Checks whether `(a, φ)` is an IMF soul with characteristic `mu`.
pub fn is_imf_soul(soul: &ImfSoul, mu: &Characteristic) -> Result<SoulCheck> {
    let phi = &soul.phase;
    Ok(check_constraints(
        &soul.amplitude,
        &phi.grid_values(1),
        &phi.grid_values(2),
        mu,
    ))
}

/// Same as [`is_imf_soul`] for a soul given by its frequency `φ′`.
pub fn is_imf_soul_from_frequency(
    a: &Spline,
    freq: &Spline,
    mu: &Characteristic,
) -> Result<SoulCheck> {
    a.ensure_same_env(freq)?;
    Ok(check_constraints(
        a,
        &freq.grid_values(0),
        &freq.grid_values(1),
        mu,
    ))
}

fn check_constraints(a: &Spline, p1: &[f64], p2: &[f64], mu: &Characteristic) -> SoulCheck {
    let (a0, a1) = (a.grid_values(0), a.grid_values(1));
    let scale = 1f64
        .max(max_abs(a0.iter().copied()))
        .max(max_abs(p1.iter().copied()));
    let tolerance = FEASIBILITY_TOL * scale;

    let mut margins = [f64::INFINITY; 4];
    for j in 0..a0.len() {
        margins[0] = margins[0].min(a0[j]);
        margins[1] = margins[1].min(p1[j] - mu.mu0);
        margins[2] = margins[2].min(mu.mu1 * p1[j].abs() - a1[j].abs());
        margins[3] = margins[3].min(mu.mu2 * p1[j].abs() - p2[j].abs());
    }
    SoulCheck {
        feasible: margins.iter().all(|&m| m >= -tolerance),
        margins,
        tolerance,
    }
}

/// Trapezoidal rule over an increasing grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `‖s − a·cos(φ)‖²` by trapezoidal quadrature on the extgrid.
pub fn canonical_cost(s: &Spline, soul: &ImfSoul) -> Result<f64> {
    s.ensure_same_env(&soul.amplitude)?;
    let grid = s.env().extgrid();
    let imf = imf_eval(soul, grid)?;
    let squared: Vec<f64> = s
        .grid_values(0)
        .iter()
        .zip(&imf)
        .map(|(sv, uv)| (sv - uv).powi(2))
        .collect();
    Ok(trapezoid(grid, &squared))
}

/// `c₁[s] + γ·c₁[0]`: canonical cost plus `γ` times the squared IMF norm.
pub fn leakage_cost(s: &Spline, soul: &ImfSoul, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "leakage factor {gamma} must be finite and nonnegative"
        )));
    }
    let zero = Spline::zeros(Arc::clone(s.env()));
    Ok(canonical_cost(s, soul)? + gamma * canonical_cost(&zero, soul)?)
}
