//! CSV in, CSV out: the commands behind the `hybrid-emd` binary.
//!
//! Every series file has the header `x,y`. Signals are optionally mirrored
//! past both ends, fitted on a uniform basis over the (extended) range, and
//! all outputs are sampled on the extgrid points inside the original range.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::basis::{BasisEnv, Spline};
use crate::emd::{decompose, normalized_frequency, EmdConfig, StopReason};
use crate::envelope::{iterative_slope_upper_envelope, lower_envelope, EnvelopeConfig};
use crate::error::{Error, Result};
use crate::fitting::{extend_boundary, fit, fit_points, FitConfig, SampleSeries};
use crate::specops::{characteristic, extract_frequency, trapezoid, Characteristic};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub order: usize,
    pub infill: usize,
    pub basis: usize,
    pub eps: f64,
    pub extend_ratio: f64,
    pub max_imfs: usize,
    /// Leakage factor for the per-component cost report.
    pub gamma: f64,
    pub fit: FitConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            order: 4,
            infill: 4,
            basis: 180,
            eps: 0.01,
            extend_ratio: 0.0,
            max_imfs: 8,
            gamma: 0.0,
            fit: FitConfig::default(),
            output_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn envelope(&self) -> EnvelopeConfig {
        EnvelopeConfig {
            eps: self.eps,
            fit: self.fit,
            ..EnvelopeConfig::default()
        }
    }

    pub fn emd(&self) -> EmdConfig {
        EmdConfig {
            envelope: self.envelope(),
            max_imfs: self.max_imfs,
            ..EmdConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "leakage factor {} must be finite and nonnegative",
                self.gamma
            )));
        }
        if !(0.0..1.0).contains(&self.extend_ratio) {
            return Err(Error::InvalidParameter(format!(
                "extension ratio {} must lie in [0, 1)",
                self.extend_ratio
            )));
        }
        self.emd().validate()
    }
}

/// Parses `x,y` CSV text. Rows out of time order are sorted (with a
/// warning); repeated times are rejected.
pub fn parse_csv(reader: impl Read) -> Result<SampleSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        return Err(Error::Csv {
            line: 1,
            message: format!(
                "expected header `x,y`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut rows: Vec<(f64, f64, usize)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e, rows.len() + 2))?;
        let line = record
            .position()
            .map_or(rows.len() + 2, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::Csv {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let field = |i: usize| -> Result<f64> {
            let v: f64 = record[i].parse().map_err(|_| Error::Csv {
                line,
                message: format!("`{}` is not a number", &record[i]),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Csv {
                    line,
                    message: format!("`{}` is not finite", &record[i]),
                })
            }
        };
        rows.push((field(0)?, field(1)?, line));
    }
    if rows.is_empty() {
        return Err(Error::InvalidSeries("input has no data rows".into()));
    }

    if rows.windows(2).any(|w| w[1].0 < w[0].0) {
        log::warn!("input rows are not in time order; sorting");
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if let Some(w) = rows.windows(2).find(|w| w[1].0 == w[0].0) {
        return Err(Error::Csv {
            line: w[1].2,
            message: format!("duplicate time {} (also on line {})", w[1].0, w[0].2),
        });
    }
    let (times, values) = rows.into_iter().map(|(t, v, _)| (t, v)).unzip();
    SampleSeries::new(times, values)
}

fn csv_error(err: &csv::Error, fallback_line: usize) -> Error {
    let line = err.position().map_or(fallback_line, |p| p.line() as usize);
    Error::Csv {
        line,
        message: err.to_string(),
    }
}

pub fn read_csv(path: &Path) -> Result<SampleSeries> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv(file)
}

/// Writes an `x,y` series; values use the shortest exact decimal form.
pub fn write_csv(path: &Path, grid: &[f64], values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} grid points but {} values",
            grid.len(),
            values.len()
        )));
    }
    let mut out = String::with_capacity(24 * grid.len() + 4);
    out.push_str("x,y\n");
    for (x, y) in grid.iter().zip(values) {
        out.push_str(&format!("{x},{y}\n"));
    }
    fs::write(path, out).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_characteristic(path: &Path, mu: &Characteristic) -> Result<()> {
    let text = format!("mu0,mu1,mu2\n{},{},{}\n", mu.mu0, mu.mu1, mu.mu2);
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// A fitted input together with the time range it was sampled on.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub signal: Spline,
    pub range: (f64, f64),
}

impl Prepared {
    pub fn env(&self) -> &Arc<BasisEnv> {
        self.signal.env()
    }

    /// Extgrid points inside the original range, with their indices.
    pub fn output_grid(&self) -> (Vec<usize>, Vec<f64>) {
        let (lo, hi) = self.range;
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        self.env()
            .extgrid()
            .iter()
            .enumerate()
            .filter(|(_, &t)| t >= lo - slack && t <= hi + slack)
            .map(|(j, &t)| (j, t))
            .unzip()
    }

    /// Fits another series on this basis, mirrored the same way.
    pub fn fit_companion(&self, series: &SampleSeries, cfg: &RunConfig) -> Result<Spline> {
        let ext = extend_boundary(series, cfg.extend_ratio)?;
        let (lo, hi) = self.env().domain();
        let inside: (Vec<f64>, Vec<f64>) = ext
            .times()
            .iter()
            .zip(ext.values())
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(t, v)| (*t, *v))
            .unzip();
        fit_points(&inside.0, &inside.1, self.env(), &cfg.fit)
    }
}

/// Mirror extension, basis construction and fit.
pub fn prepare(series: &SampleSeries, cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let ext = extend_boundary(series, cfg.extend_ratio)?;
    let env = BasisEnv::uniform(ext.start(), ext.end(), cfg.order, cfg.basis, cfg.infill)?;
    let signal = fit(&ext, &env, &cfg.fit)?;
    Ok(Prepared {
        signal,
        range: (series.start(), series.end()),
    })
}

struct Output<'a> {
    dir: &'a Path,
    indices: Vec<usize>,
    grid: Vec<f64>,
    written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path, prepared: &Prepared) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let (indices, grid) = prepared.output_grid();
        Ok(Self {
            dir,
            indices,
            grid,
            written: Vec::new(),
        })
    }

    fn spline(&mut self, name: &str, f: &Spline) -> Result<()> {
        let all = f.grid_values(0);
        let values: Vec<f64> = self.indices.iter().map(|&j| all[j]).collect();
        let path = self.dir.join(name);
        write_csv(&path, &self.grid, &values)?;
        self.written.push(path);
        Ok(())
    }

    fn characteristic(&mut self, name: &str, mu: &Characteristic) -> Result<()> {
        let path = self.dir.join(name);
        write_characteristic(&path, mu)?;
        self.written.push(path);
        Ok(())
    }

    /// On failure, removes whatever this command already wrote.
    fn finish<T>(self, result: Result<T>) -> Result<Vec<PathBuf>> {
        match result {
            Ok(_) => Ok(self.written),
            Err(e) => {
                for path in &self.written {
                    let _ = fs::remove_file(path);
                }
                Err(e)
            }
        }
    }
}

/// `fit.csv`: the fitted input.
pub fn cmd_fit(input: &Path, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prepared = prepare(&read_csv(input)?, cfg)?;
    let mut out = Output::new(&cfg.output_dir, &prepared)?;
    let result = out.spline("fit.csv", &prepared.signal);
    out.finish(result)
}

/// `upper.csv` and `lower.csv`. `eps = ∞` gives the classic envelopes.
pub fn cmd_envelope(input: &Path, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prepared = prepare(&read_csv(input)?, cfg)?;
    let env_cfg = cfg.envelope();
    let upper = iterative_slope_upper_envelope(&prepared.signal, &env_cfg)?;
    let lower = lower_envelope(&prepared.signal, &env_cfg)?;
    log::info!(
        "upper envelope: {} iterations ({:?}); lower envelope: {} iterations ({:?})",
        upper.iterations,
        upper.status,
        lower.iterations,
        lower.status
    );
    let mut out = Output::new(&cfg.output_dir, &prepared)?;
    let result = out
        .spline("upper.csv", &upper.envelope)
        .and_then(|_| out.spline("lower.csv", &lower.envelope));
    out.finish(result)
}

/// How `cmd_spectral` normalizes its input.
#[derive(Debug, Clone)]
pub enum Amplitude {
    /// The input already has unit amplitude.
    Unit,
    /// Divide by the amplitude read from this file.
    File(PathBuf),
}

/// `freq.csv`: instantaneous frequency of an IMF.
pub fn cmd_spectral(input: &Path, amplitude: &Amplitude, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prepared = prepare(&read_csv(input)?, cfg)?;
    let freq = match amplitude {
        Amplitude::Unit => {
            prepared.env().require_smooth()?;
            extract_frequency(&prepared.signal, &cfg.fit)?
        }
        Amplitude::File(path) => {
            let a = prepared.fit_companion(&read_csv(path)?, cfg)?;
            normalized_frequency(&prepared.signal, &a, &cfg.fit)?
        }
    };
    let mut out = Output::new(&cfg.output_dir, &prepared)?;
    let result = out.spline("freq.csv", &freq);
    out.finish(result)
}

/// `char.csv` from an amplitude and a frequency series sampled on the same range.
pub fn cmd_characteristic(
    amplitude: &Path,
    frequency: &Path,
    cfg: &RunConfig,
) -> Result<(Characteristic, Vec<PathBuf>)> {
    let prepared = prepare(&read_csv(amplitude)?, cfg)?;
    let freq = prepared.fit_companion(&read_csv(frequency)?, cfg)?;
    let mu = characteristic(&prepared.signal, &freq)?;
    let mut out = Output::new(&cfg.output_dir, &prepared)?;
    let result = out.characteristic("char.csv", &mu);
    Ok((mu, out.finish(result)?))
}

/// Full decomposition: `imf-i.csv`, `a-i.csv`, `freq-i.csv`, `char-i.csv`
/// per component (numbered from 1) and `residual.csv`.
///
/// Components whose frequency could not be extracted get no `freq-i.csv` or
/// `char-i.csv`; the reason is logged.
pub fn cmd_emd(input: &Path, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prepared = prepare(&read_csv(input)?, cfg)?;
    let decomposition = decompose(&prepared.signal, &cfg.emd())?;
    match &decomposition.stop {
        StopReason::Trend => {}
        StopReason::MaxImfs => log::warn!("stopped after {} components", cfg.max_imfs),
        StopReason::EnvelopeFailure(e) => log::warn!("stopped early: {e}"),
    }

    let mut out = Output::new(&cfg.output_dir, &prepared)?;
    let mut input = prepared.signal.clone();
    let mut result = Ok(());
    for (i, c) in decomposition.components.iter().enumerate() {
        let n = i + 1;
        let cost = leakage_cost(&input, &c.u, cfg.gamma, &out.indices, &out.grid);
        input = &input - &c.u;
        match &c.characteristic {
            Some(mu) => log::info!(
                "component {n}: characteristic ({:.3e}, {:.3e}, {:.3e}), cost {cost:.3e}",
                mu.mu0,
                mu.mu1,
                mu.mu2
            ),
            None => log::warn!(
                "component {n}: frequency unavailable ({}), cost {cost:.3e}",
                c.freq_error
                    .as_ref()
                    .map_or_else(String::new, ToString::to_string)
            ),
        }
        if !c.converged {
            log::warn!("component {n}: envelope iteration did not converge");
        }
        result = result
            .and_then(|_| out.spline(&format!("imf-{n}.csv"), &c.u))
            .and_then(|_| out.spline(&format!("a-{n}.csv"), &c.a));
        if let (Some(freq), Some(mu)) = (&c.freq, &c.characteristic) {
            result = result
                .and_then(|_| out.spline(&format!("freq-{n}.csv"), freq))
                .and_then(|_| out.characteristic(&format!("char-{n}.csv"), mu));
        }
    }
    result = result.and_then(|_| out.spline("residual.csv", &decomposition.residual));
    out.finish(result)
}

/// `‖s − u‖² + γ‖u‖²` over the output grid.
fn leakage_cost(s: &Spline, u: &Spline, gamma: f64, indices: &[usize], grid: &[f64]) -> f64 {
    let (sv, uv) = (s.grid_values(0), u.grid_values(0));
    let miss: Vec<f64> = indices.iter().map(|&j| (sv[j] - uv[j]).powi(2)).collect();
    let norm: Vec<f64> = indices.iter().map(|&j| uv[j].powi(2)).collect();
    trapezoid(grid, &miss) + gamma * trapezoid(grid, &norm)
}

/// Prints `μ₀ μ₁ μ₂` as one line on standard output.
pub fn print_characteristic(mu: &Characteristic) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{} {} {}", mu.mu0, mu.mu1, mu.mu2)?;
    Ok(())
}
