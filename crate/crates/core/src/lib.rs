//! Hybrid operator-based empirical mode decomposition.
//!
//! Signals are modelled as B-splines ([`basis`]), fitted from samples
//! ([`fitting`]), sifted with iterative-slope envelopes ([`envelope`]) and
//! analysed with a differential operator that annihilates unit-amplitude
//! oscillations, which yields the instantaneous frequency by linear least
//! squares ([`specops`]). [`emd`] drives the full decomposition and [`cli`]
//! exposes it over CSV files.

pub mod basis;
pub mod cli;
pub mod emd;
pub mod envelope;
pub mod error;
pub mod fitting;
pub mod linalg;
pub mod specops;

pub use basis::{BasisEnv, KnotSelection, KnotVector, Spline};
pub use emd::{decompose, Decomposition, EmdConfig, ImfComponent};
pub use envelope::EnvelopeConfig;
pub use error::{Error, Result};
pub use fitting::{FitConfig, SampleSeries};
pub use specops::Characteristic;
