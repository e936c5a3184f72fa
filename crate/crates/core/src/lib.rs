//! Two-photon emission from a biexciton cascade with fine-structure splitting,
//! and its restoration to a polarization Bell state by electro-optic phase
//! modulators driven with linear voltage ramps.
//!
//! The crate is organized around a position-space description of the photon
//! pair: each amplitude branch is an exponential envelope times a plane-wave
//! phase on a wedge-shaped domain, which keeps every transformation (ramped
//! cell, walk-off shift, wavenumber rescale) exact and every polarization
//! density-matrix entry available in closed form.  A deliberately independent
//! numerical oracle (grid propagation, Riemann sums) cross-checks the closed
//! forms.

// Validation deliberately writes `!(x > 0.0)` so NaN fails alongside the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// The 4x4 density-matrix kernels read better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod eom;
pub mod metrics;
pub mod numerics;
pub mod oracle;
pub mod overlap;
pub mod schemes;
pub mod source;
pub mod units;

use thiserror::Error;

/// Errors shared by the simulation modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A modulator or dot parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The ramp drives `1 + eta * V(t)` to zero or below during a transit.
    #[error("unphysical ramp voltage: 1 + eta*V = {factor:.3e} at t = {t:.3e} s")]
    UnphysicalVoltage { factor: f64, t: f64 },
    /// A correction rate was requested from a cell with no electro-optic response.
    #[error("cell has eta = 0: no ramp rate can rescale the wavenumbers")]
    UncorrectableCell,
    /// A branch envelope does not decay, so its overlap integrals diverge.
    #[error("non-integrable branch: {0}")]
    NonIntegrable(String),
    /// An iterative numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerics(String),
    /// A constructed state failed its normalization or positivity checks.
    #[error("state invariant violated: {0}")]
    StateInvariant(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use eom::{apply_cell, RampProfile};
pub use metrics::PolDensityMatrix;
pub use schemes::{CorrectionReport, Scheme1Config, Scheme2Config};
pub use source::{DotParams, Photon, Polarization, TwoPhotonBranch, TwoPhotonState};
pub use units::CellParams;
