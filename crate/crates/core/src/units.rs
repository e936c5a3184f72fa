//! Physical constants, unit conversions, and electro-optic cell parameters.
//!
//! All quantities are SI.  Photon energies cross the API boundary in eV and
//! fine-structure splittings in ueV because that is how they are quoted for
//! quantum dots; everything internal is rad/s and rad/m.

use crate::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const C: f64 = 2.997_924_58e8;
/// Reduced Planck constant, J*s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C (exact).
pub const Q_E: f64 = 1.602_176_634e-19;

/// Converts a photon energy in eV to an angular frequency in rad/s.
pub fn energy_to_angular_frequency(energy_ev: f64) -> f64 {
    energy_ev * Q_E / HBAR
}

/// Converts an angular frequency in rad/s to a vacuum wavenumber in rad/m.
pub fn angular_frequency_to_wavenumber(omega: f64) -> f64 {
    omega / C
}

/// Converts a photon energy in eV straight to a vacuum wavenumber in rad/m.
pub fn energy_to_wavenumber(energy_ev: f64) -> f64 {
    angular_frequency_to_wavenumber(energy_to_angular_frequency(energy_ev))
}

/// One electro-optic phase modulator (Pockels cell).
///
/// The modulated index slows one linear polarization to
/// `v(t) = v0 / (1 + eta * V(t))`; the orthogonal polarization always travels
/// at `v0`.  `eta` collects the electro-optic response per volt, `thickness`
/// is the crystal length along the beam, and `v0` is the unmodulated phase
/// velocity inside the crystal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    /// Fractional index modulation per volt, 1/V.
    pub eta: f64,
    /// Crystal thickness along the propagation axis, m.
    pub thickness: f64,
    /// Unmodulated phase velocity in the crystal, m/s.
    pub v0: f64,
}

impl CellParams {
    /// Builds a cell from explicit `eta`, thickness, and internal speed.
    pub fn new(eta: f64, thickness: f64, v0: f64) -> Result<Self> {
        if !(thickness > 0.0) || !thickness.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cell thickness must be positive, got {thickness}"
            )));
        }
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cell internal speed must be positive, got {v0}"
            )));
        }
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cell eta must be finite and non-negative, got {eta}"
            )));
        }
        Ok(CellParams { eta, thickness, v0 })
    }

    /// Builds a cell from a datasheet phase response.
    ///
    /// A modulator quoted as `alpha` rad of phase per volt at vacuum wavelength
    /// `lambda` over a crystal of thickness `s` has
    /// `eta = alpha * lambda / (2*pi * n0 * s)` and `v0 = c / n0`.  The product
    /// `eta * s / v0 = alpha * lambda / (2*pi*c)` that controls every ramp
    /// formula is independent of the assumed `n0`.
    pub fn from_datasheet(
        alpha_rad_per_volt: f64,
        wavelength: f64,
        n0: f64,
        thickness: f64,
    ) -> Result<Self> {
        if !(alpha_rad_per_volt >= 0.0) || !alpha_rad_per_volt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "datasheet phase response must be non-negative, got {alpha_rad_per_volt}"
            )));
        }
        if !(wavelength > 0.0) || !(n0 >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "datasheet needs wavelength > 0 and n0 >= 1, got {wavelength}, {n0}"
            )));
        }
        let eta = alpha_rad_per_volt * wavelength / (2.0 * std::f64::consts::PI * n0 * thickness);
        CellParams::new(eta, thickness, C / n0)
    }

    /// The ramp-formula group `eta * s / v0`, s/V; datasheet-independent of `n0`.
    pub fn eta_s_over_v0(&self) -> f64 {
        self.eta * self.thickness / self.v0
    }
}
