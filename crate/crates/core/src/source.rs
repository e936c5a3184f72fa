//! The emitter: a quantum dot whose biexciton cascade produces a two-photon
//! state whose polarization branches are tagged by slightly different
//! wavenumbers when the intermediate level carries a fine-structure splitting.
//!
//! Position-space representation: at the reference time the pair amplitude is
//! a sum of branches, each of the form
//! `amp * exp(env1*x1 + env2*x2) * exp(i*(kappa1*x1 + kappa2*x2 + phase0))`
//! supported on a wedge `{0 > s1*x1 + t1 > s2*x2 + t2}` (photon 1 is emitted
//! after photon 2, so it trails closer to the head of the train).  This family
//! is closed under everything a ramped phase modulator can do to it.

use num_complex::Complex64;

use crate::overlap;
use crate::units::{energy_to_wavenumber, C};
use crate::{Error, Result};

/// Tolerance on the total norm of a freshly constructed state.
pub const NORM_TOL: f64 = 1e-9;

/// Linear polarization label of one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    /// Basis index (H = 0, V = 1).
    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    /// The orthogonal label.
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

/// Which photon of the pair an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Photon {
    One,
    Two,
}

/// Emitter parameters, all in propagation units (rad/m and 1/s).
///
/// `k_h1`/`k_h2` are the H-polarized line wavenumbers of the first- and
/// second-emitted photon; the splitting `k_s` raises photon 1's V line and
/// lowers photon 2's, so the sum `k_0 = k_h1 + k_h2 = k_v1 + k_v2` is shared
/// by both decay paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotParams {
    /// Radiative decay rate of each step of the cascade, 1/s.
    pub gamma: f64,
    /// H-line wavenumber of photon 1, rad/m.
    pub k_h1: f64,
    /// H-line wavenumber of photon 2, rad/m.
    pub k_h2: f64,
    /// Fine-structure splitting as a wavenumber, rad/m (non-negative).
    pub k_s: f64,
}

impl DotParams {
    /// Validates and builds emitter parameters.
    pub fn new(gamma: f64, k_h1: f64, k_h2: f64, k_s: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "decay rate must be positive, got {gamma}"
            )));
        }
        if !(k_h1 > 0.0) || !(k_h2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "line wavenumbers must be positive, got {k_h1}, {k_h2}"
            )));
        }
        if !(k_s >= 0.0) || !k_s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "splitting wavenumber must be non-negative, got {k_s}; \
                 model a negative splitting by swapping the H/V labels"
            )));
        }
        if k_s >= k_h2 {
            return Err(Error::InvalidParameter(format!(
                "splitting {k_s} must stay below the photon-2 wavenumber {k_h2}"
            )));
        }
        Ok(DotParams { gamma, k_h1, k_h2, k_s })
    }

    /// Builds parameters from line energies in eV and a splitting in ueV.
    ///
    /// The quoted photon energies are taken as the H-polarized lines.
    pub fn from_energies(e1_ev: f64, e2_ev: f64, gamma: f64, fss_uev: f64) -> Result<Self> {
        DotParams::new(
            gamma,
            energy_to_wavenumber(e1_ev),
            energy_to_wavenumber(e2_ev),
            energy_to_wavenumber(fss_uev * 1e-6),
        )
    }

    /// V-line wavenumber of photon 1, rad/m.
    pub fn k_v1(&self) -> f64 {
        self.k_h1 + self.k_s
    }

    /// V-line wavenumber of photon 2, rad/m.
    pub fn k_v2(&self) -> f64 {
        self.k_h2 - self.k_s
    }

    /// Total wavenumber shared by both decay paths, rad/m.
    pub fn k_0(&self) -> f64 {
        self.k_h1 + self.k_h2
    }

    /// Splitting as an angular frequency, rad/s.
    pub fn omega_s(&self) -> f64 {
        C * self.k_s
    }

    /// Soft diagnostics: conditions that do not invalidate the model but
    /// stretch the small-splitting approximations it reports on.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.k_s / self.k_h1 > 1e-3 {
            w.push(format!(
                "splitting is not small: k_s/k_h1 = {:.2e} exceeds 1e-3",
                self.k_s / self.k_h1
            ));
        }
        w
    }
}

/// Wedge-shaped support `{0 > s1*x1 + t1 > s2*x2 + t2}` with `s1, s2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wedge {
    pub s1: f64,
    pub t1: f64,
    pub s2: f64,
    pub t2: f64,
}

impl Wedge {
    /// The ordered wedge `{0 > x1 > x2}` of a freshly emitted pair.
    pub fn ordered() -> Self {
        Wedge { s1: 1.0, t1: 0.0, s2: 1.0, t2: 0.0 }
    }

    /// Whether a point lies inside the (open) wedge.
    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        let u1 = self.s1 * x1 + self.t1;
        let u2 = self.s2 * x2 + self.t2;
        u1 < 0.0 && u2 < u1
    }

    /// Largest admissible `x1`.
    pub fn x1_max(&self) -> f64 {
        -self.t1 / self.s1
    }

    /// Upper boundary of `x2` as a function of `x1`.
    pub fn x2_bound(&self, x1: f64) -> f64 {
        (self.s1 * x1 + self.t1 - self.t2) / self.s2
    }

    /// Largest admissible `x2` anywhere in the wedge.
    pub fn x2_max(&self) -> f64 {
        self.x2_bound(self.x1_max())
    }
}

/// One polarization branch of the two-photon amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonBranch {
    /// Polarization labels of photons 1 and 2.
    pub pol1: Polarization,
    pub pol2: Polarization,
    /// Complex prefactor (units 1/m so that the state norm is dimensionless).
    pub amp: Complex64,
    /// Envelope decay rates, 1/m; both must be positive for integrability.
    pub env1: f64,
    pub env2: f64,
    /// Constant phase, rad.
    pub phase0: f64,
    /// Spatial phase coefficients, rad/m.
    pub kappa1: f64,
    pub kappa2: f64,
    /// Support of the branch.
    pub wedge: Wedge,
}

impl TwoPhotonBranch {
    /// Complex amplitude at a point (zero outside the wedge).
    pub fn value(&self, x1: f64, x2: f64) -> Complex64 {
        if !self.wedge.contains(x1, x2) {
            return Complex64::new(0.0, 0.0);
        }
        let envelope = (self.env1 * x1 + self.env2 * x2).exp();
        let phase = self.kappa1 * x1 + self.kappa2 * x2 + self.phase0;
        self.amp * envelope * Complex64::new(0.0, phase).exp()
    }

    /// (pol1, pol2) as a pair.
    pub fn pols(&self) -> (Polarization, Polarization) {
        (self.pol1, self.pol2)
    }

    /// Envelope rate for the requested photon.
    pub fn env(&self, photon: Photon) -> f64 {
        match photon {
            Photon::One => self.env1,
            Photon::Two => self.env2,
        }
    }

    /// Phase coefficient for the requested photon.
    pub fn kappa(&self, photon: Photon) -> f64 {
        match photon {
            Photon::One => self.kappa1,
            Photon::Two => self.kappa2,
        }
    }

    /// Polarization label of the requested photon.
    pub fn pol(&self, photon: Photon) -> Polarization {
        match photon {
            Photon::One => self.pol1,
            Photon::Two => self.pol2,
        }
    }
}

/// A two-photon state as a sum of wedge branches.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    pub branches: Vec<TwoPhotonBranch>,
}

impl TwoPhotonState {
    /// Total norm, including cross terms between branches that share the same
    /// polarization pair.
    pub fn norm(&self) -> Result<f64> {
        overlap::state_norm(self)
    }

    /// The same state with one photon's polarization labels swapped
    /// (H <-> V), as produced by an achromatic half-wave element.
    pub fn with_photon_flipped(&self, photon: Photon) -> Self {
        let branches = self
            .branches
            .iter()
            .map(|b| {
                let mut nb = *b;
                match photon {
                    Photon::One => nb.pol1 = b.pol1.flipped(),
                    Photon::Two => nb.pol2 = b.pol2.flipped(),
                }
                nb
            })
            .collect();
        TwoPhotonState { branches }
    }
}

/// Joint spectral amplitude of the chosen decay path.
///
/// `Phi(w1, w2) = (sqrt(2)*Gamma/(2*pi)) / (w1 + w2 - w0 + i*Gamma)
///              / (w2 - w_path2 + i*Gamma/2)`
/// where `w0` is the shared two-photon resonance and `w_path2` the photon-2
/// line of the path (`H` path: H2 line; `V` path: V2 line).
pub fn spectral_amplitude(
    dot: &DotParams,
    omega1: f64,
    omega2: f64,
    path: Polarization,
) -> Complex64 {
    let omega0 = C * dot.k_0();
    let omega_p2 = C * match path {
        Polarization::H => dot.k_h2,
        Polarization::V => dot.k_v2(),
    };
    let g = dot.gamma;
    let pre = Complex64::new(std::f64::consts::SQRT_2 * g / (2.0 * std::f64::consts::PI), 0.0);
    pre / Complex64::new(omega1 + omega2 - omega0, g)
        / Complex64::new(omega2 - omega_p2, 0.5 * g)
}

fn cascade_branch(dot: &DotParams, pol: Polarization, k1: f64, k2: f64) -> TwoPhotonBranch {
    TwoPhotonBranch {
        pol1: pol,
        pol2: pol,
        amp: Complex64::new(dot.gamma / C, 0.0),
        env1: dot.gamma / (2.0 * C),
        env2: dot.gamma / (2.0 * C),
        phase0: 0.0,
        kappa1: k1,
        kappa2: k2,
        wedge: Wedge::ordered(),
    }
}

fn checked(state: TwoPhotonState) -> Result<TwoPhotonState> {
    let n = state.norm()?;
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::StateInvariant(format!(
            "constructed state has norm {n}, expected 1 within {NORM_TOL:.0e}"
        )));
    }
    Ok(state)
}

/// The emitted pair: an equal superposition of the HH and VV decay paths,
/// each path carrying its own pair of line wavenumbers.
pub fn initial_state(dot: &DotParams) -> Result<TwoPhotonState> {
    checked(TwoPhotonState {
        branches: vec![
            cascade_branch(dot, Polarization::H, dot.k_h1, dot.k_h2),
            cascade_branch(dot, Polarization::V, dot.k_v1(), dot.k_v2()),
        ],
    })
}

/// The emitted pair after photon 1 has passed a polarization flipper:
/// branch wavefunctions are untouched, photon-1 labels are swapped.
pub fn initial_state_flipped(dot: &DotParams) -> Result<TwoPhotonState> {
    Ok(initial_state(dot)?.with_photon_flipped(Photon::One))
}

#[cfg(test)]
pub use tests::default_dot;
