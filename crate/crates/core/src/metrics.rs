//! Polarization-space figures of merit: the reduced 4x4 density matrix of a
//! wedge-branch state and the entanglement measures computed from it.

pub mod linalg;

use num_complex::Complex64;

use crate::overlap;
use crate::source::{Polarization, TwoPhotonState};
use crate::{numerics, Error, Result};

use linalg::Matrix4;

/// Basis ordering of the two-photon polarization space.
pub const BASIS: [(Polarization, Polarization); 4] = [
    (Polarization::H, Polarization::H),
    (Polarization::H, Polarization::V),
    (Polarization::V, Polarization::H),
    (Polarization::V, Polarization::V),
];

/// Index of a polarization pair in the basis ordering.
pub fn basis_index(pair: (Polarization, Polarization)) -> usize {
    pair.0.index() * 2 + pair.1.index()
}

/// Validated two-photon polarization density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PolDensityMatrix {
    m: Matrix4,
}

impl PolDensityMatrix {
    /// Builds a density matrix under the strict tolerances appropriate for
    /// closed-form construction.
    pub fn from_matrix(m: Matrix4) -> Result<Self> {
        Self::from_matrix_with_tolerances(m, 1e-12, 1e-9, 1e-10)
    }

    /// Builds a density matrix with caller-chosen tolerances (numerical
    /// integration sources need looser ones).
    pub fn from_matrix_with_tolerances(
        m: Matrix4,
        herm_tol: f64,
        trace_tol: f64,
        negativity_tol: f64,
    ) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                let asym = (m[i][j] - m[j][i].conj()).norm();
                if asym > herm_tol {
                    return Err(Error::StateInvariant(format!(
                        "density matrix is not Hermitian: |m[{i}][{j}] - conj(m[{j}][{i}])| = {asym:.3e}"
                    )));
                }
            }
        }
        let trace: f64 = (0..4).map(|i| m[i][i].re).sum();
        if (trace - 1.0).abs() > trace_tol {
            return Err(Error::StateInvariant(format!(
                "density matrix trace is {trace}, expected 1 within {trace_tol:.0e}"
            )));
        }
        let (eigs, _) = linalg::hermitian_eigen(&m)?;
        if eigs[0] < -negativity_tol {
            return Err(Error::StateInvariant(format!(
                "density matrix has negative eigenvalue {:.3e}",
                eigs[0]
            )));
        }
        Ok(PolDensityMatrix { m })
    }

    /// Entry by raw basis indices.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[i][j]
    }

    /// Entry by polarization pairs.
    pub fn pair_entry(
        &self,
        row: (Polarization, Polarization),
        col: (Polarization, Polarization),
    ) -> Complex64 {
        self.m[basis_index(row)][basis_index(col)]
    }

    /// The underlying 4x4 array.
    pub fn as_matrix(&self) -> &Matrix4 {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.m[i][i].re).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<[f64; 4]> {
        Ok(linalg::hermitian_eigen(&self.m)?.0)
    }

    /// Returns a copy with the (i, j) coherence multiplied by `factor`
    /// (and (j, i) by its conjugate); |factor| <= 1 keeps positivity.
    pub fn with_scaled_coherence(&self, i: usize, j: usize, factor: Complex64) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidParameter(
                "coherence scaling must target an off-diagonal entry".into(),
            ));
        }
        let mut m = self.m;
        m[i][j] *= factor;
        m[j][i] *= factor.conj();
        Self::from_matrix(m)
    }
}

/// Reduced polarization density matrix of a state, with every entry an exact
/// closed-form overlap between branches.
pub fn polarization_density_matrix(state: &TwoPhotonState) -> Result<PolDensityMatrix> {
    PolDensityMatrix::from_matrix(density_entries(state, &mut |a, b| {
        overlap::branch_overlap(a, b)
    })?)
}

/// Same matrix through the alternate integration route: the inner position
/// integral is done analytically, the outer one by adaptive quadrature at
/// relative tolerance `rel_tol`.
pub fn density_matrix_quadrature(state: &TwoPhotonState, rel_tol: f64) -> Result<PolDensityMatrix> {
    let entries = density_entries(state, &mut |a, b| pair_overlap_quadrature(a, b, rel_tol))?;
    PolDensityMatrix::from_matrix_with_tolerances(entries, 1e-9, 1e-6, 1e-8)
}

fn density_entries(
    state: &TwoPhotonState,
    pair_overlap: &mut dyn FnMut(
        &crate::source::TwoPhotonBranch,
        &crate::source::TwoPhotonBranch,
    ) -> Result<Complex64>,
) -> Result<Matrix4> {
    let mut m = linalg::zero();
    for a in &state.branches {
        for b in &state.branches {
            m[basis_index(a.pols())][basis_index(b.pols())] += pair_overlap(a, b)?;
        }
    }
    Ok(m)
}

/// Half-life folds kept on either side of a truncated integration range.
const QUADRATURE_FOLDS: f64 = 45.0;

fn pair_overlap_quadrature(
    a: &crate::source::TwoPhotonBranch,
    b: &crate::source::TwoPhotonBranch,
    rel_tol: f64,
) -> Result<Complex64> {
    let a1 = Complex64::new(a.env1 + b.env1, a.kappa1 - b.kappa1);
    let a2 = Complex64::new(a.env2 + b.env2, a.kappa2 - b.kappa2);
    if a2.re <= 0.0 {
        return Err(Error::NonIntegrable(format!(
            "photon-2 envelope does not decay (rate {:.3e})",
            a2.re
        )));
    }
    let prefactor = a.amp * b.amp.conj() * Complex64::new(0.0, a.phase0 - b.phase0).exp();
    let x_up = a.wedge.x1_max().min(b.wedge.x1_max());
    let (ma, ba) = (a.wedge.s1 / a.wedge.s2, (a.wedge.t1 - a.wedge.t2) / a.wedge.s2);
    let (mb, bb) = (b.wedge.s1 / b.wedge.s2, (b.wedge.t1 - b.wedge.t2) / b.wedge.s2);

    // Pieces of the outer integral: (slope, intercept, lower, upper).
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut push_piece = |m: f64, beta: f64, hint_lo: Option<f64>, hi: f64| -> Result<()> {
        let g = a1 + m * a2;
        if g.re <= 0.0 {
            return Err(Error::NonIntegrable(format!(
                "envelope does not decay along the wedge edge (rate {:.3e})",
                g.re
            )));
        }
        let lo = hint_lo.map_or(hi - QUADRATURE_FOLDS / g.re, |l| l.max(hi - QUADRATURE_FOLDS / g.re));
        if lo < hi {
            pieces.push((m, beta, lo, hi));
        }
        Ok(())
    };
    if ma == mb {
        push_piece(ma, ba.min(bb), None, x_up)?;
    } else {
        let cross = (bb - ba) / (ma - mb);
        let (m_lo, b_lo, m_hi, b_hi) = if ma > mb { (ma, ba, mb, bb) } else { (mb, bb, ma, ba) };
        if cross >= x_up {
            push_piece(m_lo, b_lo, None, x_up)?;
        } else {
            push_piece(m_lo, b_lo, None, cross)?;
            push_piece(m_hi, b_hi, Some(cross), x_up)?;
        }
    }

    let mut acc = Complex64::new(0.0, 0.0);
    for (m, beta, lo, hi) in pieces {
        let integrand = |x1: f64| (a1 * x1).exp() * (a2 * (m * x1 + beta)).exp() / a2;
        acc += numerics::adaptive_simpson_complex(integrand, lo, hi, rel_tol, 1e-300)?;
    }
    Ok(prefactor * acc)
}

/// Normalized coherence between the two decay paths of an uncorrected
/// emitter: `1 / (1 + i * omega_s / gamma)`.
pub fn coherence_closed_form(omega_s: f64, gamma: f64) -> Complex64 {
    1.0 / Complex64::new(1.0, omega_s / gamma)
}

/// Overlap with the Bell state `(|row> + |col>)/sqrt(2)`; with
/// `optimize_phase` the free relative phase of the analyzer is chosen to
/// maximize the overlap, replacing `Re rho_ij` by `|rho_ij|`.
pub fn fidelity_bell(
    rho: &PolDensityMatrix,
    row: (Polarization, Polarization),
    col: (Polarization, Polarization),
    optimize_phase: bool,
) -> f64 {
    let i = basis_index(row);
    let j = basis_index(col);
    let diag = 0.5 * (rho.entry(i, i).re + rho.entry(j, j).re);
    let cross = if optimize_phase { rho.entry(i, j).norm() } else { rho.entry(i, j).re };
    diag + cross
}

/// Fidelity with the parallel-polarized Bell state `(|HH> + |VV>)/sqrt(2)`.
pub fn fidelity_phi_plus(rho: &PolDensityMatrix, optimize_phase: bool) -> f64 {
    fidelity_bell(
        rho,
        (Polarization::H, Polarization::H),
        (Polarization::V, Polarization::V),
        optimize_phase,
    )
}

/// Two-qubit concurrence, `max(0, r0 - r1 - r2 - r3)` over the descending
/// spin-flip spectrum of the state.
///
/// For any factor `L` with `rho = L L^dagger`, the spectrum equals the
/// singular values of `L^T (Y x Y) L`; building `L` from the eigensystem
/// of `rho` and dropping eigenvalues at the rounding floor keeps the small
/// values free of the square-root noise a `sqrt(rho)` route would inject.
pub fn concurrence(rho: &PolDensityMatrix) -> Result<f64> {
    let mut flip = linalg::zero();
    // (sigma_y x sigma_y) is the anti-diagonal (-1, 1, 1, -1).
    flip[0][3] = Complex64::new(-1.0, 0.0);
    flip[1][2] = Complex64::new(1.0, 0.0);
    flip[2][1] = Complex64::new(1.0, 0.0);
    flip[3][0] = Complex64::new(-1.0, 0.0);
    let (values, vectors) = linalg::hermitian_eigen(rho.as_matrix())?;
    let floor = 1e-13 * values[3].max(0.0);
    let mut l = linalg::zero();
    for slot in 0..4 {
        let lam = values[slot];
        if lam < -1e-6 {
            return Err(Error::Numerics(format!(
                "matrix is not positive semi-definite (eigenvalue {lam:.3e})"
            )));
        }
        if lam <= floor {
            continue;
        }
        let root = lam.sqrt();
        for k in 0..4 {
            l[k][slot] = root * vectors[k][slot];
        }
    }
    let fl = linalg::matmul(&flip, &l);
    let mut s = linalg::zero();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                acc += l[k][i] * fl[k][j];
            }
            s[i][j] = acc;
        }
    }
    let sv = linalg::singular_values(&s)?;
    Ok((sv[0] - sv[1] - sv[2] - sv[3]).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eom::{apply_cell, default_cell, RampProfile};
    use crate::source::{default_dot, initial_state, DotParams, Photon};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn phi_plus() -> PolDensityMatrix {
        let mut m = linalg::zero();
        m[0][0] = c(0.5, 0.0);
        m[0][3] = c(0.5, 0.0);
        m[3][0] = c(0.5, 0.0);
        m[3][3] = c(0.5, 0.0);
        PolDensityMatrix::from_matrix(m).unwrap()
    }

    fn werner(p: f64) -> PolDensityMatrix {
        let mut m = linalg::zero();
        for i in 0..4 {
            m[i][i] = c((1.0 - p) / 4.0, 0.0);
        }
        m[0][0] += c(p / 2.0, 0.0);
        m[3][3] += c(p / 2.0, 0.0);
        m[0][3] = c(p / 2.0, 0.0);
        m[3][0] = c(p / 2.0, 0.0);
        PolDensityMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn construction_rejects_malformed_matrices() {
        let mut m = linalg::zero();
        m[0][0] = c(0.6, 0.0);
        m[3][3] = c(0.4, 0.0);
        m[0][3] = c(0.1, 0.0);
        m[3][0] = c(0.3, 0.0); // not Hermitian
        assert!(PolDensityMatrix::from_matrix(m).is_err());
        m[3][0] = c(0.1, 0.0);
        assert!(PolDensityMatrix::from_matrix(m).is_ok());
        m[3][3] = c(0.5, 0.0); // trace 1.1
        assert!(PolDensityMatrix::from_matrix(m).is_err());
        let mut neg = linalg::zero();
        neg[0][0] = c(0.6, 0.0);
        neg[3][3] = c(0.4, 0.0);
        neg[0][3] = c(0.55, 0.0); // |coherence| above sqrt(p00 p33)
        neg[3][0] = c(0.55, 0.0);
        assert!(PolDensityMatrix::from_matrix(neg).is_err());
    }

    #[test]
    fn pure_bell_state_metrics() {
        let rho = phi_plus();
        assert_abs_diff_eq!(fidelity_phi_plus(&rho, false), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(concurrence(&rho).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn werner_concurrence_closed_form() {
        assert_relative_eq!(concurrence(&werner(0.9)).unwrap(), 0.85, max_relative = 1e-9);
        assert_abs_diff_eq!(concurrence(&werner(0.2)).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(concurrence(&werner(1.0 / 3.0)).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn splitting_free_emitter_is_maximally_entangled() {
        let dot = DotParams::from_energies(1.3980, 1.4000, 1e9, 0.0).unwrap();
        let rho = polarization_density_matrix(&initial_state(&dot).unwrap()).unwrap();
        assert_abs_diff_eq!(fidelity_phi_plus(&rho, false), 1.0, epsilon = 1e-12);
        // The double matrix square root leaves a few 1e-8 of eigen noise.
        assert_abs_diff_eq!(concurrence(&rho).unwrap(), 1.0, epsilon = 1e-7);
    }

    #[test]
    fn split_emitter_coherence_and_fidelity() {
        // At one microelectronvolt of splitting, omega_s/gamma = 1.5193:
        // |coherence| = 0.5498, phase-optimized fidelity 0.775, and for this
        // X-shaped matrix the concurrence equals the coherence magnitude.
        let dot = default_dot();
        let rho = polarization_density_matrix(&initial_state(&dot).unwrap()).unwrap();
        let coh = 2.0 * rho.entry(0, 3).norm();
        assert_relative_eq!(coh, 0.5498, max_relative = 1e-3);
        assert_relative_eq!(
            coh,
            coherence_closed_form(dot.omega_s(), dot.gamma).norm(),
            max_relative = 1e-9
        );
        assert_relative_eq!(fidelity_phi_plus(&rho, true), 0.775, max_relative = 1e-3);
        assert!(fidelity_phi_plus(&rho, false) <= fidelity_phi_plus(&rho, true));
        assert_relative_eq!(concurrence(&rho).unwrap(), coh, max_relative = 1e-9);
        // Diagonal is an even split with no cross-polarized population.
        assert_abs_diff_eq!(rho.entry(0, 0).re, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(rho.entry(1, 1).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entry(2, 2).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn strong_splitting_reference_point() {
        // omega_s/gamma = 10 leaves a concurrence of only 1/sqrt(101).
        let dot = default_dot();
        let gamma = dot.omega_s() / 10.0;
        let weak = DotParams::new(gamma, dot.k_h1, dot.k_h2, dot.k_s).unwrap();
        let rho = polarization_density_matrix(&initial_state(&weak).unwrap()).unwrap();
        assert_relative_eq!(concurrence(&rho).unwrap(), 0.0995, max_relative = 2e-3);
    }

    #[test]
    fn fidelity_and_concurrence_agree_on_coherence_loss() {
        // For the emitter's X-family, 2*fid_opt - 1 = concurrence.
        for fss in [0.3, 1.0, 4.0, 12.0] {
            let dot = DotParams::from_energies(1.3980, 1.4000, 1e9, fss).unwrap();
            let rho = polarization_density_matrix(&initial_state(&dot).unwrap()).unwrap();
            let f = fidelity_phi_plus(&rho, true);
            let cc = concurrence(&rho).unwrap();
            assert_relative_eq!(2.0 * f - 1.0, cc, max_relative = 1e-8);
        }
    }

    #[test]
    fn metrics_are_invariant_under_local_phases() {
        let dot = default_dot();
        let rho = polarization_density_matrix(&initial_state(&dot).unwrap()).unwrap();
        // Product of diagonal single-photon unitaries with phases (a, b) and
        // (g, d): entry phases phi_i - phi_j.
        let (pa, pb, pg, pd) = (0.7, -1.3, 0.4, 2.1);
        let phases = [pa + pg, pa + pd, pb + pg, pb + pd];
        let mut m = linalg::zero();
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = rho.entry(i, j) * c(0.0, phases[i] - phases[j]).exp();
            }
        }
        let rotated = PolDensityMatrix::from_matrix(m).unwrap();
        assert_relative_eq!(
            concurrence(&rotated).unwrap(),
            concurrence(&rho).unwrap(),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            fidelity_phi_plus(&rotated, true),
            fidelity_phi_plus(&rho, true),
            max_relative = 1e-12
        );
    }

    #[test]
    fn quadrature_route_matches_closed_form() {
        // Push the state through a ramped cell first so the branches carry
        // dilated and shifted wedges, then compare all 16 entries.
        let dot = default_dot();
        let cell = default_cell();
        let state = initial_state(&dot).unwrap();
        let ramp = RampProfile::new(25.0, 3.1e10, 0.5);
        let kicked = apply_cell(&state, &cell, &ramp, Photon::One).unwrap();
        let exact = polarization_density_matrix(&kicked).unwrap();
        let quad = density_matrix_quadrature(&kicked, 1e-10).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let diff = (exact.entry(i, j) - quad.entry(i, j)).norm();
                assert!(diff < 1e-9, "entry ({i},{j}) differs by {diff:.2e}");
            }
        }
    }

    #[test]
    fn coherence_scaling_dampens_entanglement() {
        let dot = default_dot();
        let rho = polarization_density_matrix(&initial_state(&dot).unwrap()).unwrap();
        let damped = rho.with_scaled_coherence(0, 3, c(0.0, 0.5)).unwrap();
        assert_relative_eq!(
            damped.entry(0, 3).norm(),
            0.5 * rho.entry(0, 3).norm(),
            max_relative = 1e-12
        );
        assert!(fidelity_phi_plus(&damped, true) < fidelity_phi_plus(&rho, true));
        assert!(rho.with_scaled_coherence(0, 0, c(0.5, 0.0)).is_err());
    }
}
