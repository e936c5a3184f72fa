//! The two ramp-based correction protocols and their figures of merit.
//!
//! Protocol 1 places one cell in each photon's path with opposite ramp
//! slopes chosen so each path's modulated line is compressed exactly onto
//! its unmodulated partner.  Protocol 2 first swaps photon 1's polarization
//! labels so both branches need the same compression, which a single ramped
//! cell traversed by both photons then provides.

use num_complex::Complex64;

use crate::eom::{self, RampProfile};
use crate::metrics::{self, PolDensityMatrix};
use crate::numerics::{sinc, wrap_phase};
use crate::source::{self, DotParams, Photon, Polarization, TwoPhotonBranch, TwoPhotonState};
use crate::units::{CellParams, C};
use crate::{Error, Result};

/// Extent of the residual-phase / amplitude-ratio reporting window behind
/// the head of the train: one envelope coherence length `c / gamma`.
pub fn residual_support(dot: &DotParams) -> f64 {
    C / dot.gamma
}

/// Two-cell protocol parameters.  `bias1`/`bias2` are static voltage offsets
/// at the trigger, `delta_t` a trigger mismatch (positive = cell 1's ramp
/// leads), `delta_l1`/`delta_l2` path-length errors, and the scale factors
/// multiply the ideal ramp rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme1Config {
    pub dot: DotParams,
    pub cell1: CellParams,
    pub cell2: CellParams,
    pub l1: f64,
    pub l2: f64,
    pub bias1: f64,
    pub bias2: f64,
    pub delta_t: f64,
    pub delta_l1: f64,
    pub delta_l2: f64,
    pub b1_scale: f64,
    pub b2_scale: f64,
}

impl Scheme1Config {
    pub fn new(dot: DotParams, cell1: CellParams, cell2: CellParams) -> Self {
        Scheme1Config {
            dot,
            cell1,
            cell2,
            l1: 0.5,
            l2: 0.5,
            bias1: 0.0,
            bias2: 0.0,
            delta_t: 0.0,
            delta_l1: 0.0,
            delta_l2: 0.0,
            b1_scale: 1.0,
            b2_scale: 1.0,
        }
    }
}

/// Flip-and-single-cell protocol parameters.  The one cell is traversed by
/// both photons; `l1`/`l2` are their free-flight distances to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme2Config {
    pub dot: DotParams,
    pub cell: CellParams,
    pub l1: f64,
    pub l2: f64,
    pub delta_l1: f64,
    pub delta_l2: f64,
    pub b_scale: f64,
}

impl Scheme2Config {
    pub fn new(dot: DotParams, cell: CellParams) -> Self {
        Scheme2Config {
            dot,
            cell,
            l1: 0.5,
            l2: 0.5,
            delta_l1: 0.0,
            delta_l2: 0.0,
            b_scale: 1.0,
        }
    }
}

/// Everything a correction run reports.
#[derive(Debug, Clone)]
pub struct CorrectionReport {
    pub out_state: TwoPhotonState,
    pub rho: PolDensityMatrix,
    /// Polarization pairs of the two branches (the Bell target is their
    /// equal superposition).
    pub bell_row: (Polarization, Polarization),
    pub bell_col: (Polarization, Polarization),
    /// Leftover wavenumber differences between the branches, rad/m.
    pub residual_kappa1: f64,
    pub residual_kappa2: f64,
    /// Fixed branch phase difference, wrapped to (-pi, pi] and raw.
    pub constant_phase: f64,
    pub constant_phase_unwrapped: f64,
    /// Worst branch-magnitude imbalance over the reporting window.
    pub amp_ratio_epsilon: f64,
    pub fidelity_raw: f64,
    pub fidelity_opt: f64,
    pub concurrence: f64,
    /// Applied ramp rates, V/s (equal for the single-cell protocol).
    pub rate1: f64,
    pub rate2: f64,
    pub warnings: Vec<String>,
}

/// Ideal ramp rates of the two-cell protocol:
/// `b_i = (v0 / (eta * s)) * ln(k_mod_i / k_ref_i)`.
pub fn scheme1_ramp_rates(
    dot: &DotParams,
    cell1: &CellParams,
    cell2: &CellParams,
) -> Result<(f64, f64)> {
    if cell1.eta == 0.0 || cell2.eta == 0.0 {
        return Err(Error::UncorrectableCell);
    }
    let b1 = (dot.k_v1() / dot.k_h1).ln() / cell1.eta_s_over_v0();
    let b2 = (dot.k_v2() / dot.k_h2).ln() / cell2.eta_s_over_v0();
    Ok((b1, b2))
}

/// Ideal ramp rate of the single-cell protocol (negative: after the label
/// flip both branches need stretching rather than compression).
pub fn scheme2_ramp_rate(dot: &DotParams, cell: &CellParams) -> Result<f64> {
    if cell.eta == 0.0 {
        return Err(Error::UncorrectableCell);
    }
    Ok((dot.k_h1 / dot.k_v1()).ln() / cell.eta_s_over_v0())
}

/// Phase error from a path-length fluctuation `delta_l` ahead of a ramped
/// cell: `k_ref * delta_l * (exp(eta*b*s/v0) - 1)`.
pub fn path_fluctuation_phase(cell: &CellParams, rate: f64, k_ref: f64, delta_l: f64) -> f64 {
    let y = eom::ramp_strength(cell, rate);
    k_ref * delta_l * y.exp_m1()
}

/// Phase error from a trigger mismatch between the two ramps:
/// `c * k_s * delta_t`.
pub fn ramp_mismatch_phase(dot: &DotParams, delta_t: f64) -> f64 {
    C * dot.k_s * delta_t
}

/// Peak applied voltage over one ramp of the given duration.
pub fn required_max_voltage(rate: f64, duration: f64) -> f64 {
    rate.abs() * duration
}

/// Worst deviation of the branch-magnitude ratio |b| / |a| from one over the
/// triangle `{0 >= x1 >= x2 >= -x_res}` (in the frame of branch heads).
///
/// The log-ratio is linear in position, so the extremum sits on a corner.
pub fn amplitude_ratio_epsilon(a: &TwoPhotonBranch, b: &TwoPhotonBranch, x_res: f64) -> f64 {
    let amp_log = (b.amp.norm() / a.amp.norm()).ln();
    let d1 = b.env1 - a.env1;
    let d2 = b.env2 - a.env2;
    [(0.0, 0.0), (0.0, -x_res), (-x_res, -x_res)]
        .iter()
        .map(|&(x1, x2)| (amp_log + d1 * x1 + d2 * x2).exp_m1().abs())
        .fold(0.0, f64::max)
}

/// Worst residual branch phase over the same triangle.
pub fn max_residual_phase(residual_kappa1: f64, residual_kappa2: f64, x_res: f64) -> f64 {
    (residual_kappa2.abs().max((residual_kappa1 + residual_kappa2).abs())) * x_res
}

/// The fixed branch phase difference of the two-cell protocol predicted
/// directly from the walk-off formula: `k_h1 * d1 + k_h2 * d2` (unwrapped).
pub fn scheme1_constant_phase(cfg: &Scheme1Config, rate1: f64, rate2: f64) -> Result<f64> {
    let (ramp1, ramp2) = scheme1_ramps(cfg, rate1, rate2);
    let d1 = eom::walkoff(&cfg.cell1, &ramp1)?;
    let d2 = eom::walkoff(&cfg.cell2, &ramp2)?;
    Ok(cfg.dot.k_h1 * d1 + cfg.dot.k_h2 * d2)
}

/// Ramp profiles for the two cells, including triggers and lead-in paths.
pub fn scheme1_ramps(cfg: &Scheme1Config, rate1: f64, rate2: f64) -> (RampProfile, RampProfile) {
    (
        RampProfile {
            v_start: cfg.bias1,
            rate: rate1,
            lead_in: cfg.l1 + cfg.delta_l1,
            start_time: -cfg.delta_t.max(0.0),
        },
        RampProfile {
            v_start: cfg.bias2,
            rate: rate2,
            lead_in: cfg.l2 + cfg.delta_l2,
            start_time: -(-cfg.delta_t).max(0.0),
        },
    )
}

fn finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

/// Runs the two-cell protocol.
pub fn scheme1_run(cfg: &Scheme1Config) -> Result<CorrectionReport> {
    for (name, v) in [
        ("l1", cfg.l1),
        ("l2", cfg.l2),
        ("bias1", cfg.bias1),
        ("bias2", cfg.bias2),
        ("delta_t", cfg.delta_t),
        ("delta_l1", cfg.delta_l1),
        ("delta_l2", cfg.delta_l2),
        ("b1_scale", cfg.b1_scale),
        ("b2_scale", cfg.b2_scale),
    ] {
        finite(name, v)?;
    }
    let mut warnings = cfg.dot.warnings();
    let inert = cfg.cell1.eta == 0.0 && cfg.cell2.eta == 0.0;
    let (rate1, rate2) = if inert {
        warnings.push("both cells are inert (eta = 0); reporting the uncorrected state".into());
        (0.0, 0.0)
    } else {
        let (b1, b2) = scheme1_ramp_rates(&cfg.dot, &cfg.cell1, &cfg.cell2)?;
        (b1 * cfg.b1_scale, b2 * cfg.b2_scale)
    };
    let (ramp1, ramp2) = scheme1_ramps(cfg, rate1, rate2);
    let state = source::initial_state(&cfg.dot)?;
    let after1 = eom::apply_cell(&state, &cfg.cell1, &ramp1, Photon::One)?;
    let out = eom::apply_cell(&after1, &cfg.cell2, &ramp2, Photon::Two)?;

    // Trigger jitter dephases the reported ensemble: the coherence picks up
    // the average of exp(-i w_s u) over u in [0, delta_t], i.e. its
    // deterministic value times exp(i phi/2) * sinc(phi/2), phi = w_s dt.
    let phi = cfg.dot.omega_s() * cfg.delta_t;
    let jitter = Complex64::new(0.0, 0.5 * phi).exp() * sinc(0.5 * phi);
    report(out, rate1, rate2, warnings, Some(jitter))
}

/// Runs the flip-and-single-cell protocol.
pub fn scheme2_run(cfg: &Scheme2Config) -> Result<CorrectionReport> {
    for (name, v) in [
        ("l1", cfg.l1),
        ("l2", cfg.l2),
        ("delta_l1", cfg.delta_l1),
        ("delta_l2", cfg.delta_l2),
        ("b_scale", cfg.b_scale),
    ] {
        finite(name, v)?;
    }
    let mut warnings = cfg.dot.warnings();
    let rate = if cfg.cell.eta == 0.0 {
        warnings.push("the cell is inert (eta = 0); reporting the uncorrected state".into());
        0.0
    } else {
        scheme2_ramp_rate(&cfg.dot, &cfg.cell)? * cfg.b_scale
    };
    let ramp1 = RampProfile::new(0.0, rate, cfg.l1 + cfg.delta_l1);
    let ramp2 = RampProfile::new(0.0, rate, cfg.l2 + cfg.delta_l2);
    let state = source::initial_state_flipped(&cfg.dot)?;
    let after1 = eom::apply_cell(&state, &cfg.cell, &ramp1, Photon::One)?;
    let out = eom::apply_cell(&after1, &cfg.cell, &ramp2, Photon::Two)?;
    report(out, rate, rate, warnings, None)
}

fn report(
    out: TwoPhotonState,
    rate1: f64,
    rate2: f64,
    warnings: Vec<String>,
    coherence_factor: Option<Complex64>,
) -> Result<CorrectionReport> {
    if out.branches.len() != 2 {
        return Err(Error::StateInvariant(format!(
            "correction expects a two-branch state, got {} branches",
            out.branches.len()
        )));
    }
    let a = out.branches[0];
    let b = out.branches[1];
    // Branch envelopes sit at gamma/(2c) up to the tiny compression factors,
    // so one coherence length c/gamma is 1/(2 * mean envelope rate).
    let mean_env = 0.25 * (a.env1 + b.env1 + a.env2 + b.env2);
    let x_res = 1.0 / (2.0 * mean_env);
    let residual_kappa1 = b.kappa1 - a.kappa1;
    let residual_kappa2 = b.kappa2 - a.kappa2;
    let constant_phase_unwrapped = b.phase0 - a.phase0;
    let amp_ratio_epsilon = amplitude_ratio_epsilon(&a, &b, x_res);

    let mut rho = metrics::polarization_density_matrix(&out)?;
    if let Some(factor) = coherence_factor {
        let i = metrics::basis_index(a.pols());
        let j = metrics::basis_index(b.pols());
        rho = rho.with_scaled_coherence(i, j, factor)?;
    }
    let fidelity_raw = metrics::fidelity_bell(&rho, a.pols(), b.pols(), false);
    let fidelity_opt = metrics::fidelity_bell(&rho, a.pols(), b.pols(), true);
    let concurrence = metrics::concurrence(&rho)?;
    Ok(CorrectionReport {
        bell_row: a.pols(),
        bell_col: b.pols(),
        out_state: out,
        rho,
        residual_kappa1,
        residual_kappa2,
        constant_phase: wrap_phase(constant_phase_unwrapped),
        constant_phase_unwrapped,
        amp_ratio_epsilon,
        fidelity_raw,
        fidelity_opt,
        concurrence,
        rate1,
        rate2,
        warnings,
    })
}

/// Hardware-facing summary of what the ideal protocols demand.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Ideal two-cell rates and the single-cell rate, V/s.
    pub rate1: f64,
    pub rate2: f64,
    pub rate_flip: f64,
    /// Ramp duration the voltages are quoted for, s.
    pub ramp_duration: f64,
    pub max_voltage1: f64,
    pub max_voltage2: f64,
    pub max_voltage_flip: f64,
    /// |rates| inside the achievable slew window, voltages under the cap.
    pub within_slew_window: bool,
    pub within_voltage_cap: bool,
    /// Polarization walk-offs of the two cells and their near-cancelling sum, m.
    pub walkoff1: f64,
    pub walkoff2: f64,
    pub net_walkoff: f64,
    /// Fixed branch phase of the two-cell protocol, rad (wrapped).
    pub constant_phase: f64,
    /// Phase error per second of trigger mismatch, rad/s.
    pub phase_per_second_mismatch: f64,
    /// Phase error per metre of path fluctuation in each arm, rad/m.
    pub phase_per_meter_path1: f64,
    pub phase_per_meter_path2: f64,
    /// Fractional transit-time stretch of the modulated line in each cell.
    pub transit_stretch1: f64,
    pub transit_stretch2: f64,
}

/// Evaluates hardware demands of the ideal protocols on the given cells.
pub fn feasibility(
    cfg: &Scheme1Config,
    ramp_duration: f64,
    slew_window: (f64, f64),
    voltage_cap: f64,
) -> Result<FeasibilityReport> {
    let (rate1, rate2) = scheme1_ramp_rates(&cfg.dot, &cfg.cell1, &cfg.cell2)?;
    let rate_flip = scheme2_ramp_rate(&cfg.dot, &cfg.cell1)?;
    let (ramp1, ramp2) = scheme1_ramps(cfg, rate1, rate2);
    let d1 = eom::walkoff(&cfg.cell1, &ramp1)?;
    let d2 = eom::walkoff(&cfg.cell2, &ramp2)?;
    let max_voltage1 = required_max_voltage(rate1, ramp_duration);
    let max_voltage2 = required_max_voltage(rate2, ramp_duration);
    let max_voltage_flip = required_max_voltage(rate_flip, ramp_duration);
    let in_window = |r: f64| r.abs() >= slew_window.0 && r.abs() <= slew_window.1;
    let su1 = cfg.cell1.thickness / cfg.cell1.v0;
    let su2 = cfg.cell2.thickness / cfg.cell2.v0;
    Ok(FeasibilityReport {
        rate1,
        rate2,
        rate_flip,
        ramp_duration,
        max_voltage1,
        max_voltage2,
        max_voltage_flip,
        within_slew_window: in_window(rate1) && in_window(rate2) && in_window(rate_flip),
        within_voltage_cap: max_voltage1.max(max_voltage2).max(max_voltage_flip) <= voltage_cap,
        walkoff1: d1,
        walkoff2: d2,
        net_walkoff: d1 + d2,
        constant_phase: wrap_phase(cfg.dot.k_h1 * d1 + cfg.dot.k_h2 * d2),
        phase_per_second_mismatch: C * cfg.dot.k_s,
        phase_per_meter_path1: path_fluctuation_phase(&cfg.cell1, rate1, cfg.dot.k_h1, 1.0),
        phase_per_meter_path2: path_fluctuation_phase(&cfg.cell2, rate2, cfg.dot.k_h2, 1.0),
        transit_stretch1: eom::transit_time(&cfg.cell1, &ramp1, 0.0)? / su1 - 1.0,
        transit_stretch2: eom::transit_time(&cfg.cell2, &ramp2, 0.0)? / su2 - 1.0,
    })
}
