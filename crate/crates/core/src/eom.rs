//! A longitudinal electro-optic phase modulator driven by a linear voltage
//! ramp, acting on one photon of the pair.
//!
//! The modulated (V) index follows the applied voltage, so the group speed
//! inside the crystal is `v(t) = v0 / (1 + eta * V(t))`.  Points of the wave
//! train enter at staggered times and therefore see different voltages: a
//! ramp turns the V profile into a dilation `psi(x) -> sqrt(f) psi(f x)` with
//! `f = exp(-eta*b*s/v0)`, while the unmodulated (H) profile is simply
//! carried `d` behind/ahead — both exactly norm preserving.

use crate::numerics::{expm1_over, expm1_over_minus_one};
use crate::source::{Photon, Polarization, TwoPhotonState};
use crate::units::{CellParams, C};
use crate::{Error, Result};

/// A linear voltage ramp `V(t) = v_start + rate * (t - start_time)` applied
/// to a cell sitting `lead_in` metres downstream of the position reference.
///
/// `start_time` shifts the ramp trigger without changing its shape: the
/// reference point of the train (x = 0) crosses the origin at t = 0 and the
/// cell input at `lead_in / c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampProfile {
    /// Voltage at the trigger time, V.
    pub v_start: f64,
    /// Ramp slope, V/s.
    pub rate: f64,
    /// Free-flight distance from the position reference to the cell, m.
    pub lead_in: f64,
    /// Trigger time, s (negative = the ramp leads the reference).
    pub start_time: f64,
}

impl RampProfile {
    /// Ramp triggered at t = 0.
    pub fn new(v_start: f64, rate: f64, lead_in: f64) -> Self {
        RampProfile { v_start, rate, lead_in, start_time: 0.0 }
    }

    /// Equivalent voltage offset of the global linear form `a + rate * t`.
    pub fn offset(&self) -> f64 {
        self.v_start - self.rate * self.start_time
    }

    /// Voltage at time t.
    pub fn voltage(&self, t: f64) -> f64 {
        self.offset() + self.rate * t
    }

    /// Time at which the train point with offset x reaches the cell input.
    pub fn entry_time(&self, x: f64) -> f64 {
        (self.lead_in - x) / C
    }
}

fn index_factor(cell: &CellParams, ramp: &RampProfile, t: f64) -> Result<f64> {
    let factor = 1.0 + cell.eta * ramp.voltage(t);
    if factor <= 0.0 {
        return Err(Error::UnphysicalVoltage { factor, t });
    }
    Ok(factor)
}

/// Group speed of the modulated polarization at time t.
pub fn instantaneous_speed(cell: &CellParams, ramp: &RampProfile, t: f64) -> Result<f64> {
    Ok(cell.v0 / index_factor(cell, ramp, t)?)
}

/// Dimensionless ramp strength `eta * rate * s / v0`.
pub fn ramp_strength(cell: &CellParams, rate: f64) -> f64 {
    cell.eta * rate * cell.thickness / cell.v0
}

/// Crystal traversal time of the modulated polarization for the train point
/// at offset x:
/// `dt = (1 + eta * V(t_in)) * (s / v0) * (e^y - 1)/y`,  y = eta*rate*s/v0.
pub fn transit_time(cell: &CellParams, ramp: &RampProfile, x: f64) -> Result<f64> {
    let t_in = ramp.entry_time(x);
    let factor_in = index_factor(cell, ramp, t_in)?;
    let y = ramp_strength(cell, ramp.rate);
    let dt = factor_in * (cell.thickness / cell.v0) * expm1_over(y);
    // The voltage must stay physical for the whole traversal.
    index_factor(cell, ramp, t_in + dt)?;
    Ok(dt)
}

/// Profile compression factor picked up by the modulated polarization,
/// `f = exp(-eta * rate * s / v0)`.
pub fn scale_factor(cell: &CellParams, rate: f64) -> f64 {
    (-ramp_strength(cell, rate)).exp()
}

/// How far the unmodulated profile lands ahead of the modulated reference
/// point after the cell (positive = H leads V):
/// `d = c*(s/v0)*((e^y - 1)/y - 1) + a*c*eta*(s/v0)*(e^y - 1)/y + L*(e^y - 1)`.
pub fn walkoff(cell: &CellParams, ramp: &RampProfile) -> Result<f64> {
    // Validated through the reference-point transit (also checks positivity).
    transit_time(cell, ramp, 0.0)?;
    let y = ramp_strength(cell, ramp.rate);
    let su = cell.thickness / cell.v0;
    Ok(C * su * expm1_over_minus_one(y)
        + ramp.offset() * C * cell.eta * su * expm1_over(y)
        + ramp.lead_in * y * expm1_over(y))
}

/// Accumulated phase difference between a modulated component at wavenumber
/// `k_mod` and an unmodulated one at `k_ref`, as a function of position in
/// the frame of the modulated reference point:
/// `(f*k_mod - k_ref) * x + k_ref * d`.
pub fn phase_difference(
    cell: &CellParams,
    ramp: &RampProfile,
    k_mod: f64,
    k_ref: f64,
    x: f64,
) -> Result<f64> {
    let f = scale_factor(cell, ramp.rate);
    Ok((f * k_mod - k_ref) * x + k_ref * walkoff(cell, ramp)?)
}

/// Extent of train (in metres behind the head) whose traversal voltage is
/// validated when applying a cell.
const COVERAGE_ENVELOPE_FOLDS: f64 = 15.0;

/// Passes the chosen photon of every branch through the cell.
///
/// V-labeled components are dilated (`amp *= sqrt(f)`, envelope, wavenumber
/// and wedge slope scaled by `f`), H-labeled ones are shifted by the walk-off
/// `d` (constant phase `-kappa*d`, envelope weight `exp(-env*d)`, wedge
/// offset moved).  Both moves preserve the state norm exactly.
pub fn apply_cell(
    state: &TwoPhotonState,
    cell: &CellParams,
    ramp: &RampProfile,
    photon: Photon,
) -> Result<TwoPhotonState> {
    let f = scale_factor(cell, ramp.rate);
    let d = walkoff(cell, ramp)?;
    let mut out = Vec::with_capacity(state.branches.len());
    for b in &state.branches {
        // The linear voltage must stay physical from the head of this
        // photon's support down to where the envelope is negligible.
        let head = match photon {
            Photon::One => b.wedge.x1_max(),
            Photon::Two => b.wedge.x2_max(),
        };
        let tail = head - COVERAGE_ENVELOPE_FOLDS / b.env(photon);
        for x in [head, tail] {
            transit_time(cell, ramp, x)?;
        }
        let mut nb = *b;
        match b.pol(photon) {
            Polarization::V => {
                nb.amp *= f.sqrt();
                match photon {
                    Photon::One => {
                        nb.env1 *= f;
                        nb.kappa1 *= f;
                        nb.wedge.s1 *= f;
                    }
                    Photon::Two => {
                        nb.env2 *= f;
                        nb.kappa2 *= f;
                        nb.wedge.s2 *= f;
                    }
                }
            }
            Polarization::H => {
                match photon {
                    Photon::One => {
                        nb.amp *= (-b.env1 * d).exp();
                        nb.phase0 -= b.kappa1 * d;
                        nb.wedge.t1 -= b.wedge.s1 * d;
                    }
                    Photon::Two => {
                        nb.amp *= (-b.env2 * d).exp();
                        nb.phase0 -= b.kappa2 * d;
                        nb.wedge.t2 -= b.wedge.s2 * d;
                    }
                }
            }
        }
        out.push(nb);
    }
    Ok(TwoPhotonState { branches: out })
}

#[cfg(test)]
pub use tests::default_cell;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{default_dot, initial_state};
    use crate::units::CellParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// 20 mm KTP-class longitudinal cell used throughout the tests.
    pub fn default_cell() -> CellParams {
        CellParams::from_datasheet(52e-3, 830e-9, 1.5, 0.02).unwrap()
    }

    #[test]
    fn unpowered_transit_is_geometric() {
        let cell = default_cell();
        let ramp = RampProfile::new(0.0, 0.0, 0.5);
        let dt = transit_time(&cell, &ramp, 0.0).unwrap();
        assert_eq!(dt, cell.thickness / cell.v0);
        let thick = CellParams::from_datasheet(52e-3, 830e-9, 1.5, 0.04).unwrap();
        let dt2 = transit_time(&thick, &RampProfile::new(0.0, 0.0, 0.5), 0.0).unwrap();
        assert_relative_eq!(dt2, 2.0 * dt, max_relative = 1e-12);
    }

    #[test]
    fn ramped_transit_reference_value() {
        // 31.2 V/ns on the default cell stretches the 100 ps traversal by a
        // few parts in 1e7.
        let cell = default_cell();
        let ramp = RampProfile::new(0.0, 31.2e9, 0.5);
        let dt = transit_time(&cell, &ramp, 0.0).unwrap();
        assert_relative_eq!(dt, 1.0007e-10, max_relative = 1e-4);
        assert!(dt > cell.thickness / cell.v0);
    }

    #[test]
    fn speed_tracks_applied_voltage() {
        let cell = default_cell();
        let ramp = RampProfile::new(1000.0, 0.0, 0.0);
        let v = instantaneous_speed(&cell, &ramp, 0.0).unwrap();
        assert_relative_eq!(v, cell.v0 / (1.0 + cell.eta * 1000.0), max_relative = 1e-15);
        assert!(v < cell.v0);
    }

    #[test]
    fn over_biased_cell_is_rejected() {
        let cell = default_cell();
        let bias = -1.1 / cell.eta;
        let ramp = RampProfile::new(bias, 0.0, 0.5);
        assert!(matches!(
            transit_time(&cell, &ramp, 0.0),
            Err(Error::UnphysicalVoltage { .. })
        ));
        let dot = default_dot();
        let state = initial_state(&dot).unwrap();
        assert!(apply_cell(&state, &cell, &ramp, Photon::One).is_err());
    }

    #[test]
    fn zero_rate_limits_are_continuous() {
        let cell = default_cell();
        let a = 40.0;
        let l = 0.5;
        for rate in [1e-6, -1e-6] {
            let ramp = RampProfile::new(a, rate, l);
            let flat = RampProfile::new(a, 0.0, l);
            let dt = transit_time(&cell, &ramp, 0.0).unwrap();
            let dt0 = transit_time(&cell, &flat, 0.0).unwrap();
            assert_relative_eq!(dt, dt0, max_relative = 1e-9);
            let d = walkoff(&cell, &ramp).unwrap();
            let d0 = walkoff(&cell, &flat).unwrap();
            assert_relative_eq!(d, d0, max_relative = 1e-9);
        }
    }

    #[test]
    fn flat_bias_walkoff_closed_form() {
        // With no ramp the two polarizations separate only through the static
        // index difference: d = a*c*eta*s/v0.
        let cell = default_cell();
        let a = 750.0;
        let d = walkoff(&cell, &RampProfile::new(a, 0.0, 0.5)).unwrap();
        assert_relative_eq!(
            d,
            a * C * cell.eta * cell.thickness / cell.v0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn walkoff_agrees_with_transit_difference() {
        // d = c * (dt(reference) - s/v0).  The subtraction loses ~1e-11 of
        // relative accuracy at small bias where d is only femtoseconds of
        // delay, so the tight comparison runs at a large static bias.
        let cell = default_cell();
        let su = cell.thickness / cell.v0;
        let big = RampProfile::new(2500.0, 31.2e9, 0.5);
        let d_direct = C * (transit_time(&cell, &big, 0.0).unwrap() - su);
        assert_relative_eq!(walkoff(&cell, &big).unwrap(), d_direct, max_relative = 1e-12);
        let nominal = RampProfile::new(0.0, 31.2e9, 0.5);
        let d_nom = C * (transit_time(&cell, &nominal, 0.0).unwrap() - su);
        assert_relative_eq!(walkoff(&cell, &nominal).unwrap(), d_nom, max_relative = 1e-10);
    }

    #[test]
    fn trigger_shift_equals_voltage_offset() {
        // Starting the ramp early by T is the same cell as raising the offset
        // by rate*T.
        let cell = default_cell();
        let rate = 31.2e9;
        let shifted = RampProfile { v_start: 0.0, rate, lead_in: 0.5, start_time: -2e-9 };
        let offset = RampProfile::new(rate * 2e-9, rate, 0.5);
        assert_relative_eq!(shifted.offset(), offset.offset(), max_relative = 1e-15);
        assert_relative_eq!(
            walkoff(&cell, &shifted).unwrap(),
            walkoff(&cell, &offset).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn phase_difference_splits_into_linear_and_constant_parts() {
        let cell = default_cell();
        let dot = default_dot();
        let ramp = RampProfile::new(0.0, 31.2e9, 0.5);
        let f = scale_factor(&cell, ramp.rate);
        let d = walkoff(&cell, &ramp).unwrap();
        let x = -0.17;
        let got = phase_difference(&cell, &ramp, dot.k_v1(), dot.k_h1, x).unwrap();
        assert_relative_eq!(
            got,
            (f * dot.k_v1() - dot.k_h1) * x + dot.k_h1 * d,
            max_relative = 1e-12
        );
    }

    #[test]
    fn inert_cell_is_identity() {
        let cell = CellParams::new(0.0, 0.02, 2e8).unwrap();
        let dot = default_dot();
        let state = initial_state(&dot).unwrap();
        let out = apply_cell(&state, &cell, &RampProfile::new(500.0, 3e10, 0.5), Photon::One)
            .unwrap();
        assert_eq!(state, out);
    }

    #[test]
    fn opposite_ramps_cancel_exactly() {
        let cell = default_cell();
        let f1 = scale_factor(&cell, 31.2e9);
        let f2 = scale_factor(&cell, -31.2e9);
        assert_relative_eq!(f1 * f2, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn consecutive_cells_compose_multiplicatively() {
        let cell = default_cell();
        let dot = default_dot();
        let state = initial_state(&dot).unwrap();
        let r1 = RampProfile::new(0.0, 2.0e10, 0.5);
        let r2 = RampProfile::new(0.0, -1.3e10, 0.2);
        let once = apply_cell(&state, &cell, &r1, Photon::One).unwrap();
        let twice = apply_cell(&once, &cell, &r2, Photon::One).unwrap();
        let f12 = scale_factor(&cell, r1.rate) * scale_factor(&cell, r2.rate);
        // V branch of photon 1 is branches[1] (VV path).
        assert_relative_eq!(twice.branches[1].kappa1, dot.k_v1() * f12, max_relative = 1e-14);
        assert_relative_eq!(twice.branches[1].env1, state.branches[1].env1 * f12, max_relative = 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn cells_preserve_the_norm(
            rate_gv in -60.0f64..60.0,
            bias in -500.0f64..500.0,
            lead in 0.0f64..2.0,
            photon_one in proptest::bool::ANY,
        ) {
            let cell = default_cell();
            let dot = default_dot();
            let state = initial_state(&dot).unwrap();
            let ramp = RampProfile::new(bias, rate_gv * 1e9, lead);
            let photon = if photon_one { Photon::One } else { Photon::Two };
            let out = apply_cell(&state, &cell, &ramp, photon).unwrap();
            let n = out.norm().unwrap();
            prop_assert!((n - 1.0).abs() < 1e-12, "norm drifted to {}", n);
        }
    }
}
