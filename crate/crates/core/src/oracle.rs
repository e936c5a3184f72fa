//! Independent numerical check of the modulator physics.
//!
//! This module never evaluates the closed-form transit, walk-off, or profile
//! transform: traversal times come from quadrature of the instantaneous
//! speed plus root finding, and profiles are propagated sample by sample on
//! a grid.  The closed-form pipeline enters only as the prediction being
//! compared against.  Waves are stored as envelopes relative to a carrier
//! wavenumber so the optical oscillation itself never has to be resolved.

use num_complex::Complex64;

use crate::eom::{self, RampProfile};
use crate::metrics::{self, linalg, PolDensityMatrix};
use crate::numerics::{self, interpolate_sinc, wrap_phase};
use crate::source::{Photon, Polarization, TwoPhotonState};
use crate::units::{CellParams, C};
use crate::{Error, Result};

/// Quadrature tolerance for the speed integrals.
const SPEED_TOL: f64 = 1e-13;

/// `Int (v(t) - v0) dt`, evaluated in the cancellation-free form
/// `v - v0 = -v0 * eta*V / (1 + eta*V)`.
fn slowdown_integral(cell: &CellParams, ramp: &RampProfile, from: f64, to: f64) -> Result<f64> {
    // The voltage is linear in t, so positivity at the ends covers the span.
    eom::instantaneous_speed(cell, ramp, from)?;
    eom::instantaneous_speed(cell, ramp, to)?;
    if from == to {
        return Ok(0.0);
    }
    numerics::adaptive_simpson(
        |t| {
            let u = cell.eta * ramp.voltage(t);
            -cell.v0 * u / (1.0 + u)
        },
        from,
        to,
        SPEED_TOL,
        1e-300,
    )
}

/// `Int v(t) dt`.
fn speed_integral(cell: &CellParams, ramp: &RampProfile, from: f64, to: f64) -> Result<f64> {
    eom::instantaneous_speed(cell, ramp, from)?;
    eom::instantaneous_speed(cell, ramp, to)?;
    if from == to {
        return Ok(0.0);
    }
    numerics::adaptive_simpson(
        |t| cell.v0 / (1.0 + cell.eta * ramp.voltage(t)),
        from,
        to,
        SPEED_TOL,
        1e-300,
    )
}

/// Excess traversal time `delta(x) = dt(x) - s/v0` of the modulated
/// polarization, solved from the crossing condition rather than from the
/// closed form.
///
/// Writing the crystal crossing as `Int_{t_in}^{t_in + s/v0 + delta} v dt = s`
/// and subtracting the unmodulated identity `v0 * (s/v0) = s` leaves
/// `A(x) + Int_{T}^{T + delta} v dt = 0` with `A = Int (v - v0) dt` over the
/// nominal window — a formulation whose root is the tiny excess itself, so
/// no precision is lost to the large common term.
pub fn transit_excess(cell: &CellParams, ramp: &RampProfile, x: f64) -> Result<f64> {
    let su = cell.thickness / cell.v0;
    let t_in = ramp.entry_time(x);
    let t_exit0 = t_in + su;
    let a = slowdown_integral(cell, ramp, t_in, t_exit0)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let v_exit = eom::instantaneous_speed(cell, ramp, t_exit0)?;
    let est = -a / v_exit;
    let g = |delta: f64| -> Result<f64> {
        Ok(a + speed_integral(cell, ramp, t_exit0, t_exit0 + delta)?)
    };
    // Bracket around the first-order estimate, then bisect: g is strictly
    // increasing because v > 0.
    let mut w = est.abs().max(1e-18);
    let mut lo = est - w;
    let mut hi = est + w;
    for _ in 0..90 {
        if g(lo)? <= 0.0 {
            break;
        }
        w *= 2.0;
        lo -= w;
    }
    for _ in 0..90 {
        if g(hi)? >= 0.0 {
            break;
        }
        w *= 2.0;
        hi += w;
    }
    if g(lo)? > 0.0 || g(hi)? < 0.0 {
        return Err(Error::Numerics("failed to bracket the transit excess".into()));
    }
    let tol = (est.abs() * 1e-10).max(1e-26);
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Traversal time from the numerical route.
pub fn transit_time_numeric(cell: &CellParams, ramp: &RampProfile, x: f64) -> Result<f64> {
    Ok(cell.thickness / cell.v0 + transit_excess(cell, ramp, x)?)
}

/// Walk-off of the unmodulated profile relative to the modulated reference
/// point, from the numerical route: `c * delta(0)`.
pub fn walkoff_numeric(cell: &CellParams, ramp: &RampProfile) -> Result<f64> {
    Ok(C * transit_excess(cell, ramp, 0.0)?)
}

/// A single-photon profile sampled on a uniform grid, stored as a complex
/// envelope relative to `carrier` (rad/m).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWave {
    pub x0: f64,
    pub dx: f64,
    pub carrier: f64,
    pub pol: Polarization,
    pub amps: Vec<Complex64>,
}

impl SampledWave {
    pub fn new(
        x0: f64,
        dx: f64,
        carrier: f64,
        pol: Polarization,
        amps: Vec<Complex64>,
    ) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() || !x0.is_finite() || !carrier.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sampled wave needs a finite grid, got x0 = {x0}, dx = {dx}, carrier = {carrier}"
            )));
        }
        if amps.len() < 16 {
            return Err(Error::InvalidParameter(format!(
                "sampled wave needs at least 16 samples, got {}",
                amps.len()
            )));
        }
        Ok(SampledWave { x0, dx, carrier, pol, amps })
    }

    pub fn position(&self, j: usize) -> f64 {
        self.x0 + self.dx * j as f64
    }

    /// Discrete squared norm `sum |A|^2 dx`.
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dx
    }
}

/// Samples the chosen photon's profile of a branch on `n` points covering
/// `span` metres up to the head of its support, with the branch wavenumber
/// as the carrier (so the stored envelope winds slowly or not at all).
pub fn branch_wave(
    branch: &crate::source::TwoPhotonBranch,
    photon: Photon,
    n: usize,
    span: f64,
) -> Result<SampledWave> {
    if !(span > 0.0) || n < 16 {
        return Err(Error::InvalidParameter(format!(
            "branch sampling needs span > 0 and n >= 16, got span = {span}, n = {n}"
        )));
    }
    let head = match photon {
        Photon::One => branch.wedge.x1_max(),
        Photon::Two => branch.wedge.x2_max(),
    };
    let env = branch.env(photon);
    let dx = span / (n - 1) as f64;
    let amps = (0..n)
        .map(|j| Complex64::new((env * (dx * j as f64 - span)).exp(), 0.0))
        .collect();
    SampledWave::new(head - span, dx, branch.kappa(photon), branch.pol(photon), amps)
}

/// Pushes a sampled profile through the cell, point by point.
///
/// Modulated (V) samples each get their own traversal-time solve; their exit
/// positions in the frame of the modulated reference are `x - c*(delta(x) -
/// delta(0))`, and the amplitude rescaling comes from the sample-density
/// ratio, not from the closed-form factor.  Unmodulated (H) samples share
/// one uniform displacement `c*delta(0)` relative to the same frame.  The
/// result is resampled onto the input grid with a windowed-sinc kernel.
pub fn propagate_grid(
    wave: &SampledWave,
    cell: &CellParams,
    ramp: &RampProfile,
) -> Result<SampledWave> {
    let n = wave.amps.len();
    let delta0 = transit_excess(cell, ramp, 0.0)?;
    let (vals, out_x0, out_dx) = match wave.pol {
        Polarization::V => {
            let mut xs_out = Vec::with_capacity(n);
            for j in 0..n {
                let x = wave.position(j);
                let delta = transit_excess(cell, ramp, x)?;
                xs_out.push(x - C * (delta - delta0));
            }
            let out_dx = (xs_out[n - 1] - xs_out[0]) / (n - 1) as f64;
            if !(out_dx > 0.0) {
                return Err(Error::Numerics(
                    "propagation folded the grid over itself".into(),
                ));
            }
            // A linear ramp maps positions affinely; anything else means the
            // solves are inconsistent.
            for (j, &xo) in xs_out.iter().enumerate() {
                let uniform = xs_out[0] + out_dx * j as f64;
                if (xo - uniform).abs() > 1e-3 * wave.dx {
                    return Err(Error::Numerics(format!(
                        "non-affine exit mapping at sample {j}: {xo} vs {uniform}"
                    )));
                }
            }
            let scale = (wave.dx / out_dx).sqrt();
            let vals: Vec<Complex64> = (0..n)
                .map(|j| {
                    let x = wave.position(j);
                    wave.amps[j]
                        * scale
                        * Complex64::new(0.0, wave.carrier * (x - xs_out[j])).exp()
                })
                .collect();
            (vals, xs_out[0], out_dx)
        }
        Polarization::H => {
            let shift = C * delta0;
            let phase = Complex64::new(0.0, -wave.carrier * shift).exp();
            let vals: Vec<Complex64> = wave.amps.iter().map(|a| a * phase).collect();
            (vals, wave.x0 + shift, wave.dx)
        }
    };
    // Aliasing guard: the per-sample winding of the envelope after the
    // carrier rephasing must stay well below half a cycle.
    let winding = (wave.carrier * (wave.dx - out_dx)).abs();
    if winding >= 0.5 {
        return Err(Error::Numerics(format!(
            "grid too coarse for the residual winding ({winding:.2} rad per sample)"
        )));
    }
    let amps = (0..n)
        .map(|i| {
            let p = (wave.position(i) - out_x0) / out_dx;
            interpolate_sinc(&vals, p)
        })
        .collect();
    SampledWave::new(wave.x0, wave.dx, wave.carrier, wave.pol, amps)
}

/// Outcome of a grid-vs-closed-form comparison, worst case over branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformCheck {
    /// Relative L2 distance between the propagated and predicted envelopes.
    pub l2_error: f64,
    /// Worst phase disagreement where the envelope is above 1e-3 of peak, rad.
    pub max_phase_error: f64,
    /// Relative drift of the discrete norm under propagation.
    pub norm_drift: f64,
}

/// Fraction of the peak envelope below which phases are not compared.
const PHASE_MASK: f64 = 1e-3;

/// Propagates every branch profile of `state` through the cell numerically
/// and compares against the closed-form transform of the same state.
/// `f_scale` deliberately miscalibrates the predicted compression factor
/// (and walk-off) — pass 1.0 for an honest comparison.
pub fn compare_transform(
    state: &TwoPhotonState,
    cell: &CellParams,
    ramp: &RampProfile,
    photon: Photon,
    n: usize,
    f_scale: f64,
) -> Result<TransformCheck> {
    let predicted_state = eom::apply_cell(state, cell, ramp, photon)?;
    let mut worst = TransformCheck { l2_error: 0.0, max_phase_error: 0.0, norm_drift: 0.0 };
    for (br, pb) in state.branches.iter().zip(predicted_state.branches.iter()) {
        let env = br.env(photon);
        let span = 15.0 / env;
        let wave = branch_wave(br, photon, n, span)?;
        let propagated = propagate_grid(&wave, cell, ramp)?;
        let drift = (propagated.norm() / wave.norm() - 1.0).abs();

        let head = match photon {
            Photon::One => br.wedge.x1_max(),
            Photon::Two => br.wedge.x2_max(),
        };
        let kappa = br.kappa(photon);
        let (edge, predicted): (f64, Vec<Complex64>) = match br.pol(photon) {
            Polarization::V => {
                let f_true = pb.env(photon) / br.env(photon);
                let f = f_true * f_scale;
                let vals = (0..wave.amps.len())
                    .map(|i| {
                        let x = wave.position(i);
                        if f * x > head {
                            return Complex64::new(0.0, 0.0);
                        }
                        f.sqrt()
                            * (env * (f * x - head)).exp()
                            * Complex64::new(0.0, (kappa * f - wave.carrier) * x).exp()
                    })
                    .collect();
                (head / f_true, vals)
            }
            Polarization::H => {
                let (t_in, t_out, s) = match photon {
                    Photon::One => (br.wedge.t1, pb.wedge.t1, br.wedge.s1),
                    Photon::Two => (br.wedge.t2, pb.wedge.t2, br.wedge.s2),
                };
                let d_true = (t_in - t_out) / s;
                let d = d_true * f_scale;
                let step = Complex64::new(0.0, -kappa * d).exp();
                let vals = (0..wave.amps.len())
                    .map(|i| {
                        let x = wave.position(i);
                        if x - d > head {
                            return Complex64::new(0.0, 0.0);
                        }
                        (env * (x - d - head)).exp() * step
                            * Complex64::new(0.0, (kappa - wave.carrier) * x).exp()
                    })
                    .collect();
                (head + d_true, vals)
            }
        };

        // The transform moves the hard support edge by a sub-grid amount,
        // which no finite grid can represent; both routes agree away from
        // it, so the kernel footprint around the edge is left out.
        let trim = 6.0 * wave.dx;
        let peak = predicted.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        let mut phase: f64 = 0.0;
        for (i, (o, p)) in propagated.amps.iter().zip(predicted.iter()).enumerate() {
            if (wave.position(i) - edge).abs() <= trim {
                continue;
            }
            num += (o - p).norm_sqr();
            den += p.norm_sqr();
            if p.norm() >= PHASE_MASK * peak {
                phase = phase.max(wrap_phase(o.arg() - p.arg()).abs());
            }
        }
        if den == 0.0 {
            return Err(Error::Numerics("predicted profile vanished".into()));
        }
        worst.l2_error = worst.l2_error.max((num / den).sqrt());
        worst.max_phase_error = worst.max_phase_error.max(phase);
        worst.norm_drift = worst.norm_drift.max(drift);
    }
    Ok(worst)
}

/// Minimum supported column count of the grid density matrix.
pub const MIN_GRID_COLUMNS: usize = 512;

/// Polarization density matrix from brute-force midpoint summation on an
/// `n x n` grid per branch pair (column-wise in the first coordinate, the
/// second following the wedge boundary), with no reuse of the closed-form
/// overlap machinery.
pub fn density_matrix_grid(state: &TwoPhotonState, n: usize) -> Result<PolDensityMatrix> {
    if n < MIN_GRID_COLUMNS {
        return Err(Error::InvalidParameter(format!(
            "grid density matrix supports n >= {MIN_GRID_COLUMNS}, got {n}"
        )));
    }
    let env_min = state
        .branches
        .iter()
        .map(|b| b.env1.min(b.env2))
        .fold(f64::INFINITY, f64::min);
    if !(env_min > 0.0) {
        return Err(Error::NonIntegrable("non-decaying branch envelope".into()));
    }
    let span = 15.0 / env_min;
    let h = span / n as f64;
    let mut m = linalg::zero();
    for a in &state.branches {
        for b in &state.branches {
            let x1_top = a.wedge.x1_max().min(b.wedge.x1_max());
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let x1 = x1_top - span + h * (i as f64 + 0.5);
                let x2_top = a.wedge.x2_bound(x1).min(b.wedge.x2_bound(x1));
                let mut col = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let x2 = x2_top - span + h * (j as f64 + 0.5);
                    col += a.value(x1, x2) * b.value(x1, x2).conj();
                }
                acc += col;
            }
            m[metrics::basis_index(a.pols())][metrics::basis_index(b.pols())] += acc * h * h;
        }
    }
    PolDensityMatrix::from_matrix_with_tolerances(m, 1e-12, 1e-3, 1e-5)
}
