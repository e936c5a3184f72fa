//! Small numerical routines shared across the crate: stable exponential
//! quotients, adaptive Simpson integration, bracketed bisection, and the
//! windowed-sinc interpolation kernel used by the grid oracle.

use num_complex::Complex64;

use crate::{Error, Result};

/// Threshold below which `(e^y - 1)/y`-type quotients switch to their series.
const SERIES_CUTOFF: f64 = 1e-6;

/// `(e^y - 1) / y`, continuous through `y = 0`.
///
/// Below the cutoff the 4th-order series `1 + y/2 + y^2/6 + y^3/24` is exact
/// to double precision; above it `expm1` avoids the `e^y - 1` cancellation.
pub fn expm1_over(y: f64) -> f64 {
    if y.abs() < SERIES_CUTOFF {
        1.0 + y * (0.5 + y * (1.0 / 6.0 + y / 24.0))
    } else {
        y.exp_m1() / y
    }
}

/// `(e^y - 1) / y - 1 = y/2 + y^2/6 + ...`, free of cancellation near 0.
pub fn expm1_over_minus_one(y: f64) -> f64 {
    if y.abs() < 1e-3 {
        y * (0.5 + y * (1.0 / 6.0 + y * (1.0 / 24.0 + y / 120.0)))
    } else {
        (y.exp_m1() - y) / y
    }
}

/// `sin(x)/x`, continuous through `x = 0`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Wraps an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = phi.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

fn simpson_slice<F: Fn(f64) -> f64>(f: &F, a: f64, h: f64, n: usize) -> f64 {
    // Composite Simpson over n (even) panels of width h starting at a.
    let mut acc = f(a) + f(a + h * n as f64);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Composite Simpson integration of `f` over `[a, b]`, doubling the panel
/// count until successive estimates agree to `rel_tol` (with a small absolute
/// floor for integrals that are legitimately zero).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut n = 4usize;
    let mut prev = simpson_slice(&f, a, (b - a) / n as f64, n);
    for _ in 0..26 {
        n *= 2;
        let cur = simpson_slice(&f, a, (b - a) / n as f64, n);
        if (cur - prev).abs() <= rel_tol * cur.abs().max(abs_floor) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Numerics(format!(
        "Simpson integration did not reach rel_tol {rel_tol:.1e} on [{a:.3e}, {b:.3e}]"
    )))
}

/// Adaptive Simpson for complex-valued integrands (same refinement rule,
/// convergence measured in the complex modulus).
pub fn adaptive_simpson_complex<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let slice = |n: usize| -> Complex64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + h * i as f64);
        }
        acc * h / 3.0
    };
    let mut n = 4usize;
    let mut prev = slice(n);
    for _ in 0..26 {
        n *= 2;
        let cur = slice(n);
        if (cur - prev).norm() <= rel_tol * cur.norm().max(abs_floor) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Numerics(format!(
        "complex Simpson integration did not converge on [{a:.3e}, {b:.3e}]"
    )))
}

/// Bisection root find for a continuous `g` with `g(lo) <= 0 <= g(hi)`,
/// refined until the bracket width drops below `tol_abs`.
pub fn bisect<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, tol_abs: f64) -> Result<f64> {
    let (glo, ghi) = (g(lo), g(hi));
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::Numerics(format!(
            "bisection bracket [{lo:.3e}, {hi:.3e}] does not straddle the root \
             (g = {glo:.3e}, {ghi:.3e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol_abs || mid == lo || mid == hi {
            return Ok(mid);
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Zeroth-order modified Bessel function of the first kind (series form).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Number of taps on each side of the interpolation point.
pub const SINC_HALF_TAPS: usize = 4;

/// Kaiser-windowed sinc interpolation weight for an offset of `u` samples
/// (nonzero only for `|u| < 4`, i.e. an 8-tap kernel).
pub fn kaiser_sinc_weight(u: f64) -> f64 {
    let half = SINC_HALF_TAPS as f64;
    if u.abs() >= half {
        return 0.0;
    }
    const BETA: f64 = 8.0;
    let window = bessel_i0(BETA * (1.0 - (u / half) * (u / half)).sqrt()) / bessel_i0(BETA);
    sinc(std::f64::consts::PI * u) * window
}

/// Interpolates a uniformly sampled complex signal at fractional index `p`
/// (samples outside the array are treated as zero).
pub fn interpolate_sinc(samples: &[Complex64], p: f64) -> Complex64 {
    let base = p.floor() as isize;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut wsum = 0.0;
    for n in (base - SINC_HALF_TAPS as isize + 1)..=(base + SINC_HALF_TAPS as isize) {
        let w = kaiser_sinc_weight(p - n as f64);
        // Normalize by the full window so the kernel has exactly unit DC
        // gain, while out-of-range taps still contribute zero.
        wsum += w;
        if n < 0 || n as usize >= samples.len() {
            continue;
        }
        acc += samples[n as usize] * w;
    }
    acc / wsum
}
