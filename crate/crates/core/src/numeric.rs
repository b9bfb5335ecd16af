//! Scalar numerical kernels shared across the simulator: bracketed root
//! finding with geometric bracket expansion, panel-doubling quadrature, and
//! compensated summation for order-stable Monte Carlo aggregation.
//!
//! Everything here is deterministic: the same inputs produce bit-identical
//! results regardless of caller threading, which the reproducibility contract
//! of the experiment engine relies on.

use crate::error::{Error, Result};

/// Hard cap on bisection and bracket-expansion iterations.
///
/// 200 halvings shrink any representable bracket below f64 resolution, so
/// hitting the cap always indicates a logic error or a pathological function,
/// not slow convergence.
pub const MAX_ROOT_ITERATIONS: usize = 200;

// -- Root finding ------------------------------------------------------------

/// Finds a root of `f` inside `[lo, hi]` by bisection.
///
/// Requires `f(lo)` and `f(hi)` to have opposite (or zero) signs. Stops when
/// the bracket width drops below `abs_tol + rel_tol * |midpoint|`. The
/// function need not be continuous elsewhere, but must be continuous and
/// monotone-crossing on the bracket for the result to be the root.
pub fn bisect<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Numeric {
            what: "bisect",
            detail: format!("no sign change on [{lo:e}, {hi:e}]: f(lo)={f_lo:e}, f(hi)={f_hi:e}"),
        });
    }
    for _ in 0..MAX_ROOT_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= abs_tol + rel_tol * mid.abs() {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grows `hi` geometrically from `hi0` until `f(hi)` differs in sign from
/// `f_lo_sign`, returning the final `hi`.
///
/// Used to bracket roots of monotone functions whose scale is not known in
/// advance (demanded bandwidth can span many orders of magnitude).
pub fn expand_upper<F: Fn(f64) -> f64>(f: F, f_lo_sign: f64, hi0: f64, factor: f64) -> Result<f64> {
    let mut hi = hi0;
    for _ in 0..MAX_ROOT_ITERATIONS {
        let f_hi = f(hi);
        if f_hi == 0.0 || f_hi.signum() != f_lo_sign {
            return Ok(hi);
        }
        hi *= factor;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::Numeric {
        what: "expand_upper",
        detail: format!("no sign change found expanding from {hi0:e}"),
    })
}

// -- Quadrature --------------------------------------------------------------

/// Integrates `f` over `[a, b]` by panel doubling with Richardson
/// extrapolation (trapezoid refined to Simpson accuracy), reusing every
/// function evaluation across refinement levels.
///
/// Converges when two successive Simpson estimates agree to `rel_tol` in
/// relative terms (or to `rel_tol` absolutely when the integral is near
/// zero). Fails with a diagnostic after `max_doublings` refinements.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_doublings: u32,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::Numeric {
            what: "integrate",
            detail: format!("invalid interval [{a:e}, {b:e}]"),
        });
    }
    let mut n: usize = 16;
    let mut trap = {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + h * i as f64);
        }
        s * h
    };
    let mut simpson_prev = f64::NAN;
    for level in 0..max_doublings {
        let h = (b - a) / n as f64;
        // Trapezoid refinement: previous nodes are kept, only odd midpoints
        // of the finer grid are newly evaluated.
        let mut odd = 0.0;
        for i in 0..n {
            odd += f(a + h * (i as f64 + 0.5));
        }
        let trap_fine = 0.5 * trap + 0.5 * h * odd;
        let simpson = (4.0 * trap_fine - trap) / 3.0;
        if level > 0 {
            let scale = simpson.abs().max(1.0e-300);
            if (simpson - simpson_prev).abs() <= rel_tol * scale.max(simpson_prev.abs()) {
                return Ok(simpson);
            }
        }
        simpson_prev = simpson;
        trap = trap_fine;
        n *= 2;
    }
    Err(Error::Numeric {
        what: "integrate",
        detail: format!(
            "no convergence to rel_tol {rel_tol:e} after {max_doublings} doublings (last = {simpson_prev:e})"
        ),
    })
}

// -- Summation ---------------------------------------------------------------

/// Kahan compensated accumulator.
///
/// Keeps Monte Carlo aggregates independent of accumulation round-off drift,
/// so aggregating a few thousand epoch results stays reproducible to the
/// last bit even if the surrounding code is later reorganized.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

// -- Tests -------------------------------------------------------------------
