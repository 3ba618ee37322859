//! Step-size constants shared by the accelerated solver.
//!
//! The admissible step factor `C` is the unique real root of
//! `1 - C - sqrt(C) * (C + 6) = 0` in `(0, 1)`; the Lyapunov weight is
//! `B = sqrt(C) / (1 - C)`. Both are computed once by bisection and cached.

use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConstantsError {
    #[error("B = sqrt(C)/(1-C) is defined only for C in (0,1), got {0}")]
    OutOfDomain(f64),
}

/// Residual of the defining equation for the step factor.
pub fn step_root_residual(c: f64) -> f64 {
    1.0 - c - c.sqrt() * (c + 6.0)
}

/// Cached step factor and Lyapunov weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c: f64,
    pub b: f64,
}

impl Constants {
    /// Solve for the constants from scratch. `get` caches the result; this
    /// entry point exists so the cost itself can be measured.
    pub fn compute() -> Constants {
        let c = bisect_step_root();
        let b = compute_b(c).expect("root lies in (0,1) by construction");
        Constants { c, b }
    }

    pub fn get() -> &'static Constants {
        static CACHE: OnceLock<Constants> = OnceLock::new();
        CACHE.get_or_init(Constants::compute)
    }
}

/// The step factor `C`, cached after the first call.
pub fn solve_c() -> f64 {
    Constants::get().c
}

/// Lyapunov weight `B = sqrt(C) / (1 - C)`.
pub fn compute_b(c: f64) -> Result<f64, ConstantsError> {
    if !(c > 0.0 && c < 1.0) || !c.is_finite() {
        return Err(ConstantsError::OutOfDomain(c));
    }
    Ok(c.sqrt() / (1.0 - c))
}

/// Bisection on the bracket (1e-9, 0.04], where the residual changes sign.
/// The interval collapses to machine width, which pins the residual well
/// below 1e-14 since the residual's slope at the root is about -20.
fn bisect_step_root() -> f64 {
    let mut lo = 1e-9;
    let mut hi = 0.04;
    debug_assert!(step_root_residual(lo) > 0.0);
    debug_assert!(step_root_residual(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if step_root_residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = if step_root_residual(lo).abs() <= step_root_residual(hi).abs() {
        lo
    } else {
        hi
    };
    assert!(
        step_root_residual(root).abs() <= 1e-14,
        "bisection failed to certify the step factor: residual {:.3e}",
        step_root_residual(root)
    );
    root
}
