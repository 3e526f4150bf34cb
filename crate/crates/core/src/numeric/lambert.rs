//! Real branches of the Lambert W function, the inverse of w ↦ w·eʷ.

use std::f64::consts::E;

use crate::error::{bail, Result};

/// Which real branch to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LambertBranch {
    /// Principal branch, w ≥ −1, defined for x ≥ −1/e.
    W0,
    /// Lower branch, w ≤ −1, defined for −1/e ≤ x < 0.
    Wm1,
}

const BRANCH_POINT: f64 = -1.0 / E;
const MAX_HALLEY_STEPS: usize = 64;

/// Evaluates W on the requested real branch.
///
/// A branch-specific starting guess (series about the branch point, or the
/// log-log asymptote) is refined by Halley iterations until the step is at
/// the rounding level of w.
pub fn lambert_w(branch: LambertBranch, x: f64) -> Result<f64> {
    if x.is_nan() {
        bail!(Domain, "Lambert W argument is NaN");
    }
    // Arguments within a couple of ulps below -1/e are rounding noise around
    // the branch point.
    let tol = 4.0 * f64::EPSILON * BRANCH_POINT.abs();
    if x < BRANCH_POINT - tol {
        bail!(Domain, "Lambert W argument {x} is below -1/e");
    }
    match branch {
        LambertBranch::W0 => {
            if x == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
        }
        LambertBranch::Wm1 => {
            if x >= 0.0 {
                bail!(Domain, "W_-1 is only defined on [-1/e, 0), got {x}");
            }
        }
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = initial_guess(branch, x);
    for _ in 0..MAX_HALLEY_STEPS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        let next = w - step;
        // keep iterates on the requested side of the branch point
        let next = match branch {
            LambertBranch::W0 if next < -1.0 => 0.5 * (w - 1.0),
            LambertBranch::Wm1 if next > -1.0 => 0.5 * (w - 1.0),
            _ => next,
        };
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(1e-300);
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(branch: LambertBranch, x: f64) -> f64 {
    let near_branch = E * x + 1.0;
    if near_branch < 0.3 {
        let p = (2.0 * near_branch).max(0.0).sqrt();
        let s = p * p / 3.0;
        let c = 11.0 / 72.0 * p * p * p;
        return match branch {
            LambertBranch::W0 => -1.0 + p - s + c,
            LambertBranch::Wm1 => -1.0 - p - s - c,
        };
    }
    match branch {
        LambertBranch::W0 => {
            if x < 3.0 {
                x.ln_1p() * 0.8
            } else {
                let l1 = x.ln();
                let l2 = l1.ln();
                l1 - l2 + l2 / l1
            }
        }
        LambertBranch::Wm1 => {
            let l1 = (-x).ln();
            let l2 = (-l1).ln();
            l1 - l2 + l2 / l1
        }
    }
}
