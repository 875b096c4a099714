use std::f64::consts::E;

use crate::error::{Error, Result};

/// Location of the branch point of the principal branch, `-1/e`.
const BRANCH_POINT: f64 = -1.0 / E;

/// Slack below the branch point that is still mapped to `W = -1`.
const BRANCH_SLACK: f64 = 1e-15;

/// Principal branch `W0` of the Lambert-W function, the solution of
/// `w * exp(w) = z` with `w >= -1`.
///
/// Halley iteration started from a branch-aware guess: a series in
/// `sqrt(2(e z + 1))` near the branch point, a log-based asymptotic form for
/// large `z`, and Winitzki's approximation in between.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::Domain("lambert_w0 of NaN".into()));
    }
    if z < BRANCH_POINT - BRANCH_SLACK {
        return Err(Error::Domain(format!(
            "lambert_w0 requires z >= -1/e, got {z:e}"
        )));
    }
    if z <= BRANCH_POINT {
        return Ok(-1.0);
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(z);
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

fn initial_guess(z: f64) -> f64 {
    if z < -0.25 {
        // Series about the branch point in p = sqrt(2 (e z + 1)).
        let p = (2.0 * E * (z - BRANCH_POINT)).max(0.0).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))
    } else if z < 3.0 {
        let l = z.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}
