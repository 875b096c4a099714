use crate::error::{Error, Result};

/// Term budget for [`gauss_2f1`].
pub const MAX_SERIES_TERMS: usize = 20_000;

/// Gauss hypergeometric function `2F1(a, b; c; z)` by direct summation of
/// its power series, valid for `|z| < 1`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    check_args(c, z)?;

    let mut sum = 1.0;
    let mut term = 1.0;
    let mut last_change = f64::INFINITY;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        let ratio = (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        term *= ratio;
        if term == 0.0 {
            // a or b is a non-positive integer: the series terminates.
            return Ok(sum);
        }
        sum += term;
        last_change = (term / sum).abs();
        // Once the term ratio is below one the tail is bounded by a geometric
        // series with that ratio.
        let r = ratio.abs();
        if r < 1.0 && last_change / (1.0 - r) < 1e-17 {
            return Ok(sum);
        }
    }
    Err(Error::Convergence {
        terms: MAX_SERIES_TERMS,
        last_change,
    })
}

/// Partial sum of the `2F1` series using exactly `n_terms` terms (the
/// constant term included).
pub fn gauss_2f1_partial(a: f64, b: f64, c: f64, z: f64, n_terms: usize) -> Result<f64> {
    check_args(c, z)?;
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 0..n_terms {
        sum += term;
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
    }
    Ok(sum)
}

fn check_args(c: f64, z: f64) -> Result<()> {
    if !(z.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "2F1 series requires |z| < 1, got {z}"
        )));
    }
    if c <= 0.0 && c == c.floor() {
        return Err(Error::Domain(format!(
            "2F1 undefined for non-positive integer c = {c}"
        )));
    }
    Ok(())
}
