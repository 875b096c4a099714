//! Evaluation grids.

use crate::error::{Error, Result};

/// `n` points evenly spaced on `[start, stop]`.
pub fn lin_space(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// `n` points evenly spaced in `log10` between `start` and `stop` (both > 0).
pub fn log_space(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log grid bounds must be positive: [{start}, {stop}]"
        )));
    }
    Ok(lin_space(start.log10(), stop.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect())
}
