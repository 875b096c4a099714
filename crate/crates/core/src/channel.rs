//! Fading and interference laws.
//!
//! Fading is the power gain `h` of a Rayleigh channel, `h ~ Exp(1)`, or a
//! fixed value. Interference is band-level received power regardless of
//! source: a constant, a measured CDF table, or a lognormal law.

use std::f64::consts::LN_10;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::error::{Error, Result};
use crate::special::{integrate, integrate_semi_infinite, QuadSpec};
use crate::units::{dbm_to_watts, watts_to_dbm};

/// Default deep-fade cutoff: draws with `h < DEFAULT_H_MIN` are treated as
/// outages. Needed because `E[1/h]` diverges for `h ~ Exp(1)`.
pub const DEFAULT_H_MIN: f64 = 0.01;

/// Mean interference power used when no table is supplied, in dBm.
pub const DEFAULT_INTERFERENCE_DBM: f64 = -95.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingModel {
    /// Rayleigh power fading, unit mean.
    ExponentialUnit,
    Deterministic {
        value: f64,
    },
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        if let FadingModel::Deterministic { value } = *self {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "deterministic fading must be >= 0, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// One draw by inverse-transform sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingModel::ExponentialUnit => -(1.0 - rng.random::<f64>()).ln(),
            FadingModel::Deterministic { value } => value,
        }
    }

    /// One draw conditioned on `h >= h_min`.
    ///
    /// For the exponential law this is `h_min + Exp(1)` (memorylessness),
    /// identical in distribution to rejecting draws below `h_min`.
    /// Deterministic fading is returned unchanged.
    pub fn sample_truncated<R: Rng + ?Sized>(&self, h_min: f64, rng: &mut R) -> f64 {
        match *self {
            FadingModel::ExponentialUnit => h_min - (1.0 - rng.random::<f64>()).ln(),
            FadingModel::Deterministic { value } => value,
        }
    }

    /// `E[1/h]` under the same truncation as [`sample_truncated`](Self::sample_truncated).
    pub fn inverse_mean(&self, h_min: f64) -> Result<f64> {
        match *self {
            FadingModel::ExponentialUnit => truncated_inv_fading_mean(h_min),
            FadingModel::Deterministic { value } if value > 0.0 => Ok(1.0 / value),
            FadingModel::Deterministic { .. } => Err(Error::UnusableLink),
        }
    }
}

impl fmt::Display for FadingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingModel::ExponentialUnit => f.write_str("exp(1)"),
            FadingModel::Deterministic { value } => write!(f, "deterministic({value})"),
        }
    }
}

/// `E[1/h | h >= h_min]` for `h ~ Exp(1)`, by adaptive quadrature of
/// `int_{h_min}^inf e^-h / h dh` normalized by `e^-h_min`.
pub fn truncated_inv_fading_mean(h_min: f64) -> Result<f64> {
    if !(h_min > 0.0 && h_min.is_finite()) {
        return Err(Error::Domain(format!("h_min must be > 0, got {h_min}")));
    }
    // Shift the variable so the conditional density is e^-x on [0, inf).
    let spec = QuadSpec::new(1e-14, 1e-12, 50)?;
    integrate_semi_infinite(|x| (-x).exp() / (h_min + x), 0.0, &spec)
}

/// Piecewise-linear CDF of interference power, in (dBm, probability).
///
/// Both columns are non-decreasing and no two consecutive rows coincide, so
/// vertical runs encode atoms and horizontal runs encode gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    power_dbm: Vec<f64>,
    cdf: Vec<f64>,
}

/// Largest first-knot / smallest last-knot probability accepted.
const SPAN_SLACK: f64 = 0.01;

impl EmpiricalCdf {
    pub fn new(power_dbm: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if power_dbm.len() != cdf.len() || power_dbm.len() < 2 {
            return Err(Error::InvalidParameter(
                "interference table needs at least two (power, cdf) rows".into(),
            ));
        }
        for (i, (&p, &c)) in power_dbm.iter().zip(&cdf).enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(Error::InvalidParameter(format!(
                    "row {i}: power must be finite and cdf in [0, 1], got ({p}, {c})"
                )));
            }
        }
        for i in 1..cdf.len() {
            let (dp, dc) = (power_dbm[i] - power_dbm[i - 1], cdf[i] - cdf[i - 1]);
            if dp < 0.0 || dc < 0.0 || (dp == 0.0 && dc == 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "interference table must increase row by row (row {i})"
                )));
            }
        }
        if cdf[0] > SPAN_SLACK || cdf[cdf.len() - 1] < 1.0 - SPAN_SLACK {
            return Err(Error::InvalidParameter(format!(
                "interference cdf must span [~0, ~1], got [{}, {}]",
                cdf[0],
                cdf[cdf.len() - 1]
            )));
        }
        Ok(Self { power_dbm, cdf })
    }

    /// Reads a `power_dbm,cdf` CSV file.
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("{other:?}"),
            },
        })?;
        let headers = reader.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["power_dbm", "cdf"] {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!(
                    "expected header 'power_dbm,cdf', got '{}'",
                    headers.as_slice()
                ),
            });
        }
        let (mut power, mut cdf) = (Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("column {} is not a number", k + 1),
                    })
            };
            power.push(parse(0)?);
            cdf.push(parse(1)?);
        }
        Self::new(power, cdf)
    }

    pub fn power_dbm(&self) -> &[f64] {
        &self.power_dbm
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Inverse CDF in dBm, clamped to the first and last knots.
    pub fn quantile_dbm(&self, u: f64) -> f64 {
        let n = self.cdf.len();
        if u <= self.cdf[0] {
            return self.power_dbm[0];
        }
        if u >= self.cdf[n - 1] {
            return self.power_dbm[n - 1];
        }
        // first knot with cdf >= u
        let hi = self.cdf.partition_point(|&c| c < u);
        let lo = hi - 1;
        let (c0, c1) = (self.cdf[lo], self.cdf[hi]);
        let t = (u - c0) / (c1 - c0);
        self.power_dbm[lo] + t * (self.power_dbm[hi] - self.power_dbm[lo])
    }

    /// CDF at `dbm`, linear between knots.
    pub fn cdf_at_dbm(&self, dbm: f64) -> f64 {
        let n = self.power_dbm.len();
        if dbm < self.power_dbm[0] {
            return 0.0;
        }
        if dbm >= self.power_dbm[n - 1] {
            return 1.0;
        }
        // last knot with power <= dbm
        let hi = self.power_dbm.partition_point(|&p| p <= dbm);
        let lo = hi - 1;
        let (p0, p1) = (self.power_dbm[lo], self.power_dbm[hi]);
        let t = (dbm - p0) / (p1 - p0);
        self.cdf[lo] + t * (self.cdf[hi] - self.cdf[lo])
    }

    /// Mean power in watts: quadrature of the inverse CDF over each segment,
    /// plus the atoms at the first and last knots.
    pub fn mean_watts(&self) -> Result<f64> {
        let n = self.cdf.len();
        let spec = QuadSpec::new(1e-30, 1e-12, 40)?;
        let mut total = self.cdf[0] * dbm_to_watts(self.power_dbm[0])
            + (1.0 - self.cdf[n - 1]) * dbm_to_watts(self.power_dbm[n - 1]);
        for i in 1..n {
            let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
            if c1 > c0 {
                let (p0, p1) = (self.power_dbm[i - 1], self.power_dbm[i]);
                total += integrate(
                    |u| dbm_to_watts(p0 + (u - c0) / (c1 - c0) * (p1 - p0)),
                    c0,
                    c1,
                    &spec,
                )?;
            }
        }
        Ok(total)
    }

    /// Linear pieces with positive probability mass, for integrating over
    /// the table in probability space.
    pub fn segments(&self) -> Vec<TableSegment> {
        (1..self.cdf.len())
            .filter(|&i| self.cdf[i] > self.cdf[i - 1])
            .map(|i| TableSegment {
                cdf_lo: self.cdf[i - 1],
                cdf_hi: self.cdf[i],
                dbm_lo: self.power_dbm[i - 1],
                dbm_hi: self.power_dbm[i],
            })
            .collect()
    }

    /// Probability atoms outside the interpolated segments:
    /// `(dBm, mass)` for the first and last knots.
    pub fn end_atoms(&self) -> [(f64, f64); 2] {
        let n = self.cdf.len();
        [
            (self.power_dbm[0], self.cdf[0]),
            (self.power_dbm[n - 1], 1.0 - self.cdf[n - 1]),
        ]
    }

    /// A SYNTHETIC lognormal-shaped table (not measured data), `sigma_db`
    /// wide, shifted so its mean power is exactly `mean_dbm`.
    pub fn synthetic(mean_dbm: f64, sigma_db: f64, knots: usize) -> Result<Self> {
        if !(sigma_db > 0.0) || knots < 3 {
            return Err(Error::InvalidParameter(
                "synthetic table needs sigma_db > 0 and at least 3 knots".into(),
            ));
        }
        let normal = NormalDist::new(0.0, 1.0).expect("standard normal");
        let z_max = 4.0;
        let mut power = Vec::with_capacity(knots);
        let mut cdf = Vec::with_capacity(knots);
        for i in 0..knots {
            let z = -z_max + 2.0 * z_max * i as f64 / (knots - 1) as f64;
            power.push(mean_dbm + sigma_db * z);
            cdf.push(normal.cdf(z));
        }
        // Pin the ends so the table spans [0, 1] exactly.
        cdf[0] = 0.0;
        cdf[knots - 1] = 1.0;
        let table = Self::new(power, cdf)?;
        let shift = mean_dbm - watts_to_dbm(table.mean_watts()?);
        Self::new(
            table.power_dbm.iter().map(|p| p + shift).collect(),
            table.cdf,
        )
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["power_dbm", "cdf"])?;
        for (p, c) in self.power_dbm.iter().zip(&self.cdf) {
            w.serialize((p, c))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// One linear piece of an [`EmpiricalCdf`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSegment {
    pub cdf_lo: f64,
    pub cdf_hi: f64,
    pub dbm_lo: f64,
    pub dbm_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterferenceModel {
    Constant {
        watts: f64,
    },
    EmpiricalCdf {
        table: EmpiricalCdf,
    },
    /// `10^(N(mu_dbm, sigma_db)/10)` milliwatts.
    Lognormal {
        mu_dbm: f64,
        sigma_db: f64,
    },
}

impl Default for InterferenceModel {
    fn default() -> Self {
        InterferenceModel::Constant {
            watts: dbm_to_watts(DEFAULT_INTERFERENCE_DBM),
        }
    }
}

impl InterferenceModel {
    pub fn constant_dbm(dbm: f64) -> Self {
        InterferenceModel::Constant {
            watts: dbm_to_watts(dbm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InterferenceModel::Constant { watts } if !(watts >= 0.0 && watts.is_finite()) => Err(
                Error::InvalidParameter(format!("constant interference must be >= 0, got {watts}")),
            ),
            InterferenceModel::Lognormal { mu_dbm, sigma_db }
                if !(mu_dbm.is_finite() && sigma_db >= 0.0 && sigma_db.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "lognormal interference needs finite mu and sigma >= 0, got ({mu_dbm}, {sigma_db})"
                )))
            }
            _ => Ok(()),
        }
    }

    /// One draw in watts.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InterferenceModel::Constant { watts } => *watts,
            InterferenceModel::EmpiricalCdf { table } => {
                dbm_to_watts(table.quantile_dbm(rng.random::<f64>()))
            }
            InterferenceModel::Lognormal { mu_dbm, sigma_db } => {
                if *sigma_db == 0.0 {
                    return dbm_to_watts(*mu_dbm);
                }
                let n = Normal::new(*mu_dbm, *sigma_db).expect("validated sigma");
                dbm_to_watts(n.sample(rng))
            }
        }
    }

    pub fn mean_watts(&self) -> Result<f64> {
        match self {
            InterferenceModel::Constant { watts } => Ok(*watts),
            InterferenceModel::EmpiricalCdf { table } => table.mean_watts(),
            InterferenceModel::Lognormal { mu_dbm, sigma_db } => {
                let k = LN_10 / 10.0;
                Ok(1e-3 * (mu_dbm * k + 0.5 * sigma_db * sigma_db * k * k).exp())
            }
        }
    }
}

impl fmt::Display for InterferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterferenceModel::Constant { watts } => {
                write!(f, "const:{} dBm", watts_to_dbm(*watts))
            }
            InterferenceModel::EmpiricalCdf { table } => {
                write!(f, "table:{} knots", table.power_dbm.len())
            }
            InterferenceModel::Lognormal { mu_dbm, sigma_db } => {
                write!(f, "lognormal:{mu_dbm},{sigma_db}")
            }
        }
    }
}
