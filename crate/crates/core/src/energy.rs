//! Link-level energy model: Shannon-bounded airtime, SINR, electric energy
//! per message, and the closed-form minimum-energy operating point.

use std::f64::consts::{E, LN_2};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::lambert_w0;
use crate::units::{db_to_linear, dbm_to_watts};

/// Link-budget and hardware constants, in linear SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    /// Message length in bits, protocol overhead included.
    pub n_bits: f64,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    /// Distance-independent path gain, in `(0, 1]`.
    pub pathloss_const: f64,
    pub pathloss_exp: f64,
    /// Electric watts drawn per radiated RF watt.
    pub conv_factor: f64,
    /// Electronics power drawn while transmitting, independent of RF level.
    pub overhead_w: f64,
}

impl Default for RadioConfig {
    /// 144-bit messages over 125 kHz, -117 dBm noise, -26 dB path-loss
    /// constant, exponent 3.68, conversion factor 4 and 210 mW overhead.
    fn default() -> Self {
        Self {
            n_bits: 144.0,
            bandwidth_hz: 125e3,
            noise_w: dbm_to_watts(-117.0),
            pathloss_const: db_to_linear(-26.0),
            pathloss_exp: 3.68,
            conv_factor: 4.0,
            overhead_w: 0.21,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_bits", self.n_bits),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_w", self.noise_w),
            ("conv_factor", self.conv_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if !(self.pathloss_const > 0.0 && self.pathloss_const <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pathloss_const must lie in (0, 1], got {}",
                self.pathloss_const
            )));
        }
        if !(self.pathloss_exp > 2.0 && self.pathloss_exp.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pathloss_exp must be > 2, got {}",
                self.pathloss_exp
            )));
        }
        // Zero overhead is the minimum-energy-per-bit limit and is allowed.
        if !(self.overhead_w >= 0.0 && self.overhead_w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "overhead_w must be >= 0, got {}",
                self.overhead_w
            )));
        }
        Ok(())
    }

    /// Shortest time-on-air for one message at the given SINR.
    pub fn airtime(&self, sinr: f64) -> Result<f64> {
        if !(sinr > 0.0) {
            return Err(Error::Domain(format!(
                "airtime requires sinr > 0, got {sinr}"
            )));
        }
        Ok(self.n_bits / (self.bandwidth_hz * sinr.ln_1p() / LN_2))
    }

    /// Total gain `L_o * h * r^-alpha`.
    pub fn path_gain(&self, link: &LinkState) -> f64 {
        self.pathloss_const * link.fading * link.distance_m.powf(-self.pathloss_exp)
    }

    pub fn sinr_at(&self, link: &LinkState, tx_power_w: f64) -> f64 {
        self.path_gain(link) * tx_power_w / (link.interference_w + self.noise_w)
    }

    /// Transmit power needed to reach `sinr` on `link`.
    pub fn tx_power_for(&self, link: &LinkState, sinr: f64) -> f64 {
        sinr * (link.interference_w + self.noise_w) / self.path_gain(link)
    }

    pub fn electric_power(&self, tx_power_w: f64) -> f64 {
        self.conv_factor * tx_power_w + self.overhead_w
    }

    /// Electric energy of one message sent at exactly `sinr`.
    pub fn energy(&self, link: &LinkState, sinr: f64) -> Result<f64> {
        let t = self.airtime(sinr)?;
        let gain = self.path_gain(link);
        let power =
            self.conv_factor / gain * (link.interference_w + self.noise_w) * sinr + self.overhead_w;
        Ok(power * t)
    }

    /// `A_1 = eta N_m (P_I + P_N) / (B L)`.
    pub fn a1(&self, link: &LinkState) -> f64 {
        self.conv_factor * self.n_bits * (link.interference_w + self.noise_w)
            / (self.bandwidth_hz * self.path_gain(link))
    }

    /// `A_2 = N_m P_o / B`.
    pub fn a2(&self) -> f64 {
        self.n_bits * self.overhead_w / self.bandwidth_hz
    }

    /// Minimum-energy operating point of the link.
    ///
    /// With zero overhead the optimum is the infimum at `sinr -> 0`; the
    /// returned point then carries `attained == false`, zero power and SINR,
    /// infinite airtime and the limiting energy `A_1 ln 2`.
    pub fn optimal_operating_point(&self, link: &LinkState) -> Result<OperatingPoint> {
        if link.fading == 0.0 {
            return Err(Error::UnusableLink);
        }
        let a1 = self.a1(link);
        let ratio = self.overhead_w * self.path_gain(link)
            / (self.conv_factor * (link.interference_w + self.noise_w));

        if self.overhead_w == 0.0 {
            return Ok(OperatingPoint {
                tx_power_w: 0.0,
                sinr: 0.0,
                energy_j: a1 * LN_2,
                airtime_s: f64::INFINITY,
                attained: false,
            });
        }

        let w = lambert_w0((ratio - 1.0) / E)?;
        let mut sinr = (1.0 + w).exp_m1();
        if !(sinr > 0.0) || ratio < 1e-14 {
            sinr = small_ratio_optimum(ratio);
        }
        let tx_power_w = self.tx_power_for(link, sinr);
        let airtime_s = self.airtime(sinr)?;
        Ok(OperatingPoint {
            tx_power_w,
            sinr,
            energy_j: self.electric_power(tx_power_w) * airtime_s,
            airtime_s,
            attained: true,
        })
    }

    /// Energy at a mandated target SINR, with the time-on-air either given or
    /// set to its Shannon minimum at that SINR.
    ///
    /// Targets below the unconstrained optimum are evaluated as is.
    pub fn restricted_energy(
        &self,
        link: &LinkState,
        target_sinr: f64,
        airtime_s: Option<f64>,
    ) -> Result<f64> {
        let minimum = self.airtime(target_sinr)?;
        let t = match airtime_s {
            Some(t) if t < minimum * (1.0 - 1e-12) => {
                return Err(Error::AirtimeViolation { given: t, minimum })
            }
            Some(t) => t,
            None => minimum,
        };
        let power = self.conv_factor / self.path_gain(link)
            * (link.interference_w + self.noise_w)
            * target_sinr
            + self.overhead_w;
        Ok(power * t)
    }

    /// Evaluates the energy over a distance x transmit-power grid together
    /// with the optimum curve for every distance.
    pub fn energy_contour(
        &self,
        r_grid: &[f64],
        pt_grid: &[f64],
        fading: f64,
        interference_w: f64,
    ) -> Result<EnergyContour> {
        if r_grid.is_empty() || pt_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "contour grids must be non-empty".into(),
            ));
        }
        if r_grid.iter().chain(pt_grid).any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidParameter(
                "contour grids must be positive".into(),
            ));
        }
        let rows: Vec<(Vec<f64>, OptimumSample)> = r_grid
            .par_iter()
            .map(|&r| {
                let link = LinkState::new(r, fading, interference_w)?;
                let row = pt_grid
                    .iter()
                    .map(|&pt| self.energy(&link, self.sinr_at(&link, pt)))
                    .collect::<Result<Vec<_>>>()?;
                let op = self.optimal_operating_point(&link)?;
                Ok((
                    row,
                    OptimumSample {
                        r_m: r,
                        pt_opt_w: op.tx_power_w,
                        energy_opt_j: op.energy_j,
                    },
                ))
            })
            .collect::<Result<_>>()?;
        let (energy_j, optimum) = rows.into_iter().unzip();
        Ok(EnergyContour {
            r_grid: r_grid.to_vec(),
            pt_grid: pt_grid.to_vec(),
            energy_j,
            optimum,
        })
    }
}

/// Solves `(1 + g) ln(1 + g) - g = ratio` for tiny ratios, where the Lambert
/// argument rounds onto the branch point.
fn small_ratio_optimum(ratio: f64) -> f64 {
    let mut g = (2.0 * ratio).sqrt() + ratio / 3.0;
    for _ in 0..4 {
        let h = (1.0 + g) * g.ln_1p() - g - ratio;
        let dh = g.ln_1p();
        if dh == 0.0 {
            break;
        }
        g -= h / dh;
    }
    g
}

/// One channel realization between a device and its gateway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub distance_m: f64,
    /// Power fading factor `h`.
    pub fading: f64,
    pub interference_w: f64,
}

impl LinkState {
    pub fn new(distance_m: f64, fading: f64, interference_w: f64) -> Result<Self> {
        if !(distance_m > 0.0 && distance_m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "distance must be > 0, got {distance_m}"
            )));
        }
        if !(fading >= 0.0 && fading.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fading must be >= 0, got {fading}"
            )));
        }
        if !(interference_w >= 0.0 && interference_w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "interference must be >= 0, got {interference_w}"
            )));
        }
        Ok(Self {
            distance_m,
            fading,
            interference_w,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub tx_power_w: f64,
    pub sinr: f64,
    pub energy_j: f64,
    pub airtime_s: f64,
    /// False when the optimum is only an infimum (zero overhead power).
    pub attained: bool,
}

/// Least-squares line through (RF power, electric power) measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub conv_factor: f64,
    pub overhead_w: f64,
    /// Root-mean-square residual, in watts.
    pub residual_w: f64,
}

/// Fits `electric = conv_factor * rf + overhead_w` by ordinary least squares.
pub fn fit_power_model(samples: &[(f64, f64)]) -> Result<PowerFit> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().all(|s| s.0 == samples[0].0) {
        return Err(Error::Degenerate("all RF power values are equal".into()));
    }
    let n = samples.len() as f64;
    let mean_x = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in samples {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all RF power values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = samples
        .iter()
        .map(|&(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    Ok(PowerFit {
        conv_factor: slope,
        overhead_w: intercept,
        residual_w: (sse / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumSample {
    pub r_m: f64,
    pub pt_opt_w: f64,
    pub energy_opt_j: f64,
}

/// Energy over a (distance, transmit power) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyContour {
    pub r_grid: Vec<f64>,
    pub pt_grid: Vec<f64>,
    /// `energy_j[i][j]` is the energy at `r_grid[i]`, `pt_grid[j]`.
    pub energy_j: Vec<Vec<f64>>,
    pub optimum: Vec<OptimumSample>,
}

impl EnergyContour {
    /// Writes `r_m,pt_w,energy_j`, one row per cell.
    pub fn write_grid_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r_m", "pt_w", "energy_j"])?;
        for (r, row) in self.r_grid.iter().zip(&self.energy_j) {
            for (pt, e) in self.pt_grid.iter().zip(row) {
                w.serialize((r, pt, e))?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Writes `r_m,pt_opt_w,energy_opt_j`.
    pub fn write_optimum_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.optimum {
            w.serialize(s)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn save(&self, grid_path: &Path, optimum_path: &Path) -> Result<()> {
        self.write_grid_csv(create(grid_path)?)?;
        self.write_optimum_csv(create(optimum_path)?)
    }
}

/// Reads `tx_power_w,electric_power_w` measurements.
pub fn load_power_samples(path: &Path) -> Result<Vec<(f64, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        tx_power_w: f64,
        electric_power_w: f64,
    }
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line()) as usize;
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        out.push((row.tx_power_w, row.electric_power_w));
    }
    Ok(out)
}

pub(crate) fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
