//! Gateway point processes: Poisson (PPP), Matérn hard-core type II (MHC)
//! and the triangular lattice (TRI). Samplers, analytic contact-distance
//! laws, and nearest-gateway queries.

mod contact;
mod kdtree;
mod sampling;

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contact::{
    contact_cdf, contact_pdf, contact_quantile, contact_table, lens_area, mhc_exponent,
    tri_circumradius, tri_inradius, write_contact_csv, ContactRow,
};
pub use kdtree::{nearest_brute_force, nearest_distances, KdTree};
pub use sampling::{lattice_side, sample_mhc, sample_ppp, sample_process, sample_tri};

/// Minimum `lambda_b * pi * delta^2` accepted for the MHC parent process.
pub const MIN_PARENT_LOAD: f64 = 14.0;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Ppp,
    Mhc,
    Tri,
}

impl ProcessKind {
    pub const ALL: [ProcessKind; 3] = [ProcessKind::Ppp, ProcessKind::Mhc, ProcessKind::Tri];

    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::Ppp => "ppp",
            ProcessKind::Mhc => "mhc",
            ProcessKind::Tri => "tri",
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ppp" => Ok(ProcessKind::Ppp),
            "mhc" => Ok(ProcessKind::Mhc),
            "tri" => Ok(ProcessKind::Tri),
            other => Err(Error::InvalidParameter(format!(
                "unknown process '{other}'"
            ))),
        }
    }
}

/// A gateway point process with its intensity in points per m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProcessSpec {
    Ppp {
        intensity: f64,
    },
    /// Type-II hard-core process in the dense-parent limit, so that the
    /// retained intensity is `1 / (pi * hardcore_m^2)`.
    Mhc {
        hardcore_m: f64,
        parent_intensity: f64,
    },
    Tri {
        intensity: f64,
    },
}

impl ProcessSpec {
    pub fn ppp(intensity: f64) -> Result<Self> {
        let s = ProcessSpec::Ppp { intensity };
        s.validate()?;
        Ok(s)
    }

    pub fn tri(intensity: f64) -> Result<Self> {
        let s = ProcessSpec::Tri { intensity };
        s.validate()?;
        Ok(s)
    }

    /// MHC with retained intensity `intensity` and the minimum parent load.
    pub fn mhc(intensity: f64) -> Result<Self> {
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "intensity must be > 0, got {intensity}"
            )));
        }
        let hardcore_m = 1.0 / (PI * intensity).sqrt();
        Self::mhc_with_hardcore(hardcore_m, MIN_PARENT_LOAD * intensity)
    }

    pub fn mhc_with_hardcore(hardcore_m: f64, parent_intensity: f64) -> Result<Self> {
        let s = ProcessSpec::Mhc {
            hardcore_m,
            parent_intensity,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn new(kind: ProcessKind, intensity: f64) -> Result<Self> {
        match kind {
            ProcessKind::Ppp => Self::ppp(intensity),
            ProcessKind::Mhc => Self::mhc(intensity),
            ProcessKind::Tri => Self::tri(intensity),
        }
    }

    pub fn kind(&self) -> ProcessKind {
        match self {
            ProcessSpec::Ppp { .. } => ProcessKind::Ppp,
            ProcessSpec::Mhc { .. } => ProcessKind::Mhc,
            ProcessSpec::Tri { .. } => ProcessKind::Tri,
        }
    }

    pub fn intensity(&self) -> f64 {
        match *self {
            ProcessSpec::Ppp { intensity } | ProcessSpec::Tri { intensity } => intensity,
            ProcessSpec::Mhc { hardcore_m, .. } => 1.0 / (PI * hardcore_m * hardcore_m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessSpec::Ppp { intensity } | ProcessSpec::Tri { intensity } => {
                if !(intensity > 0.0 && intensity.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "intensity must be > 0, got {intensity}"
                    )));
                }
            }
            ProcessSpec::Mhc {
                hardcore_m,
                parent_intensity,
            } => {
                if !(hardcore_m > 0.0 && hardcore_m.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "hard-core distance must be > 0, got {hardcore_m}"
                    )));
                }
                let load = parent_intensity * PI * hardcore_m * hardcore_m;
                if !(load >= MIN_PARENT_LOAD * (1.0 - 1e-12)) || !load.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "MHC parent load lambda_b*pi*delta^2 must be >= {MIN_PARENT_LOAD}, got {load}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let w = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        if !(x_max > x_min && y_max > y_min) || !w.area().is_finite() {
            return Err(Error::InvalidParameter(format!(
                "window must have positive finite area: {w:?}"
            )));
        }
        Ok(w)
    }

    /// Square `[0, side]^2`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new(0.0, side, 0.0, side)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    /// Grown by `margin` on every side.
    pub fn expanded(&self, margin: f64) -> Self {
        Self {
            x_min: self.x_min - margin,
            x_max: self.x_max + margin,
            y_min: self.y_min - margin,
            y_max: self.y_max + margin,
        }
    }

    /// Shrunk by `margin` on every side; fails if nothing is left.
    pub fn inset(&self, margin: f64) -> Result<Self> {
        Self::new(
            self.x_min + margin,
            self.x_max - margin,
            self.y_min + margin,
            self.y_max - margin,
        )
    }
}

/// A realization of a gateway process.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub spec: Option<ProcessSpec>,
    pub seed: Option<u64>,
}

impl PointSet {
    pub fn from_points(points: Vec<Point>) -> Self {
        Self {
            points,
            spec: None,
            seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `x_m,y_m` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_m", "y_m"])?;
        for p in &self.points {
            w.serialize((p[0], p[1]))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(crate::energy::create(path)?)
    }
}
