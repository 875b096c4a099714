use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use iot_energy::ProcessKind;

#[derive(Debug, Parser)]
#[command(
    name = "iot-energy",
    version,
    about = "Minimum and expected energy per message of IoT uplinks",
    propagate_version = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(flatten)]
    pub radio: Radio,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Directory receiving CSV outputs and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Deep-fade cutoff: fading draws below it are outages.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub h_min: f64,

    /// Interference law: const:<dBm>, table:<path> or lognormal:<mu dBm>,<sigma dB>.
    #[arg(long, global = true, default_value = "const:-95.4")]
    pub interference: String,

    /// Fading law: exp (Rayleigh power fading) or fixed:<h>.
    #[arg(long, global = true, default_value = "exp")]
    pub fading: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Radio {
    /// Message length in bits.
    #[arg(long, global = true, default_value_t = 144.0)]
    pub n_bits: f64,

    #[arg(
        long,
        global = true,
        default_value_t = 125e3,
        allow_negative_numbers = true
    )]
    pub bandwidth_hz: f64,

    #[arg(long, global = true, default_value_t = -117.0, allow_negative_numbers = true)]
    pub noise_dbm: f64,

    /// Distance-independent path-loss constant.
    #[arg(long, global = true, default_value_t = -26.0, allow_negative_numbers = true)]
    pub pathloss_db: f64,

    #[arg(long, global = true, default_value_t = 3.68)]
    pub pathloss_exp: f64,

    /// Electric watts per radiated watt.
    #[arg(long, global = true, default_value_t = 4.0)]
    pub conv_factor: f64,

    /// Electronics power while transmitting, in watts.
    #[arg(
        long,
        global = true,
        default_value_t = 0.21,
        allow_negative_numbers = true
    )]
    pub overhead_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Ppp,
    Mhc,
    Tri,
}

impl From<Process> for ProcessKind {
    fn from(p: Process) -> Self {
        match p {
            Process::Ppp => ProcessKind::Ppp,
            Process::Mhc => ProcessKind::Mhc,
            Process::Tri => ProcessKind::Tri,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Mc,
    Quad,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum-energy operating point of one link.
    Optimal(OptimalArgs),
    /// Energy over a distance x transmit-power grid, with the optimum curve.
    Contour(ContourArgs),
    /// Contact-distance CDF and PDF tables.
    Contact(ContactArgs),
    /// Expected minimum energy versus gateway intensity.
    SweepIntensity(SweepIntensityArgs),
    /// Restricted-QoS expected energy versus target SINR.
    SweepSinr(SweepSinrArgs),
    /// Voronoi intensities and device energies for a site list.
    Deployment(DeploymentArgs),
    /// Fits the linear electric-power model to measurements.
    FitPower(FitPowerArgs),
    /// Runs the built-in oracle checks.
    Validate,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimalArgs {
    #[arg(long, default_value_t = 1000.0)]
    pub distance_m: f64,

    /// Fading factor of the link.
    #[arg(long, default_value_t = 1.0)]
    pub gain: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ContourArgs {
    #[arg(long, default_value_t = 10.0)]
    pub r_min_m: f64,
    #[arg(long, default_value_t = 5000.0)]
    pub r_max_m: f64,
    #[arg(long, default_value_t = 100)]
    pub n_r: usize,
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    pub pt_min_dbm: f64,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub pt_max_dbm: f64,
    #[arg(long, default_value_t = 100)]
    pub n_pt: usize,
    /// Fading factor of the link.
    #[arg(long, default_value_t = 1.0)]
    pub gain: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ContactArgs {
    /// Gateway intensity per km².
    #[arg(long, default_value_t = 1.0)]
    pub intensity_km2: f64,
    #[arg(long, value_delimiter = ',', default_value = "ppp,mhc,tri")]
    pub processes: Vec<Process>,
    /// Largest tabulated distance; defaults to 2.5 / sqrt(intensity).
    #[arg(long)]
    pub r_max_m: Option<f64>,
    #[arg(long, default_value_t = 501)]
    pub n: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepIntensityArgs {
    #[arg(long, default_value_t = 0.1)]
    pub lambda_min_km2: f64,
    #[arg(long, default_value_t = 10.0)]
    pub lambda_max_km2: f64,
    #[arg(long, default_value_t = 21)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "ppp,mhc,tri")]
    pub processes: Vec<Process>,
    #[arg(long, value_enum, default_value_t = EstimatorKind::Mc)]
    pub method: EstimatorKind,
    /// Monte-Carlo samples per cell.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Confidence level for reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepSinrArgs {
    #[arg(long, default_value_t = 1.0)]
    pub intensity_km2: f64,
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    pub gamma_min_db: f64,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    pub gamma_max_db: f64,
    #[arg(long, default_value_t = 41)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "ppp,mhc,tri")]
    pub processes: Vec<Process>,
    /// Fixed time-on-air; defaults to the Shannon minimum at each target.
    #[arg(long)]
    pub airtime_s: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DeploymentArgs {
    /// Site list with header site_id,lat,lon.
    #[arg(
        long,
        conflicts_with = "synthetic_jitter",
        required_unless_present = "synthetic_jitter"
    )]
    pub sites: Option<PathBuf>,
    /// Use a jittered triangular lattice instead of a site file; the value is
    /// the jitter in lattice sides.
    #[arg(long)]
    pub synthetic_jitter: Option<f64>,
    /// Lattice intensity per km² for synthetic sites.
    #[arg(long, default_value_t = 1.0)]
    pub synthetic_intensity_km2: f64,
    /// Side of the synthetic square region, km.
    #[arg(long, default_value_t = 25.0)]
    pub synthetic_side_km: f64,
    #[arg(long, default_value_t = 100.0)]
    pub device_intensity_km2: f64,
    #[arg(long, default_value_t = 12)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitPowerArgs {
    /// Measurements with header tx_power_w,electric_power_w.
    #[arg(long)]
    pub input: PathBuf,
}
