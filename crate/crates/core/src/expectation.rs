//! Network-level expected energy: Monte-Carlo and quadrature averages of the
//! per-link minimum energy over contact distance, fading and interference,
//! contact-distance moments, and the restricted-QoS expected energy.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{FadingModel, InterferenceModel, DEFAULT_H_MIN};
use crate::energy::{create, LinkState, RadioConfig};
use crate::error::{Error, Result};
use crate::grid::{lin_space, log_space};
use crate::point_process::{
    contact_pdf, contact_quantile, sample_mhc, sample_tri, tri_circumradius, tri_inradius, KdTree,
    ProcessKind, ProcessSpec, Window,
};
use crate::special::{gamma_fn, gauss_2f1, integrate, integrate_semi_infinite, QuadSpec};
use crate::stats::{normal_quantile_two_sided, stream_rng, RunningStats};
use crate::units::{db_to_linear, dbm_to_watts};

/// Samples per independent random stream.
const CHUNK: u64 = 4096;

/// Devices placed per simulated gateway pattern.
const DEVICES_PER_PATTERN: usize = 1024;

/// Side of the simulation window in units of `1/sqrt(lambda)`.
const PATTERN_SIDE: f64 = 40.0;

/// Contact loads `lambda pi r^2` beyond which the densities are negligible.
const CAP_LOAD: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub n_samples: u64,
    pub seed: u64,
    /// Confidence level for reported half-widths, e.g. 0.95.
    pub confidence: f64,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 1,
            confidence: 0.95,
        }
    }
}

impl MonteCarloSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    Quadrature,
    ClosedForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MonteCarlo => "monte_carlo",
            Method::Quadrature => "quadrature",
            Method::ClosedForm => "closed_form",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub mean_j: f64,
    /// Standard error of the mean. Zero for deterministic methods, `None`
    /// for a single Monte-Carlo draw.
    pub stderr_j: Option<f64>,
    pub n: u64,
    pub method: Method,
}

impl ExpectationResult {
    /// Half-width of the two-sided normal interval at `confidence`.
    pub fn half_width(&self, confidence: f64) -> Option<f64> {
        self.stderr_j
            .map(|s| s * normal_quantile_two_sided(confidence))
    }
}

/// Fading law, interference law and the deep-fade cutoff shared by every
/// estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub fading: FadingModel,
    pub interference: InterferenceModel,
    /// Fading draws below `h_min` are outages and excluded.
    pub h_min: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            fading: FadingModel::ExponentialUnit,
            interference: InterferenceModel::default(),
            h_min: DEFAULT_H_MIN,
        }
    }
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        self.fading.validate()?;
        self.interference.validate()?;
        match self.fading {
            FadingModel::ExponentialUnit if !(self.h_min > 0.0 && self.h_min.is_finite()) => {
                Err(Error::InvalidParameter(format!(
                    "exponential fading needs h_min > 0, got {}",
                    self.h_min
                )))
            }
            FadingModel::Deterministic { value: 0.0 } => Err(Error::UnusableLink),
            _ => Ok(()),
        }
    }
}

fn min_energy(cfg: &RadioConfig, r: f64, h: f64, interference_w: f64) -> Result<f64> {
    let link = LinkState {
        distance_m: r,
        fading: h,
        interference_w,
    };
    Ok(cfg.optimal_operating_point(&link)?.energy_j)
}

/// Contact distances of devices placed uniformly in the interior of
/// simulated gateway patterns.
///
/// Patterns are drawn at unit scale and rescaled, so the cost does not
/// depend on the intensity. Devices are kept `3 / sqrt(pi lambda)` away from
/// the window edge.
pub fn simulate_contact_distances(spec: &ProcessSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let scale = 1.0 / spec.intensity().sqrt();
    let unit = match *spec {
        ProcessSpec::Ppp { .. } => ProcessSpec::ppp(1.0)?,
        ProcessSpec::Tri { .. } => ProcessSpec::tri(1.0)?,
        ProcessSpec::Mhc {
            hardcore_m,
            parent_intensity,
        } => ProcessSpec::mhc_with_hardcore(hardcore_m / scale, parent_intensity * scale * scale)?,
    };
    let window = Window::square(PATTERN_SIDE)?;
    let core = window.inset(3.0 / PI.sqrt())?;
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let pattern_seed: u64 = rng.random();
        let gateways = match unit {
            ProcessSpec::Ppp { intensity } => {
                crate::point_process::sample_ppp(intensity, &window, pattern_seed)?
            }
            ProcessSpec::Mhc { .. } => sample_mhc(&unit, &window, pattern_seed)?,
            ProcessSpec::Tri { intensity } => sample_tri(intensity, &window, None, pattern_seed)?,
        };
        if gateways.is_empty() {
            continue;
        }
        let tree = KdTree::new(&gateways.points);
        for _ in 0..DEVICES_PER_PATTERN.min(n - out.len()) {
            let q = [
                core.x_min + rng.random::<f64>() * core.width(),
                core.y_min + rng.random::<f64>() * core.height(),
            ];
            let (_, d) = tree.nearest(q).expect("non-empty tree");
            out.push(d * scale);
        }
    }
    Ok(out)
}

fn draw_contact<R: Rng>(spec: &ProcessSpec, rng: &mut R) -> Result<f64> {
    loop {
        let r = contact_quantile(spec, rng.random::<f64>())?;
        if r > 0.0 {
            return Ok(r);
        }
    }
}

/// Monte-Carlo estimate of the expected minimum energy.
///
/// The sample budget is split into fixed-size chunks, each with its own
/// seeded stream; chunk statistics are merged in order, so the result does not
/// depend on the worker count. PPP and TRI distances come from the inverse
/// contact CDF, MHC distances from simulated patterns.
pub fn expected_min_energy_mc(
    cfg: &RadioConfig,
    spec: &ProcessSpec,
    channel: &ChannelSpec,
    mc: &MonteCarloSpec,
) -> Result<ExpectationResult> {
    cfg.validate()?;
    spec.validate()?;
    channel.validate()?;
    mc.validate()?;
    let n_chunks = mc.n_samples.div_ceil(CHUNK);
    let parts = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let len = CHUNK.min(mc.n_samples - k * CHUNK) as usize;
            let mut rng = stream_rng(mc.seed, k + 1);
            let distances = match spec {
                ProcessSpec::Mhc { .. } => simulate_contact_distances(spec, len, rng.random())?,
                _ => (0..len)
                    .map(|_| draw_contact(spec, &mut rng))
                    .collect::<Result<Vec<_>>>()?,
            };
            let mut stats = RunningStats::new();
            for r in distances {
                let h = loop {
                    let h = channel.fading.sample_truncated(channel.h_min, &mut rng);
                    if h > 0.0 {
                        break h;
                    }
                };
                let p_i = channel.interference.sample(&mut rng);
                stats.push(min_energy(cfg, r, h, p_i)?);
            }
            Ok(stats)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = parts
        .iter()
        .fold(RunningStats::new(), |acc, s| acc.merge(s));
    Ok(ExpectationResult {
        mean_j: total.mean,
        stderr_j: total.stderr(),
        n: total.n,
        method: Method::MonteCarlo,
    })
}

/// Carries the first error out of integrands, which must return plain `f64`.
struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    fn new() -> Self {
        Self(RefCell::new(None))
    }

    fn guard(&self, v: Result<f64>) -> f64 {
        v.unwrap_or_else(|e| {
            self.0.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    }

    fn finish(&self, v: Result<f64>) -> Result<f64> {
        match self.0.borrow_mut().take() {
            Some(e) => Err(e),
            None => v,
        }
    }
}

/// Integrates `f(P_I)` against the interference law.
fn over_interference<F: Fn(f64) -> f64>(
    model: &InterferenceModel,
    f: F,
    quad: &QuadSpec,
) -> Result<f64> {
    match model {
        InterferenceModel::Constant { watts } => Ok(f(*watts)),
        InterferenceModel::EmpiricalCdf { table } => {
            let mut total: f64 = table
                .end_atoms()
                .iter()
                .filter(|&&(_, mass)| mass > 0.0)
                .map(|&(dbm, mass)| mass * f(dbm_to_watts(dbm)))
                .sum();
            for s in table.segments() {
                let g = |u: f64| {
                    let t = (u - s.cdf_lo) / (s.cdf_hi - s.cdf_lo);
                    f(dbm_to_watts(s.dbm_lo + t * (s.dbm_hi - s.dbm_lo)))
                };
                total += integrate(g, s.cdf_lo, s.cdf_hi, quad)?;
            }
            Ok(total)
        }
        InterferenceModel::Lognormal { mu_dbm, sigma_db } => {
            if *sigma_db == 0.0 {
                return Ok(f(dbm_to_watts(*mu_dbm)));
            }
            let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
            integrate(
                |z| phi(z) * f(dbm_to_watts(mu_dbm + sigma_db * z)),
                -10.0,
                10.0,
                quad,
            )
        }
    }
}

/// Integrates `f(h)` against the truncated fading law.
fn over_fading<F: Fn(f64) -> f64>(channel: &ChannelSpec, f: F, quad: &QuadSpec) -> Result<f64> {
    match channel.fading {
        FadingModel::Deterministic { value } => Ok(f(value)),
        FadingModel::ExponentialUnit => {
            let h_min = channel.h_min;
            integrate_semi_infinite(|x| (-x).exp() * f(h_min + x), 0.0, quad)
        }
    }
}

/// Integrates `f(r) * pdf(r)` over the contact law, split at the kinks of
/// the density.
fn over_contact<F: Fn(f64) -> f64>(spec: &ProcessSpec, f: F, quad: &QuadSpec) -> Result<f64> {
    let lambda = spec.intensity();
    let slot = ErrorSlot::new();
    let g = |r: f64| f(r) * slot.guard(contact_pdf(spec, r));
    let r_cap = (CAP_LOAD / (PI * lambda)).sqrt();
    let v = match spec {
        ProcessSpec::Ppp { .. } => integrate(g, 0.0, r_cap, quad),
        ProcessSpec::Tri { .. } => {
            let a = tri_inradius(lambda);
            integrate(g, 0.0, a, quad)
                .and_then(|x| Ok(x + integrate(g, a, tri_circumradius(lambda), quad)?))
        }
        ProcessSpec::Mhc { .. } => {
            let kink = 0.5 / (PI * lambda).sqrt();
            integrate(g, 0.0, kink, quad).and_then(|x| Ok(x + integrate(g, kink, r_cap, quad)?))
        }
    };
    slot.finish(v)
}

/// Deterministic expected minimum energy by nested adaptive quadrature over
/// contact distance, fading and interference. Degenerate dimensions
/// (deterministic fading, constant interference) are skipped.
pub fn expected_min_energy_quad(
    cfg: &RadioConfig,
    spec: &ProcessSpec,
    channel: &ChannelSpec,
    quad: &QuadSpec,
) -> Result<ExpectationResult> {
    cfg.validate()?;
    spec.validate()?;
    channel.validate()?;
    quad.validate()?;
    let inner = quad.scaled(0.1);
    let slot = ErrorSlot::new();
    let at_r = |r: f64| {
        slot.guard(over_fading(
            channel,
            |h| {
                slot.guard(over_interference(
                    &channel.interference,
                    |p_i| slot.guard(min_energy(cfg, r, h, p_i)),
                    &inner,
                ))
            },
            &inner,
        ))
    };
    let v = slot.finish(over_contact(spec, at_r, quad))?;
    Ok(ExpectationResult {
        mean_j: v,
        stderr_j: Some(0.0),
        n: 0,
        method: Method::Quadrature,
    })
}

/// `E[r^alpha]` of the contact distance.
///
/// PPP and TRI use closed forms; MHC is integrated numerically.
pub fn moment_r_alpha(spec: &ProcessSpec, alpha: f64) -> Result<f64> {
    spec.validate()?;
    let lambda = spec.intensity();
    match spec {
        ProcessSpec::Ppp { .. } => {
            if !(alpha > -2.0 && alpha.is_finite()) {
                return Err(Error::Domain(format!(
                    "PPP moment needs alpha > -2, got {alpha}"
                )));
            }
            Ok(gamma_fn((alpha + 2.0) / 2.0)? / (PI * lambda).powf(alpha / 2.0))
        }
        _ if !(alpha > 0.0 && alpha.is_finite()) => Err(Error::Domain(format!(
            "moment needs alpha > 0, got {alpha}"
        ))),
        ProcessSpec::Tri { .. } => tri_moment(lambda, alpha),
        ProcessSpec::Mhc { .. } => moment_r_alpha_quad(spec, alpha, &QuadSpec::default()),
    }
}

/// `E[r^alpha]` by direct quadrature of `r^alpha` against the contact density.
pub fn moment_r_alpha_quad(spec: &ProcessSpec, alpha: f64, quad: &QuadSpec) -> Result<f64> {
    spec.validate()?;
    if !(alpha > -2.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!(
            "moment needs alpha > -2, got {alpha}"
        )));
    }
    over_contact(spec, |r| r.powf(alpha), quad)
}

fn recip_gamma(x: f64) -> Result<f64> {
    match gamma_fn(x) {
        Ok(g) => Ok(1.0 / g),
        Err(Error::Pole(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Gamma-ratio plus hypergeometric closed form; singular at odd `alpha`.
fn tri_moment_raw(lambda: f64, alpha: f64) -> Result<f64> {
    let s3 = 3f64.sqrt();
    let lead = 2f64.powf(alpha / 2.0) / (s3 * lambda).powf(alpha / 2.0) / (2.0 + alpha);
    let gamma_term = (3.0 * PI).sqrt() / 2f64.powf(alpha)
        * gamma_fn(-(alpha + 1.0) / 2.0)?
        * recip_gamma(-alpha / 2.0)?;
    let hyper = gauss_2f1(0.5, -(alpha + 1.0) / 2.0, (1.0 - alpha) / 2.0, 0.75)?;
    let hyper_term = s3.powf(-alpha) * 4.0 / (1.0 + alpha) * hyper;
    Ok(lead * (gamma_term + hyper_term))
}

/// Half-width of the window around odd `alpha` where the two poles of the
/// closed form are bridged by interpolation.
const ODD_WINDOW: f64 = 0.01;

fn tri_moment(lambda: f64, alpha: f64) -> Result<f64> {
    let odd = 2.0 * ((alpha - 1.0) / 2.0).round() + 1.0;
    if (alpha - odd).abs() >= ODD_WINDOW {
        return tri_moment_raw(lambda, alpha);
    }
    // The moment is analytic in alpha: interpolate through nodes placed
    // symmetrically away from the cancelling poles.
    let offsets = [
        -0.07, -0.06, -0.05, -0.04, -0.03, -0.02, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07,
    ];
    let xs: Vec<f64> = offsets.iter().map(|d| odd + d).collect();
    let ys = xs
        .iter()
        .map(|&a| tri_moment_raw(lambda, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(neville(&xs, &ys, alpha))
}

fn neville(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = ((x - xs[i + k]) * p[i] + (xs[i] - x) * p[i + 1]) / (xs[i] - xs[i + k]);
        }
    }
    p[0]
}

/// Expected energy at a mandated target SINR:
/// `[eta E[r^alpha] / L_o * E[1/h] * (E[P_I] + P_N) * gamma_o + P_o] * T_m`,
/// with `T_m` at its Shannon minimum unless given.
pub fn expected_energy_qos(
    cfg: &RadioConfig,
    spec: &ProcessSpec,
    target_sinr: f64,
    channel: &ChannelSpec,
    airtime_s: Option<f64>,
) -> Result<f64> {
    cfg.validate()?;
    channel.validate()?;
    if !(target_sinr > 0.0 && target_sinr.is_finite()) {
        return Err(Error::Domain(format!(
            "target SINR must be > 0, got {target_sinr}"
        )));
    }
    let minimum = cfg.airtime(target_sinr)?;
    let t = match airtime_s {
        Some(t) if t < minimum * (1.0 - 1e-12) => {
            return Err(Error::AirtimeViolation { given: t, minimum })
        }
        Some(t) => t,
        None => minimum,
    };
    let moment = moment_r_alpha(spec, cfg.pathloss_exp)?;
    let inv_h = channel.fading.inverse_mean(channel.h_min)?;
    let p_i = channel.interference.mean_watts()?;
    let power =
        cfg.conv_factor * moment / cfg.pathloss_const * inv_h * (p_i + cfg.noise_w) * target_sinr
            + cfg.overhead_w;
    Ok(power * t)
}

/// Target SINR minimizing [`expected_energy_qos`] with Shannon-minimal
/// airtime.
pub fn expected_qos_optimum(
    cfg: &RadioConfig,
    spec: &ProcessSpec,
    channel: &ChannelSpec,
) -> Result<f64> {
    // Same structure as a single link whose path gain over noise is the
    // reciprocal of the averaged coefficient.
    let moment = moment_r_alpha(spec, cfg.pathloss_exp)?;
    let inv_h = channel.fading.inverse_mean(channel.h_min)?;
    let p_i = channel.interference.mean_watts()?;
    let link = LinkState {
        distance_m: 1.0,
        fading: 1.0 / (moment * inv_h),
        interference_w: p_i,
    };
    Ok(cfg.optimal_operating_point(&link)?.sinr)
}

/// Estimator used by [`sweep_intensity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Estimator {
    MonteCarlo(MonteCarloSpec),
    Quadrature(QuadSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityRow {
    pub lambda_per_km2: f64,
    pub process: String,
    pub mean_j: f64,
    pub stderr_j: Option<f64>,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrRow {
    pub gamma_o_db: f64,
    pub process: String,
    pub energy_j: f64,
}

/// Gateway intensities from 0.1 to 10 per km², log-spaced.
pub fn default_intensity_grid(n: usize) -> Result<Vec<f64>> {
    log_space(0.1, 10.0, n)
}

/// Target SINRs from -20 to 20 dB.
pub fn default_sinr_grid_db(n: usize) -> Vec<f64> {
    lin_space(-20.0, 20.0, n)
}

/// Expected minimum energy per (process, intensity) cell, process-major.
/// Cells are independent and evaluated in parallel; Monte-Carlo cells share
/// the seed.
pub fn sweep_intensity(
    cfg: &RadioConfig,
    kinds: &[ProcessKind],
    lambdas_per_km2: &[f64],
    channel: &ChannelSpec,
    estimator: &Estimator,
) -> Result<Vec<IntensityRow>> {
    if kinds.is_empty() || lambdas_per_km2.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep range must be non-empty".into(),
        ));
    }
    let cells: Vec<(ProcessKind, f64)> = kinds
        .iter()
        .flat_map(|&k| lambdas_per_km2.iter().map(move |&l| (k, l)))
        .collect();
    cells
        .par_iter()
        .map(|&(kind, lambda_km2)| {
            let spec = ProcessSpec::new(kind, lambda_km2 * 1e-6)?;
            let res = match estimator {
                Estimator::MonteCarlo(mc) => expected_min_energy_mc(cfg, &spec, channel, mc)?,
                Estimator::Quadrature(q) => expected_min_energy_quad(cfg, &spec, channel, q)?,
            };
            Ok(IntensityRow {
                lambda_per_km2: lambda_km2,
                process: kind.name().to_string(),
                mean_j: res.mean_j,
                stderr_j: res.stderr_j,
                method: res.method,
            })
        })
        .collect()
}

/// Restricted-QoS expected energy per (process, target SINR) cell.
pub fn sweep_sinr(
    cfg: &RadioConfig,
    kinds: &[ProcessKind],
    lambda_per_km2: f64,
    gammas_db: &[f64],
    channel: &ChannelSpec,
    airtime_s: Option<f64>,
) -> Result<Vec<SinrRow>> {
    if kinds.is_empty() || gammas_db.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep range must be non-empty".into(),
        ));
    }
    let mut rows = Vec::with_capacity(kinds.len() * gammas_db.len());
    for &kind in kinds {
        let spec = ProcessSpec::new(kind, lambda_per_km2 * 1e-6)?;
        for &g_db in gammas_db {
            rows.push(SinrRow {
                gamma_o_db: g_db,
                process: kind.name().to_string(),
                energy_j: expected_energy_qos(cfg, &spec, db_to_linear(g_db), channel, airtime_s)?,
            });
        }
    }
    Ok(rows)
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `lambda_per_km2,process,mean_j,stderr_j,method`.
pub fn write_intensity_csv<W: Write>(rows: &[IntensityRow], out: W) -> Result<()> {
    write_rows(rows, out)
}

/// Writes `gamma_o_db,process,energy_j`.
pub fn write_sinr_csv<W: Write>(rows: &[SinrRow], out: W) -> Result<()> {
    write_rows(rows, out)
}

pub fn save_intensity_csv(rows: &[IntensityRow], path: &Path) -> Result<()> {
    write_intensity_csv(rows, create(path)?)
}

pub fn save_sinr_csv(rows: &[SinrRow], path: &Path) -> Result<()> {
    write_sinr_csv(rows, create(path)?)
}
