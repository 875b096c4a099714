//! Fast oracle checks run by the `validate` command.

use std::f64::consts::{E, LN_2, PI};

use serde::Serialize;

use crate::channel::truncated_inv_fading_mean;
use crate::deployment::voronoi;
use crate::energy::{fit_power_model, LinkState, RadioConfig};
use crate::error::Result;
use crate::expectation::{
    expected_min_energy_mc, expected_min_energy_quad, moment_r_alpha, moment_r_alpha_quad,
    ChannelSpec, MonteCarloSpec,
};
use crate::grid::log_space;
use crate::point_process::{
    contact_cdf, contact_pdf, sample_ppp, ProcessKind, ProcessSpec, Window,
};
use crate::special::{gamma_fn, gauss_2f1, integrate, lambert_w0, QuadSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn lambert() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut z = -1.0 / E;
    while z < 1e12 {
        let w = lambert_w0(z)?;
        worst = worst.max((w * w.exp() - z).abs() / z.abs().max(1.0));
        z = if z < 0.0 {
            z * 0.9 + 1e-4
        } else {
            z * 1.5 + 1e-3
        };
    }
    Ok((worst <= 1e-12, format!("max scaled residual {worst:.2e}")))
}

fn gamma_hyper() -> Result<(bool, String)> {
    let g = (gamma_fn(0.5)? - PI.sqrt()).abs() / PI.sqrt();
    let f = (gauss_2f1(1.0, 1.0, 2.0, 0.5)? - 2.0 * 2f64.ln()).abs();
    Ok((
        g < 1e-14 && f < 1e-14,
        format!("gamma {g:.1e}, 2F1 {f:.1e}"),
    ))
}

fn optimum() -> Result<(bool, String)> {
    let cfg = RadioConfig::default();
    let mut worst: f64 = 0.0;
    for r in [10.0, 300.0, 1000.0, 5000.0] {
        let link = LinkState::new(r, 1.0, 2.884e-13)?;
        let best = cfg.optimal_operating_point(&link)?.energy_j;
        let grid = log_space(1e-8, 1e8, 200_001)?;
        let brute = grid
            .iter()
            .map(|&g| cfg.energy(&link, g))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((brute - best) / best);
    }
    Ok((
        worst > -1e-12 && worst < 1e-4,
        format!("grid minimum above optimum by {worst:.2e} relative"),
    ))
}

fn contact_normalization() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for kind in ProcessKind::ALL {
        let spec = ProcessSpec::new(kind, 1e-6)?;
        let cap = (60.0 / (PI * 1e-6)).sqrt();
        let quad = QuadSpec::new(1e-12, 1e-10, 50)?;
        let mass = integrate(
            |r| contact_pdf(&spec, r).unwrap_or(f64::NAN),
            0.0,
            cap,
            &quad,
        )?;
        worst = worst.max((mass - 1.0).abs());
        worst = worst.max((contact_cdf(&spec, cap)? - 1.0).abs());
    }
    Ok((worst < 1e-6, format!("max |mass - 1| {worst:.1e}")))
}

fn moments() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for kind in [ProcessKind::Ppp, ProcessKind::Tri] {
        let spec = ProcessSpec::new(kind, 1e-6)?;
        for alpha in [2.0, 3.0, 3.68, 4.0] {
            let c = moment_r_alpha(&spec, alpha)?;
            let q = moment_r_alpha_quad(&spec, alpha, &QuadSpec::default())?;
            worst = worst.max(((c - q) / q).abs());
        }
    }
    Ok((worst < 1e-8, format!("max relative gap {worst:.1e}")))
}

fn inverse_fading() -> Result<(bool, String)> {
    // e * E1(1)
    let oracle = 0.596_347_362_323_194_1;
    let v = truncated_inv_fading_mean(1.0)?;
    let gap = (v - oracle).abs();
    Ok((gap < 1e-10, format!("E[1/h | h >= 1] = {v:.12}")))
}

fn calibration() -> Result<(bool, String)> {
    let samples: Vec<(f64, f64)> = (0..20)
        .map(|i| {
            let pt = 0.005 * i as f64;
            (pt, 4.0 * pt + 0.21)
        })
        .collect();
    let fit = fit_power_model(&samples)?;
    let gap = (fit.conv_factor - 4.0)
        .abs()
        .max((fit.overhead_w - 0.21).abs());
    Ok((
        gap < 1e-12,
        format!("eta {:.6}, P_o {:.6} W", fit.conv_factor, fit.overhead_w),
    ))
}

fn partition() -> Result<(bool, String)> {
    let frame = Window::square(5000.0)?;
    let pts = sample_ppp(2e-5, &frame, 1)?.points;
    let cells = voronoi(&pts, &frame)?;
    let total: f64 = cells.iter().map(|c| c.area_m2).sum();
    let gap = (total / frame.area() - 1.0).abs();
    Ok((
        gap < 1e-6,
        format!("{} cells, area gap {gap:.1e}", cells.len()),
    ))
}

fn cross_method() -> Result<(bool, String)> {
    let cfg = RadioConfig::default();
    let spec = ProcessSpec::ppp(1e-6)?;
    let ch = ChannelSpec::default();
    let mc = MonteCarloSpec {
        n_samples: 50_000,
        seed: 1,
        confidence: 0.95,
    };
    let m = expected_min_energy_mc(&cfg, &spec, &ch, &mc)?;
    let q = expected_min_energy_quad(&cfg, &spec, &ch, &QuadSpec::new(1e-15, 1e-9, 40)?)?;
    let se = m.stderr_j.unwrap_or(f64::INFINITY);
    let z = (m.mean_j - q.mean_j).abs() / se;
    Ok((z < 3.0, format!("|MC - quad| = {z:.2} stderr")))
}

fn overhead_floor() -> Result<(bool, String)> {
    let cfg = RadioConfig {
        overhead_w: 0.0,
        ..RadioConfig::default()
    };
    let link = LinkState::new(1000.0, 1.0, 2.884e-13)?;
    let op = cfg.optimal_operating_point(&link)?;
    let limit = cfg.a1(&link) * LN_2;
    Ok((
        !op.attained && op.energy_j == limit,
        format!("infimum {:.4e} J", op.energy_j),
    ))
}

/// Runs every check; never stops early.
pub fn run_all() -> Vec<Check> {
    vec![
        check("lambert_w_identity", lambert()),
        check("gamma_and_hypergeometric", gamma_hyper()),
        check("closed_form_optimum", optimum()),
        check("zero_overhead_infimum", overhead_floor()),
        check("contact_pdf_normalization", contact_normalization()),
        check("contact_moments", moments()),
        check("truncated_inverse_fading", inverse_fading()),
        check("power_model_fit", calibration()),
        check("voronoi_partition", partition()),
        check("monte_carlo_vs_quadrature", cross_method()),
    ]
}
