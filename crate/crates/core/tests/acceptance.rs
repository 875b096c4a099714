//! Acceptance gate. Every test prints one `PASS`/`FAIL` line before asserting.
//! Run with `cargo test -p iot-energy --test acceptance -- --nocapture`.

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use iot_energy::deployment::{
    binned_energy_vs_intensity, default_frame, jittered_lattice, Deployment,
};
use iot_energy::energy::{fit_power_model, LinkState, RadioConfig};
use iot_energy::expectation::{
    default_sinr_grid_db, expected_energy_qos, expected_min_energy_mc, expected_min_energy_quad,
    expected_qos_optimum, moment_r_alpha, moment_r_alpha_quad, simulate_contact_distances,
    sweep_sinr, ChannelSpec, MonteCarloSpec,
};
use iot_energy::grid::log_space;
use iot_energy::point_process::{
    contact_cdf, contact_pdf, nearest_brute_force, sample_mhc, tri_circumradius, ProcessKind,
    ProcessSpec, Window,
};
use iot_energy::special::{lambert_w0, QuadSpec};
use iot_energy::stats::{ks_statistic, stream_rng, RunningStats};
use iot_energy::units::{db_to_linear, dbm_to_watts};

const KM2: f64 = 1e-6;
const LAMBDAS_KM2: [f64; 3] = [0.5, 1.0, 2.0];

fn report(id: u32, name: &str, passed: bool, detail: String) {
    let mark = if passed { "PASS" } else { "FAIL" };
    println!("{mark} [{id:02}] {name}: {detail}");
    assert!(passed, "criterion {id} ({name}) failed: {detail}");
}

fn reference_quad() -> QuadSpec {
    QuadSpec::new(1e-15, 1e-10, 40).unwrap()
}

fn random_config<R: Rng>(rng: &mut R) -> RadioConfig {
    RadioConfig {
        n_bits: rng.random_range(50.0..500.0),
        bandwidth_hz: rng.random_range(50e3..500e3),
        noise_w: dbm_to_watts(rng.random_range(-125.0..-110.0)),
        pathloss_const: db_to_linear(rng.random_range(-35.0..-20.0)),
        pathloss_exp: rng.random_range(2.5..4.0),
        conv_factor: rng.random_range(1.5..8.0),
        overhead_w: rng.random_range(0.02..0.5),
    }
}

/// Sign of the derivative of the energy in SINR, up to a positive factor.
fn energy_slope(cfg: &RadioConfig, link: &LinkState, g: f64) -> f64 {
    let (a1, a2) = (cfg.a1(link), cfg.a2());
    a1 * (1.0 + g) * g.ln_1p() - (a1 * g + a2)
}

#[test]
fn c01_closed_form_optimum_vs_brute_force() {
    let start = Instant::now();
    let mut rng = stream_rng(101, 0);
    let draws: Vec<(RadioConfig, LinkState)> = (0..200)
        .map(|_| {
            let cfg = random_config(&mut rng);
            let r = 10f64.powf(rng.random_range(1f64..5000f64.log10()));
            let p_i = dbm_to_watts(rng.random_range(-110.0..-80.0));
            let h = 10f64.powf(rng.random_range(0.05f64.log10()..5f64.log10()));
            (cfg, LinkState::new(r, h, p_i).unwrap())
        })
        .collect();
    let grid = log_space(1e-15, 1e12, 1_000_000).unwrap();
    let results: Vec<(f64, bool, bool)> = draws
        .par_iter()
        .map(|(cfg, link)| {
            let op = cfg.optimal_operating_point(link).unwrap();
            let in_grid = op.tx_power_w > grid[1] && op.tx_power_w < grid[grid.len() - 2];
            let brute = grid
                .iter()
                .map(|&pt| cfg.energy(link, cfg.sinr_at(link, pt)).unwrap())
                .fold(f64::INFINITY, f64::min);
            let rel = (brute - op.energy_j) / op.energy_j;
            let below = energy_slope(cfg, link, op.sinr * (1.0 - 1e-6));
            let above = energy_slope(cfg, link, op.sinr * (1.0 + 1e-6));
            (rel, below < 0.0 && above > 0.0, in_grid)
        })
        .collect();
    let elapsed = start.elapsed();
    let worst = results
        .iter()
        .map(|r| r.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let lowest = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let bracketed = results.iter().filter(|r| r.1).count();
    let in_grid = results.iter().all(|r| r.2);
    let passed = in_grid
        && worst <= 1e-4
        && lowest >= -1e-12
        && bracketed == results.len()
        && elapsed < Duration::from_secs(60);
    report(
        1,
        "closed-form optimum vs 10^6-point grid",
        passed,
        format!(
            "max rel gap {worst:.2e}, min {lowest:.2e}, stationarity bracketed {bracketed}/200, {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c02_lambert_w_identity() {
    let mut zs = vec![-1.0 / E, 0.0];
    zs.extend(
        log_space(1e-12, 1.0 / E, 2_000)
            .unwrap()
            .into_iter()
            .map(|d| -1.0 / E + d),
    );
    zs.extend(
        log_space(1e-300, 1e-12, 1_000)
            .unwrap()
            .into_iter()
            .map(|d| -d),
    );
    zs.extend(log_space(1e-300, 1e300, 6_998).unwrap());
    let mut worst: f64 = 0.0;
    for &z in &zs {
        let w = lambert_w0(z).unwrap();
        worst = worst.max((w * w.exp() - z).abs() / z.abs().max(1.0));
    }
    report(
        2,
        "Lambert W identity",
        zs.len() >= 10_000 && worst <= 1e-12,
        format!("{} points, max scaled residual {worst:.2e}", zs.len()),
    );
}

fn contact_ks(kind: ProcessKind) -> Vec<(f64, f64)> {
    LAMBDAS_KM2
        .par_iter()
        .enumerate()
        .map(|(i, &l)| {
            let spec = ProcessSpec::new(kind, l * KM2).unwrap();
            let mut d = simulate_contact_distances(&spec, 100_000, 300 + i as u64).unwrap();
            let ks = ks_statistic(&mut d, |r| contact_cdf(&spec, r).unwrap());
            (l, ks)
        })
        .collect()
}

fn ks_detail(kind: ProcessKind, rows: &[(f64, f64)]) -> String {
    rows.iter()
        .map(|(l, ks)| format!("{} λ={l}: {ks:.4}", kind.name()))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn c03_contact_law_ks_ppp_tri() {
    let start = Instant::now();
    let ppp = contact_ks(ProcessKind::Ppp);
    let tri = contact_ks(ProcessKind::Tri);
    let elapsed = start.elapsed();
    let worst = ppp.iter().chain(&tri).map(|r| r.1).fold(0.0, f64::max);
    report(
        3,
        "contact-law KS (PPP, TRI)",
        worst < 0.01 && elapsed < Duration::from_secs(150),
        format!(
            "{}; {}; {:.1}s",
            ks_detail(ProcessKind::Ppp, &ppp),
            ks_detail(ProcessKind::Tri, &tri),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c03_contact_law_ks_mhc() {
    let start = Instant::now();
    let mhc = contact_ks(ProcessKind::Mhc);
    let elapsed = start.elapsed();
    let worst = mhc.iter().map(|r| r.1).fold(0.0, f64::max);
    report(
        3,
        "contact-law KS (MHC)",
        worst < 0.01 && elapsed < Duration::from_secs(150),
        format!(
            "{}; {:.1}s",
            ks_detail(ProcessKind::Mhc, &mhc),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c04_mhc_retained_intensity() {
    let delta = 100.0;
    let parent = 14.0 / (PI * delta * delta);
    let spec = ProcessSpec::mhc_with_hardcore(delta, parent).unwrap();
    let window = Window::square(2_000.0).unwrap();
    let total: usize = (0..10_000u64)
        .into_par_iter()
        .map(|k| sample_mhc(&spec, &window, 400 + k).unwrap().len())
        .sum();
    let empirical = total as f64 / (10_000.0 * window.area());
    let target = 1.0 / (PI * delta * delta);
    let rel = (empirical / target - 1.0).abs();
    report(
        4,
        "MHC retained intensity",
        rel < 0.02,
        format!("{total} points over 10^4 replicates, relative gap {rel:.2e}"),
    );
}

#[test]
fn c05_tri_support() {
    let lambda = KM2;
    let spec = ProcessSpec::tri(lambda).unwrap();
    let rc = tri_circumradius(lambda);
    let expected = (2.0 / (3.0 * 3f64.sqrt() * lambda)).sqrt();
    let d = simulate_contact_distances(&spec, 100_000, 500).unwrap();
    let beyond = d.iter().filter(|&&r| r > rc).count();
    let n_bins = 100;
    let width = rc / n_bins as f64;
    let mut hist = vec![0usize; n_bins];
    for &r in &d {
        hist[((r / width) as usize).min(n_bins - 1)] += 1;
    }
    let peak = *hist.iter().max().unwrap() as f64;
    let last = hist[n_bins - 1] as f64;
    let pdf_peak = (1..=200)
        .map(|i| contact_pdf(&spec, rc * i as f64 / 200.0).unwrap())
        .fold(0.0, f64::max);
    let pdf_edge = contact_pdf(&spec, rc).unwrap();
    let pdf_out = contact_pdf(&spec, rc * (1.0 + 1e-9)).unwrap();
    let passed = (rc / expected - 1.0).abs() < 1e-12
        && beyond == 0
        && last < 0.05 * peak
        && pdf_edge <= 1e-9 * pdf_peak
        && pdf_out == 0.0;
    report(
        5,
        "TRI contact support",
        passed,
        format!(
            "{beyond} of 10^5 beyond {rc:.3} m, last-bin/peak {:.4}, pdf(R)/peak {:.1e}",
            last / peak,
            pdf_edge / pdf_peak
        ),
    );
}

#[test]
fn c06_moment_closed_forms() {
    let mut worst: f64 = 0.0;
    for kind in [ProcessKind::Ppp, ProcessKind::Tri] {
        for l in LAMBDAS_KM2 {
            let spec = ProcessSpec::new(kind, l * KM2).unwrap();
            for alpha in [2.0, 3.0, 3.68, 4.0] {
                let c = moment_r_alpha(&spec, alpha).unwrap();
                let q = moment_r_alpha_quad(&spec, alpha, &reference_quad()).unwrap();
                worst = worst.max((c / q - 1.0).abs());
            }
        }
    }
    report(
        6,
        "PPP/TRI moment closed forms vs quadrature",
        worst < 1e-8,
        format!("max relative gap {worst:.2e}"),
    );
}

#[test]
fn c06_mhc_moment_vs_monte_carlo() {
    let spec = ProcessSpec::mhc(KM2).unwrap();
    let d: Vec<f64> = (0..10u64)
        .into_par_iter()
        .flat_map(|k| simulate_contact_distances(&spec, 100_000, 600 + k).unwrap())
        .collect();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for alpha in [2.0, 3.0, 3.68, 4.0] {
        let q = moment_r_alpha_quad(&spec, alpha, &reference_quad()).unwrap();
        let mc: RunningStats = d.iter().map(|r| r.powf(alpha)).collect();
        let rel = q / mc.mean - 1.0;
        worst = worst.max(rel.abs());
        parts.push(format!(
            "α={alpha}: {:+.2}% (MC stderr {:.2}%)",
            100.0 * rel,
            100.0 * mc.stderr().unwrap() / mc.mean
        ));
    }
    report(
        6,
        "MHC moment quadrature vs Monte Carlo",
        worst < 0.02,
        parts.join(", "),
    );
}

#[test]
fn c07_regularity_ordering() {
    let cfg = RadioConfig::default();
    let channel = ChannelSpec::default();
    let mc = MonteCarloSpec {
        n_samples: 1_000_000,
        seed: 700,
        confidence: 0.95,
    };
    let kinds = [ProcessKind::Tri, ProcessKind::Mhc, ProcessKind::Ppp];
    let est: Vec<Vec<(f64, f64)>> = kinds
        .iter()
        .map(|&kind| {
            LAMBDAS_KM2
                .iter()
                .map(|&l| {
                    let spec = ProcessSpec::new(kind, l * KM2).unwrap();
                    let r = expected_min_energy_mc(&cfg, &spec, &channel, &mc).unwrap();
                    (r.mean_j, r.stderr_j.unwrap())
                })
                .collect()
        })
        .collect();
    let mut passed = true;
    let mut min_z = f64::INFINITY;
    for pair in est.windows(2) {
        for (lo, hi) in pair[0].iter().zip(&pair[1]) {
            let z = (hi.0 - lo.0) / lo.1.hypot(hi.1);
            min_z = min_z.min(z);
            passed &= z > 3.0;
        }
    }
    let decreasing = est
        .iter()
        .all(|row| row.windows(2).all(|w| w[1].0 < w[0].0));
    passed &= decreasing;
    let table = LAMBDAS_KM2
        .iter()
        .enumerate()
        .map(|(li, l)| {
            format!(
                "λ={l}: {:.4e} < {:.4e} < {:.4e}",
                est[0][li].0, est[1][li].0, est[2][li].0
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    report(
        7,
        "regularity ordering TRI < MHC < PPP",
        passed,
        format!("{table}; smallest gap {min_z:.1} stderr; decreasing in λ: {decreasing}"),
    );
}

#[test]
fn c08_monte_carlo_vs_quadrature() {
    let cfg = RadioConfig::default();
    let channel = ChannelSpec::default();
    let mut worst: f64 = 0.0;
    for (i, kind) in [ProcessKind::Ppp, ProcessKind::Tri].into_iter().enumerate() {
        for (j, &l) in LAMBDAS_KM2.iter().enumerate() {
            let spec = ProcessSpec::new(kind, l * KM2).unwrap();
            let mc = MonteCarloSpec {
                n_samples: 400_000,
                seed: 800 + (3 * i + j) as u64,
                confidence: 0.95,
            };
            let m = expected_min_energy_mc(&cfg, &spec, &channel, &mc).unwrap();
            let q = expected_min_energy_quad(&cfg, &spec, &channel, &reference_quad()).unwrap();
            worst = worst.max((m.mean_j - q.mean_j).abs() / m.stderr_j.unwrap());
        }
    }
    report(
        8,
        "Monte Carlo vs quadrature (PPP, TRI)",
        worst < 3.0,
        format!("largest gap {worst:.2} stderr"),
    );
}

#[test]
fn c09_restricted_qos() {
    let cfg = RadioConfig::default();
    let channel = ChannelSpec::default();
    let grid_db = default_sinr_grid_db(41);
    let mut ok_ineq = true;

    // Per link.
    let mut rng = stream_rng(900, 0);
    for _ in 0..200 {
        let r = rng.random_range(10.0..5000.0);
        let h = rng.random_range(0.05..5.0);
        let link = LinkState::new(r, h, channel.interference.mean_watts().unwrap()).unwrap();
        let op = cfg.optimal_operating_point(&link).unwrap();
        for &g_db in &grid_db {
            let g = db_to_linear(g_db);
            if g >= op.sinr {
                let e = cfg.restricted_energy(&link, g, None).unwrap();
                ok_ineq &= e >= op.energy_j * (1.0 - 1e-12);
            }
        }
    }

    let mut ok_linear = true;
    let mut ok_rising = true;
    let t_fixed = cfg.airtime(db_to_linear(grid_db[0])).unwrap();
    for kind in ProcessKind::ALL {
        let spec = ProcessSpec::new(kind, KM2).unwrap();
        let floor = expected_min_energy_quad(&cfg, &spec, &channel, &reference_quad())
            .unwrap()
            .mean_j;
        let rows = sweep_sinr(&cfg, &[kind], 1.0, &grid_db, &channel, None).unwrap();
        ok_ineq &= rows.iter().all(|row| row.energy_j >= floor);

        let g_opt = expected_qos_optimum(&cfg, &spec, &channel).unwrap();
        let above: Vec<f64> = rows
            .iter()
            .filter(|row| db_to_linear(row.gamma_o_db) > g_opt)
            .map(|row| row.energy_j)
            .collect();
        ok_rising &= above.len() > 1 && above.windows(2).all(|w| w[1] > w[0]);

        let fixed: Vec<(f64, f64)> = grid_db
            .iter()
            .map(|&g_db| {
                let g = db_to_linear(g_db);
                let e = expected_energy_qos(&cfg, &spec, g, &channel, Some(t_fixed)).unwrap();
                (g, e)
            })
            .collect();
        let (g0, e0) = fixed[0];
        let (g1, e1) = fixed[fixed.len() - 1];
        let slope = (e1 - e0) / (g1 - g0);
        ok_linear &= fixed
            .iter()
            .all(|&(g, e)| ((e0 + slope * (g - g0)) / e - 1.0).abs() < 1e-9);
    }
    report(
        9,
        "restricted QoS",
        ok_ineq && ok_linear && ok_rising,
        format!(
            "ε_o ≥ ε*: {ok_ineq}, linear at fixed airtime: {ok_linear}, increasing above optimum: {ok_rising}"
        ),
    );
}

#[test]
fn c10_deployment_pipeline() {
    let start = Instant::now();
    let cfg = RadioConfig::default();
    let channel = ChannelSpec::default();
    let region = Window::square(30_000.0).unwrap();
    let sites = jittered_lattice(KM2, &region, 0.2, 1000).unwrap();
    let frame = default_frame(&sites, 0.05, 1.0).unwrap();
    let ids = (0..sites.len()).map(|i| format!("s{i}")).collect();
    let dep = Deployment::new(ids, sites.clone(), frame).unwrap();
    let records = dep.simulate(150.0 * KM2, &cfg, &channel, 1001).unwrap();
    let bins = binned_energy_vs_intensity(&records, 12, &cfg, &channel).unwrap();

    let area: f64 = dep.cells.iter().map(|c| c.area_m2).sum();
    let area_gap = (area / frame.area() - 1.0).abs();
    let devices: Vec<[f64; 2]> = records.iter().map(|d| [d.x_m, d.y_m]).collect();
    let brute = nearest_brute_force(&sites, &devices).unwrap();
    let mismatched = records
        .iter()
        .zip(&brute)
        .filter(|(d, b)| d.site != b.0)
        .count();
    let checked: Vec<_> = bins.iter().filter(|b| b.count >= 1_000).collect();
    let bounded = checked.iter().all(|b| {
        let m = b.mean_j.unwrap();
        b.ref_tri_j < m && m < b.ref_ppp_j
    });
    let elapsed = start.elapsed();
    let passed = dep.interior_count() >= 400
        && records.len() >= 100_000
        && !checked.is_empty()
        && bounded
        && area_gap < 1e-6
        && mismatched == 0
        && elapsed < Duration::from_secs(300);
    report(
        10,
        "deployment pipeline",
        passed,
        format!(
            "{} interior sites, {} devices, {}/{} bins bounded, area gap {area_gap:.1e}, {mismatched} mismatched associations, {:.1}s",
            dep.interior_count(),
            records.len(),
            if bounded { checked.len() } else { 0 },
            checked.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c11_power_model_calibration() {
    let pts: Vec<f64> = (0..50).map(|i| 0.002 * (i + 1) as f64).collect();
    let exact: Vec<(f64, f64)> = pts.iter().map(|&p| (p, 4.0 * p + 0.21)).collect();
    let fit = fit_power_model(&exact).unwrap();
    let exact_ok = (fit.conv_factor - 4.0).abs() < 1e-12
        && (fit.overhead_w - 0.21).abs() < 1e-12
        && fit.residual_w < 1e-12;

    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..1_000 {
        let mut rng = stream_rng(1100, trial);
        let noisy: Vec<(f64, f64)> = exact
            .iter()
            .map(|&(p, e)| (p, e * (1.0 + noise.sample(&mut rng))))
            .collect();
        let f = fit_power_model(&noisy).unwrap();
        worst = worst
            .max((f.conv_factor / 4.0 - 1.0).abs())
            .max((f.overhead_w / 0.21 - 1.0).abs());
    }
    report(
        11,
        "power model calibration",
        exact_ok && worst <= 0.05,
        format!(
            "noiseless ({}, {}), worst noisy deviation {:.2}% over 10^3 trials",
            fit.conv_factor,
            fit.overhead_w,
            100.0 * worst
        ),
    );
}
