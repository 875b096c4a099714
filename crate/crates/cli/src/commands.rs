use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;

use iot_energy::deployment::{
    binned_energy_vs_intensity, default_frame, jittered_lattice, load_sites, save_bins_csv,
    Deployment,
};
use iot_energy::expectation::{
    save_intensity_csv, save_sinr_csv, sweep_intensity, sweep_sinr, Estimator,
};
use iot_energy::grid::{lin_space, log_space};
use iot_energy::point_process::{contact_table, write_contact_csv};
use iot_energy::units::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm};
use iot_energy::validate::run_all;
use iot_energy::{
    fit_power_model, load_power_samples, ChannelSpec, EmpiricalCdf, FadingModel, InterferenceModel,
    LinkState, MonteCarloSpec, ProcessKind, ProcessSpec, QuadSpec, RadioConfig, Window,
};

use crate::args::{Cli, Command, EstimatorKind, Radio};
use crate::manifest::RunManifest;
use crate::Failure;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn radio_config(r: &Radio) -> Result<RadioConfig, Failure> {
    let cfg = RadioConfig {
        n_bits: r.n_bits,
        bandwidth_hz: r.bandwidth_hz,
        noise_w: dbm_to_watts(r.noise_dbm),
        pathloss_const: db_to_linear(r.pathloss_db),
        pathloss_exp: r.pathloss_exp,
        conv_factor: r.conv_factor,
        overhead_w: r.overhead_w,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_interference(text: &str) -> Result<InterferenceModel, Failure> {
    let bad = || usage(format!("invalid --interference '{text}'"));
    let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
    let model = match kind {
        "const" => InterferenceModel::constant_dbm(rest.trim().parse().map_err(|_| bad())?),
        "table" => InterferenceModel::EmpiricalCdf {
            table: EmpiricalCdf::load(Path::new(rest))?,
        },
        "lognormal" => {
            let (mu, sigma) = rest.split_once(',').ok_or_else(bad)?;
            InterferenceModel::Lognormal {
                mu_dbm: mu.trim().parse().map_err(|_| bad())?,
                sigma_db: sigma.trim().parse().map_err(|_| bad())?,
            }
        }
        _ => return Err(bad()),
    };
    model.validate()?;
    Ok(model)
}

fn parse_fading(text: &str) -> Result<FadingModel, Failure> {
    let model = match text.split_once(':') {
        None if text == "exp" => FadingModel::ExponentialUnit,
        Some(("fixed", v)) => FadingModel::Deterministic {
            value: v
                .trim()
                .parse()
                .map_err(|_| usage(format!("invalid --fading '{text}'")))?,
        },
        _ => return Err(usage(format!("invalid --fading '{text}'"))),
    };
    model.validate()?;
    Ok(model)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Output directory plus the files written so far.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for r in rows {
            w.serialize(r).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))
    }

    fn finish<P: Serialize>(self, mut manifest: RunManifest<'_, P>) -> Result<(), Failure> {
        manifest.outputs = self.written;
        manifest.save(&self.dir)
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = radio_config(&cli.radio)?;
    if !(cli.common.h_min >= 0.0 && cli.common.h_min.is_finite()) {
        return Err(usage("--h-min must be >= 0"));
    }
    let channel = ChannelSpec {
        fading: parse_fading(&cli.common.fading)?,
        interference: parse_interference(&cli.common.interference)?,
        h_min: cli.common.h_min,
    };
    let common = &cli.common;
    let mut out = Outputs::new(&common.out_dir)?;
    macro_rules! manifest {
        ($name:expr, $params:expr) => {
            RunManifest::new($name, common, cfg, &channel, $params)?
        };
    }

    match &cli.command {
        Command::Optimal(a) => {
            let p_i = channel.interference.mean_watts()?;
            let link = LinkState::new(a.distance_m, a.gain, p_i)?;
            let op = cfg.optimal_operating_point(&link)?;
            if !op.attained {
                eprintln!(
                    "warning: zero overhead power; the minimum is an infimum approached as SINR -> 0"
                );
            }
            println!("tx_power_w    {:.6e}", op.tx_power_w);
            println!("tx_power_dbm  {:.4}", watts_to_dbm(op.tx_power_w));
            println!("sinr          {:.6e}", op.sinr);
            println!("sinr_db       {:.4}", linear_to_db(op.sinr));
            println!("energy_j      {:.6e}", op.energy_j);
            println!("airtime_s     {:.6e}", op.airtime_s);
            #[derive(Serialize)]
            struct Row {
                distance_m: f64,
                gain: f64,
                interference_w: f64,
                tx_power_w: f64,
                tx_power_dbm: f64,
                sinr: f64,
                sinr_db: f64,
                energy_j: f64,
                airtime_s: f64,
                attained: bool,
            }
            out.csv(
                "optimal.csv",
                &[Row {
                    distance_m: a.distance_m,
                    gain: a.gain,
                    interference_w: p_i,
                    tx_power_w: op.tx_power_w,
                    tx_power_dbm: watts_to_dbm(op.tx_power_w),
                    sinr: op.sinr,
                    sinr_db: linear_to_db(op.sinr),
                    energy_j: op.energy_j,
                    airtime_s: op.airtime_s,
                    attained: op.attained,
                }],
            )?;
            out.finish(manifest!("optimal", a))
        }
        Command::Contour(a) => {
            let r = log_space(a.r_min_m, a.r_max_m, a.n_r)?;
            let pt: Vec<f64> = lin_space(a.pt_min_dbm, a.pt_max_dbm, a.n_pt)
                .into_iter()
                .map(dbm_to_watts)
                .collect();
            let p_i = channel.interference.mean_watts()?;
            let contour = cfg.energy_contour(&r, &pt, a.gain, p_i)?;
            let grid = out.path("contour_grid.csv");
            let optimum = out.path("contour_optimum.csv");
            contour.save(&grid, &optimum)?;
            out.finish(manifest!("contour", a))
        }
        Command::Contact(a) => {
            if a.processes.is_empty() || a.n < 2 {
                return Err(usage("contact needs processes and n >= 2"));
            }
            let lambda = a.intensity_km2 * 1e-6;
            let r_max = a.r_max_m.unwrap_or(2.5 / lambda.sqrt());
            if r_max.is_nan() || r_max <= 0.0 {
                return Err(usage("--r-max-m must be > 0"));
            }
            let grid = lin_space(0.0, r_max, a.n);
            for &p in &a.processes {
                let spec = ProcessSpec::new(p.into(), lambda)?;
                let rows = contact_table(&spec, &grid)?;
                let kind: ProcessKind = p.into();
                let path = out.path(&format!("contact_{}.csv", kind.name()));
                let file = File::create(&path).map_err(|e| io_err(&path, e))?;
                write_contact_csv(&rows, file)?;
            }
            out.finish(manifest!("contact", a))
        }
        Command::SweepIntensity(a) => {
            let grid = log_space(a.lambda_min_km2, a.lambda_max_km2, a.n)?;
            let kinds: Vec<ProcessKind> = a.processes.iter().map(|&p| p.into()).collect();
            let estimator = match a.method {
                EstimatorKind::Mc => Estimator::MonteCarlo(MonteCarloSpec {
                    n_samples: a.samples,
                    seed: common.seed,
                    confidence: a.confidence,
                }),
                EstimatorKind::Quad => Estimator::Quadrature(QuadSpec::new(1e-15, 1e-9, 40)?),
            };
            let rows = sweep_intensity(&cfg, &kinds, &grid, &channel, &estimator)?;
            save_intensity_csv(&rows, &out.path("sweep_intensity.csv"))?;
            out.finish(manifest!("sweep-intensity", a))
        }
        Command::SweepSinr(a) => {
            let grid = lin_space(a.gamma_min_db, a.gamma_max_db, a.n);
            let kinds: Vec<ProcessKind> = a.processes.iter().map(|&p| p.into()).collect();
            let rows = sweep_sinr(&cfg, &kinds, a.intensity_km2, &grid, &channel, a.airtime_s)?;
            save_sinr_csv(&rows, &out.path("sweep_sinr.csv"))?;
            out.finish(manifest!("sweep-sinr", a))
        }
        Command::Deployment(a) => {
            let dep = match (&a.sites, a.synthetic_jitter) {
                (Some(path), _) => {
                    let sites = load_sites(path)?;
                    for w in &sites.warnings {
                        eprintln!("warning: {w}");
                    }
                    let (dep, warnings) = Deployment::from_sites(&sites)?;
                    for w in warnings {
                        eprintln!("warning: {w}");
                    }
                    dep
                }
                (None, Some(jitter)) => {
                    let side = a.synthetic_side_km * 1e3;
                    let region = Window::square(side)?;
                    let pts = jittered_lattice(
                        a.synthetic_intensity_km2 * 1e-6,
                        &region,
                        jitter,
                        common.seed,
                    )?;
                    let frame = default_frame(&pts, 0.05, 1.0)?;
                    let ids = (0..pts.len()).map(|i| format!("s{i}")).collect();
                    Deployment::new(ids, pts, frame)?
                }
                (None, None) => {
                    return Err(usage("deployment needs --sites or --synthetic-jitter"))
                }
            };
            let records =
                dep.simulate(a.device_intensity_km2 * 1e-6, &cfg, &channel, common.seed)?;
            let bins = binned_energy_vs_intensity(&records, a.bins, &cfg, &channel)?;
            eprintln!(
                "{} sites, {} interior cells, {} devices",
                dep.points.len(),
                dep.interior_count(),
                records.len()
            );
            dep.save_cells_csv(&out.path("cells.csv"))?;
            dep.save_devices_csv(&records, &out.path("devices.csv"))?;
            save_bins_csv(&bins, &out.path("bins.csv"))?;
            out.finish(manifest!("deployment", a))
        }
        Command::FitPower(a) => {
            let samples = load_power_samples(&a.input)?;
            let fit = fit_power_model(&samples)?;
            println!("conv_factor  {:.6}", fit.conv_factor);
            println!("overhead_w   {:.6}", fit.overhead_w);
            println!("residual_w   {:.3e}", fit.residual_w);
            out.csv("fit_power.csv", &[fit])?;
            out.finish(manifest!("fit-power", a))
        }
        Command::Validate => {
            let checks = run_all();
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("{mark}  {:width$}  {}", c.name, c.detail);
            }
            out.csv("validate.csv", &checks)?;
            out.finish(manifest!("validate", &()))?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Failure::Validation(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
    }
}
