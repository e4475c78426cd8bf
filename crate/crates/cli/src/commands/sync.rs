use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};

use hypermask::stats::linear_fit;
use hypermask::sync::{fit_deviation_model, stability_check, sync_sweep, SyncRun};

use crate::config::RunConfig;
use crate::exit::Invalid;
use crate::output::{write_json, Meta, Table};

#[derive(Debug, Args)]
pub struct SyncArgs {
    #[command(subcommand)]
    pub preset: Preset,
}

#[derive(Debug, Subcommand)]
pub enum Preset {
    /// Sync error against channel noise at the configured gamma.
    SigmaSweep {
        #[arg(long, default_value = "sync_sigma.csv")]
        out: PathBuf,
    },
    /// Sync error over the `sync.gammas × sync.sigmas` grid.
    Grid {
        #[arg(long, default_value = "sync_grid.csv")]
        out: PathBuf,
    },
    /// Normalized deviation against noise with the `sqrt(A² + (σB)²)` fit.
    DeviationFit {
        #[arg(long, default_value = "sync_deviation.csv")]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

const COLUMNS: [&str; 8] = [
    "gamma",
    "sigma",
    "rms_x",
    "rms_y",
    "rms_z",
    "rms_z_register",
    "correlation",
    "delta_n",
];

fn push_run(t: &mut Table, r: &SyncRun) {
    t.row([
        r.gamma,
        r.sigma,
        r.rms_error[0],
        r.rms_error[1],
        r.rms_error[2],
        r.rms_z_register,
        r.correlation,
        r.delta_n,
    ]);
}

fn sigmas(cfg: &RunConfig) -> Result<&[f64]> {
    let s = &cfg.sync.sigmas;
    if s.is_empty() || s.iter().any(|v| !(*v >= 0.0)) {
        bail!(Invalid("sync.sigmas must be a non-empty list of values >= 0".into()));
    }
    Ok(s)
}

pub fn run(cfg: &RunConfig, args: &SyncArgs) -> Result<()> {
    let seed = cfg.require_seed()?;
    let p = cfg.params()?;
    let n = cfg.sync.iterations;
    match &args.preset {
        Preset::SigmaSweep { out } => {
            let runs = sync_sweep(&p, &[p.gamma], sigmas(cfg)?, n, seed)?;
            let mut t = Table::new(&COLUMNS);
            let noisy: Vec<&SyncRun> = runs.iter().filter(|r| r.sigma > 0.0).collect();
            if noisy.len() >= 3 {
                let xs: Vec<f64> = noisy.iter().map(|r| r.sigma).collect();
                for (k, name) in ["x", "y", "z"].iter().enumerate() {
                    let ys: Vec<f64> = noisy.iter().map(|r| r.rms_error[k]).collect();
                    if let Ok(f) = linear_fit(&xs, &ys) {
                        t.note(&format!("fit_{name}"), format!("slope={},r2={}", f.slope, f.r_squared));
                    }
                }
            }
            for r in &runs {
                push_run(&mut t, r);
            }
            t.write(out, &Meta::new("sync sigma-sweep", cfg))?;
        }
        Preset::Grid { out } => {
            if cfg.sync.gammas.is_empty() {
                bail!(Invalid("sync.gammas must not be empty".into()));
            }
            let runs = sync_sweep(&p, &cfg.sync.gammas, sigmas(cfg)?, n, seed)?;
            let mut header = COLUMNS.to_vec();
            header.push("stable");
            let mut t = Table::new(&header);
            for r in &runs {
                let stable = stability_check(&p.with_gamma(r.gamma)).stable;
                let mut row: Vec<String> = [
                    r.gamma,
                    r.sigma,
                    r.rms_error[0],
                    r.rms_error[1],
                    r.rms_error[2],
                    r.rms_z_register,
                    r.correlation,
                    r.delta_n,
                ]
                .iter()
                .map(f64::to_string)
                .collect();
                row.push(stable.to_string());
                t.row(row);
            }
            t.write(out, &Meta::new("sync grid", cfg))?;
        }
        Preset::DeviationFit { out, report } => {
            let runs = sync_sweep(&p, &[p.gamma], sigmas(cfg)?, n, seed)?;
            let pts: Vec<(f64, f64)> = runs.iter().map(|r| (r.sigma, r.delta_n)).collect();
            let fit = fit_deviation_model(&pts)?;
            let mut t = Table::new(&["sigma", "delta_n", "model"]);
            t.note("fit", format!("A={},B={},r2={}", fit.a, fit.b, fit.r_squared));
            for (s, d) in &pts {
                t.row([*s, *d, fit.predict(*s)]);
            }
            t.write(out, &Meta::new("sync deviation-fit", cfg))?;
            if let Some(path) = report {
                write_json(path, &Meta::new("sync deviation-fit", cfg), &fit)?;
            }
        }
    }
    Ok(())
}
