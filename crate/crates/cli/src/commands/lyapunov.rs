use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use hypermask::analysis::{
    le_analytic, le_eckmann_ruelle, le_qr, le_vs_settling, le_wolf, ErOptions, LeSpectrum,
    WolfOptions,
};
use hypermask::map::{generate_trajectory, random_init};
use hypermask::seeding::{stream_seed, Stream};
use hypermask::{Mode, SettlingConfig, SystemParams, Trajectory};

use crate::config::{LeMethodChoice, RunConfig};
use crate::exit::Invalid;
use crate::output::{write_json, Meta, Table};

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    #[command(subcommand)]
    pub preset: Preset,
}

#[derive(Debug, Subcommand)]
pub enum Preset {
    /// Closed-form spectrum for a constant-Jacobian fold (beta 0 or 1).
    Analytic {
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectrum of one trajectory with the configured estimator(s).
    Estimate {
        #[arg(long, default_value = "lyapunov.json")]
        out: PathBuf,
    },
    /// QR spectrum (plus ER and Wolf with `lyapunov.method = "all"`) across beta.
    BetaSweep {
        #[arg(long, default_value = "lyapunov_beta.csv")]
        out: PathBuf,
    },
    /// QR spectrum of the incomplete-settling map across `lyapunov.t_n`.
    Settling {
        #[arg(long, default_value = "lyapunov_settling.csv")]
        out: PathBuf,
    },
}

fn trajectory(cfg: &RunConfig, p: &SystemParams, mode: Mode, seed: u64) -> Result<Trajectory> {
    let mut t = generate_trajectory(
        random_init(stream_seed(seed, Stream::DriveInit)),
        cfg.lyapunov.iterations,
        p,
        mode,
        cfg.map.transient,
    )?;
    t.seed = Some(seed);
    Ok(t)
}

#[derive(Serialize)]
struct Estimates {
    qr: Option<LeSpectrum>,
    eckmann_ruelle: Option<LeSpectrum>,
    wolf: Option<LeSpectrum>,
}

fn estimate(t: &Trajectory, method: LeMethodChoice) -> Result<Estimates> {
    let want = |m| method == m || method == LeMethodChoice::All;
    Ok(Estimates {
        qr: want(LeMethodChoice::Qr).then(|| le_qr(t)).transpose()?,
        eckmann_ruelle: want(LeMethodChoice::Er)
            .then(|| le_eckmann_ruelle(&t.states, &ErOptions::default()))
            .transpose()?,
        wolf: want(LeMethodChoice::Wolf)
            .then(|| le_wolf(t, &WolfOptions::default()))
            .transpose()?,
    })
}

fn beta_grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    let l = &cfg.lyapunov;
    if !(l.beta_step > 0.0 && l.beta_start <= l.beta_stop) {
        bail!(Invalid(format!(
            "beta grid {}..{} step {} is empty",
            l.beta_start, l.beta_stop, l.beta_step
        )));
    }
    let n = ((l.beta_stop - l.beta_start) / l.beta_step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| l.beta_start + i as f64 * l.beta_step).collect())
}

pub fn run(cfg: &RunConfig, args: &LyapunovArgs) -> Result<()> {
    match &args.preset {
        Preset::Analytic { beta, out } => {
            let p = cfg.params()?.with_beta(*beta);
            let s = le_analytic(&p)?;
            let e = &s.exponents;
            println!("lambda = ({:.3}, {:.3}, {:.3})", e[0], e[1], e[2]);
            println!("sum = {:.3e}", s.sum());
            if let Some(path) = out {
                write_json(path, &Meta::new("lyapunov analytic", cfg), &s)?;
            }
        }
        Preset::Estimate { out } => {
            let seed = cfg.require_seed()?;
            let t = trajectory(cfg, &cfg.params()?, cfg.mode()?, seed)?;
            let est = estimate(&t, cfg.lyapunov.method)?;
            write_json(out, &Meta::new("lyapunov estimate", cfg), &est)?;
        }
        Preset::BetaSweep { out } => {
            let seed = cfg.require_seed()?;
            let p = cfg.params()?;
            let mode = cfg.mode()?;
            let method = cfg.lyapunov.method;
            let rows: Vec<(f64, Estimates)> = beta_grid(cfg)?
                .par_iter()
                .map(|&beta| {
                    let t = trajectory(cfg, &p.with_beta(beta), mode, seed)?;
                    Ok((beta, estimate(&t, method)?))
                })
                .collect::<Result<_>>()?;
            let mut header = vec!["beta"];
            let cols = |m: &Option<LeSpectrum>| m.is_some();
            let first = &rows[0].1;
            if cols(&first.qr) {
                header.extend(["qr_l1", "qr_l2", "qr_l3", "qr_skipped"]);
            }
            if cols(&first.eckmann_ruelle) {
                header.extend(["er_l1", "er_l2", "er_l3", "er_low_confidence"]);
            }
            if cols(&first.wolf) {
                header.extend(["wolf_l1", "wolf_low_confidence"]);
            }
            let mut table = Table::new(&header);
            for (beta, e) in &rows {
                let mut r = vec![beta.to_string()];
                if let Some(s) = &e.qr {
                    r.extend(s.exponents.iter().map(f64::to_string));
                    r.push(s.skipped_fraction().to_string());
                }
                if let Some(s) = &e.eckmann_ruelle {
                    r.extend(s.exponents.iter().map(f64::to_string));
                    r.push(s.low_confidence.to_string());
                }
                if let Some(s) = &e.wolf {
                    r.push(s.largest().to_string());
                    r.push(s.low_confidence.to_string());
                }
                table.row(r);
            }
            table.write(out, &Meta::new("lyapunov beta-sweep", cfg))?;
        }
        Preset::Settling { out } => {
            let seed = cfg.require_seed()?;
            let p = cfg.params()?;
            for &t in &cfg.lyapunov.t_n {
                SettlingConfig::new(t)?;
            }
            let points = le_vs_settling(&p, &cfg.lyapunov.t_n, cfg.lyapunov.iterations, seed)?;
            let ideal = le_qr(&trajectory(cfg, &p, Mode::Ideal, seed)?)?;
            let mut table = Table::new(&["t_n", "weight", "l1", "l2", "l3"]);
            table.note(
                "ideal",
                format!(
                    "{},{},{}",
                    ideal.exponents[0], ideal.exponents[1], ideal.exponents[2]
                ),
            );
            for pt in &points {
                let w = SettlingConfig::new(pt.t_n)?.weight();
                let e = &pt.spectrum.exponents;
                table.row([pt.t_n, w, e[0], e[1], e[2]]);
            }
            table.write(out, &Meta::new("lyapunov settling", cfg))?;
        }
    }
    Ok(())
}
