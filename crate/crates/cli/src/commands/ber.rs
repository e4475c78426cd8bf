use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use serde::Serialize;

use hypermask::link::{
    ber_predict, ber_sweep, decide, prbs, prbs_seed, run_link, BerResult, LinkRun, SymbolStats,
    ThresholdChoice,
};
use hypermask::stats::histogram;

use crate::config::RunConfig;
use crate::exit::Invalid;
use crate::output::{write_json, Meta, Table};

#[derive(Debug, Args)]
pub struct BerArgs {
    #[command(subcommand)]
    pub preset: Preset,
}

#[derive(Debug, Subcommand)]
pub enum Preset {
    /// One PRBS run over the configured link, reported as JSON.
    Run {
        #[arg(long, default_value = "ber.json")]
        out: PathBuf,
    },
    /// Per-class histograms of the decision statistic with and without the IDF.
    Histogram {
        #[arg(long, default_value = "ber_histogram.csv")]
        out: PathBuf,
    },
    /// Measured BER over `link.amplitudes`.
    Sweep {
        #[arg(long, default_value = "ber_sweep.csv")]
        out: PathBuf,
    },
    /// Predicted and counted BER against the decision threshold.
    ThresholdScan {
        #[arg(long, default_value = "ber_threshold.csv")]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct RunReport<'a> {
    ber: &'a BerResult,
    bit_rate: f64,
    filtered: &'a SymbolStats,
    filtered_threshold: &'a ThresholdChoice,
    unfiltered: &'a SymbolStats,
    unfiltered_threshold: &'a ThresholdChoice,
    /// Filtered over unfiltered class separation; ideally `sqrt(N)`.
    separation_gain: f64,
    sqrt_n: f64,
}

fn link_run(cfg: &RunConfig) -> Result<LinkRun> {
    let seed = cfg.require_seed()?;
    if cfg.link.bits == 0 {
        bail!(Invalid("link.bits must be positive".into()));
    }
    let bits = prbs(cfg.link.bits, prbs_seed(seed))?;
    Ok(run_link(&cfg.params()?, &bits, &cfg.link()?, seed)?)
}

fn class_split<'a>(xs: &'a [f64], labels: impl Iterator<Item = bool> + 'a) -> (Vec<f64>, Vec<f64>) {
    let (mut zero, mut one) = (Vec::new(), Vec::new());
    for (&x, b) in xs.iter().zip(labels) {
        if b {
            one.push(x);
        } else {
            zero.push(x);
        }
    }
    (zero, one)
}

fn range(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < hi {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

pub fn run(cfg: &RunConfig, args: &BerArgs) -> Result<()> {
    match &args.preset {
        Preset::Run { out } => {
            let r = link_run(cfg)?;
            let sqrt_n = (cfg.link.samples_per_bit as f64).sqrt();
            let report = RunReport {
                ber: &r.ber,
                bit_rate: cfg.modulation()?.bit_rate(),
                filtered: &r.filtered,
                filtered_threshold: &r.filtered_threshold,
                unfiltered: &r.unfiltered,
                unfiltered_threshold: &r.unfiltered_threshold,
                separation_gain: r.filtered.separation() / r.unfiltered.separation(),
                sqrt_n,
            };
            write_json(out, &Meta::new("ber run", cfg), &report)?;
        }
        Preset::Histogram { out } => {
            let r = link_run(cfg)?;
            let n = cfg.link.samples_per_bit;
            let bins = cfg.link.histogram_bins.max(1);
            let mut t = Table::new(&["stage", "bin_lo", "bin_hi", "count_0", "count_1"]);
            let filtered = class_split(&r.decision_stats, r.sent.iter().copied());
            let unfiltered = class_split(
                &r.samples,
                r.sent.iter().flat_map(|&b| std::iter::repeat_n(b, n)),
            );
            for (stage, (zero, one), all) in [
                ("filtered", filtered, &r.decision_stats),
                ("unfiltered", unfiltered, &r.samples),
            ] {
                let (lo, hi) = range(all);
                let h0 = histogram(&zero, lo, hi, bins);
                let h1 = histogram(&one, lo, hi, bins);
                for k in 0..bins {
                    t.row([
                        stage.to_string(),
                        h0.edges[k].to_string(),
                        h0.edges[k + 1].to_string(),
                        h0.counts[k].to_string(),
                        h1.counts[k].to_string(),
                    ]);
                }
            }
            t.note("samples_per_bit", n);
            t.write(out, &Meta::new("ber histogram", cfg))?;
        }
        Preset::Sweep { out } => {
            let seed = cfg.require_seed()?;
            let points = ber_sweep(
                &cfg.params()?,
                &cfg.link.amplitudes,
                &cfg.link()?,
                cfg.link.bits,
                seed,
            )?;
            let mut t = Table::new(&[
                "amplitude",
                "bits",
                "errors",
                "ber",
                "ci_low",
                "ci_high",
                "predicted_ber",
                "threshold",
            ]);
            for pt in &points {
                let b = &pt.ber;
                t.row([
                    pt.amplitude,
                    b.bits as f64,
                    b.errors as f64,
                    b.measured_ber,
                    b.ci_low,
                    b.ci_high,
                    b.predicted_ber.unwrap_or(f64::NAN),
                    b.threshold.unwrap_or(f64::NAN),
                ]);
            }
            t.write(out, &Meta::new("ber sweep", cfg))?;
        }
        Preset::ThresholdScan { out } => {
            let r = link_run(cfg)?;
            let s = &r.filtered;
            let lo = s.mu0 - 3.0 * s.sigma0;
            let hi = s.mu1 + 3.0 * s.sigma1;
            let m = cfg.link.scan_points.max(2);
            let mut t = Table::new(&["lambda", "predicted_ber", "measured_ber"]);
            t.note("optimal_lambda", r.filtered_threshold.lambda);
            for k in 0..m {
                let lambda = lo + (hi - lo) * k as f64 / (m - 1) as f64;
                let decided = decide(&r.decision_stats, lambda);
                let errors = decided.iter().zip(&r.sent).filter(|(a, b)| a != b).count();
                t.row([
                    lambda,
                    ber_predict(s, lambda),
                    errors as f64 / r.sent.len() as f64,
                ]);
            }
            t.write(out, &Meta::new("ber threshold-scan", cfg))?;
        }
    }
    Ok(())
}
