//! End-to-end link runs and bit-error-rate measurement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::detection::{
    decide, fit_symbol_gaussians_floored, integrate_and_dump, optimal_threshold, AdaptiveThreshold,
    SymbolStats, ThresholdChoice,
};
use super::masking::{channel_awgn, mask_transmit, receiver_init, unmask_receive, ModulationConfig};
use super::prbs::prbs;
use crate::error::{Error, Result};
use crate::map::{StateVector, SystemParams};
use crate::seeding::{stream_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerResult {
    pub bits: usize,
    pub errors: usize,
    pub measured_ber: f64,
    /// Two-sided 95% Clopper–Pearson interval.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Model BER at the threshold used, when a Gaussian model was fitted.
    pub predicted_ber: Option<f64>,
    pub threshold: Option<f64>,
}

fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact binomial interval for `errors` out of `n` at the given two-sided confidence.
///
/// With no errors the upper bound is `1 - (alpha/2)^(1/n)`, about `3.69/n` at 95%.
pub fn clopper_pearson(errors: usize, n: usize, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - confidence;
    let (k, nf) = (errors as f64, n as f64);
    let lo = if errors == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, k, nf - k + 1.0)
    };
    let hi = if errors == n {
        1.0
    } else if errors == 0 {
        1.0 - (alpha / 2.0).powf(1.0 / nf)
    } else {
        beta_quantile(1.0 - alpha / 2.0, k + 1.0, nf - k)
    };
    (lo, hi)
}

pub fn ber_measure(sent: &[bool], recovered: &[bool]) -> Result<BerResult> {
    if sent.len() != recovered.len() {
        return Err(Error::LengthMismatch {
            left: sent.len(),
            right: recovered.len(),
        });
    }
    if sent.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let errors = sent.iter().zip(recovered).filter(|(a, b)| a != b).count();
    let (ci_low, ci_high) = clopper_pearson(errors, sent.len(), 0.95);
    Ok(BerResult {
        bits: sent.len(),
        errors,
        measured_ber: errors as f64 / sent.len() as f64,
        ci_low,
        ci_high,
        predicted_ber: None,
        threshold: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Minimizer of the fitted Gaussian model, trained on the known bits.
    Optimal,
    /// Decision-directed re-estimation every `update_every` symbols, starting at 0.
    Adaptive { update_every: usize },
    Fixed { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub modulation: ModulationConfig,
    /// AWGN standard deviation on the transmitted scalar.
    pub channel_sigma: f64,
    /// Relative error applied to the receiver's `a`, `b`, `c`.
    pub receiver_mismatch: f64,
    pub threshold: ThresholdMode,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            modulation: ModulationConfig::default(),
            channel_sigma: 0.0,
            receiver_mismatch: 0.0,
            threshold: ThresholdMode::Optimal,
        }
    }
}

/// Class spreads below this fraction of the amplitude are treated as this value.
const SPREAD_FLOOR: f64 = 1e-12;

/// Seed for the PRBS-23 register derived from a run seed (never zero).
pub fn prbs_seed(seed: u64) -> u64 {
    (stream_seed(seed, Stream::Bits) & 0x7F_FFFF).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRun {
    pub sent: Vec<bool>,
    pub decided: Vec<bool>,
    /// Recovered samples after the preamble.
    pub samples: Vec<f64>,
    /// Integrate-and-dump outputs, one per bit.
    pub decision_stats: Vec<f64>,
    pub filtered: SymbolStats,
    pub filtered_threshold: ThresholdChoice,
    /// Model of the raw samples labelled with their bit (no matched filter).
    pub unfiltered: SymbolStats,
    pub unfiltered_threshold: ThresholdChoice,
    pub ber: BerResult,
}

/// Bit decisions from a received series without knowledge of the sent bits.
///
/// [`ThresholdMode::Optimal`] has no training data here and falls back to the
/// NRZ midpoint 0.
pub fn receive_bits(
    received: &[f64],
    p: &SystemParams,
    init: StateVector,
    modulation: &ModulationConfig,
    mode: ThresholdMode,
) -> Vec<bool> {
    let rec = unmask_receive(received, p, init);
    let stats = integrate_and_dump(&rec[modulation.preamble.min(rec.len())..], modulation.samples_per_bit);
    match mode {
        ThresholdMode::Optimal => decide(&stats, 0.0),
        ThresholdMode::Fixed { lambda } => decide(&stats, lambda),
        ThresholdMode::Adaptive { update_every } => {
            let mut a = AdaptiveThreshold::new(0.0, update_every);
            stats.iter().map(|&x| a.push(x)).collect()
        }
    }
}

/// Mask, send through AWGN, unmask with the (possibly mismatched) receiver,
/// matched-filter, threshold and count errors.
pub fn run_link(p: &SystemParams, bits: &[bool], cfg: &LinkConfig, seed: u64) -> Result<LinkRun> {
    let m = &cfg.modulation;
    let masked = mask_transmit(p, bits, m, seed)?;
    let received = channel_awgn(&masked.w_star, cfg.channel_sigma, stream_seed(seed, Stream::Noise))?;
    let rx_params = p.with_mismatch(cfg.receiver_mismatch);
    rx_params.validate()?;
    let rec = unmask_receive(&received, &rx_params, receiver_init(seed));
    let samples = rec[m.preamble..].to_vec();
    let decision_stats = integrate_and_dump(&samples, m.samples_per_bit);

    let floor = SPREAD_FLOOR * m.amplitude.max(f64::MIN_POSITIVE);
    let filtered = fit_symbol_gaussians_floored(&decision_stats, bits, floor)?;
    let filtered_threshold = optimal_threshold(&filtered)?;
    let labels: Vec<bool> = bits
        .iter()
        .flat_map(|&b| std::iter::repeat_n(b, m.samples_per_bit))
        .collect();
    let unfiltered = fit_symbol_gaussians_floored(&samples, &labels, floor)?;
    let unfiltered_threshold = optimal_threshold(&unfiltered)?;

    let (decided, lambda) = match cfg.threshold {
        ThresholdMode::Optimal => (
            decide(&decision_stats, filtered_threshold.lambda),
            filtered_threshold.lambda,
        ),
        ThresholdMode::Fixed { lambda } => (decide(&decision_stats, lambda), lambda),
        ThresholdMode::Adaptive { update_every } => {
            let mut a = AdaptiveThreshold::new(0.0, update_every);
            let d = decision_stats.iter().map(|&x| a.push(x)).collect();
            (d, a.lambda())
        }
    };
    let mut ber = ber_measure(bits, &decided)?;
    ber.threshold = Some(lambda);
    ber.predicted_ber = Some(super::detection::ber_predict(&filtered, lambda));
    Ok(LinkRun {
        sent: bits.to_vec(),
        decided,
        samples,
        decision_stats,
        filtered,
        filtered_threshold,
        unfiltered,
        unfiltered_threshold,
        ber,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub amplitude: f64,
    pub ber: BerResult,
}

/// [`run_link`] at each amplitude with the same PRBS bits and seed.
pub fn ber_sweep(
    p: &SystemParams,
    amplitudes: &[f64],
    cfg: &LinkConfig,
    n_bits: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if amplitudes.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if amplitudes.iter().any(|a| !(*a > 0.0)) || amplitudes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "amplitudes",
            amplitudes[0],
            "must be positive and strictly ascending",
        ));
    }
    let bits = prbs(n_bits, prbs_seed(seed))?;
    amplitudes
        .par_iter()
        .map(|&amplitude| {
            let mut c = *cfg;
            c.modulation.amplitude = amplitude;
            let run = run_link(p, &bits, &c, seed)?;
            Ok(SweepPoint {
                amplitude,
                ber: run.ber,
            })
        })
        .collect()
}
