//! Welch power spectral density and zero-order-hold compensation.
//!
//! Frequencies are in cycles per sample, so the clock of an unheld map
//! series is 1 and a series held for `L` samples per iteration has `f_clk = 1/L`.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest `|H_zoh|` that [`compensate_zoh`] will divide by.
pub const DEFAULT_ZOH_GUARD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchOptions {
    pub segment_length: usize,
    /// Fraction of a segment shared with the next one, in [0, 1).
    pub overlap: f64,
    /// Subtract each segment's mean before windowing.
    pub detrend: bool,
}

impl Default for WelchOptions {
    fn default() -> Self {
        Self {
            segment_length: 1024,
            overlap: 0.5,
            detrend: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Uniform grid from 0 to 1/2 cycles per sample (bins may be removed by ZOH compensation).
    pub frequencies: Vec<f64>,
    /// One-sided spectral density; integrates over frequency to the series variance.
    pub power: Vec<f64>,
    pub segment_length: usize,
    /// Samples shared between consecutive segments.
    pub overlap: usize,
    pub segments: usize,
}

impl PsdEstimate {
    /// Rectangle-rule integral of the density.
    pub fn total_power(&self) -> f64 {
        let df = 1.0 / self.segment_length as f64;
        self.power.iter().sum::<f64>() * df
    }

    /// Max/min density ratio in dB over `lo <= f <= hi`.
    pub fn ripple_db(&self, lo: f64, hi: f64) -> f64 {
        let (mut mn, mut mx) = (f64::INFINITY, 0.0f64);
        for (f, p) in self.frequencies.iter().zip(&self.power) {
            if *f >= lo && *f <= hi {
                mn = mn.min(*p);
                mx = mx.max(*p);
            }
        }
        10.0 * (mx / mn).log10()
    }
}

/// Averaged periodogram over Hann-windowed, overlapping segments.
pub fn welch_psd(series: &[f64], opts: &WelchOptions) -> Result<PsdEstimate> {
    let l = opts.segment_length;
    if l < 2 {
        return Err(Error::param("segment_length", l as f64, "must be at least 2"));
    }
    if !(0.0..1.0).contains(&opts.overlap) {
        return Err(Error::param("overlap", opts.overlap, "must be in [0, 1)"));
    }
    if series.len() < l {
        return Err(Error::InsufficientData {
            needed: l,
            got: series.len(),
        });
    }
    let overlap = ((l as f64) * opts.overlap).round() as usize;
    let hop = (l - overlap).max(1);
    let window: Vec<f64> = (0..l)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / l as f64).cos())
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(l);
    let bins = l / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); l];
    let mut segments = 0;
    let mut start = 0;
    while start + l <= series.len() {
        let seg = &series[start..start + l];
        let m = if opts.detrend {
            seg.iter().sum::<f64>() / l as f64
        } else {
            0.0
        };
        for (b, (x, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((x - m) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / (wss * segments as f64);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (l % 2 == 0 && k == l / 2) { 1.0 } else { 2.0 };
            a * scale * one_sided
        })
        .collect();
    let frequencies = (0..bins).map(|k| k as f64 / l as f64).collect();
    Ok(PsdEstimate {
        frequencies,
        power,
        segment_length: l,
        overlap,
        segments,
    })
}

/// `|sin(pi f / f_clk) / (pi f / f_clk)|`.
pub fn zoh_magnitude(f: f64, f_clk: f64) -> f64 {
    let x = PI * f / f_clk;
    if x.abs() < 1e-12 {
        1.0
    } else {
        (x.sin() / x).abs()
    }
}

/// Power gain `1 / |H_zoh(f)|²`, refused where `|H_zoh(f)| < guard`.
pub fn zoh_compensation(f: f64, f_clk: f64, guard: f64) -> Result<f64> {
    let h = zoh_magnitude(f, f_clk);
    if h < guard {
        return Err(Error::ZohNull { frequency: f });
    }
    Ok(1.0 / (h * h))
}

/// Divides the density by `|H_zoh|²`, dropping bins inside the guard band around nulls.
pub fn compensate_zoh(psd: &PsdEstimate, f_clk: f64, guard: f64) -> PsdEstimate {
    let mut frequencies = Vec::with_capacity(psd.frequencies.len());
    let mut power = Vec::with_capacity(psd.power.len());
    for (f, p) in psd.frequencies.iter().zip(&psd.power) {
        if let Ok(g) = zoh_compensation(*f, f_clk, guard) {
            frequencies.push(*f);
            power.push(p * g);
        }
    }
    PsdEstimate {
        frequencies,
        power,
        ..psd.clone()
    }
}

/// Sample-and-hold: repeats every sample `factor` times.
pub fn hold_upsample(series: &[f64], factor: usize) -> Vec<f64> {
    series
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, factor))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn sinusoid_peak() {
        let f0 = 0.125;
        let x: Vec<f64> = (0..16_384)
            .map(|n| (2.0 * PI * f0 * n as f64).sin())
            .collect();
        let p = welch_psd(&x, &WelchOptions::default()).unwrap();
        let (k, _) = p
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((p.frequencies[k] - f0).abs() < 1.0 / 1024.0);
    }

    #[test]
    fn zeros_give_zero_power() {
        let p = welch_psd(&[0.0; 4096], &WelchOptions::default()).unwrap();
        assert!(p.power.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn parseval_on_white_noise() {
        let x = noise(100_000, 1);
        let p = welch_psd(&x, &WelchOptions::default()).unwrap();
        let var = crate::stats::variance(&x);
        assert!((p.total_power() / var - 1.0).abs() < 0.05);
        assert_eq!(p.segments, (100_000 - 1024) / 512 + 1);
        assert!(p.frequencies.windows(2).all(|w| (w[1] - w[0] - 1.0 / 1024.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_short_series() {
        assert!(welch_psd(&[1.0; 100], &WelchOptions::default()).is_err());
    }

    #[test]
    fn zoh_values() {
        assert_eq!(zoh_magnitude(0.0, 1.0), 1.0);
        assert!(zoh_magnitude(1.0, 1.0) < 1e-15);
        assert!((zoh_magnitude(0.5, 1.0) - 2.0 / PI).abs() < 1e-15);
        assert!(matches!(
            zoh_compensation(0.999, 1.0, DEFAULT_ZOH_GUARD),
            Err(Error::ZohNull { .. })
        ));
    }

    #[test]
    fn zoh_round_trip_is_flat() {
        let f_clk = 1.0 / 8.0;
        let freqs: Vec<f64> = (0..=64).map(|k| k as f64 * f_clk / 128.0).collect();
        let shaped = PsdEstimate {
            power: freqs.iter().map(|f| 3.0 * zoh_magnitude(*f, f_clk).powi(2)).collect(),
            frequencies: freqs,
            segment_length: 256,
            overlap: 0,
            segments: 1,
        };
        let flat = compensate_zoh(&shaped, f_clk, DEFAULT_ZOH_GUARD);
        assert!(flat.power.iter().all(|p| (p - 3.0).abs() < 1e-12));
    }

    #[test]
    fn held_white_noise_is_flattened() {
        let l = 8;
        let held = hold_upsample(&noise(40_000, 2), l);
        assert_eq!(held.len(), 320_000);
        let p = welch_psd(&held, &WelchOptions::default()).unwrap();
        let f_clk = 1.0 / l as f64;
        let c = compensate_zoh(&p, f_clk, DEFAULT_ZOH_GUARD);
        assert!(p.ripple_db(0.05 * f_clk, 0.45 * f_clk) > c.ripple_db(0.05 * f_clk, 0.45 * f_clk));
        assert!(c.ripple_db(0.05 * f_clk, 0.45 * f_clk) < 6.0);
    }
}
