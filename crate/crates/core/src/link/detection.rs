//! Matched filtering, Gaussian symbol models and threshold selection.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::stats::{mean, sample_std};

/// Mean of each complete `samples_per_bit` block; a trailing partial block is dropped.
pub fn integrate_and_dump(samples: &[f64], samples_per_bit: usize) -> Vec<f64> {
    if samples_per_bit == 0 {
        return Vec::new();
    }
    let rem = samples.len() % samples_per_bit;
    if rem != 0 {
        log::warn!("integrate_and_dump: dropping partial trailing block of {rem} samples");
    }
    samples
        .chunks_exact(samples_per_bit)
        .map(|c| c.iter().sum::<f64>() / samples_per_bit as f64)
        .collect()
}

/// Per-class Gaussian model of the decision statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolStats {
    pub mu0: f64,
    pub sigma0: f64,
    pub mu1: f64,
    pub sigma1: f64,
    pub p0: f64,
    pub p1: f64,
    pub n0: usize,
    pub n1: usize,
}

impl SymbolStats {
    /// `|mu1 - mu0|` over the RMS of the two class spreads.
    pub fn separation(&self) -> f64 {
        (self.mu1 - self.mu0).abs() / (0.5 * (self.sigma0.powi(2) + self.sigma1.powi(2))).sqrt()
    }
}

fn class_moments(stats: &[f64], labels: &[bool]) -> Result<SymbolStats> {
    if stats.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: stats.len(),
            right: labels.len(),
        });
    }
    let (ones, zeros): (Vec<(f64, bool)>, Vec<(f64, bool)>) =
        stats.iter().copied().zip(labels.iter().copied()).partition(|(_, l)| *l);
    if ones.len() < 2 || zeros.len() < 2 {
        return Err(Error::SingleClass);
    }
    let c0: Vec<f64> = zeros.into_iter().map(|(v, _)| v).collect();
    let c1: Vec<f64> = ones.into_iter().map(|(v, _)| v).collect();
    let n = (c0.len() + c1.len()) as f64;
    Ok(SymbolStats {
        mu0: mean(&c0),
        sigma0: sample_std(&c0),
        mu1: mean(&c1),
        sigma1: sample_std(&c1),
        p0: c0.len() as f64 / n,
        p1: c1.len() as f64 / n,
        n0: c0.len(),
        n1: c1.len(),
    })
}

/// Sample mean, sample standard deviation and empirical prior per class.
pub fn fit_symbol_gaussians(stats: &[f64], labels: &[bool]) -> Result<SymbolStats> {
    let s = class_moments(stats, labels)?;
    if s.sigma0 <= 0.0 {
        return Err(Error::ZeroSpread { class: 0 });
    }
    if s.sigma1 <= 0.0 {
        return Err(Error::ZeroSpread { class: 1 });
    }
    Ok(s)
}

/// As [`fit_symbol_gaussians`], but spreads below `floor` are raised to it.
///
/// A noiseless, synchronized link recovers the NRZ levels exactly, so a
/// class can have no spread at all; the floor keeps the model defined.
pub fn fit_symbol_gaussians_floored(stats: &[f64], labels: &[bool], floor: f64) -> Result<SymbolStats> {
    let mut s = class_moments(stats, labels)?;
    s.sigma0 = s.sigma0.max(floor);
    s.sigma1 = s.sigma1.max(floor);
    Ok(s)
}

/// `p(0|1) p(1) + p(1|0) p(0)` for the rule "decide 1 when x > lambda".
pub fn ber_predict(s: &SymbolStats, lambda: f64) -> f64 {
    let miss = 0.5 * erfc((s.mu1 - lambda) / (s.sigma1 * SQRT_2));
    let false_alarm = 0.5 * erfc((lambda - s.mu0) / (s.sigma0 * SQRT_2));
    miss * s.p1 + false_alarm * s.p0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub lambda: f64,
    pub ber: f64,
}

const SCAN_POINTS: usize = 2001;

/// Threshold minimizing [`ber_predict`]: a 2001-point scan over `[mu0, mu1]`
/// refined by golden-section search around the best grid point.
pub fn optimal_threshold(s: &SymbolStats) -> Result<ThresholdChoice> {
    if !(s.mu0 < s.mu1) {
        return Err(Error::ClassesNotSeparated {
            mu0: s.mu0,
            mu1: s.mu1,
        });
    }
    let h = (s.mu1 - s.mu0) / (SCAN_POINTS - 1) as f64;
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for k in 0..SCAN_POINTS {
        let b = ber_predict(s, s.mu0 + h * k as f64);
        if b < best {
            best = b;
            best_k = k;
        }
    }
    let centre = s.mu0 + h * best_k as f64;
    let (mut lo, mut hi) = ((centre - h).max(s.mu0), (centre + h).min(s.mu1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (ber_predict(s, c), ber_predict(s, d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = ber_predict(s, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = ber_predict(s, d);
        }
    }
    let lambda = 0.5 * (lo + hi);
    let ber = ber_predict(s, lambda);
    Ok(if ber <= best {
        ThresholdChoice { lambda, ber }
    } else {
        ThresholdChoice {
            lambda: centre,
            ber: best,
        }
    })
}

/// Hard decisions `x > lambda`.
pub fn decide(stats: &[f64], lambda: f64) -> Vec<bool> {
    stats.iter().map(|&x| x > lambda).collect()
}

/// Decision-directed threshold tracking.
///
/// Symbols are decided with the current threshold and the decisions are used
/// as labels for running per-class statistics. Every `update_every` symbols,
/// once both classes have been seen, the threshold is re-optimized.
#[derive(Debug, Clone)]
pub struct AdaptiveThreshold {
    lambda: f64,
    update_every: usize,
    seen: usize,
    sums: [(f64, f64, usize); 2],
}

impl AdaptiveThreshold {
    pub fn new(initial: f64, update_every: usize) -> Self {
        Self {
            lambda: initial,
            update_every: update_every.max(1),
            seen: 0,
            sums: [(0.0, 0.0, 0); 2],
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn current_stats(&self) -> Option<SymbolStats> {
        let [(s0, q0, n0), (s1, q1, n1)] = self.sums;
        if n0 < 2 || n1 < 2 {
            return None;
        }
        let var = |s: f64, q: f64, n: usize| (q - s * s / n as f64) / (n - 1) as f64;
        let n = (n0 + n1) as f64;
        Some(SymbolStats {
            mu0: s0 / n0 as f64,
            sigma0: var(s0, q0, n0).max(0.0).sqrt(),
            mu1: s1 / n1 as f64,
            sigma1: var(s1, q1, n1).max(0.0).sqrt(),
            p0: n0 as f64 / n,
            p1: n1 as f64 / n,
            n0,
            n1,
        })
    }

    pub fn push(&mut self, x: f64) -> bool {
        let bit = x > self.lambda;
        let e = &mut self.sums[bit as usize];
        e.0 += x;
        e.1 += x * x;
        e.2 += 1;
        self.seen += 1;
        if self.seen % self.update_every == 0 {
            if let Some(s) = self.current_stats() {
                if s.sigma0 > 0.0 && s.sigma1 > 0.0 {
                    if let Ok(t) = optimal_threshold(&s) {
                        self.lambda = t.lambda;
                    }
                }
            }
        }
        bit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn two_class(n: usize, s: &SymbolStats, seed: u64) -> (Vec<f64>, Vec<bool>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g0 = Normal::new(s.mu0, s.sigma0).unwrap();
        let g1 = Normal::new(s.mu1, s.sigma1).unwrap();
        let labels: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
        let xs = labels
            .iter()
            .map(|&l| if l { g1.sample(&mut rng) } else { g0.sample(&mut rng) })
            .collect();
        (xs, labels)
    }

    fn symmetric(sigma: f64) -> SymbolStats {
        SymbolStats {
            mu0: 0.0,
            sigma0: sigma,
            mu1: 1.0,
            sigma1: sigma,
            p0: 0.5,
            p1: 0.5,
            n0: 1,
            n1: 1,
        }
    }

    #[test]
    fn idf_basics() {
        let c = integrate_and_dump(&[0.3; 100], 10);
        assert!(c.len() == 10 && c.iter().all(|v| (v - 0.3).abs() < 1e-15));
        let nrz: Vec<f64> = (0..60).map(|i| if (i / 5) % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let s = integrate_and_dump(&nrz, 5);
        assert!(s
            .iter()
            .enumerate()
            .all(|(k, v)| (v - if k % 2 == 0 { 0.1 } else { -0.1 }).abs() < 1e-15));
        assert_eq!(integrate_and_dump(&[1.0; 23], 10).len(), 2);
    }

    #[test]
    fn idf_reduces_variance_by_n() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let g = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<f64> = (0..500_000).map(|_| g.sample(&mut rng)).collect();
        let s = integrate_and_dump(&x, 50);
        let v = crate::stats::variance(&s);
        assert!((v * 50.0 - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn gaussian_fit_recovers_parameters() {
        let truth = SymbolStats {
            mu0: -0.2,
            sigma0: 0.05,
            mu1: 0.3,
            sigma1: 0.08,
            p0: 1.0 / 3.0,
            p1: 2.0 / 3.0,
            n0: 0,
            n1: 0,
        };
        let (xs, ls) = two_class(30_000, &truth, 4);
        let f = fit_symbol_gaussians(&xs, &ls).unwrap();
        let se0 = truth.sigma0 / (f.n0 as f64).sqrt();
        let se1 = truth.sigma1 / (f.n1 as f64).sqrt();
        assert!((f.mu0 - truth.mu0).abs() < 4.0 * se0);
        assert!((f.mu1 - truth.mu1).abs() < 4.0 * se1);
        assert!((f.sigma0 / truth.sigma0 - 1.0).abs() < 0.03);
        assert!((f.sigma1 / truth.sigma1 - 1.0).abs() < 0.03);
        assert!((f.p0 + f.p1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_fit_errors() {
        assert!(matches!(
            fit_symbol_gaussians(&[1.0, 2.0, 3.0], &[true, true, true]),
            Err(Error::SingleClass)
        ));
        assert!(fit_symbol_gaussians(&[1.0], &[true, false]).is_err());
        assert!(matches!(
            fit_symbol_gaussians(&[1.0, 1.0, 2.0, 3.0], &[false, false, true, true]),
            Err(Error::ZeroSpread { class: 0 })
        ));
    }

    #[test]
    fn ber_reference_value() {
        let s = SymbolStats {
            sigma0: 0.25,
            sigma1: 0.25,
            ..symmetric(0.25)
        };
        let want = 0.5 * erfc(2.0 / SQRT_2);
        assert!((ber_predict(&s, 0.5) - want).abs() < 1e-15);
        assert!((want - 0.02275).abs() < 1e-5);
        assert!((ber_predict(&s, -1e6) - s.p0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_threshold_is_midpoint() {
        let t = optimal_threshold(&symmetric(0.2)).unwrap();
        assert!((t.lambda - 0.5).abs() < 1e-6);
        assert!(optimal_threshold(&SymbolStats { mu1: -1.0, ..symmetric(0.2) }).is_err());
    }

    #[test]
    fn threshold_matches_stationarity_condition() {
        // d/dλ BER = p0 φ0(λ) - p1 φ1(λ) = 0
        let s = SymbolStats {
            mu0: -0.1,
            sigma0: 0.04,
            mu1: 0.12,
            sigma1: 0.07,
            p0: 0.4,
            p1: 0.6,
            n0: 1,
            n1: 1,
        };
        let t = optimal_threshold(&s).unwrap();
        let pdf = |x: f64, m: f64, sd: f64| (-(x - m).powi(2) / (2.0 * sd * sd)).exp() / sd;
        let g = |x: f64| s.p0 * pdf(x, s.mu0, s.sigma0) - s.p1 * pdf(x, s.mu1, s.sigma1);
        let (mut lo, mut hi) = (s.mu0, s.mu1);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(lo).signum() == g(m).signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        let step = (s.mu1 - s.mu0) / 2000.0;
        assert!((t.lambda - lo).abs() < step, "{} vs {lo}", t.lambda);
    }

    #[test]
    fn adaptive_threshold_converges() {
        let truth = SymbolStats {
            mu0: -0.1,
            sigma0: 0.03,
            mu1: 0.2,
            sigma1: 0.06,
            p0: 1.0 / 3.0,
            p1: 2.0 / 3.0,
            n0: 0,
            n1: 0,
        };
        let (xs, _) = two_class(20_000, &truth, 9);
        let mut a = AdaptiveThreshold::new(0.15, 100);
        for x in &xs {
            a.push(*x);
        }
        let opt = optimal_threshold(&truth).unwrap().lambda;
        assert!((a.lambda() - opt).abs() < 0.02, "{} vs {opt}", a.lambda());
    }
}
