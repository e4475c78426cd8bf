//! Grassberger–Procaccia correlation dimension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::StateVector;
use crate::stats::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationOptions {
    /// Number of log-spaced radii.
    pub n_radii: usize,
    /// Explicit radius range; `None` spans three decades below half the data extent.
    pub radii: Option<(f64, f64)>,
    /// Minimum R² for a window of radii to count as a scaling region.
    pub min_r_squared: f64,
    /// Minimum number of radii in the scaling region.
    pub min_window: usize,
    /// Radii with fewer pairs than this are not used.
    pub min_pairs: u64,
    /// Longer series are thinned by striding down to this many points.
    pub max_points: usize,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self {
            n_radii: 24,
            radii: None,
            min_r_squared: 0.995,
            min_window: 6,
            min_pairs: 10,
            max_points: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationDimension {
    pub dimension: f64,
    /// Standard error of the fitted slope.
    pub std_error: f64,
    pub r_squared: f64,
    /// Radii bounding the selected scaling region.
    pub scaling_range: (f64, f64),
    pub radii: Vec<f64>,
    /// Correlation sum `C(r)` at every radius.
    pub correlation_sums: Vec<f64>,
    pub points_used: usize,
}

fn extent(points: &[[f64; 3]]) -> f64 {
    let mut ext: f64 = 0.0;
    for d in 0..3 {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[d]), hi.max(p[d]))
            });
        ext = ext.max(hi - lo);
    }
    ext
}

/// Pair counts `#{i < j : |p_i - p_j| <= r_k}` for ascending radii.
fn pair_counts(points: &[[f64; 3]], radii: &[f64]) -> Vec<u64> {
    let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let m = r2.len();
    let hist = (0..points.len())
        .into_par_iter()
        .fold(
            || vec![0u64; m + 1],
            |mut h, i| {
                let p = points[i];
                for q in &points[i + 1..] {
                    let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                    h[r2.partition_point(|&r| r < d)] += 1;
                }
                h
            },
        )
        .reduce(
            || vec![0u64; m + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let mut cum = Vec::with_capacity(m);
    let mut acc = 0;
    for h in &hist[..m] {
        acc += h;
        cum.push(acc);
    }
    cum
}

/// Correlation dimension from the slope of `log C(r)` against `log r`.
///
/// The scaling region is the longest run of consecutive radii whose
/// log–log fit reaches `min_r_squared`; ties go to the better fit.
pub fn correlation_dimension(
    series: &[StateVector],
    opts: &CorrelationOptions,
) -> Result<CorrelationDimension> {
    let needed = opts.min_window.max(100);
    if series.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: series.len(),
        });
    }
    if opts.n_radii < opts.min_window || opts.min_window < 3 {
        return Err(Error::param(
            "n_radii",
            opts.n_radii as f64,
            "need at least min_window >= 3 radii",
        ));
    }
    let stride = series.len().div_ceil(opts.max_points.max(needed));
    let points: Vec<[f64; 3]> = series.iter().step_by(stride).map(|s| s.to_array()).collect();
    let (r_lo, r_hi) = match opts.radii {
        Some((lo, hi)) if lo > 0.0 && hi > lo => (lo, hi),
        Some((lo, _)) => {
            return Err(Error::param("radii", lo, "need 0 < r_min < r_max"));
        }
        None => {
            let e = extent(&points);
            if e <= 0.0 {
                return Err(Error::NoScalingRegion);
            }
            // the largest distances feel the box edges and bend the curve
            let hi = 0.5 * e;
            (hi * 1e-3, hi)
        }
    };
    let k = opts.n_radii;
    let step = (r_hi / r_lo).ln() / (k - 1) as f64;
    let radii: Vec<f64> = (0..k).map(|i| r_lo * (step * i as f64).exp()).collect();
    let counts = pair_counts(&points, &radii);
    let n = points.len() as f64;
    let total = n * (n - 1.0) / 2.0;
    let sums: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();

    let usable: Vec<usize> = (0..k)
        .filter(|&i| counts[i] >= opts.min_pairs.max(1))
        .collect();
    let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let log_c: Vec<f64> = sums.iter().map(|c| c.ln()).collect();

    let mut best: Option<(usize, usize, f64)> = None;
    if let Some(&first) = usable.first() {
        for a in first..k {
            for b in (a + opts.min_window)..=k {
                let fit = linear_fit(&log_r[a..b], &log_c[a..b])?;
                if fit.r_squared < opts.min_r_squared {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((ba, bb, br2)) => {
                        b - a > bb - ba || (b - a == bb - ba && fit.r_squared > br2)
                    }
                };
                if better {
                    best = Some((a, b, fit.r_squared));
                }
            }
        }
    }
    let (a, b, _) = best.ok_or(Error::NoScalingRegion)?;
    let fit = linear_fit(&log_r[a..b], &log_c[a..b])?;
    Ok(CorrelationDimension {
        dimension: fit.slope,
        std_error: fit.slope_std_error,
        r_squared: fit.r_squared,
        scaling_range: (radii[a], radii[b - 1]),
        radii,
        correlation_sums: sums,
        points_used: points.len(),
    })
}
