//! Drive–response synchronization by synchronous substitution.
//!
//! The drive transmits `w = gamma x + z`. The response rebuilds the drive's
//! `z` as `z~ = w - gamma x_r` and iterates
//!
//! ```text
//! x_r' = f(a x_r + b z~)
//! y_r' = f(c y_r + z~)
//! z_r' = f(x_r + y_r)
//! ```
//!
//! The error dynamics are governed by `A - B K^T` with `B = (b, 1, 0)` and
//! `K = (gamma, 0, 1)`, whose eigenvalues are `a - b gamma`, `c` and 0.

use nalgebra::Matrix3;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{
    drive_output, fold, generate_trajectory, random_init, step_ideal, Mode, StateVector,
    SystemParams, DEFAULT_TRANSIENT,
};
use crate::seeding::{self, derive_seed, stream_seed, Stream};
use crate::stats::{self, linear_fit};

/// Steps after coupling starts that are excluded from error statistics.
pub const CONVERGENCE_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub gamma: f64,
    /// Standard deviation of white Gaussian noise added to `w` (state units).
    pub noise_sigma: f64,
    /// Relative error applied to the response's `a`, `b`, `c`.
    #[serde(default)]
    pub mismatch: f64,
}

impl CouplingConfig {
    pub fn new(gamma: f64, noise_sigma: f64) -> Result<Self> {
        let cfg = Self {
            gamma,
            noise_sigma,
            mismatch: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() {
            return Err(Error::param("gamma", self.gamma, "must be finite"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::param("noise_sigma", self.noise_sigma, "must be >= 0"));
        }
        if !self.mismatch.is_finite() {
            return Err(Error::param("mismatch", self.mismatch, "must be finite"));
        }
        Ok(())
    }
}

/// The response's substituted estimate of the drive's `z`.
#[inline]
pub fn substituted_z(r: StateVector, w_received: f64, gamma: f64) -> f64 {
    w_received - gamma * r.x
}

/// One response update driven by the received scalar.
#[inline]
pub fn receiver_step(r: StateVector, w_received: f64, p: &SystemParams) -> StateVector {
    let z_sub = substituted_z(r, w_received, p.gamma);
    StateVector::new(
        fold(p.a * r.x + p.b * z_sub, p.beta),
        fold(p.c * r.y + z_sub, p.beta),
        fold(r.x + r.y, p.beta),
    )
}

/// `A - B K^T = [[a - b gamma, 0, 0], [-gamma, c, 0], [1, 1, 0]]`.
pub fn coupled_matrix(p: &SystemParams) -> Matrix3<f64> {
    Matrix3::new(
        p.a - p.b * p.gamma,
        0.0,
        0.0,
        -p.gamma,
        p.c,
        0.0,
        1.0,
        1.0,
        0.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// Largest admissible eigenvalue magnitude before the fold slope is applied.
    pub bound: f64,
    /// `a - b gamma`.
    pub drive_eigenvalue: f64,
    /// `bound - |a - b gamma|`; positive when satisfied.
    pub drive_margin: f64,
    /// `bound - |c|`; positive when satisfied.
    pub c_margin: f64,
}

/// Eigenvalue condition for the response error dynamics.
///
/// With fold slopes `1/(1-beta)` and `-1/beta` every eigenvalue of
/// `Df (A - B K^T)` must stay inside the unit circle, which bounds
/// `|a - b gamma|` and `|c|` by 1 for `beta` in {0, 1}, by `beta` for
/// `0 < beta <= 1/2` and by `1 - beta` for `1/2 < beta < 1`.
pub fn stability_check(p: &SystemParams) -> StabilityReport {
    let bound = if p.beta == 0.0 || p.beta == 1.0 {
        1.0
    } else if p.beta <= 0.5 {
        p.beta
    } else {
        1.0 - p.beta
    };
    let lead = p.a - p.b * p.gamma;
    let drive_margin = bound - lead.abs();
    let c_margin = bound - p.c.abs();
    StabilityReport {
        stable: drive_margin > 0.0 && c_margin > 0.0,
        bound,
        drive_eigenvalue: lead,
        drive_margin,
        c_margin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncRun {
    pub gamma: f64,
    pub sigma: f64,
    /// RMS of drive minus response reconstruction `(x_r, y_r, z~)`.
    pub rms_error: [f64; 3],
    /// RMS of drive `z` minus the response's own `z` register.
    pub rms_z_register: f64,
    /// Pearson coefficient between drive `z` and response `z` register.
    pub correlation: f64,
    /// Normalized deviation of the `z` registers.
    pub delta_n: f64,
    pub samples: usize,
}

/// `sqrt(<|z1 - z2|^2>) / (sigma_z1 * sigma_z2)`.
///
/// The denominator is the product of the standard deviations, not its square
/// root, so the value scales as `1/s` when both series are scaled by `s`.
pub fn delta_n(z1: &[f64], z2: &[f64]) -> Result<f64> {
    if z1.len() != z2.len() {
        return Err(Error::LengthMismatch {
            left: z1.len(),
            right: z2.len(),
        });
    }
    if z1.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let msd = z1
        .iter()
        .zip(z2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / z1.len() as f64;
    let denom = stats::variance(z1).sqrt() * stats::variance(z2).sqrt();
    Ok(msd.sqrt() / denom)
}

/// Simulate drive and response for `n` coupled steps.
///
/// The drive starts from a seeded point and runs [`DEFAULT_TRANSIENT`] steps
/// before coupling; the response starts from an independent seeded point.
/// Statistics skip the first [`CONVERGENCE_WINDOW`] coupled steps.
pub fn run_sync(p: &SystemParams, coupling: &CouplingConfig, n: usize, seed: u64) -> Result<SyncRun> {
    coupling.validate()?;
    if n < 1000 {
        return Err(Error::InsufficientData {
            needed: 1000,
            got: n,
        });
    }
    let drive_params = SystemParams {
        gamma: coupling.gamma,
        ..*p
    };
    drive_params.validate()?;
    let resp_params = drive_params.with_mismatch(coupling.mismatch);

    let start = generate_trajectory(
        random_init(stream_seed(seed, Stream::DriveInit)),
        1,
        &drive_params,
        Mode::Ideal,
        DEFAULT_TRANSIENT,
    )?;
    let mut drive = start.states[0];
    let mut resp = random_init(stream_seed(seed, Stream::ResponseInit));
    let mut rng = seeding::rng(stream_seed(seed, Stream::Noise));
    let noise = Normal::new(0.0, coupling.noise_sigma).expect("sigma validated");

    let kept = n - CONVERGENCE_WINDOW;
    let mut sq = [0.0f64; 3];
    let mut z1 = Vec::with_capacity(kept);
    let mut z2 = Vec::with_capacity(kept);
    for k in 0..n {
        let mut w = drive_output(drive, coupling.gamma);
        if coupling.noise_sigma > 0.0 {
            w += noise.sample(&mut rng);
        }
        if k >= CONVERGENCE_WINDOW {
            let z_sub = substituted_z(resp, w, coupling.gamma);
            sq[0] += (drive.x - resp.x).powi(2);
            sq[1] += (drive.y - resp.y).powi(2);
            sq[2] += (drive.z - z_sub).powi(2);
            z1.push(drive.z);
            z2.push(resp.z);
        }
        resp = receiver_step(resp, w, &resp_params);
        drive = step_ideal(drive, &drive_params);
    }
    let m = kept as f64;
    let rms_z_register = (z1
        .iter()
        .zip(&z2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(SyncRun {
        gamma: coupling.gamma,
        sigma: coupling.noise_sigma,
        rms_error: sq.map(|s| (s / m).sqrt()),
        rms_z_register,
        correlation: stats::pearson(&z1, &z2),
        delta_n: delta_n(&z1, &z2)?,
        samples: kept,
    })
}

/// [`run_sync`] over a `gamma × sigma` grid, row-major in `gamma`.
///
/// Point `i` uses seed `derive_seed(seed, i)`; results are returned in grid
/// order regardless of scheduling.
pub fn sync_sweep(
    p: &SystemParams,
    gammas: &[f64],
    sigmas: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<SyncRun>> {
    if gammas.is_empty() || sigmas.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let grid: Vec<(usize, f64, f64)> = gammas
        .iter()
        .flat_map(|&g| sigmas.iter().map(move |&s| (g, s)))
        .enumerate()
        .map(|(i, (g, s))| (i, g, s))
        .collect();
    grid.par_iter()
        .map(|&(i, gamma, sigma)| {
            let coupling = CouplingConfig::new(gamma, sigma)?;
            run_sync(p, &coupling, n, derive_seed(seed, i as u64))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationFit {
    /// Noise-independent floor.
    pub a: f64,
    /// Noise gain.
    pub b: f64,
    /// RMS of `delta_n - sqrt(A^2 + (sigma B)^2)`.
    pub residual: f64,
    /// Coefficient of determination of the linear fit of `delta_n^2` on `sigma^2`.
    pub r_squared: f64,
}

impl DeviationFit {
    pub fn predict(&self, sigma: f64) -> f64 {
        (self.a * self.a + (sigma * self.b).powi(2)).sqrt()
    }
}

/// Fit `delta_n = sqrt(A^2 + (sigma B)^2)` by least squares on `delta_n^2` vs `sigma^2`.
pub fn fit_deviation_model(points: &[(f64, f64)]) -> Result<DeviationFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let s2: Vec<f64> = points.iter().map(|(s, _)| s * s).collect();
    let d2: Vec<f64> = points.iter().map(|(_, d)| d * d).collect();
    let fit = linear_fit(&s2, &d2)?;
    let mut out = DeviationFit {
        a: fit.intercept.max(0.0).sqrt(),
        b: fit.slope.max(0.0).sqrt(),
        residual: 0.0,
        r_squared: fit.r_squared,
    };
    let res: Vec<f64> = points.iter().map(|&(s, d)| d - out.predict(s)).collect();
    out.residual = stats::rms(&res);
    Ok(out)
}
