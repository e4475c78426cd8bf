//! Lyapunov exponent estimators.
//!
//! * `le_analytic`: closed form for `beta` in {0, 1}, where `J = ±A` is constant.
//! * `le_qr`: exact Jacobians along a trajectory with QR re-orthonormalization.
//! * `le_eckmann_ruelle`: Jacobians fitted from neighbourhoods in the data.
//! * `le_wolf`: dominant exponent from a fiducial orbit and a renormalized companion.

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::num::NonZero;

use crate::error::{Error, Result};
use crate::map::{
    generate_trajectory, jacobian_in_mode, random_init, DiscreteMap, Mode, SettlingConfig,
    StateVector, SystemParams, Trajectory, DEFAULT_TRANSIENT,
};
use crate::seeding::{stream_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeMethod {
    Analytic,
    Qr,
    EckmannRuelle,
    Wolf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeSpectrum {
    /// Nats per iteration, sorted descending.
    pub exponents: Vec<f64>,
    pub method: LeMethod,
    pub sample_count: usize,
    /// Steps (or reference points) that could not contribute.
    pub skipped: usize,
    /// The input never left a single point, so the values describe a fixed point only.
    pub degenerate: bool,
    pub low_confidence: bool,
    /// Estimator-specific quality figure in [0, 1]: mean local fit R² for
    /// Eckmann–Ruelle, fraction of consistent orbit steps for Wolf.
    pub quality: Option<f64>,
}

impl LeSpectrum {
    fn new(mut exponents: Vec<f64>, method: LeMethod, sample_count: usize) -> Self {
        exponents.sort_by(|a, b| b.total_cmp(a));
        Self {
            exponents,
            method,
            sample_count,
            skipped: 0,
            degenerate: false,
            low_confidence: false,
            quality: None,
        }
    }

    pub fn largest(&self) -> f64 {
        self.exponents[0]
    }

    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    pub fn skipped_fraction(&self) -> f64 {
        if self.sample_count == 0 {
            0.0
        } else {
            self.skipped as f64 / self.sample_count as f64
        }
    }
}

/// Half-logs of the eigenvalues of `A A^T`; only defined for `beta` in {0, 1}.
pub fn le_analytic(p: &SystemParams) -> Result<LeSpectrum> {
    p.validate()?;
    if p.beta != 0.0 && p.beta != 1.0 {
        return Err(Error::param(
            "beta",
            p.beta,
            "closed-form spectrum needs a constant Jacobian (beta = 0 or 1)",
        ));
    }
    let a = p.matrix();
    let eig = SymmetricEigen::new(a * a.transpose());
    let exps = eig.eigenvalues.iter().map(|l| 0.5 * l.ln()).collect();
    Ok(LeSpectrum::new(exps, LeMethod::Analytic, 1))
}

/// Running product of Jacobians kept orthonormal by QR.
struct QrAccumulator {
    q: Matrix3<f64>,
    sums: [f64; 3],
    steps: usize,
}

impl QrAccumulator {
    fn new() -> Self {
        Self {
            q: Matrix3::identity(),
            sums: [0.0; 3],
            steps: 0,
        }
    }

    fn push(&mut self, j: &Matrix3<f64>) {
        let qr = (j * self.q).qr();
        let r = qr.r();
        self.q = qr.q();
        for i in 0..3 {
            self.sums[i] += r[(i, i)].abs().ln();
        }
        self.steps += 1;
    }

    fn exponents(&self) -> Vec<f64> {
        let n = self.steps.max(1) as f64;
        self.sums.iter().map(|s| s / n).collect()
    }
}

fn is_stationary(states: &[StateVector]) -> bool {
    let first = states[0];
    states.iter().all(|s| (*s - first).norm() <= 1e-14)
}

/// Spectrum from the exact Jacobians of the trajectory's own map.
///
/// Steps whose `A·s` hits a fold breakpoint are skipped and counted. A
/// trajectory that never moves is flagged `degenerate`.
pub fn le_qr(traj: &Trajectory) -> Result<LeSpectrum> {
    let n = traj.states.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut acc = QrAccumulator::new();
    let mut skipped = 0;
    for s in &traj.states[..n - 1] {
        match jacobian_in_mode(*s, &traj.params, &traj.mode) {
            Ok(j) => acc.push(&j),
            Err(Error::DegenerateJacobian { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if acc.steps == 0 {
        return Err(Error::InsufficientData {
            needed: 1,
            got: 0,
        });
    }
    let mut out = LeSpectrum::new(acc.exponents(), LeMethod::Qr, n - 1);
    out.skipped = skipped;
    out.degenerate = is_stationary(&traj.states);
    out.low_confidence = out.degenerate;
    if skipped > 0 {
        log::warn!("le_qr skipped {skipped} breakpoint steps of {}", n - 1);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErOptions {
    /// Neighbours per reference point.
    pub neighbors: usize,
    /// Consecutive reference points whose local maps are chained.
    pub reference_points: usize,
    pub min_points: usize,
    /// Temporal neighbours `|i - j| <= theiler` are not used as spatial neighbours.
    pub theiler: usize,
    /// Mean local R² below which the estimate is flagged low-confidence.
    pub min_fit_quality: f64,
}

impl Default for ErOptions {
    fn default() -> Self {
        Self {
            neighbors: 20,
            reference_points: 5000,
            min_points: 1000,
            theiler: 2,
            min_fit_quality: 0.8,
        }
    }
}

fn points_of(series: &[StateVector]) -> Vec<[f64; 3]> {
    series.iter().map(|s| s.to_array()).collect()
}

/// Least-squares local map `T` with `dy ≈ T dx`, plus the fit's R².
fn fit_local_map(dx: &[[f64; 3]], dy: &[[f64; 3]]) -> Option<(Matrix3<f64>, f64)> {
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Matrix3::<f64>::zeros();
    for (x, y) in dx.iter().zip(dy) {
        for r in 0..3 {
            for c in 0..3 {
                xtx[(r, c)] += x[r] * x[c];
                xty[(r, c)] += x[r] * y[c];
            }
        }
    }
    let tt: Matrix3<f64> = xtx.try_inverse()? * xty;
    let t = tt.transpose();
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (x, y) in dx.iter().zip(dy) {
        let pred = t * nalgebra::Vector3::from(*x);
        for r in 0..3 {
            ss_res += (y[r] - pred[r]).powi(2);
            ss_tot += y[r] * y[r];
        }
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    Some((t, r2))
}

/// Eckmann–Ruelle estimate from a 3-D state series.
///
/// Local linear maps are fitted by least squares over the nearest neighbours
/// of consecutive reference points (one-step evolution) and chained with QR.
/// Reference points whose neighbourhood is rank deficient are skipped.
pub fn le_eckmann_ruelle(series: &[StateVector], opts: &ErOptions) -> Result<LeSpectrum> {
    let n = series.len();
    if n < opts.min_points.max(10) {
        return Err(Error::InsufficientData {
            needed: opts.min_points.max(10),
            got: n,
        });
    }
    let k = opts.neighbors;
    if k < 3 {
        return Err(Error::param("neighbors", k as f64, "need at least 3 to fit a 3x3 map"));
    }
    let pts = points_of(&series[..n - 1]);
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&pts);
    let refs = opts.reference_points.min(n - 1);
    let start = (n - 1 - refs) / 2;
    let query = NonZero::new(k + 2 * opts.theiler + 1).expect("non-zero");

    let local: Vec<Option<(Matrix3<f64>, f64)>> = (start..start + refs)
        .into_par_iter()
        .map(|i| {
            let found = tree.nearest_n::<SquaredEuclidean>(&pts[i], query);
            let mut dx = Vec::with_capacity(k);
            let mut dy = Vec::with_capacity(k);
            for nb in found {
                let j = nb.item as usize;
                if j.abs_diff(i) <= opts.theiler || j + 1 >= n {
                    continue;
                }
                let a = series[j] - series[i];
                let b = series[j + 1] - series[i + 1];
                dx.push(a.to_array());
                dy.push(b.to_array());
                if dx.len() == k {
                    break;
                }
            }
            if dx.len() < 3 {
                return None;
            }
            fit_local_map(&dx, &dy)
        })
        .collect();

    let mut acc = QrAccumulator::new();
    let mut skipped = 0;
    let mut quality = 0.0;
    for item in &local {
        match item {
            Some((t, r2)) => {
                acc.push(t);
                quality += r2;
            }
            None => skipped += 1,
        }
    }
    if acc.steps == 0 {
        return Err(Error::InsufficientData {
            needed: 1,
            got: 0,
        });
    }
    let quality = quality / acc.steps as f64;
    let mut out = LeSpectrum::new(acc.exponents(), LeMethod::EckmannRuelle, refs);
    out.skipped = skipped;
    out.quality = Some(quality);
    out.degenerate = is_stationary(series);
    out.low_confidence = quality < opts.min_fit_quality || out.degenerate;
    if skipped > 0 {
        log::warn!(
            "Eckmann-Ruelle: {skipped} of {refs} reference points lacked a usable neighbourhood (coverage {:.3})",
            1.0 - skipped as f64 / refs as f64
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfOptions {
    pub initial_separation: f64,
    /// Renormalize once the companion drifts further than this.
    pub max_separation: f64,
    /// Renormalize once the companion comes closer than this.
    pub min_separation: f64,
    /// A step counts as consistent with the model when `|F(s_n) - s_{n+1}|` is below this.
    pub orbit_tolerance: f64,
    pub min_points: usize,
}

impl Default for WolfOptions {
    fn default() -> Self {
        Self {
            initial_separation: 1e-6,
            max_separation: 1e-2,
            min_separation: 1e-12,
            orbit_tolerance: 1e-9,
            min_points: 1000,
        }
    }
}

/// Dominant exponent of a trajectory, using the trajectory's own map for the companion.
pub fn le_wolf(traj: &Trajectory, opts: &WolfOptions) -> Result<LeSpectrum> {
    le_wolf_with(&traj.states, &traj.model(), opts)
}

/// Wolf's direct estimate of the dominant exponent.
///
/// A companion orbit starts `initial_separation` away from the fiducial
/// series and is advanced with `map`. Whenever the separation leaves
/// `[min_separation, max_separation]` the accumulated log stretch is banked
/// and the companion is pulled back along the current separation direction.
/// Steps where the series itself does not follow `map` are counted; more
/// than 1% of them flags the result low-confidence.
pub fn le_wolf_with<M: DiscreteMap>(
    series: &[StateVector],
    map: &M,
    opts: &WolfOptions,
) -> Result<LeSpectrum> {
    let n = series.len();
    if n < opts.min_points.max(2) {
        return Err(Error::InsufficientData {
            needed: opts.min_points.max(2),
            got: n,
        });
    }
    let d0 = opts.initial_separation;
    let mut dir = StateVector::new(1.0, 1.0, 1.0) * (1.0 / 3f64.sqrt());
    let mut companion = series[0] + dir * d0;
    let mut seg_start = d0;
    let mut log_sum = 0.0;
    let mut inconsistent = 0usize;
    let mut last_d = d0;
    for k in 0..n - 1 {
        let next = series[k + 1];
        let predicted = map.step(series[k]);
        if (predicted - next).norm() > opts.orbit_tolerance {
            inconsistent += 1;
        }
        companion = map.step(companion);
        let sep = companion - next;
        let d = sep.norm();
        last_d = d;
        if !(d.is_finite() && d > 0.0) {
            // companion merged with (or escaped) the fiducial orbit: bank the
            // smallest resolvable stretch and restart along the last direction
            log_sum += (opts.min_separation / seg_start).ln();
            companion = next + dir * d0;
            seg_start = d0;
            last_d = d0;
        } else if d > opts.max_separation || d < opts.min_separation {
            log_sum += (d / seg_start).ln();
            dir = sep * (1.0 / d);
            companion = next + dir * d0;
            seg_start = d0;
            last_d = d0;
        }
    }
    log_sum += (last_d / seg_start).ln();
    let steps = n - 1;
    let mut out = LeSpectrum::new(vec![log_sum / steps as f64], LeMethod::Wolf, steps);
    let consistent = 1.0 - inconsistent as f64 / steps as f64;
    out.quality = Some(consistent);
    out.skipped = inconsistent;
    out.degenerate = is_stationary(series);
    out.low_confidence = consistent < 0.99 || out.degenerate;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlingPoint {
    pub t_n: f64,
    pub spectrum: LeSpectrum,
}

/// QR spectrum of the incomplete-settling map for each normalized hold time.
///
/// Every grid point starts from the same seeded initial condition and discards
/// [`DEFAULT_TRANSIENT`] iterations.
pub fn le_vs_settling(
    p: &SystemParams,
    t_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<SettlingPoint>> {
    let init = random_init(stream_seed(seed, Stream::DriveInit));
    t_grid
        .par_iter()
        .map(|&t_n| {
            let mode = Mode::NonIdeal(SettlingConfig::new(t_n)?);
            let traj = generate_trajectory(init, n, p, mode, DEFAULT_TRANSIENT)?;
            Ok(SettlingPoint {
                t_n,
                spectrum: le_qr(&traj)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{step_ideal, MapModel};
    use rand::{Rng, SeedableRng};

    fn traj(beta: f64, n: usize, seed: u64) -> Trajectory {
        generate_trajectory(
            random_init(seed),
            n,
            &SystemParams::default().with_beta(beta),
            Mode::Ideal,
            DEFAULT_TRANSIENT,
        )
        .unwrap()
    }

    #[test]
    fn analytic_defaults() {
        let s = le_analytic(&SystemParams::default().with_beta(0.0)).unwrap();
        let expected = [0.683, 0.302, -0.985];
        for (got, want) in s.exponents.iter().zip(expected) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
        assert!(s.sum().abs() < 1e-9);
        let one = le_analytic(&SystemParams::default().with_beta(1.0)).unwrap();
        assert_eq!(one.exponents, s.exponents);
    }

    #[test]
    fn analytic_product_matches_determinant() {
        let p = SystemParams {
            a: -1.7,
            b: 0.9,
            c: 0.2,
            beta: 0.0,
            gamma: -1.0,
        };
        let s = le_analytic(&p).unwrap();
        let prod: f64 = s.exponents.iter().map(|l| (2.0 * l).exp()).product();
        assert!((prod - p.matrix().determinant().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn analytic_rejects_interior_beta() {
        assert!(le_analytic(&SystemParams::default()).is_err());
    }

    #[test]
    fn qr_matches_analytic_at_extreme_beta() {
        for beta in [0.0, 1.0] {
            let s = le_qr(&traj(beta, 20_000, 3)).unwrap();
            let a = le_analytic(&SystemParams::default().with_beta(beta)).unwrap();
            for (q, e) in s.exponents.iter().zip(&a.exponents) {
                assert!((q - e).abs() < 1e-3, "beta {beta}: {q} vs {e}");
            }
        }
    }

    #[test]
    fn qr_hyperchaos_at_symmetric_fold() {
        let s = le_qr(&traj(0.5, 20_000, 5)).unwrap();
        assert!(s.exponents[1] > 0.0, "{:?}", s.exponents);
        assert!(!s.degenerate);
    }

    #[test]
    fn qr_flags_fixed_point() {
        let t = generate_trajectory(
            StateVector::ORIGIN,
            500,
            &SystemParams::default(),
            Mode::Ideal,
            0,
        )
        .unwrap();
        let s = le_qr(&t).unwrap();
        assert!(s.degenerate && s.low_confidence);
    }

    #[test]
    fn qr_needs_two_states() {
        assert!(le_qr(&traj(0.5, 1, 1)).is_err());
    }

    #[test]
    fn er_white_noise_is_low_confidence() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let series: Vec<StateVector> = (0..5_000)
            .map(|_| {
                StateVector::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let s = le_eckmann_ruelle(&series, &ErOptions::default()).unwrap();
        assert!(s.low_confidence, "quality {:?}", s.quality);
    }

    #[test]
    fn er_tracks_exact_spectrum() {
        for beta in [0.0, 0.5] {
            let t = traj(beta, 100_000, 7);
            let q = le_qr(&t).unwrap();
            let e = le_eckmann_ruelle(&t.states, &ErOptions::default()).unwrap();
            for k in 0..2 {
                assert!((e.exponents[k] - q.exponents[k]).abs() < 0.3);
            }
            assert!(!e.low_confidence);
        }
    }

    #[test]
    fn er_leading_exponent_flat_over_beta() {
        let (mut er1, mut er2, mut qr2) = (vec![], vec![], vec![]);
        for i in 0..=10 {
            let t = traj(i as f64 / 10.0, 100_000, 7);
            let e = le_eckmann_ruelle(&t.states, &ErOptions::default()).unwrap();
            er1.push(e.exponents[0]);
            er2.push(e.exponents[1]);
            qr2.push(le_qr(&t).unwrap().exponents[1]);
        }
        let spread = |v: &[f64]| {
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!(spread(&er1) < 0.2, "{er1:?}");
        assert!(spread(&er2) < 0.5 * spread(&qr2), "{er2:?} vs {qr2:?}");
    }

    #[test]
    fn wolf_contracting_linear_map() {
        struct Linear(Matrix3<f64>);
        impl DiscreteMap for Linear {
            fn step(&self, s: StateVector) -> StateVector {
                StateVector::from_vector(&(self.0 * s.to_vector()))
            }
        }
        let m = Linear(Matrix3::new(0.6, 0.1, 0.0, 0.0, 0.5, 0.1, 0.05, 0.0, -0.4));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut s = StateVector::new(0.3, 0.2, -0.1);
        let mut series = Vec::new();
        for _ in 0..5_000 {
            series.push(s);
            s = m.step(s)
                + StateVector::new(
                    rng.random_range(-1e-12..1e-12),
                    rng.random_range(-1e-12..1e-12),
                    rng.random_range(-1e-12..1e-12),
                );
        }
        let out = le_wolf_with(&series, &m, &WolfOptions::default()).unwrap();
        let dominant = m.0.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max);
        assert!(out.largest() < 0.0);
        assert!((out.largest() - dominant.ln()).abs() < 0.05, "{} vs {}", out.largest(), dominant.ln());
        assert!(!out.low_confidence);
    }

    #[test]
    fn wolf_flags_series_that_is_not_an_orbit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let series: Vec<StateVector> = (0..2_000)
            .map(|_| StateVector::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let model = MapModel {
            params: SystemParams::default(),
            mode: Mode::Ideal,
        };
        let out = le_wolf_with(&series, &model, &WolfOptions::default()).unwrap();
        assert!(out.low_confidence);
    }

    #[test]
    fn wolf_near_qr_at_symmetric_fold() {
        let t = traj(0.5, 50_000, 12);
        let w = le_wolf(&t, &WolfOptions::default()).unwrap();
        let q = le_qr(&t).unwrap();
        assert!(w.largest() > 0.0);
        assert!((w.largest() - q.largest()).abs() < 0.15, "{} vs {}", w.largest(), q.largest());
        assert_eq!(w.exponents.len(), 1);
    }

    #[test]
    fn settling_limits() {
        let p = SystemParams::default();
        let pts = le_vs_settling(&p, &[0.8, 40.0], 20_000, 1).unwrap();
        assert!(pts[0].spectrum.exponents.iter().all(|l| *l < 0.0), "{:?}", pts[0]);
        let ideal = le_qr(&traj(0.5, 20_000, 1)).unwrap();
        for (a, b) in pts[1].spectrum.exponents.iter().zip(&ideal.exponents) {
            assert!((a - b).abs() < 0.03, "{a} vs {b}");
        }
    }

    #[test]
    fn step_model_consistency() {
        let t = traj(0.5, 10, 1);
        assert_eq!(step_ideal(t.states[0], &t.params), t.states[1]);
    }
}
