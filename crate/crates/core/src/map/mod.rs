//! The folded-linear hyperchaotic map `x[n+1] = f(A x[n], beta)`.
//!
//! `A = [[a, 0, b], [0, c, 1], [1, 1, 0]]` and `f` is the generalized tent
//! fold applied independently to each component. Everything here works in
//! dimensionless units; the boards use `V = 2x` volts (see [`to_volts`]).

mod io;
mod trajectory;

pub use io::{read_trajectory_binary, write_trajectory_binary, write_trajectory_csv};
pub use trajectory::{generate_trajectory, random_init, DiscreteMap, MapModel, Trajectory};

use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of iterations discarded before statistics are collected.
pub const DEFAULT_TRANSIENT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Fold asymmetry, `0 <= beta <= 1`.
    pub beta: f64,
    /// Output coupling: the transmitted scalar is `w = gamma * x + z`.
    pub gamma: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            a: -4.0 / 3.0,
            b: 1.0,
            c: 1.0 / 3.0,
            beta: 0.5,
            gamma: -1.0,
        }
    }
}

impl SystemParams {
    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    /// Receiver-side copy whose `a`, `b`, `c` are scaled by `1 + eps`.
    pub fn with_mismatch(self, eps: f64) -> Self {
        Self {
            a: self.a * (1.0 + eps),
            b: self.b * (1.0 + eps),
            c: self.c * (1.0 + eps),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, v, "must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param("beta", self.beta, "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.a, 0.0, self.b, //
            0.0, self.c, 1.0, //
            1.0, 1.0, 0.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl StateVector {
    pub const ORIGIN: StateVector = StateVector {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, o: StateVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `A·s` without the fold.
    pub fn linear_image(self, p: &SystemParams) -> StateVector {
        StateVector::new(
            p.a * self.x + p.b * self.z,
            p.c * self.y + self.z,
            self.x + self.y,
        )
    }
}

impl Add for StateVector {
    type Output = StateVector;
    fn add(self, o: StateVector) -> StateVector {
        StateVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for StateVector {
    type Output = StateVector;
    fn sub(self, o: StateVector) -> StateVector {
        StateVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for StateVector {
    type Output = StateVector;
    fn mul(self, k: f64) -> StateVector {
        StateVector::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Normalized hold time `T/tau` of the sample-and-hold stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettlingConfig {
    t_n: f64,
}

impl SettlingConfig {
    pub fn new(t_n: f64) -> Result<Self> {
        if !(t_n.is_finite() && t_n > 0.0) {
            return Err(Error::param("t_n", t_n, "normalized hold time must be > 0"));
        }
        Ok(Self { t_n })
    }

    pub fn t_n(&self) -> f64 {
        self.t_n
    }

    /// Fraction of a step that settles through two cascaded holds, `(1 - e^-T_n)^2`.
    pub fn weight(&self) -> f64 {
        let settle = -(-self.t_n).exp_m1();
        settle * settle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Ideal,
    NonIdeal(SettlingConfig),
}

/// `mod(x + 1, 2) - 1` with a floored modulo, so the result lies in `[-1, 1)`.
pub fn wrap_g(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("wrap_g input"));
    }
    Ok(wrap(x))
}

#[inline]
fn wrap(x: f64) -> f64 {
    (x + 1.0).rem_euclid(2.0) - 1.0
}

/// Generalized tent fold. Output lies in `[-1, 1]` for finite input.
///
/// The rising segment has slope `1/(1-beta)`, the falling ones `-1/beta`.
/// For `beta = 1` the point `g = 0` belongs to neither falling branch; it is
/// mapped to 0 so that the origin stays a fixed point for every `beta`.
#[inline]
pub fn fold(x: f64, beta: f64) -> f64 {
    let g = wrap(x);
    let edge = 1.0 - beta;
    if beta < 1.0 && g.abs() <= edge {
        g / edge
    } else if beta > 0.0 && g > edge {
        (1.0 - g) / beta
    } else if beta > 0.0 && g < -edge {
        (-1.0 - g) / beta
    } else {
        0.0
    }
}

/// Slope of the fold at `x`, or `None` when `x` sits exactly on a slope change.
///
/// `beta = 0` and `beta = 1` have constant slope `+1` / `-1` everywhere.
#[inline]
pub fn fold_slope(x: f64, beta: f64) -> Option<f64> {
    if beta == 0.0 {
        return Some(1.0);
    }
    if beta == 1.0 {
        return Some(-1.0);
    }
    let g = wrap(x).abs();
    let edge = 1.0 - beta;
    if g == edge {
        None
    } else if g < edge {
        Some(1.0 / edge)
    } else {
        Some(-1.0 / beta)
    }
}

#[inline]
pub fn fold_state(u: StateVector, beta: f64) -> StateVector {
    StateVector::new(fold(u.x, beta), fold(u.y, beta), fold(u.z, beta))
}

#[inline]
pub fn step_ideal(s: StateVector, p: &SystemParams) -> StateVector {
    fold_state(s.linear_image(p), p.beta)
}

/// Incomplete-settling update `s + (f(A s) - s) * (1 - e^-T_n)^2`.
#[inline]
pub fn step_nonideal(s: StateVector, p: &SystemParams, cfg: &SettlingConfig) -> StateVector {
    let target = step_ideal(s, p);
    s + (target - s) * cfg.weight()
}

#[inline]
pub fn step(s: StateVector, p: &SystemParams, mode: &Mode) -> StateVector {
    match mode {
        Mode::Ideal => step_ideal(s, p),
        Mode::NonIdeal(cfg) => step_nonideal(s, p, cfg),
    }
}

/// Diagonal of the fold Jacobian `Df` evaluated at `A·s`.
pub fn fold_jacobian_diag(s: StateVector, p: &SystemParams) -> Result<Vector3<f64>> {
    let u = s.linear_image(p).to_array();
    let mut d = Vector3::zeros();
    for (i, ui) in u.iter().enumerate() {
        d[i] = fold_slope(*ui, p.beta).ok_or(Error::DegenerateJacobian { component: i })?;
    }
    Ok(d)
}

/// `J = Df · A` for the ideal map.
pub fn jacobian_at(s: StateVector, p: &SystemParams) -> Result<Matrix3<f64>> {
    let d = fold_jacobian_diag(s, p)?;
    Ok(Matrix3::from_diagonal(&d) * p.matrix())
}

/// Jacobian of the map under `mode`; the non-ideal one is `(1-w) I + w Df A`.
pub fn jacobian_in_mode(s: StateVector, p: &SystemParams, mode: &Mode) -> Result<Matrix3<f64>> {
    let j = jacobian_at(s, p)?;
    Ok(match mode {
        Mode::Ideal => j,
        Mode::NonIdeal(cfg) => {
            let w = cfg.weight();
            Matrix3::identity() * (1.0 - w) + j * w
        }
    })
}

/// Transmitted scalar `w = gamma * x + z`.
#[inline]
pub fn drive_output(s: StateVector, gamma: f64) -> f64 {
    gamma * s.x + s.z
}

pub fn to_volts(x: f64) -> f64 {
    2.0 * x
}

pub fn from_volts(v: f64) -> f64 {
    0.5 * v
}
