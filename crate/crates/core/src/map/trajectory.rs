use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{drive_output, step, Mode, StateVector, SystemParams};
use crate::error::{Error, Result};
use crate::seeding;

/// Anything that advances a 3-D state by one clock tick.
pub trait DiscreteMap {
    fn step(&self, s: StateVector) -> StateVector;
}

/// The hyperchaotic map under a given settling mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapModel {
    pub params: SystemParams,
    pub mode: Mode,
}

impl DiscreteMap for MapModel {
    #[inline]
    fn step(&self, s: StateVector) -> StateVector {
        step(s, &self.params, &self.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<StateVector>,
    pub params: SystemParams,
    pub mode: Mode,
    /// Seed used to draw the initial condition, when it was drawn.
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn model(&self) -> MapModel {
        MapModel {
            params: self.params,
            mode: self.mode,
        }
    }

    /// The scalar drive series `w[n] = gamma x[n] + z[n]`.
    pub fn drive(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| drive_output(*s, self.params.gamma))
            .collect()
    }

    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.to_array()[idx]).collect()
    }
}

/// Uniform initial condition in `[-0.5, 0.5]^3`.
pub fn random_init(seed: u64) -> StateVector {
    let mut rng = seeding::rng(seed);
    let mut draw = || rng.random_range(-0.5..=0.5);
    StateVector::new(draw(), draw(), draw())
}

/// Iterate `n` states from `init` after discarding `transient` iterations.
///
/// `states[0]` is the state reached after the transient; `states[k+1]` is the
/// map applied to `states[k]`.
pub fn generate_trajectory(
    init: StateVector,
    n: usize,
    params: &SystemParams,
    mode: Mode,
    transient: usize,
) -> Result<Trajectory> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !init.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let model = MapModel {
        params: *params,
        mode,
    };
    let mut s = init;
    for _ in 0..transient {
        s = model.step(s);
    }
    let mut states = Vec::with_capacity(n);
    states.push(s);
    for _ in 1..n {
        s = model.step(s);
        states.push(s);
    }
    Ok(Trajectory {
        states,
        params: *params,
        mode,
        seed: None,
    })
}
