//! Simulation of synchronized hyperchaotic maps used for private digital
//! communication by chaotic masking.
//!
//! * [`map`]: the folded-linear map, its Jacobians and trajectory export.
//! * [`analysis`]: Lyapunov spectra, correlation dimension, Welch spectra, ZOH compensation.
//! * [`sync`]: drive–response synchronization and its stability region.
//! * [`link`]: masking transmitter, AWGN channel, unmasking receiver, matched filter, BER.
//! * [`codec`]: DCT payload codecs and their bit-exact packet framing.

pub mod analysis;
mod binio;
pub mod codec;
pub mod error;
pub mod link;
pub mod map;
pub mod seeding;
pub mod stats;
pub mod sync;

pub use error::{Error, Result};
pub use map::{Mode, SettlingConfig, StateVector, SystemParams, Trajectory};
