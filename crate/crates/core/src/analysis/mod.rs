//! Dynamics analysis: Lyapunov spectra, correlation dimension and spectra.

mod dimension;
mod lyapunov;
mod spectrum;

pub use dimension::{correlation_dimension, CorrelationDimension, CorrelationOptions};
pub use lyapunov::{
    le_analytic, le_eckmann_ruelle, le_qr, le_vs_settling, le_wolf, le_wolf_with, ErOptions,
    LeMethod, LeSpectrum, SettlingPoint, WolfOptions,
};
pub use spectrum::{
    compensate_zoh, hold_upsample, welch_psd, zoh_compensation, zoh_magnitude, PsdEstimate,
    WelchOptions, DEFAULT_ZOH_GUARD,
};
