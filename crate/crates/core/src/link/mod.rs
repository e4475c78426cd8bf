//! Chaotic-masking digital link: PRBS source, masking transmitter, AWGN
//! channel, unmasking receiver, integrate-and-dump filter, Gaussian
//! threshold optimization and BER measurement.

mod ber;
mod detection;
mod masking;
mod prbs;

pub use ber::{
    ber_measure, ber_sweep, clopper_pearson, prbs_seed, receive_bits, run_link, BerResult,
    LinkConfig, LinkRun, SweepPoint, ThresholdMode,
};
pub use detection::{
    ber_predict, decide, fit_symbol_gaussians, fit_symbol_gaussians_floored, integrate_and_dump,
    optimal_threshold, AdaptiveThreshold, SymbolStats, ThresholdChoice,
};
pub use masking::{
    channel_awgn, mask_transmit, read_masked_series, receiver_init, unmask_receive,
    write_masked_series, MaskedSeries, MaskingLoop, ModulationConfig,
};
pub use prbs::{prbs, Lfsr, PRBS23_TAPS};
