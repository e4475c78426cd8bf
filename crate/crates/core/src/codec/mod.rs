//! DCT payload codecs, packet framing and file transmission over the masked link.

pub mod audio;
pub mod dct;
pub mod image;
pub mod io;
pub mod packet;
pub mod transform;
pub mod transmit;

pub use audio::{compress_audio, decompress_audio, downconvert_8bit, speech_like, AudioClip};
pub use dct::{dct2_forward, dct2_inverse, dct_forward, dct_inverse, DctPlan};
pub use image::{compress_image, decompress_image, low_frequency_scan, psnr, test_image, GrayImage};
pub use io::{encode_pgm, parse_pgm, read_pgm, read_wav, write_pgm, write_wav};
pub use packet::{
    bits_to_packet, packet_to_bits, CoefficientPacket, Frame, PayloadKind, SelectionRule,
};
pub use transform::{relative_rms_error, select_positions, CodecOptions};
pub use transmit::{
    capacity_check, fidelity, prepare, recover, transmit_payload, CapacityCheck, Fidelity,
    Payload, Prepared, Recovered, TransmitConfig, TransmitOutcome, TransmitReport,
};
