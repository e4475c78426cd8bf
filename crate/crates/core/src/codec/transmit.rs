//! End-to-end payload transmission: compress, frame, mask, channel, unmask,
//! detect, deframe and reconstruct.

use serde::{Deserialize, Serialize};

use super::audio::{compress_audio, decompress_audio, downconvert_8bit, AudioClip};
use super::image::{compress_image, decompress_image, psnr, GrayImage};
use super::packet::{bits_to_packet, packet_to_bits, CoefficientPacket, PayloadKind};
use super::transform::{relative_rms_error, CodecOptions};
use crate::error::{Error, Result};
use crate::link::{
    ber_measure, channel_awgn, mask_transmit, receive_bits, receiver_init, BerResult, LinkConfig,
    MaskedSeries, ModulationConfig, ThresholdMode,
};
use crate::map::SystemParams;
use crate::seeding::{stream_seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Audio(AudioClip),
    Image(GrayImage),
}

impl Payload {
    pub fn compress(&self, opts: &CodecOptions) -> Result<CoefficientPacket> {
        match self {
            Payload::Audio(a) => compress_audio(a, opts),
            Payload::Image(i) => compress_image(i, opts),
        }
    }

    pub fn decompress(p: &CoefficientPacket) -> Result<Self> {
        match p.kind {
            PayloadKind::Audio => decompress_audio(p).map(Payload::Audio),
            PayloadKind::Image => decompress_image(p).map(Payload::Image),
        }
    }
}

/// Audio: relative RMS error against the 8-bit source and against the input.
/// Images: PSNR in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fidelity {
    Audio {
        relative_rms_error: f64,
        relative_rms_error_vs_8bit: f64,
    },
    Image {
        psnr_db: f64,
    },
}

pub fn fidelity(original: &Payload, recovered: &Payload) -> Result<Fidelity> {
    match (original, recovered) {
        (Payload::Audio(a), Payload::Audio(b)) => {
            if a.samples.len() != b.samples.len() {
                return Err(Error::LengthMismatch {
                    left: a.samples.len(),
                    right: b.samples.len(),
                });
            }
            Ok(Fidelity::Audio {
                relative_rms_error: relative_rms_error(&a.samples, &b.samples),
                relative_rms_error_vs_8bit: relative_rms_error(&downconvert_8bit(a), &b.samples),
            })
        }
        (Payload::Image(a), Payload::Image(b)) => Ok(Fidelity::Image {
            psnr_db: psnr(a, b)?,
        }),
        _ => Err(Error::param("kind", 0.0, "payload kinds differ")),
    }
}

/// Real-time check for audio: the packet must stream within the clip's own
/// duration at the link bit rate `f_clk / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityCheck {
    pub payload_rate: f64,
    pub link_rate: f64,
    pub real_time_ok: bool,
}

pub fn capacity_check(
    packet: &CoefficientPacket,
    modulation: &ModulationConfig,
) -> Option<CapacityCheck> {
    if packet.kind != PayloadKind::Audio || packet.sample_rate == 0 || packet.width == 0 {
        return None;
    }
    let duration = packet.width as f64 / packet.sample_rate as f64;
    let payload_rate = packet.serialized_bits() as f64 / duration;
    let link_rate = modulation.bit_rate();
    Some(CapacityCheck {
        payload_rate,
        link_rate,
        real_time_ok: payload_rate <= link_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitConfig {
    pub codec: CodecOptions,
    pub link: LinkConfig,
    /// Reject audio payloads that cannot stream in real time.
    pub enforce_capacity: bool,
}

/// Sender half: compress, frame and mask.
pub struct Prepared {
    pub packet: CoefficientPacket,
    pub bits: Vec<bool>,
    pub masked: MaskedSeries,
    pub capacity: Option<CapacityCheck>,
}

pub fn prepare(
    p: &SystemParams,
    payload: &Payload,
    cfg: &TransmitConfig,
    seed: u64,
) -> Result<Prepared> {
    let packet = payload.compress(&cfg.codec)?;
    let capacity = capacity_check(&packet, &cfg.link.modulation);
    if cfg.enforce_capacity {
        if let Some(c) = capacity.filter(|c| !c.real_time_ok) {
            return Err(Error::LinkCapacity {
                payload_bits: packet.serialized_bits(),
                bit_rate: c.payload_rate,
                capacity: c.link_rate,
            });
        }
    }
    let bits = packet_to_bits(&packet)?;
    let masked = mask_transmit(p, &bits, &cfg.link.modulation, seed)?;
    Ok(Prepared {
        packet,
        bits,
        masked,
        capacity,
    })
}

/// Receiver half: unmask, detect and try to deframe.
pub struct Recovered {
    pub bits: Vec<bool>,
    pub packet: Result<CoefficientPacket>,
}

pub fn recover(
    received: &[f64],
    rx_params: &SystemParams,
    seed: u64,
    modulation: &ModulationConfig,
    mode: ThresholdMode,
) -> Recovered {
    let bits = receive_bits(received, rx_params, receiver_init(seed), modulation, mode);
    let packet = bits_to_packet(&bits);
    Recovered { bits, packet }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitReport {
    pub seed: u64,
    pub payload_kind: PayloadKind,
    pub keep_fraction: f64,
    pub packet_bits: usize,
    pub compression_ratio: f64,
    pub ber: BerResult,
    pub crc_ok: bool,
    /// Deframing error, if any.
    pub error: Option<String>,
    /// Codec-only reconstruction quality.
    pub local_fidelity: Fidelity,
    /// Quality after the link; absent when the packet was lost.
    pub link_fidelity: Option<Fidelity>,
    pub bit_exact_vs_local: bool,
    pub capacity: Option<CapacityCheck>,
}

pub struct TransmitOutcome {
    pub report: TransmitReport,
    pub local: Payload,
    pub recovered: Option<Payload>,
}

/// Runs the whole pipeline in memory. A failed CRC or header is reported, not
/// returned as an error.
pub fn transmit_payload(
    p: &SystemParams,
    payload: &Payload,
    cfg: &TransmitConfig,
    seed: u64,
) -> Result<TransmitOutcome> {
    let prep = prepare(p, payload, cfg, seed)?;
    let local = Payload::decompress(&prep.packet)?;
    let received = channel_awgn(
        &prep.masked.w_star,
        cfg.link.channel_sigma,
        stream_seed(seed, Stream::Noise),
    )?;
    let rx_params = p.with_mismatch(cfg.link.receiver_mismatch);
    rx_params.validate()?;
    let rec = recover(&received, &rx_params, seed, &cfg.link.modulation, cfg.link.threshold);
    let ber = ber_measure(&prep.bits, &rec.bits)?;
    let (recovered, error) = match rec.packet {
        Ok(pk) => (Some(Payload::decompress(&pk)?), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = TransmitReport {
        seed,
        payload_kind: prep.packet.kind,
        keep_fraction: cfg.codec.keep_fraction,
        packet_bits: prep.bits.len(),
        compression_ratio: prep.packet.compression_ratio(),
        ber,
        crc_ok: error.is_none(),
        error,
        local_fidelity: fidelity(payload, &local)?,
        link_fidelity: recovered.as_ref().map(|r| fidelity(payload, r)).transpose()?,
        bit_exact_vs_local: recovered.as_ref() == Some(&local),
        capacity: prep.capacity,
    };
    Ok(TransmitOutcome {
        report,
        local,
        recovered,
    })
}
