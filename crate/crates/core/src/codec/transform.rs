//! DCT-domain coefficient selection and quantization shared by the audio and image codecs.

use serde::{Deserialize, Serialize};

use super::packet::{Frame, SelectionRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecOptions {
    /// Fraction of coefficients kept per frame, DC included.
    pub keep_fraction: f64,
    pub selection: SelectionRule,
    /// Bits per kept AC value, sign included.
    pub value_bits: u8,
    /// Audio frame length in samples (images use one frame).
    pub frame_len: usize,
}

impl CodecOptions {
    pub fn audio(keep_fraction: f64) -> Self {
        Self {
            keep_fraction,
            selection: SelectionRule::LargestMagnitude,
            value_bits: 8,
            frame_len: 1024,
        }
    }

    pub fn image(keep_fraction: f64) -> Self {
        Self {
            keep_fraction,
            selection: SelectionRule::LowFrequency,
            value_bits: 8,
            frame_len: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::param("keep_fraction", self.keep_fraction, "must be in (0, 1]"));
        }
        if !(2..=24).contains(&self.value_bits) {
            return Err(Error::param("value_bits", self.value_bits as f64, "must be in 2..=24"));
        }
        Ok(())
    }

    /// Kept AC coefficients in a frame of `n`.
    pub fn kept_ac(&self, n: usize) -> usize {
        let total = (self.keep_fraction * n as f64).round() as usize;
        total.clamp(1, n) - 1
    }
}

pub(crate) fn quant_levels(value_bits: u8) -> f64 {
    ((1u64 << (value_bits - 1)) - 1) as f64
}

/// AC positions to keep, ascending for largest-magnitude selection and in
/// scan order for low-frequency selection.
pub fn select_positions(coeffs: &[f64], k: usize, rule: SelectionRule, scan: &[usize]) -> Vec<usize> {
    match rule {
        SelectionRule::LowFrequency => scan[..k.min(scan.len())].to_vec(),
        SelectionRule::LargestMagnitude => {
            let mut idx: Vec<usize> = (1..coeffs.len()).collect();
            let k = k.min(idx.len());
            if k < idx.len() {
                idx.select_nth_unstable_by(k, |&a, &b| {
                    coeffs[b].abs().total_cmp(&coeffs[a].abs()).then(a.cmp(&b))
                });
                idx.truncate(k);
            }
            idx.sort_unstable();
            idx
        }
    }
}

pub(crate) fn encode_frame(
    coeffs: &[f64],
    k: usize,
    rule: SelectionRule,
    scan: &[usize],
    value_bits: u8,
) -> Frame {
    let pos = select_positions(coeffs, k, rule, scan);
    let peak = pos.iter().map(|&i| coeffs[i].abs()).fold(0.0, f64::max);
    let scale = peak as f32;
    let levels = quant_levels(value_bits);
    let values = pos
        .iter()
        .map(|&i| {
            if scale > 0.0 {
                (coeffs[i] / scale as f64 * levels).round().clamp(-levels, levels) as i32
            } else {
                0
            }
        })
        .collect();
    Frame {
        dc: coeffs[0] as f32,
        scale,
        indices: match rule {
            SelectionRule::LargestMagnitude => pos.iter().map(|&i| i as u32).collect(),
            SelectionRule::LowFrequency => Vec::new(),
        },
        values,
    }
}

pub(crate) fn decode_frame(
    frame: &Frame,
    n: usize,
    rule: SelectionRule,
    scan: &[usize],
    value_bits: u8,
) -> Result<Vec<f64>> {
    let mut c = vec![0.0; n];
    c[0] = frame.dc as f64;
    let step = frame.scale as f64 / quant_levels(value_bits);
    let positions: Vec<usize> = match rule {
        SelectionRule::LargestMagnitude => frame.indices.iter().map(|&i| i as usize).collect(),
        SelectionRule::LowFrequency => {
            if frame.values.len() > scan.len() {
                return Err(Error::InsufficientData {
                    needed: frame.values.len(),
                    got: scan.len(),
                });
            }
            scan[..frame.values.len()].to_vec()
        }
    };
    for (&i, &v) in positions.iter().zip(&frame.values) {
        if i >= n {
            return Err(Error::param("index", i as f64, "outside the frame"));
        }
        c[i] = v as f64 * step;
    }
    Ok(c)
}

/// Relative RMS error `||x - y|| / ||x||`.
pub fn relative_rms_error(reference: &[f64], other: &[f64]) -> f64 {
    let num: f64 = reference.iter().zip(other).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = reference.iter().map(|a| a * a).sum();
    (num / den).sqrt()
}
