//! Coefficient packets and their bit-exact framing.
//!
//! All fields are written MSB first.
//!
//! | field | bits |
//! |---|---|
//! | magic `HCPK` | 32 |
//! | version | 8 |
//! | kind (0 audio, 1 image) | 8 |
//! | selection (0 largest magnitude, 1 low frequency) | 8 |
//! | value_bits | 8 |
//! | width (audio: sample count) | 32 |
//! | height (audio: 1) | 32 |
//! | sample_rate (image: 0) | 32 |
//! | frame_len | 32 |
//! | keep_fraction (f32) | 32 |
//! | frame count | 32 |
//! | per frame: dc (f32), scale (f32), kept AC count `K` | 32 + 32 + 32 |
//! | per frame, largest-magnitude only: `d` = delta width, then `K` deltas | 8 + K·d |
//! | per frame: `K` signed values | K·value_bits |
//! | CRC-32 over all preceding bytes (bits packed MSB first, last byte zero-padded) | 32 |
//!
//! Indices are AC positions in `1..frame_len`; deltas are taken from the
//! previous index, starting at 0, so every delta is at least 1. With
//! low-frequency selection the kept positions are the first `K` entries of the
//! frame's fixed scan order and are not transmitted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: u32 = u32::from_be_bytes(*b"HCPK");
const VERSION: u8 = 1;
pub const HEADER_BITS: usize = 32 + 8 * 4 + 32 * 6;
pub const FRAME_HEADER_BITS: usize = 96;
pub const CRC_BITS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadKind {
    Audio,
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// Largest `|c|` per frame; positions travel with the packet.
    LargestMagnitude,
    /// First coefficients of a fixed low-frequency scan; positions are implicit.
    LowFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub dc: f32,
    /// Largest kept `|AC|`; values are in units of `scale / (2^(value_bits-1) - 1)`.
    pub scale: f32,
    /// Ascending AC positions (empty for low-frequency selection).
    pub indices: Vec<u32>,
    pub values: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPacket {
    pub kind: PayloadKind,
    pub selection: SelectionRule,
    pub value_bits: u8,
    pub width: u32,
    pub height: u32,
    pub sample_rate: u32,
    pub frame_len: u32,
    pub keep_fraction: f32,
    pub frames: Vec<Frame>,
}

fn bits_for(v: u32) -> u32 {
    32 - v.leading_zeros()
}

fn delta_width(indices: &[u32]) -> u32 {
    let mut prev = 0;
    let mut w = 1;
    for &i in indices {
        w = w.max(bits_for(i - prev));
        prev = i;
    }
    w
}

impl CoefficientPacket {
    /// Exact length of [`packet_to_bits`]'s output.
    pub fn serialized_bits(&self) -> usize {
        let mut bits = HEADER_BITS + CRC_BITS;
        for f in &self.frames {
            let k = f.values.len();
            bits += FRAME_HEADER_BITS + k * self.value_bits as usize;
            if self.selection == SelectionRule::LargestMagnitude {
                bits += 8 + k * delta_width(&f.indices) as usize;
            }
        }
        bits
    }

    /// Original payload bits (8 per sample or pixel) over serialized bits.
    pub fn compression_ratio(&self) -> f64 {
        let original = self.width as f64 * self.height as f64 * 8.0;
        original / self.serialized_bits() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=24).contains(&self.value_bits) {
            return Err(Error::param("value_bits", self.value_bits as f64, "must be in 2..=24"));
        }
        for f in &self.frames {
            if self.selection == SelectionRule::LargestMagnitude {
                if f.indices.len() != f.values.len() {
                    return Err(Error::LengthMismatch {
                        left: f.indices.len(),
                        right: f.values.len(),
                    });
                }
                let mut prev = 0;
                for &i in &f.indices {
                    if i <= prev || i >= self.frame_len {
                        return Err(Error::param(
                            "indices",
                            i as f64,
                            "must be strictly ascending AC positions below frame_len",
                        ));
                    }
                    prev = i;
                }
            } else if !f.indices.is_empty() {
                return Err(Error::param(
                    "indices",
                    f.indices.len() as f64,
                    "low-frequency frames carry no indices",
                ));
            }
            let lim = (1i64 << (self.value_bits - 1)) - 1;
            if f.values.iter().any(|&v| (v as i64).abs() > lim) {
                return Err(Error::param("values", lim as f64, "value exceeds quantizer range"));
            }
        }
        Ok(())
    }
}

#[derive(Default)]
pub struct BitWriter {
    bits: Vec<bool>,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
    }

    pub fn put_signed(&mut self, value: i64, width: u32) {
        self.put((value as u64) & ((1u64 << width) - 1), width);
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }
}

pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a [bool]) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn get(&mut self, width: u32) -> Result<u64> {
        if self.pos + width as usize > self.bits.len() {
            return Err(Error::Format {
                bit_offset: self.pos,
                reason: format!("need {width} more bits, stream ends at {}", self.bits.len()),
            });
        }
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.bits[self.pos] as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn get_signed(&mut self, width: u32) -> Result<i64> {
        let raw = self.get(width)?;
        let shift = 64 - width;
        Ok(((raw << shift) as i64) >> shift)
    }
}

/// Packs bits MSB first; the last byte is zero-padded.
pub fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
        })
        .collect()
}

pub fn bytes_to_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
        .collect()
}

pub fn packet_to_bits(p: &CoefficientPacket) -> Result<Vec<bool>> {
    p.validate()?;
    let mut w = BitWriter::new();
    w.put(MAGIC as u64, 32);
    w.put(VERSION as u64, 8);
    w.put(matches!(p.kind, PayloadKind::Image) as u64, 8);
    w.put(matches!(p.selection, SelectionRule::LowFrequency) as u64, 8);
    w.put(p.value_bits as u64, 8);
    w.put(p.width as u64, 32);
    w.put(p.height as u64, 32);
    w.put(p.sample_rate as u64, 32);
    w.put(p.frame_len as u64, 32);
    w.put(p.keep_fraction.to_bits() as u64, 32);
    w.put(p.frames.len() as u64, 32);
    for f in &p.frames {
        w.put(f.dc.to_bits() as u64, 32);
        w.put(f.scale.to_bits() as u64, 32);
        w.put(f.values.len() as u64, 32);
        if p.selection == SelectionRule::LargestMagnitude {
            let d = delta_width(&f.indices);
            w.put(d as u64, 8);
            let mut prev = 0;
            for &i in &f.indices {
                w.put((i - prev) as u64, d);
                prev = i;
            }
        }
        for &v in &f.values {
            w.put_signed(v as i64, p.value_bits as u32);
        }
    }
    let crc = crc32fast::hash(&bits_to_bytes(&w.bits));
    w.put(crc as u64, 32);
    Ok(w.into_bits())
}

pub fn bits_to_packet(bits: &[bool]) -> Result<CoefficientPacket> {
    let mut r = BitReader::new(bits);
    let magic = r.get(32)? as u32;
    if magic != MAGIC {
        return Err(Error::Format {
            bit_offset: 0,
            reason: format!("bad magic {magic:#010x}"),
        });
    }
    let at = r.position();
    let version = r.get(8)?;
    if version != VERSION as u64 {
        return Err(Error::Format {
            bit_offset: at,
            reason: format!("unsupported version {version}"),
        });
    }
    let at = r.position();
    let kind = match r.get(8)? {
        0 => PayloadKind::Audio,
        1 => PayloadKind::Image,
        other => {
            return Err(Error::Format {
                bit_offset: at,
                reason: format!("unknown payload kind {other}"),
            })
        }
    };
    let at = r.position();
    let selection = match r.get(8)? {
        0 => SelectionRule::LargestMagnitude,
        1 => SelectionRule::LowFrequency,
        other => {
            return Err(Error::Format {
                bit_offset: at,
                reason: format!("unknown selection rule {other}"),
            })
        }
    };
    let at = r.position();
    let value_bits = r.get(8)? as u8;
    if !(2..=24).contains(&value_bits) {
        return Err(Error::Format {
            bit_offset: at,
            reason: format!("value_bits {value_bits} out of range"),
        });
    }
    let width = r.get(32)? as u32;
    let height = r.get(32)? as u32;
    let sample_rate = r.get(32)? as u32;
    let frame_len = r.get(32)? as u32;
    let keep_fraction = f32::from_bits(r.get(32)? as u32);
    let n_frames = r.get(32)? as usize;
    // every frame costs at least its header, which bounds a corrupted count
    if n_frames > bits.len() / FRAME_HEADER_BITS {
        return Err(Error::Format {
            bit_offset: r.position() - 32,
            reason: format!("frame count {n_frames} exceeds stream length"),
        });
    }
    let mut frames = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        let dc = f32::from_bits(r.get(32)? as u32);
        let scale = f32::from_bits(r.get(32)? as u32);
        let at = r.position();
        let k = r.get(32)? as usize;
        if k >= frame_len.max(1) as usize || k * value_bits as usize > bits.len() {
            return Err(Error::Format {
                bit_offset: at,
                reason: format!("coefficient count {k} is inconsistent with frame length {frame_len}"),
            });
        }
        let mut indices = Vec::new();
        if selection == SelectionRule::LargestMagnitude {
            let d = r.get(8)? as u32;
            indices.reserve(k);
            let mut prev = 0u32;
            for _ in 0..k {
                let at = r.position();
                let delta = r.get(d)? as u32;
                prev = prev.checked_add(delta).filter(|_| delta > 0).ok_or(Error::Format {
                    bit_offset: at,
                    reason: "zero or overflowing index delta".into(),
                })?;
                indices.push(prev);
            }
        }
        let mut values = Vec::with_capacity(k);
        for _ in 0..k {
            values.push(r.get_signed(value_bits as u32)? as i32);
        }
        frames.push(Frame {
            dc,
            scale,
            indices,
            values,
        });
    }
    let payload_end = r.position();
    let computed = crc32fast::hash(&bits_to_bytes(&bits[..payload_end]));
    let stored = r.get(32)? as u32;
    if stored != computed {
        return Err(Error::CrcMismatch {
            stored,
            computed,
            bit_offset: payload_end,
        });
    }
    if r.position() != bits.len() {
        return Err(Error::Format {
            bit_offset: r.position(),
            reason: format!("{} trailing bits after CRC", bits.len() - r.position()),
        });
    }
    let packet = CoefficientPacket {
        kind,
        selection,
        value_bits,
        width,
        height,
        sample_rate,
        frame_len,
        keep_fraction,
        frames,
    };
    packet.validate().map_err(|e| Error::Format {
        bit_offset: payload_end,
        reason: e.to_string(),
    })?;
    Ok(packet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(selection: SelectionRule) -> CoefficientPacket {
        let lm = selection == SelectionRule::LargestMagnitude;
        CoefficientPacket {
            kind: PayloadKind::Image,
            selection,
            value_bits: 8,
            width: 16,
            height: 16,
            sample_rate: 0,
            frame_len: 256,
            keep_fraction: 0.1,
            frames: vec![Frame {
                dc: 1234.5,
                scale: 17.25,
                indices: if lm { vec![1, 2, 9, 200] } else { vec![] },
                values: vec![127, -127, 5, 0],
            }],
        }
    }

    #[test]
    fn roundtrip_both_rules() {
        for rule in [SelectionRule::LargestMagnitude, SelectionRule::LowFrequency] {
            let p = sample(rule);
            let bits = packet_to_bits(&p).unwrap();
            assert_eq!(bits.len(), p.serialized_bits());
            assert_eq!(bits_to_packet(&bits).unwrap(), p);
        }
    }

    #[test]
    fn flipped_bit_detected() {
        let p = sample(SelectionRule::LargestMagnitude);
        let mut bits = packet_to_bits(&p).unwrap();
        let n = bits.len();
        bits[n - 40] = !bits[n - 40];
        assert!(matches!(bits_to_packet(&bits), Err(Error::CrcMismatch { .. })));
    }

    #[test]
    fn truncation_and_magic_reported() {
        let bits = packet_to_bits(&sample(SelectionRule::LowFrequency)).unwrap();
        assert!(matches!(
            bits_to_packet(&bits[..bits.len() - 1]),
            Err(Error::Format { .. })
        ));
        let mut bad = bits.clone();
        bad[0] = !bad[0];
        assert!(matches!(
            bits_to_packet(&bad),
            Err(Error::Format { bit_offset: 0, .. })
        ));
    }

    #[test]
    fn signed_fields() {
        let mut w = BitWriter::new();
        w.put_signed(-5, 8);
        w.put_signed(127, 8);
        let bits = w.into_bits();
        let mut r = BitReader::new(&bits);
        assert_eq!(r.get_signed(8).unwrap(), -5);
        assert_eq!(r.get_signed(8).unwrap(), 127);
        assert_eq!(bytes_to_bits(&bits_to_bytes(&bits)), bits);
    }

    #[test]
    fn rejects_out_of_range_values() {
        let mut p = sample(SelectionRule::LowFrequency);
        p.frames[0].values[0] = 128;
        assert!(packet_to_bits(&p).is_err());
    }
}
