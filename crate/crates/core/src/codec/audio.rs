//! Frame-wise DCT audio codec.
//!
//! Input samples are normalized to [-1, 1] and first down-converted to 8 bits
//! (integer levels -127..=127). Each frame of `frame_len` samples is
//! transformed, the kept AC coefficients are quantized, and the DC travels as
//! an `f32`. The last frame is zero-padded.

use serde::{Deserialize, Serialize};

use super::dct::DctPlan;
use super::packet::{CoefficientPacket, PayloadKind};
use super::transform::{decode_frame, encode_frame, CodecOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    /// Normalized to [-1, 1].
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::param("sample_rate", 0.0, "must be positive"));
        }
        if self.samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio samples"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

const LEVELS_8BIT: f64 = 127.0;

/// The 8-bit version of the clip, back in normalized units.
pub fn downconvert_8bit(clip: &AudioClip) -> Vec<f64> {
    clip.samples
        .iter()
        .map(|s| (s * LEVELS_8BIT).round().clamp(-LEVELS_8BIT, LEVELS_8BIT) / LEVELS_8BIT)
        .collect()
}

pub fn compress_audio(clip: &AudioClip, opts: &CodecOptions) -> Result<CoefficientPacket> {
    clip.validate()?;
    opts.validate()?;
    if opts.frame_len < 2 {
        return Err(Error::param("frame_len", opts.frame_len as f64, "must be at least 2"));
    }
    if clip.samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let n = opts.frame_len;
    let plan = DctPlan::new(n);
    let scan: Vec<usize> = (1..n).collect();
    let k = opts.kept_ac(n);
    let levels: Vec<f64> = downconvert_8bit(clip).iter().map(|s| s * LEVELS_8BIT).collect();
    let frames = levels
        .chunks(n)
        .map(|chunk| {
            let mut buf = vec![0.0; n];
            buf[..chunk.len()].copy_from_slice(chunk);
            plan.forward(&mut buf);
            encode_frame(&buf, k, opts.selection, &scan, opts.value_bits)
        })
        .collect();
    Ok(CoefficientPacket {
        kind: PayloadKind::Audio,
        selection: opts.selection,
        value_bits: opts.value_bits,
        width: clip.samples.len() as u32,
        height: 1,
        sample_rate: clip.sample_rate,
        frame_len: n as u32,
        keep_fraction: opts.keep_fraction as f32,
        frames,
    })
}

pub fn decompress_audio(p: &CoefficientPacket) -> Result<AudioClip> {
    if p.kind != PayloadKind::Audio {
        return Err(Error::param("kind", 1.0, "packet does not hold audio"));
    }
    let n = p.frame_len as usize;
    if n < 2 || p.frames.len() != (p.width as usize).div_ceil(n) {
        return Err(Error::param(
            "frame_len",
            n as f64,
            "frame count does not cover the sample count",
        ));
    }
    let plan = DctPlan::new(n);
    let scan: Vec<usize> = (1..n).collect();
    let mut samples = Vec::with_capacity(p.frames.len() * n);
    for f in &p.frames {
        let mut c = decode_frame(f, n, p.selection, &scan, p.value_bits)?;
        plan.inverse(&mut c);
        samples.extend(c.iter().map(|v| v / LEVELS_8BIT));
    }
    samples.truncate(p.width as usize);
    Ok(AudioClip {
        samples,
        sample_rate: p.sample_rate,
    })
}

/// Deterministic voiced-speech stand-in: a Rosenberg glottal pulse train with
/// a slowly drifting pitch (110–150 Hz), shaped by three formant resonators
/// and a 4 Hz syllable envelope.
pub fn speech_like(seconds: f64, sample_rate: u32) -> AudioClip {
    use std::f64::consts::PI;
    let fs = sample_rate as f64;
    let n = (seconds * fs).round() as usize;
    let formants = [(650.0, 80.0, 1.0), (1200.0, 90.0, 0.5), (2500.0, 120.0, 0.25)];
    // two-pole resonator coefficients
    let res: Vec<(f64, f64, f64)> = formants
        .iter()
        .map(|&(f, bw, g)| {
            let r = (-PI * bw / fs).exp();
            let theta = 2.0 * PI * f / fs;
            (2.0 * r * theta.cos(), -r * r, g * (1.0 - r))
        })
        .collect();
    let mut state = vec![(0.0f64, 0.0f64); res.len()];
    // opening and closing fractions of the glottal cycle
    let (open, close) = (0.4, 0.16);
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let f0 = 130.0 + 20.0 * (2.0 * PI * 0.3 * t).sin();
        phase = (phase + f0 / fs).fract();
        let g = if phase < open {
            0.5 * (1.0 - (PI * phase / open).cos())
        } else if phase < open + close {
            (0.5 * PI * (phase - open) / close).cos()
        } else {
            0.0
        };
        let mut y = 0.0;
        for ((a1, a2, gain), s) in res.iter().zip(state.iter_mut()) {
            let v = gain * g + a1 * s.0 + a2 * s.1;
            s.1 = s.0;
            s.0 = v;
            y += v;
        }
        let env = (2.0 * PI * 2.0 * t).sin().powi(2);
        out.push(y * env);
    }
    // remove the glottal DC offset, then normalize the peak
    let m = out.iter().sum::<f64>() / n.max(1) as f64;
    out.iter_mut().for_each(|v| *v -= m);
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in &mut out {
            *v *= 0.9 / peak;
        }
    }
    AudioClip {
        samples: out,
        sample_rate,
    }
}
