//! Additive chaotic masking: transmitter, AWGN channel and unmasking receiver.
//!
//! Bit `k` is sent as the NRZ level `i_n = ±amplitude` (bit 1 positive) for
//! `N = samples_per_bit` clock steps. The transmitter adds it to its `z`
//! register, `z*_n = z_n + i_n`, and sends `w*_n = z*_n + gamma x_n`.
//!
//! In the closed loop (default) the transmitter also iterates on `z*`:
//! `x' = f(a x + b z*)`, `y' = f(c y + z*)`, `z' = f(x + y)`. That is exactly
//! the update the receiver performs with its substituted `z~ = w* - gamma x_r`,
//! so a synchronized receiver stays synchronized and recovers
//! `i_n = w*_n - (gamma x_r + z_r)` without error. In the open loop the
//! transmitter ignores the message, the receiver sees `i_n` as a disturbance,
//! and recovery carries a message-dependent residual.

use std::io::{Read, Write};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::binio::{put_f64, put_params, put_u16, put_u64, put_u8, LeReader};
use crate::error::{Error, Result};
use crate::map::{
    drive_output, fold, generate_trajectory, random_init, step_ideal, Mode, StateVector,
    SystemParams, DEFAULT_TRANSIENT,
};
use crate::seeding::{self, stream_seed, Stream};
use crate::sync::{receiver_step, stability_check};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskingLoop {
    /// Transmitter state advances on the masked `z*`.
    Closed,
    /// Transmitter state advances autonomously; only the sent scalar is masked.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig {
    /// NRZ level in state units (0.1 corresponds to 200 mV).
    pub amplitude: f64,
    pub samples_per_bit: usize,
    /// Clock frequency in Hz; metadata for rate bookkeeping.
    pub f_clk: f64,
    /// Unmasked clock steps sent before the first bit so the receiver can lock.
    pub preamble: usize,
    pub masking_loop: MaskingLoop,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.1,
            samples_per_bit: 50,
            f_clk: 0.5e6,
            preamble: 200,
            masking_loop: MaskingLoop::Closed,
        }
    }
}

impl ModulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::param("amplitude", self.amplitude, "must be finite and >= 0"));
        }
        if self.samples_per_bit == 0 {
            return Err(Error::param("samples_per_bit", 0.0, "must be at least 1"));
        }
        if !(self.f_clk > 0.0 && self.f_clk.is_finite()) {
            return Err(Error::param("f_clk", self.f_clk, "must be positive"));
        }
        Ok(())
    }

    /// `R_b = f_clk / N`.
    pub fn bit_rate(&self) -> f64 {
        self.f_clk / self.samples_per_bit as f64
    }

    pub fn nrz_level(&self, bit: bool) -> f64 {
        if bit {
            self.amplitude
        } else {
            -self.amplitude
        }
    }

    /// NRZ waveform including a zero-valued preamble.
    pub fn nrz_waveform(&self, bits: &[bool]) -> Vec<f64> {
        let mut out = vec![0.0; self.preamble];
        for &b in bits {
            out.extend(std::iter::repeat_n(self.nrz_level(b), self.samples_per_bit));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedSeries {
    /// Preamble followed by `bits × samples_per_bit` masked samples.
    pub w_star: Vec<f64>,
    /// Reference bits; empty when the series was read without them.
    pub true_bits: Vec<bool>,
    pub n_bits: usize,
    pub config: ModulationConfig,
    pub params: SystemParams,
    pub seed: u64,
}

impl MaskedSeries {
    pub fn payload(&self) -> &[f64] {
        &self.w_star[self.config.preamble.min(self.w_star.len())..]
    }
}

/// Transmitter update on a masked `z*`.
#[inline]
fn masked_step(s: StateVector, z_star: f64, p: &SystemParams) -> StateVector {
    StateVector::new(
        fold(p.a * s.x + p.b * z_star, p.beta),
        fold(p.c * s.y + z_star, p.beta),
        fold(s.x + s.y, p.beta),
    )
}

/// Mask `bits` onto the drive signal.
///
/// The transmitter starts from the `DriveInit` stream of `seed` and discards
/// [`DEFAULT_TRANSIENT`] steps. Coupling outside the synchronization region is
/// rejected with its stability margins.
pub fn mask_transmit(
    p: &SystemParams,
    bits: &[bool],
    cfg: &ModulationConfig,
    seed: u64,
) -> Result<MaskedSeries> {
    p.validate()?;
    cfg.validate()?;
    let report = stability_check(p);
    if !report.stable {
        return Err(Error::UnstableCoupling(report));
    }
    let start = generate_trajectory(
        random_init(stream_seed(seed, Stream::DriveInit)),
        1,
        p,
        Mode::Ideal,
        DEFAULT_TRANSIENT,
    )?;
    let mut s = start.states[0];
    let message = cfg.nrz_waveform(bits);
    let mut w_star = Vec::with_capacity(message.len());
    for &i_n in &message {
        let z_star = s.z + i_n;
        w_star.push(drive_output(s, p.gamma) + i_n);
        s = match cfg.masking_loop {
            MaskingLoop::Closed => masked_step(s, z_star, p),
            MaskingLoop::Open => step_ideal(s, p),
        };
    }
    Ok(MaskedSeries {
        w_star,
        true_bits: bits.to_vec(),
        n_bits: bits.len(),
        config: *cfg,
        params: *p,
        seed,
    })
}

/// Adds i.i.d. `N(0, sigma²)` noise to every sample.
pub fn channel_awgn(series: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", sigma, "must be finite and >= 0"));
    }
    if sigma == 0.0 {
        return Ok(series.to_vec());
    }
    let mut rng = seeding::rng(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    Ok(series.iter().map(|v| v + noise.sample(&mut rng)).collect())
}

/// Default receiver initial condition for a run seed.
pub fn receiver_init(seed: u64) -> StateVector {
    random_init(stream_seed(seed, Stream::ResponseInit))
}

/// Runs the response on the received series and returns `w*_n - (gamma x_r + z_r)`
/// for every sample, preamble included.
pub fn unmask_receive(received: &[f64], p: &SystemParams, init: StateVector) -> Vec<f64> {
    let mut r = init;
    received
        .iter()
        .map(|&w| {
            let sample = w - drive_output(r, p.gamma);
            r = receiver_step(r, w, p);
            sample
        })
        .collect()
}

const MAGIC: &[u8; 4] = b"HMMS";
const VERSION: u16 = 1;

/// Binary masked-series file, little-endian:
/// magic `HMMS`, version u16, params (5 × f64), amplitude f64,
/// samples_per_bit u64, f_clk f64, preamble u64, loop u8 (0 closed, 1 open),
/// seed u64, n_bits u64, has_bits u8, packed bits (MSB first, when present),
/// sample count u64, samples f64.
pub fn write_masked_series<W: Write>(mut w: W, m: &MaskedSeries, include_bits: bool) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u16(&mut w, VERSION)?;
    put_params(&mut w, &m.params)?;
    put_f64(&mut w, m.config.amplitude)?;
    put_u64(&mut w, m.config.samples_per_bit as u64)?;
    put_f64(&mut w, m.config.f_clk)?;
    put_u64(&mut w, m.config.preamble as u64)?;
    put_u8(&mut w, (m.config.masking_loop == MaskingLoop::Open) as u8)?;
    put_u64(&mut w, m.seed)?;
    put_u64(&mut w, m.n_bits as u64)?;
    let with_bits = include_bits && m.true_bits.len() == m.n_bits;
    put_u8(&mut w, with_bits as u8)?;
    if with_bits {
        for chunk in m.true_bits.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)));
            put_u8(&mut w, byte)?;
        }
    }
    put_u64(&mut w, m.w_star.len() as u64)?;
    for &v in &m.w_star {
        put_f64(&mut w, v)?;
    }
    Ok(())
}

pub fn read_masked_series<R: Read>(r: R) -> Result<MaskedSeries> {
    let mut r = LeReader::new(r);
    if &r.bytes::<4>()? != MAGIC {
        return Err(r.format_error("bad magic"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(r.format_error(format!("unsupported version {version}")));
    }
    let params = r.params()?;
    let config = ModulationConfig {
        amplitude: r.f64()?,
        samples_per_bit: r.u64()? as usize,
        f_clk: r.f64()?,
        preamble: r.u64()? as usize,
        masking_loop: match r.u8()? {
            0 => MaskingLoop::Closed,
            1 => MaskingLoop::Open,
            other => return Err(r.format_error(format!("unknown loop tag {other}"))),
        },
    };
    config.validate()?;
    let seed = r.u64()?;
    let n_bits = r.u64()? as usize;
    let mut true_bits = Vec::new();
    if r.u8()? != 0 {
        true_bits.reserve(n_bits.min(1 << 26));
        for _ in 0..n_bits.div_ceil(8) {
            let byte = r.u8()?;
            for i in 0..8 {
                if true_bits.len() < n_bits {
                    true_bits.push(byte >> (7 - i) & 1 == 1);
                }
            }
        }
    }
    let count = r.u64()? as usize;
    if count != config.preamble + n_bits * config.samples_per_bit {
        return Err(r.format_error(format!(
            "sample count {count} does not match preamble + bits × samples_per_bit"
        )));
    }
    let mut w_star = Vec::with_capacity(count.min(1 << 26));
    for _ in 0..count {
        w_star.push(r.f64()?);
    }
    Ok(MaskedSeries {
        w_star,
        true_bits,
        n_bits,
        config,
        params,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::prbs;
    use crate::stats::{pearson, variance};

    fn params() -> SystemParams {
        SystemParams::default().with_gamma(-4.0 / 3.0)
    }

    #[test]
    fn zero_amplitude_is_the_drive_signal() {
        let p = params();
        let cfg = ModulationConfig {
            amplitude: 0.0,
            ..Default::default()
        };
        let bits = prbs(20, 9).unwrap();
        let m = mask_transmit(&p, &bits, &cfg, 4).unwrap();
        let t = generate_trajectory(
            random_init(stream_seed(4, Stream::DriveInit)),
            m.w_star.len(),
            &p,
            Mode::Ideal,
            DEFAULT_TRANSIENT,
        )
        .unwrap();
        assert_eq!(m.w_star, t.drive());
    }

    #[test]
    fn open_loop_masking_is_additive() {
        let p = params();
        let bits = prbs(40, 77).unwrap();
        let cfg = ModulationConfig {
            masking_loop: MaskingLoop::Open,
            ..Default::default()
        };
        let clean = mask_transmit(&p, &bits, &ModulationConfig { amplitude: 0.0, ..cfg }, 5).unwrap();
        let masked = mask_transmit(&p, &bits, &cfg, 5).unwrap();
        let nrz = cfg.nrz_waveform(&bits);
        // exact up to the rounding of one addition
        for ((a, b), i) in masked.w_star.iter().zip(&clean.w_star).zip(&nrz) {
            assert!((a - b - i).abs() <= 4.0 * f64::EPSILON, "{} vs {i}", a - b);
        }
    }

    #[test]
    fn closed_loop_noiseless_recovery() {
        let p = params();
        let bits = prbs(200, 3).unwrap();
        let cfg = ModulationConfig::default();
        let m = mask_transmit(&p, &bits, &cfg, 8).unwrap();
        assert_eq!(m.w_star.len(), cfg.preamble + 200 * cfg.samples_per_bit);
        let rec = unmask_receive(&m.w_star, &p, receiver_init(8));
        let nrz = cfg.nrz_waveform(&bits);
        let worst = rec[cfg.preamble..]
            .iter()
            .zip(&nrz[cfg.preamble..])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn receiver_mismatch_decorrelates() {
        let p = SystemParams::default();
        let bits = prbs(2_000, 3).unwrap();
        let cfg = ModulationConfig::default();
        let m = mask_transmit(&p, &bits, &cfg, 8).unwrap();
        let nrz = cfg.nrz_waveform(&bits);
        let corr = |eps: f64| {
            let bad = SystemParams {
                a: p.a * (1.0 + eps),
                ..p
            };
            let rec = unmask_receive(&m.w_star, &bad, receiver_init(8));
            pearson(&rec[cfg.preamble..], &nrz[cfg.preamble..])
        };
        let c: Vec<f64> = [0.0, 0.01, 0.02, 0.05].iter().map(|&e| corr(e)).collect();
        assert!((c[0] - 1.0).abs() < 1e-9);
        assert!(c.windows(2).all(|w| w[1] < w[0]), "{c:?}");
        assert!(c[1] < 0.7 && c[2] < 0.5, "{c:?}");
    }

    #[test]
    fn zero_amplitude_recovers_nothing() {
        let p = params();
        let bits = prbs(50, 3).unwrap();
        let cfg = ModulationConfig {
            amplitude: 0.0,
            ..Default::default()
        };
        let m = mask_transmit(&p, &bits, &cfg, 2).unwrap();
        let rec = unmask_receive(&m.w_star, &p, receiver_init(2));
        assert!(rec[cfg.preamble..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn unstable_coupling_rejected() {
        let p = SystemParams::default().with_gamma(-0.5);
        let e = mask_transmit(&p, &[true], &ModulationConfig::default(), 1).unwrap_err();
        match e {
            Error::UnstableCoupling(r) => assert!(r.drive_margin < 0.0),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn awgn_statistics() {
        let x = vec![0.25; 100_000];
        assert_eq!(channel_awgn(&x, 0.0, 1).unwrap(), x);
        let y = channel_awgn(&x, 0.1, 1).unwrap();
        assert!((variance(&y) / 0.01 - 1.0).abs() < 0.05);
        assert_eq!(y, channel_awgn(&x, 0.1, 1).unwrap());
        assert!(channel_awgn(&x, -1.0, 1).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let p = params();
        let bits = prbs(13, 5).unwrap();
        let cfg = ModulationConfig {
            samples_per_bit: 4,
            ..Default::default()
        };
        let m = mask_transmit(&p, &bits, &cfg, 6).unwrap();
        let mut buf = Vec::new();
        write_masked_series(&mut buf, &m, true).unwrap();
        assert_eq!(read_masked_series(buf.as_slice()).unwrap(), m);

        let mut bare = Vec::new();
        write_masked_series(&mut bare, &m, false).unwrap();
        let back = read_masked_series(bare.as_slice()).unwrap();
        assert!(back.true_bits.is_empty());
        assert_eq!(back.w_star, m.w_star);
        assert!(read_masked_series(&bare[..bare.len() - 1]).is_err());
    }
}
