use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use hypermask::codec::{
    capacity_check, prepare, read_pgm, read_wav, recover, write_pgm, write_wav, CapacityCheck,
    Payload, PayloadKind, TransmitConfig,
};
use hypermask::link::{
    ber_measure, channel_awgn, read_masked_series, write_masked_series, BerResult,
};
use hypermask::seeding::{stream_seed, Stream};

use crate::config::RunConfig;
use crate::exit::{Failed, Invalid};
use crate::output::{write_json, Meta};

#[derive(Debug, Args)]
pub struct SendArgs {
    /// 16-bit PCM `.wav` or binary `.pgm`.
    #[arg(long)]
    pub input: PathBuf,
    /// Masked series file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the codec-only reconstruction here.
    #[arg(long)]
    pub local: Option<PathBuf>,
    /// Leave the transmitted bits out of the series file (no BER at the receiver).
    #[arg(long)]
    pub no_bits: bool,
}

#[derive(Debug, Args)]
pub struct RecvArgs {
    /// Masked series file written by `send-file`.
    #[arg(long)]
    pub input: PathBuf,
    /// Recovered `.wav` or `.pgm`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn is_image(path: &Path) -> Result<bool> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("wav") => Ok(false),
        Some("pgm") => Ok(true),
        _ => bail!(Invalid(format!("{}: expected a .wav or .pgm file", path.display()))),
    }
}

fn load(path: &Path) -> Result<Payload> {
    Ok(if is_image(path)? {
        Payload::Image(read_pgm(path)?)
    } else {
        Payload::Audio(read_wav(path)?)
    })
}

fn save(path: &Path, payload: &Payload) -> Result<()> {
    match payload {
        Payload::Audio(a) => write_wav(path, a)?,
        Payload::Image(i) => write_pgm(path, i)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct SendReport {
    payload_kind: PayloadKind,
    keep_fraction: f64,
    packet_bits: usize,
    compression_ratio: f64,
    samples: usize,
    local_fidelity: hypermask::codec::Fidelity,
    capacity: Option<CapacityCheck>,
}

pub fn send(cfg: &RunConfig, args: &SendArgs) -> Result<()> {
    let seed = cfg.require_seed()?;
    let payload = load(&args.input)?;
    let image = matches!(payload, Payload::Image(_));
    let tcfg = TransmitConfig {
        codec: cfg.codec(image)?,
        link: cfg.link()?,
        enforce_capacity: cfg.codec.enforce_capacity,
    };
    let prep = prepare(&cfg.params()?, &payload, &tcfg, seed)?;
    let local = Payload::decompress(&prep.packet)?;
    let f = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_masked_series(BufWriter::new(f), &prep.masked, !args.no_bits)?;
    if let Some(path) = &args.local {
        save(path, &local)?;
    }
    if let Some(path) = &args.report {
        let report = SendReport {
            payload_kind: prep.packet.kind,
            keep_fraction: tcfg.codec.keep_fraction,
            packet_bits: prep.bits.len(),
            compression_ratio: prep.packet.compression_ratio(),
            samples: prep.masked.w_star.len(),
            local_fidelity: hypermask::codec::fidelity(&payload, &local)?,
            capacity: capacity_check(&prep.packet, &tcfg.link.modulation),
        };
        write_json(path, &Meta::new("send-file", cfg), &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RecvReport {
    /// Seed of the transmission, read from the series file.
    series_seed: u64,
    bits: usize,
    ber: Option<BerResult>,
    crc_ok: bool,
    error: Option<String>,
    payload_kind: Option<PayloadKind>,
    compression_ratio: Option<f64>,
}

pub fn recv(cfg: &RunConfig, args: &RecvArgs) -> Result<()> {
    let f = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let series = read_masked_series(BufReader::new(f))?;
    let link = cfg.link()?;
    let received = channel_awgn(
        &series.w_star,
        link.channel_sigma,
        stream_seed(series.seed, Stream::Noise),
    )?;
    let rx = series.params.with_mismatch(link.receiver_mismatch);
    rx.validate()?;
    let rec = recover(&received, &rx, series.seed, &series.config, link.threshold);
    let ber = if series.true_bits.len() == series.n_bits && series.n_bits > 0 {
        Some(ber_measure(&series.true_bits, &rec.bits)?)
    } else {
        None
    };
    let (packet, error) = match rec.packet {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    if let Some(p) = &packet {
        let payload = Payload::decompress(p)?;
        if is_image(&args.out)? != matches!(payload, Payload::Image(_)) {
            bail!(Invalid(format!(
                "{} does not match the received payload kind",
                args.out.display()
            )));
        }
        save(&args.out, &payload)?;
    }
    if let Some(path) = &args.report {
        let report = RecvReport {
            series_seed: series.seed,
            bits: rec.bits.len(),
            ber,
            crc_ok: error.is_none(),
            error: error.clone(),
            payload_kind: packet.as_ref().map(|p| p.kind),
            compression_ratio: packet.as_ref().map(|p| p.compression_ratio()),
        };
        write_json(path, &Meta::new("recv-file", cfg), &report)?;
    }
    if let Some(e) = error {
        bail!(Failed(format!("payload not recovered: {e}")));
    }
    Ok(())
}
