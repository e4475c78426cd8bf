//! Run configuration: a TOML file with dotted keys plus `--set key=value` overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hypermask::codec::{CodecOptions, SelectionRule};
use hypermask::link::{LinkConfig, MaskingLoop, ModulationConfig, ThresholdMode};
use hypermask::{Mode, SettlingConfig, SystemParams};

use crate::exit::Invalid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub map: MapSection,
    pub lyapunov: LyapunovSection,
    pub sync: SyncSection,
    pub link: LinkSection,
    pub codec: CodecSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            map: MapSection::default(),
            lyapunov: LyapunovSection::default(),
            sync: SyncSection::default(),
            link: LinkSection::default(),
            codec: CodecSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Normalized hold time; absent means ideal settling.
    pub t_n: Option<f64>,
    pub iterations: usize,
    pub transient: usize,
}

impl Default for MapSection {
    fn default() -> Self {
        let p = SystemParams::default();
        Self {
            a: p.a,
            b: p.b,
            c: p.c,
            beta: p.beta,
            gamma: p.gamma,
            t_n: None,
            iterations: 10_000,
            transient: hypermask::map::DEFAULT_TRANSIENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeMethodChoice {
    Qr,
    Er,
    Wolf,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    pub iterations: usize,
    pub method: LeMethodChoice,
    pub beta_start: f64,
    pub beta_stop: f64,
    pub beta_step: f64,
    pub t_n: Vec<f64>,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            method: LeMethodChoice::Qr,
            beta_start: 0.0,
            beta_stop: 1.0,
            beta_step: 0.05,
            t_n: vec![0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.37, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncSection {
    pub iterations: usize,
    pub sigmas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for SyncSection {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            sigmas: (0..=10).map(|i| i as f64 / 200.0).collect(),
            gammas: (0..=17).map(|i| (i as f64 - 22.0) / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdChoice {
    Optimal,
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub amplitude: f64,
    pub samples_per_bit: usize,
    pub f_clk: f64,
    pub preamble: usize,
    pub masking_loop: MaskingLoop,
    pub channel_sigma: f64,
    pub receiver_mismatch: f64,
    pub threshold: ThresholdChoice,
    /// Used with `threshold = "fixed"`.
    pub lambda: f64,
    /// Used with `threshold = "adaptive"`.
    pub update_every: usize,
    pub bits: usize,
    pub amplitudes: Vec<f64>,
    pub histogram_bins: usize,
    pub scan_points: usize,
}

impl Default for LinkSection {
    fn default() -> Self {
        let m = ModulationConfig::default();
        Self {
            amplitude: m.amplitude,
            samples_per_bit: m.samples_per_bit,
            f_clk: m.f_clk,
            preamble: m.preamble,
            masking_loop: m.masking_loop,
            channel_sigma: 0.0,
            receiver_mismatch: 0.0,
            threshold: ThresholdChoice::Optimal,
            lambda: 0.0,
            update_every: 64,
            bits: 100_000,
            amplitudes: vec![0.025, 0.05, 0.075, 0.1],
            histogram_bins: 100,
            scan_points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecSection {
    /// Defaults to 0.22 for audio and 0.165 for images.
    pub keep_fraction: Option<f64>,
    /// Defaults to largest-magnitude for audio and low-frequency for images.
    pub selection: Option<SelectionRule>,
    pub value_bits: u8,
    pub frame_len: usize,
    pub enforce_capacity: bool,
}

impl Default for CodecSection {
    fn default() -> Self {
        Self {
            keep_fraction: None,
            selection: None,
            value_bits: 8,
            frame_len: 1024,
            enforce_capacity: false,
        }
    }
}

impl RunConfig {
    /// Reads `path` (when given), applies `overrides` and validates the shape.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Invalid(format!("config {}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Invalid(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<SystemParams> {
        let m = &self.map;
        let p = SystemParams {
            a: m.a,
            b: m.b,
            c: m.c,
            beta: m.beta,
            gamma: m.gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn mode(&self) -> Result<Mode> {
        Ok(match self.map.t_n {
            None => Mode::Ideal,
            Some(t) => Mode::NonIdeal(SettlingConfig::new(t)?),
        })
    }

    pub fn modulation(&self) -> Result<ModulationConfig> {
        let l = &self.link;
        let m = ModulationConfig {
            amplitude: l.amplitude,
            samples_per_bit: l.samples_per_bit,
            f_clk: l.f_clk,
            preamble: l.preamble,
            masking_loop: l.masking_loop,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn threshold(&self) -> ThresholdMode {
        match self.link.threshold {
            ThresholdChoice::Optimal => ThresholdMode::Optimal,
            ThresholdChoice::Adaptive => ThresholdMode::Adaptive {
                update_every: self.link.update_every,
            },
            ThresholdChoice::Fixed => ThresholdMode::Fixed {
                lambda: self.link.lambda,
            },
        }
    }

    pub fn link(&self) -> Result<LinkConfig> {
        let l = &self.link;
        if !(l.channel_sigma >= 0.0 && l.channel_sigma.is_finite()) {
            bail!(Invalid(format!("link.channel_sigma = {} must be >= 0", l.channel_sigma)));
        }
        Ok(LinkConfig {
            modulation: self.modulation()?,
            channel_sigma: l.channel_sigma,
            receiver_mismatch: l.receiver_mismatch,
            threshold: self.threshold(),
        })
    }

    pub fn codec(&self, image: bool) -> Result<CodecOptions> {
        let c = &self.codec;
        let base = if image {
            CodecOptions::image(c.keep_fraction.unwrap_or(0.165))
        } else {
            CodecOptions::audio(c.keep_fraction.unwrap_or(0.22))
        };
        let opts = CodecOptions {
            selection: c.selection.unwrap_or(base.selection),
            value_bits: c.value_bits,
            frame_len: if image { 0 } else { c.frame_len },
            ..base
        };
        opts.validate()?;
        Ok(opts)
    }

    /// Seed from `--seed` or the config file; stochastic commands require one.
    pub fn require_seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None => bail!(Invalid("this command is stochastic: pass --seed or set `seed`".into())),
        }
    }

    /// `key = value` lines for every set field, in a stable order.
    pub fn flatten(&self) -> Vec<String> {
        let value = toml::Value::try_from(self).expect("config serializes to TOML");
        let mut out = Vec::new();
        flatten_into(&value, "", &mut out);
        out
    }
}

fn flatten_into(v: &toml::Value, prefix: &str, out: &mut Vec<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(v, &key, out);
            }
        }
        other => out.push(format!("{prefix} = {other}")),
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let Some((key, raw)) = item.split_once('=') else {
        bail!(Invalid(format!("--set expects key=value, got `{item}`")));
    };
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        bail!(Invalid(format!("bad key `{key}`")));
    }
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => bail!(Invalid(format!("`{p}` in `{key}` is not a table"))),
        };
    }
    cur.insert(last.to_string(), parse_scalar(raw.trim()));
    Ok(())
}
