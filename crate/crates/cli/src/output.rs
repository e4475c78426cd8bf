//! CSV tables with `#` metadata and JSON reports.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Meta<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: Option<u64>,
    pub config: &'a RunConfig,
}

impl<'a> Meta<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        Self {
            tool: "hypermask",
            version: VERSION,
            command,
            seed: config.seed,
            config,
        }
    }

    fn comment_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("hypermask {} v{}", self.command, self.version),
            match self.seed {
                Some(s) => format!("seed = {s}"),
                None => "seed = none".into(),
            },
        ];
        lines.extend(self.config.flatten().into_iter().filter(|l| !l.starts_with("seed ")));
        lines
    }
}

fn open(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(BufWriter::new(f)))
}

pub struct Table {
    header: Vec<String>,
    notes: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Extra `# key = value` line after the config block.
    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.notes.push(format!("{key} = {value}"));
    }

    pub fn row<I, T>(&mut self, cells: I)
    where
        I: IntoIterator<Item = T>,
        T: std::fmt::Display,
    {
        let r: Vec<String> = cells.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(r.len(), self.header.len());
        self.rows.push(r);
    }

    pub fn write(&self, path: &Path, meta: &Meta) -> Result<()> {
        let mut w = open(path)?;
        for line in meta.comment_lines().iter().chain(&self.notes) {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    meta: &'a Meta<'a>,
    result: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, result: &T) -> Result<()> {
    let mut w = open(path)?;
    serde_json::to_writer_pretty(&mut w, &Report { meta, result })?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
