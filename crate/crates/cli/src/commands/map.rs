use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use hypermask::map::{drive_output, generate_trajectory, random_init, write_trajectory_binary};
use hypermask::seeding::{stream_seed, Stream};

use crate::config::RunConfig;
use crate::output::{Meta, Table};

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Phase-space CSV (`-` for stdout).
    #[arg(long, default_value = "trajectory.csv")]
    pub out: PathBuf,
    /// Optional binary trajectory file.
    #[arg(long)]
    pub binary: Option<PathBuf>,
}

pub fn run(cfg: &RunConfig, args: &MapArgs) -> Result<()> {
    let seed = cfg.require_seed()?;
    let p = cfg.params()?;
    let mut traj = generate_trajectory(
        random_init(stream_seed(seed, Stream::DriveInit)),
        cfg.map.iterations,
        &p,
        cfg.mode()?,
        cfg.map.transient,
    )?;
    traj.seed = Some(seed);

    let mut t = Table::new(&["n", "x", "y", "z", "w"]);
    for (n, s) in traj.states.iter().enumerate() {
        t.row([n as f64, s.x, s.y, s.z, drive_output(*s, p.gamma)]);
    }
    t.write(&args.out, &Meta::new("map", cfg))?;
    if let Some(path) = &args.binary {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_trajectory_binary(BufWriter::new(f), &traj)?;
    }
    log::info!("wrote {} states", traj.len());
    Ok(())
}
