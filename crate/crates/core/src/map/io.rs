//! Trajectory export.
//!
//! CSV: `#`-prefixed metadata lines, then a header `n,x,y,z,w` and one row per state.
//!
//! Binary (little-endian):
//!
//! | field            | type        |
//! |------------------|-------------|
//! | magic `HMTR`     | 4 bytes     |
//! | version (1)      | u16         |
//! | a, b, c, beta, gamma | 5 × f64 |
//! | mode (0 ideal, 1 non-ideal) | u8 |
//! | t_n (0 when ideal) | f64       |
//! | has_seed         | u8          |
//! | seed             | u64         |
//! | n                | u64         |
//! | rows x, y, z, w  | n × 4 × f64 |

use std::io::{Read, Write};

use super::{drive_output, Mode, SettlingConfig, StateVector, Trajectory};
use crate::binio::{put_f64, put_params, put_u16, put_u64, put_u8, LeReader};
use crate::error::Result;

const MAGIC: &[u8; 4] = b"HMTR";
const VERSION: u16 = 1;

pub fn write_trajectory_csv<W: Write>(mut w: W, t: &Trajectory) -> Result<()> {
    let p = &t.params;
    writeln!(w, "# hypermask trajectory v{}", env!("CARGO_PKG_VERSION"))?;
    writeln!(
        w,
        "# a={},b={},c={},beta={},gamma={}",
        p.a, p.b, p.c, p.beta, p.gamma
    )?;
    match t.mode {
        Mode::Ideal => writeln!(w, "# mode=ideal")?,
        Mode::NonIdeal(cfg) => writeln!(w, "# mode=non-ideal,t_n={}", cfg.t_n())?,
    }
    match t.seed {
        Some(seed) => writeln!(w, "# seed={seed}")?,
        None => writeln!(w, "# seed=none")?,
    }
    writeln!(w, "n,x,y,z,w")?;
    for (n, s) in t.states.iter().enumerate() {
        writeln!(
            w,
            "{n},{},{},{},{}",
            s.x,
            s.y,
            s.z,
            drive_output(*s, p.gamma)
        )?;
    }
    Ok(())
}

pub fn write_trajectory_binary<W: Write>(mut w: W, t: &Trajectory) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u16(&mut w, VERSION)?;
    put_params(&mut w, &t.params)?;
    match t.mode {
        Mode::Ideal => {
            put_u8(&mut w, 0)?;
            put_f64(&mut w, 0.0)?;
        }
        Mode::NonIdeal(cfg) => {
            put_u8(&mut w, 1)?;
            put_f64(&mut w, cfg.t_n())?;
        }
    }
    put_u8(&mut w, t.seed.is_some() as u8)?;
    put_u64(&mut w, t.seed.unwrap_or(0))?;
    put_u64(&mut w, t.states.len() as u64)?;
    for s in &t.states {
        for v in [s.x, s.y, s.z, drive_output(*s, t.params.gamma)] {
            put_f64(&mut w, v)?;
        }
    }
    Ok(())
}

pub fn read_trajectory_binary<R: Read>(r: R) -> Result<Trajectory> {
    let mut r = LeReader::new(r);
    if &r.bytes::<4>()? != MAGIC {
        return Err(r.format_error("bad magic"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(r.format_error(format!("unsupported version {version}")));
    }
    let params = r.params()?;
    let mode_tag = r.u8()?;
    let t_n = r.f64()?;
    let mode = match mode_tag {
        0 => Mode::Ideal,
        1 => Mode::NonIdeal(SettlingConfig::new(t_n)?),
        other => return Err(r.format_error(format!("unknown mode tag {other}"))),
    };
    let has_seed = r.u8()? != 0;
    let seed = r.u64()?;
    let n = r.u64()? as usize;
    let mut states = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let s = StateVector::new(r.f64()?, r.f64()?, r.f64()?);
        let _w = r.f64()?;
        states.push(s);
    }
    Ok(Trajectory {
        states,
        params,
        mode,
        seed: has_seed.then_some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{generate_trajectory, random_init, SystemParams};

    fn sample() -> Trajectory {
        let mut t = generate_trajectory(
            random_init(3),
            64,
            &SystemParams::default(),
            Mode::NonIdeal(SettlingConfig::new(4.0).unwrap()),
            20,
        )
        .unwrap();
        t.seed = Some(3);
        t
    }

    #[test]
    fn binary_roundtrip() {
        let t = sample();
        let mut buf = Vec::new();
        write_trajectory_binary(&mut buf, &t).unwrap();
        assert_eq!(buf.len(), 4 + 2 + 40 + 1 + 8 + 1 + 8 + 8 + 64 * 32);
        let back = read_trajectory_binary(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn binary_rejects_truncation_and_magic() {
        let mut buf = Vec::new();
        write_trajectory_binary(&mut buf, &sample()).unwrap();
        assert!(read_trajectory_binary(&buf[..buf.len() - 3]).is_err());
        buf[0] = b'X';
        assert!(read_trajectory_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = sample();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "n,x,y,z,w");
        assert_eq!(rows.len(), 65);
        assert!(text.contains("# seed=3"));
        let first: Vec<f64> = rows[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[1], t.states[0].x);
    }
}
