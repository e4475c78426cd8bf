use anyhow::{bail, Result};

use hypermask::analysis::{le_analytic, le_qr};
use hypermask::codec::{test_image, transmit_payload, CodecOptions, Payload, TransmitConfig};
use hypermask::link::{prbs, run_link, LinkConfig};
use hypermask::map::{generate_trajectory, random_init};
use hypermask::sync::{run_sync, CouplingConfig};
use hypermask::{Mode, SystemParams};

use crate::exit::Failed;

const SEED: u64 = 20_240_601;

fn check(name: &str, f: impl FnOnce() -> hypermask::Result<(bool, String)>) -> bool {
    let (ok, detail) = f().unwrap_or_else(|e| (false, e.to_string()));
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

/// Quick smoke run of every module at a fixed seed.
pub fn run() -> Result<()> {
    let p = SystemParams::default();
    let results = [
        check("analytic spectrum", || {
            let s = le_analytic(&p.with_beta(0.0))?;
            let want = [0.683, 0.302, -0.985];
            let ok = s.exponents.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-3);
            Ok((ok, format!("{:.4?}", s.exponents)))
        }),
        check("qr vs analytic", || {
            let q = p.with_beta(0.0);
            let t = generate_trajectory(random_init(SEED), 20_000, &q, Mode::Ideal, 1000)?;
            let s = le_qr(&t)?;
            let a = le_analytic(&q)?;
            let d = s
                .exponents
                .iter()
                .zip(&a.exponents)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            Ok((d < 1e-3, format!("max deviation {d:.2e}")))
        }),
        check("noiseless sync", || {
            let r = run_sync(&p, &CouplingConfig::new(p.gamma, 0.0)?, 5000, SEED)?;
            Ok((r.rms_error[0] < 1e-9, format!("rms_x {:.2e}", r.rms_error[0])))
        }),
        check("noiseless link", || {
            let bits = prbs(2000, 1)?;
            let r = run_link(&p, &bits, &LinkConfig::default(), SEED)?;
            Ok((r.ber.errors == 0, format!("{} errors in {} bits", r.ber.errors, r.ber.bits)))
        }),
        check("image transmission", || {
            let cfg = TransmitConfig {
                codec: CodecOptions::image(0.165),
                link: LinkConfig::default(),
                enforce_capacity: false,
            };
            let out = transmit_payload(&p, &Payload::Image(test_image(48, 32)), &cfg, SEED)?;
            let r = &out.report;
            Ok((
                r.crc_ok && r.bit_exact_vs_local,
                format!("CR {:.2}, crc_ok {}", r.compression_ratio, r.crc_ok),
            ))
        }),
    ];
    if results.iter().all(|&ok| ok) {
        Ok(())
    } else {
        bail!(Failed("self-test failed".into()))
    }
}
