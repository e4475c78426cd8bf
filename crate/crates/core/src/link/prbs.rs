//! Maximal-length LFSR bit sources.

use crate::error::{Error, Result};

/// Fibonacci LFSR for a trinomial-or-better feedback polynomial.
///
/// `taps` are the exponents of the polynomial's non-constant terms, e.g.
/// `[23, 18]` for `x^23 + x^18 + 1`. Each step shifts the register left and
/// feeds in the XOR of the tapped bits, which is also the output bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lfsr {
    degree: u32,
    taps: Vec<u32>,
    state: u64,
}

/// Polynomial `x^23 + x^18 + 1`.
pub const PRBS23_TAPS: [u32; 2] = [23, 18];

impl Lfsr {
    pub fn new(degree: u32, taps: &[u32], seed: u64) -> Result<Self> {
        if !(2..=63).contains(&degree) {
            return Err(Error::param("degree", degree as f64, "must be in 2..=63"));
        }
        if taps.is_empty() || taps.iter().any(|&t| t == 0 || t > degree) || !taps.contains(&degree) {
            return Err(Error::param(
                "taps",
                degree as f64,
                "taps must lie in 1..=degree and include the degree",
            ));
        }
        let state = seed & ((1u64 << degree) - 1);
        if state == 0 {
            return Err(Error::param(
                "seed",
                seed as f64,
                "the low `degree` bits must not all be zero (LFSR lockup)",
            ));
        }
        Ok(Self {
            degree,
            taps: taps.to_vec(),
            state,
        })
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_bit(&mut self) -> bool {
        let fb = self
            .taps
            .iter()
            .fold(0u64, |acc, &t| acc ^ (self.state >> (t - 1)));
        let bit = fb & 1;
        self.state = ((self.state << 1) | bit) & ((1u64 << self.degree) - 1);
        bit == 1
    }
}

impl Iterator for Lfsr {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        Some(self.next_bit())
    }
}

/// `length` bits of PRBS-23 starting from `seed`'s low 23 bits.
pub fn prbs(length: usize, seed: u64) -> Result<Vec<bool>> {
    if length == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(Lfsr::new(23, &PRBS23_TAPS, seed)?.take(length).collect())
}
