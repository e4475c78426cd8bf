//! Little-endian helpers shared by the binary file formats.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::map::SystemParams;

pub(crate) fn put_u8<W: Write>(w: &mut W, v: u8) -> io::Result<()> {
    w.write_all(&[v])
}

pub(crate) fn put_u16<W: Write>(w: &mut W, v: u16) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn put_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn put_f64<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn put_params<W: Write>(w: &mut W, p: &SystemParams) -> io::Result<()> {
    for v in [p.a, p.b, p.c, p.beta, p.gamma] {
        put_f64(w, v)?;
    }
    Ok(())
}

/// Byte reader that reports the offset of malformed fields.
pub(crate) struct LeReader<R> {
    inner: R,
    offset: usize,
}

impl<R: Read> LeReader<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    fn fill<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                Error::Format {
                    bit_offset: self.offset * 8,
                    reason: "unexpected end of file".into(),
                }
            } else {
                Error::Io(e)
            }
        })?;
        self.offset += N;
        Ok(buf)
    }

    pub(crate) fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        self.fill::<N>()
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.fill::<1>()?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.fill()?))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.fill()?))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.fill()?))
    }

    pub(crate) fn params(&mut self) -> Result<SystemParams> {
        Ok(SystemParams {
            a: self.f64()?,
            b: self.f64()?,
            c: self.f64()?,
            beta: self.f64()?,
            gamma: self.f64()?,
        })
    }

    pub(crate) fn format_error(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            bit_offset: self.offset * 8,
            reason: reason.into(),
        }
    }
}
