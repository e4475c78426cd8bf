//! Exit-code classification.

use std::fmt;

use hypermask::Error;

pub const OK: i32 = 0;
pub const VALIDATION: i32 = 2;
pub const RUNTIME: i32 = 3;
pub const IO: i32 = 4;

/// A configuration or argument problem detected by the CLI itself.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// A failure the command ran into after valid input, e.g. a CRC mismatch.
#[derive(Debug)]
pub struct Failed(pub String);

impl fmt::Display for Failed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn core_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. }
        | Error::InsufficientData { .. }
        | Error::UnstableCoupling(_)
        | Error::LengthMismatch { .. }
        | Error::LinkCapacity { .. } => VALIDATION,
        Error::Io(_) | Error::Wav(_) | Error::Format { .. } => IO,
        _ => RUNTIME,
    }
}

pub fn code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return VALIDATION;
        }
        if cause.is::<Failed>() {
            return RUNTIME;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return core_code(e);
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return IO;
        }
    }
    RUNTIME
}
