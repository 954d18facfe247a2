//! Error kinds that decide the process exit code.

use std::fmt;

/// Bad invocation: exit code 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Numerical failure or strict non-convergence: exit code 3.
#[derive(Debug)]
pub struct Numerical(pub String);

impl fmt::Display for Numerical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Numerical {}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Usage and numerical errors map to their own codes; everything else,
/// including all data and validation errors, is 2.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return EXIT_USAGE;
        }
        if cause.is::<Numerical>() {
            return EXIT_NUMERICAL;
        }
        if let Some(ppdepth::Error::Numerical(_)) = cause.downcast_ref::<ppdepth::Error>() {
            return EXIT_NUMERICAL;
        }
    }
    EXIT_DATA
}
