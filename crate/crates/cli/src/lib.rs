//! File formats and subcommands behind the `slhnet` binary.
//!
//! Every command returns its output as text so it can be tested without
//! spawning a process. The binary only parses arguments, writes the text and
//! maps errors to exit codes.

pub mod commands;
pub mod files;
pub mod manifest;

use std::fmt;

pub use manifest::RunManifest;

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// The input could not be used: bad file, bad syntax, bad parameter.
    Input,
    /// The inputs were fine but the numerics failed or a check did not pass.
    Numeric,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Input => 2,
            ExitKind::Numeric => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Input,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Numeric,
            message: message.into(),
        }
    }

    /// Prefixes the message with a file name.
    pub fn in_file(mut self, path: &str) -> Self {
        self.message = format!("{path}:{}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Formats with at most 12 significant digits, in exponent form only for
/// very small or very large magnitudes.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if mag != 0.0 && !(1e-4..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}
