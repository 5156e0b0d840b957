//! Provenance header written at the top of every output file.

use std::fmt::Write;

/// What was run, on which inputs, with which overrides. Written as `#`
/// comment lines so every CSV and key=value reader skips it.
///
/// Nothing time- or host-dependent goes in here: two runs with the same
/// manifest produce byte-identical files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<String>,
    /// `NAME=VALUE` overrides in command-line order.
    pub overrides: Vec<String>,
    /// Other settings that change the output (grid, port, ...), as `key=value`.
    pub settings: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            ..Self::default()
        }
    }

    pub fn version() -> &'static str {
        env!("CARGO_PKG_VERSION")
    }

    pub fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# slhnet {} {}", Self::version(), self.subcommand);
        for i in &self.inputs {
            let _ = writeln!(s, "# input {i}");
        }
        for o in &self.overrides {
            let _ = writeln!(s, "# set {o}");
        }
        for o in &self.settings {
            let _ = writeln!(s, "# with {o}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed {seed}");
        }
        for o in &self.outputs {
            let _ = writeln!(s, "# output {o}");
        }
        s
    }
}
