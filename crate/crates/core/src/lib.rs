//! Composition and simulation of quantum optical networks in the SLH picture.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the algorithmic
//! core:
//!
//! * [`operator`]: normal-ordered bosonic operator polynomials;
//! * [`slh`]: SLH triples with the concatenation and series products;
//! * [`components`]: mirrors, drives, phase shifters and beamsplitters;
//! * [`netlist`]: a small text language for declaring networks;
//! * [`linear`]: lowering of linear networks to a rotating-frame state-space
//!   model, steady states and transmission spectra;
//! * [`oracle`]: a brute-force master-equation steady-state solver on
//!   truncated Fock spaces, used to cross-check [`linear`];
//! * [`ccd`]: the two-ring coupled-cavity device and integrated-photonics
//!   design rules;
//! * [`fit`]: simulated-annealing parameter estimation from spectra.
//!
//! File formats and the command-line tool live in the `slhnet-cli` crate.

#![no_std]

extern crate alloc;

pub mod ccd;
pub mod components;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod linear;
pub mod netlist;
pub mod operator;
pub mod oracle;
pub mod slh;

pub use error::{AlgebraError, LinalgError};
pub use linalg::CMatrix;
pub use operator::{ModeId, ModeRegistry, Monomial, OperatorExpr};
pub use slh::{series, PortField, SlhError, SlhTriple, Violation};

pub use num_complex::Complex64;

/// Vacuum speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
