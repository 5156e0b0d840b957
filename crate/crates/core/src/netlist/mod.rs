//! A small text language for declaring networks.
//!
//! ```text
//! mode a
//! param kappa = 1e9
//! param lambda_nm = 1550.0
//! comp cav = mirror(a, kappa, omega_nm(lambda_nm, 2.85))
//! network = cav <| drive(1.0)
//! ```
//!
//! `<|` is the series product (the left operand sits downstream) and binds
//! tighter than the concatenation `++`. Both associate to the left. Argument
//! expressions support `+ - * /`, unary minus, `pi` and the functions `sqrt`,
//! `exp`, `cos`, `sin` and `omega_nm(λ_nm, n_eff)`. Everything after `#` on a
//! line is a comment. Rates and frequencies are in rad/s, phases in radians.

mod ast;
mod compile;
mod lexer;
mod parser;
mod printer;

use core::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub use ast::{BinOp, Expr, Func, Ident, Netlist, Primitive, PrimitiveKind, Stmt, Value};
pub use compile::{compile, compile_str, eval, Overrides};
pub use parser::{parse, parse_literal};

use crate::components::ComponentError;
use crate::error::AlgebraError;
use crate::linear::LoweringError;
use crate::slh::SlhError;

/// The coupled-cavity device netlist shipped with the crate.
pub const CCD_NETLIST: &str = include_str!("../../netlists/ccd.slh");

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, PartialOrd, Ord)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub const fn new(line: usize, col: usize) -> Self {
        Self { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("malformed number")]
    MalformedNumber,
    #[error("expected {expected}, found {found}")]
    Unexpected {
        expected: &'static str,
        found: alloc::string::String,
    },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(alloc::string::String),
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(alloc::string::String),
    #[error("`{name}` is a {found}, expected a {expected}")]
    WrongKind {
        name: alloc::string::String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    Arity {
        name: alloc::string::String,
        expected: usize,
        got: usize,
    },
    #[error("`{0}` is declared twice")]
    Duplicate(alloc::string::String),
    #[error("`{0}` is a reserved word")]
    Reserved(alloc::string::String),
    #[error("no `network = ...` statement")]
    MissingNetwork,
    #[error("more than one `network` statement")]
    DuplicateNetwork,
    #[error(
        "series product needs matching ports: downstream has {downstream}, upstream has {upstream}"
    )]
    PortMismatch { downstream: usize, upstream: usize },
    #[error("override `{0}` does not name a declared parameter")]
    UnknownOverride(alloc::string::String),
    #[error("parameter `{0}` has no value; supply an override")]
    MissingParam(alloc::string::String),
    #[error("{what} must be real, got {value}")]
    NotReal {
        what: &'static str,
        value: Complex64,
    },
    #[error("argument evaluates to a non-finite number")]
    NonFinite,
    #[error("port count must be a positive integer, got {0}")]
    PortCount(f64),
    #[error(transparent)]
    Component(ComponentError),
    #[error(transparent)]
    Lowering(LoweringError),
    #[error(transparent)]
    Slh(#[from] SlhError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("compiled network is invalid: {0}")]
    Invalid(alloc::string::String),
}

/// A diagnostic, positioned when it can be tied to source text.
#[derive(Debug, Clone, PartialEq)]
pub struct NetlistError {
    pub kind: NetlistErrorKind,
    pub span: Option<Span>,
}

impl NetlistError {
    pub fn new(kind: NetlistErrorKind, span: Span) -> Self {
        Self {
            kind,
            span: Some(span),
        }
    }

    pub fn unpositioned(kind: NetlistErrorKind) -> Self {
        Self { kind, span: None }
    }
}

impl fmt::Display for NetlistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl core::error::Error for NetlistError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_ccd_parses_and_compiles() {
        let n = parse(CCD_NETLIST).unwrap();
        assert_eq!(n.modes().collect::<alloc::vec::Vec<_>>(), ["a", "b"]);
        let g = compile(&n, &Overrides::new()).unwrap();
        assert_eq!(g.n_ports(), 5);
        assert!(g.is_valid());
    }

    #[test]
    fn error_display_has_position() {
        let e = parse("mode a\nnetwork = mirror(a,").unwrap_err();
        assert!(alloc::format!("{e}").starts_with("2:20: expected"));
    }
}
