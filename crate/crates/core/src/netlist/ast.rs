use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::Span;

/// A parsed netlist. Statements keep their source order.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Mode(Ident),
    /// A parameter with an optional default. Without a default the value
    /// must come from an override at compile time.
    Param {
        name: Ident,
        default: Option<Complex64>,
    },
    Comp {
        name: Ident,
        prim: Primitive,
    },
    Network {
        expr: Expr,
        span: Span,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    Mirror,
    LossMirror,
    Drive,
    Phase,
    Passthrough,
    Beamsplitter,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 6] = [
        PrimitiveKind::Mirror,
        PrimitiveKind::LossMirror,
        PrimitiveKind::Drive,
        PrimitiveKind::Phase,
        PrimitiveKind::Passthrough,
        PrimitiveKind::Beamsplitter,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            PrimitiveKind::Mirror => "mirror",
            PrimitiveKind::LossMirror => "loss_mirror",
            PrimitiveKind::Drive => "drive",
            PrimitiveKind::Phase => "phase",
            PrimitiveKind::Passthrough => "passthrough",
            PrimitiveKind::Beamsplitter => "beamsplitter",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// Number of arguments, of which the first is a mode for the mirrors.
    pub fn arity(self) -> usize {
        match self {
            PrimitiveKind::Mirror => 3,
            PrimitiveKind::LossMirror => 2,
            _ => 1,
        }
    }

    pub fn takes_mode(self) -> bool {
        matches!(self, PrimitiveKind::Mirror | PrimitiveKind::LossMirror)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    /// Present for the mirrors.
    pub mode: Option<Ident>,
    pub args: Vec<Value>,
    pub span: Span,
}

/// Network expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Ref(Ident),
    Prim(Primitive),
    /// `downstream <| upstream`; the span is that of the operator.
    Series(Box<Expr>, Box<Expr>, Span),
    Concat(Box<Expr>, Box<Expr>, Span),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Cos,
    Sin,
    /// `omega_nm(λ_nm, n_eff)`: angular frequency of a vacuum wavelength in nm.
    OmegaNm,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sqrt, Func::Exp, Func::Cos, Func::Sin, Func::OmegaNm];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Cos => "cos",
            Func::Sin => "sin",
            Func::OmegaNm => "omega_nm",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::OmegaNm => 2,
            _ => 1,
        }
    }
}

/// Arithmetic over parameters, evaluated in complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(Complex64, Span),
    Param(Ident),
    Pi(Span),
    Neg(Box<Value>, Span),
    Binary(BinOp, Box<Value>, Box<Value>, Span),
    Call(Func, Vec<Value>, Span),
}

impl Value {
    pub fn span(&self) -> Span {
        match self {
            Value::Num(_, s)
            | Value::Pi(s)
            | Value::Neg(_, s)
            | Value::Binary(.., s)
            | Value::Call(.., s) => *s,
            Value::Param(id) => id.span,
        }
    }
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Ref(id) => id.span,
            Expr::Prim(p) => p.span,
            Expr::Series(.., s) | Expr::Concat(.., s) => *s,
        }
    }
}

// Span stripping, so that structurally equal trees compare equal regardless
// of where they came from.

fn strip_ident(id: &mut Ident) {
    id.span = Span::default();
}

fn strip_value(v: &mut Value) {
    match v {
        Value::Num(_, s) | Value::Pi(s) => *s = Span::default(),
        Value::Param(id) => strip_ident(id),
        Value::Neg(x, s) => {
            *s = Span::default();
            strip_value(x);
        }
        Value::Binary(_, l, r, s) => {
            *s = Span::default();
            strip_value(l);
            strip_value(r);
        }
        Value::Call(_, args, s) => {
            *s = Span::default();
            args.iter_mut().for_each(strip_value);
        }
    }
}

fn strip_prim(p: &mut Primitive) {
    p.span = Span::default();
    if let Some(m) = &mut p.mode {
        strip_ident(m);
    }
    p.args.iter_mut().for_each(strip_value);
}

fn strip_expr(e: &mut Expr) {
    match e {
        Expr::Ref(id) => strip_ident(id),
        Expr::Prim(p) => strip_prim(p),
        Expr::Series(l, r, s) | Expr::Concat(l, r, s) => {
            *s = Span::default();
            strip_expr(l);
            strip_expr(r);
        }
    }
}

impl Netlist {
    /// Copy with every source position reset.
    pub fn without_spans(&self) -> Netlist {
        let mut n = self.clone();
        for st in &mut n.stmts {
            match st {
                Stmt::Mode(id) => strip_ident(id),
                Stmt::Param { name, .. } => strip_ident(name),
                Stmt::Comp { name, prim } => {
                    strip_ident(name);
                    strip_prim(prim);
                }
                Stmt::Network { expr, span } => {
                    *span = Span::default();
                    strip_expr(expr);
                }
            }
        }
        n
    }

    /// Equality up to source positions.
    pub fn same_structure(&self, other: &Netlist) -> bool {
        self.without_spans() == other.without_spans()
    }

    pub fn modes(&self) -> impl Iterator<Item = &str> {
        self.stmts.iter().filter_map(|s| match s {
            Stmt::Mode(id) => Some(id.name.as_str()),
            _ => None,
        })
    }

    /// Declared parameters with their defaults, in declaration order.
    pub fn params(&self) -> impl Iterator<Item = (&str, Option<Complex64>)> {
        self.stmts.iter().filter_map(|s| match s {
            Stmt::Param { name, default } => Some((name.name.as_str(), *default)),
            _ => None,
        })
    }

    pub fn network(&self) -> Option<&Expr> {
        self.stmts.iter().find_map(|s| match s {
            Stmt::Network { expr, .. } => Some(expr),
            _ => None,
        })
    }
}
