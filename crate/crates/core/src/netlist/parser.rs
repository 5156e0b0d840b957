use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_complex::Complex64;

use super::ast::*;
use super::lexer::{lex, Tok};
use super::{NetlistError, NetlistErrorKind, Span};

const KEYWORDS: [&str; 5] = ["mode", "param", "comp", "network", "pi"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Decl {
    Mode,
    Param,
    Comp,
}

impl Decl {
    fn noun(self) -> &'static str {
        match self {
            Decl::Mode => "mode",
            Decl::Param => "parameter",
            Decl::Comp => "component",
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    decls: BTreeMap<String, Decl>,
}

/// Parses netlist source. Names are resolved as they are read, so every
/// identifier must be declared before it is used.
pub fn parse(src: &str) -> Result<Netlist, NetlistError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        decls: BTreeMap::new(),
    };
    let mut stmts = Vec::new();
    let mut network_seen = false;
    while p.peek() != &Tok::Eof {
        let st = p.stmt()?;
        if let Stmt::Network { span, .. } = &st {
            if network_seen {
                return Err(NetlistError::new(NetlistErrorKind::DuplicateNetwork, *span));
            }
            network_seen = true;
        }
        stmts.push(st);
    }
    if !network_seen {
        return Err(NetlistError::new(
            NetlistErrorKind::MissingNetwork,
            p.span(),
        ));
    }
    Ok(Netlist { stmts })
}

/// Parses a lone literal such as `2.5`, `-1e9`, `0.3-1.2i` or `4i`, the
/// syntax of parameter defaults.
pub fn parse_literal(src: &str) -> Result<Complex64, NetlistError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        decls: BTreeMap::new(),
    };
    let z = p.literal()?;
    if p.peek() != &Tok::Eof {
        return p.unexpected("end of value");
    }
    Ok(z)
}

fn err<T>(kind: NetlistErrorKind, span: Span) -> Result<T, NetlistError> {
    Err(NetlistError::new(kind, span))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, expected: &'static str) -> Result<T, NetlistError> {
        err(
            NetlistErrorKind::Unexpected {
                expected,
                found: self.peek().describe(),
            },
            self.span(),
        )
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<Span, NetlistError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            self.unexpected(expected)
        }
    }

    fn ident(&mut self, expected: &'static str) -> Result<Ident, NetlistError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().1;
                Ok(Ident { name, span })
            }
            _ => self.unexpected(expected),
        }
    }

    fn declare(&mut self, id: &Ident, kind: Decl) -> Result<(), NetlistError> {
        let reserved = KEYWORDS.contains(&id.name.as_str())
            || PrimitiveKind::from_keyword(&id.name).is_some()
            || Func::from_name(&id.name).is_some();
        if reserved {
            return err(NetlistErrorKind::Reserved(id.name.clone()), id.span);
        }
        if self.decls.insert(id.name.clone(), kind).is_some() {
            return err(NetlistErrorKind::Duplicate(id.name.clone()), id.span);
        }
        Ok(())
    }

    fn resolve(&self, id: &Ident, want: Decl) -> Result<(), NetlistError> {
        match self.decls.get(&id.name) {
            Some(&d) if d == want => Ok(()),
            Some(&d) => err(
                NetlistErrorKind::WrongKind {
                    name: id.name.clone(),
                    expected: want.noun(),
                    found: d.noun(),
                },
                id.span,
            ),
            None => err(
                NetlistErrorKind::UnknownIdentifier(id.name.clone()),
                id.span,
            ),
        }
    }

    fn stmt(&mut self) -> Result<Stmt, NetlistError> {
        let kw = self.ident("a statement (`mode`, `param`, `comp` or `network`)")?;
        match kw.name.as_str() {
            "mode" => {
                let id = self.ident("a mode name")?;
                self.declare(&id, Decl::Mode)?;
                Ok(Stmt::Mode(id))
            }
            "param" => {
                let id = self.ident("a parameter name")?;
                self.declare(&id, Decl::Param)?;
                let default = if *self.peek() == Tok::Eq {
                    self.bump();
                    Some(self.literal()?)
                } else {
                    None
                };
                Ok(Stmt::Param { name: id, default })
            }
            "comp" => {
                let id = self.ident("a component name")?;
                self.expect(Tok::Eq, "`=`")?;
                let prim = match self.peek().clone() {
                    Tok::Ident(name) => match PrimitiveKind::from_keyword(&name) {
                        Some(_) => self.primitive()?,
                        None => return err(NetlistErrorKind::UnknownPrimitive(name), self.span()),
                    },
                    _ => return self.unexpected("a primitive"),
                };
                // Declared after the body so a component cannot mention itself.
                self.declare(&id, Decl::Comp)?;
                Ok(Stmt::Comp { name: id, prim })
            }
            "network" => {
                let span = kw.span;
                self.expect(Tok::Eq, "`=`")?;
                let expr = self.expr()?;
                Ok(Stmt::Network { expr, span })
            }
            _ => err(
                NetlistErrorKind::Unexpected {
                    expected: "a statement (`mode`, `param`, `comp` or `network`)",
                    found: Tok::Ident(kw.name).describe(),
                },
                kw.span,
            ),
        }
    }

    /// `[-] number [(+|-) number i]`, or a purely imaginary number.
    fn literal(&mut self) -> Result<Complex64, NetlistError> {
        let sign = if *self.peek() == Tok::Minus {
            self.bump();
            -1.0
        } else {
            1.0
        };
        match self.peek().clone() {
            Tok::Imag(x) => {
                self.bump();
                Ok(Complex64::new(0.0, sign * x))
            }
            Tok::Number(x) => {
                self.bump();
                let re = sign * x;
                let im_sign = match (self.peek(), self.peek2()) {
                    (Tok::Plus, Tok::Imag(_)) => 1.0,
                    (Tok::Minus, Tok::Imag(_)) => -1.0,
                    _ => return Ok(Complex64::new(re, 0.0)),
                };
                self.bump();
                let Tok::Imag(y) = self.bump().0 else {
                    unreachable!()
                };
                Ok(Complex64::new(re, im_sign * y))
            }
            _ => self.unexpected("a numeric literal"),
        }
    }

    fn primitive(&mut self) -> Result<Primitive, NetlistError> {
        let (tok, span) = self.bump();
        let Tok::Ident(name) = tok else {
            unreachable!()
        };
        let kind = PrimitiveKind::from_keyword(&name).expect("caller checked keyword");
        self.expect(Tok::LParen, "`(`")?;
        let mut mode = None;
        let mut args = Vec::new();
        let mut got = 0;
        if *self.peek() != Tok::RParen {
            loop {
                if got == 0 && kind.takes_mode() {
                    let id = self.ident("a mode name")?;
                    self.resolve(&id, Decl::Mode)?;
                    mode = Some(id);
                } else {
                    args.push(self.sum()?);
                }
                got += 1;
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        if got != kind.arity() {
            return err(
                NetlistErrorKind::Arity {
                    name: name.to_string(),
                    expected: kind.arity(),
                    got,
                },
                span,
            );
        }
        Ok(Primitive {
            kind,
            mode,
            args,
            span,
        })
    }

    fn expr(&mut self) -> Result<Expr, NetlistError> {
        let mut lhs = self.term()?;
        while *self.peek() == Tok::Concat {
            let span = self.bump().1;
            let rhs = self.term()?;
            lhs = Expr::Concat(Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, NetlistError> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Series {
            let span = self.bump().1;
            let rhs = self.factor()?;
            lhs = Expr::Series(Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, NetlistError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) if PrimitiveKind::from_keyword(&name).is_some() => {
                Ok(Expr::Prim(self.primitive()?))
            }
            Tok::Ident(_) => {
                let id = self.ident("a component")?;
                self.resolve(&id, Decl::Comp)?;
                Ok(Expr::Ref(id))
            }
            _ => self.unexpected("a component, primitive or `(`"),
        }
    }

    fn sum(&mut self) -> Result<Value, NetlistError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let span = self.bump().1;
            let rhs = self.product()?;
            lhs = Value::Binary(op, Box::new(lhs), Box::new(rhs), span);
        }
    }

    fn product(&mut self) -> Result<Value, NetlistError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let span = self.bump().1;
            let rhs = self.unary()?;
            lhs = Value::Binary(op, Box::new(lhs), Box::new(rhs), span);
        }
    }

    fn unary(&mut self) -> Result<Value, NetlistError> {
        if *self.peek() == Tok::Minus {
            let span = self.bump().1;
            let inner = self.unary()?;
            return Ok(Value::Neg(Box::new(inner), span));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Value, NetlistError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(x) => {
                self.bump();
                Ok(Value::Num(Complex64::new(x, 0.0), span))
            }
            Tok::Imag(x) => {
                self.bump();
                Ok(Value::Num(Complex64::new(0.0, x), span))
            }
            Tok::LParen => {
                self.bump();
                let v = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.sum()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.sum()?);
                        }
                    }
                    self.expect(Tok::RParen, "`,` or `)`")?;
                    if args.len() != f.arity() {
                        return err(
                            NetlistErrorKind::Arity {
                                name,
                                expected: f.arity(),
                                got: args.len(),
                            },
                            span,
                        );
                    }
                    return Ok(Value::Call(f, args, span));
                }
                if name == "pi" {
                    self.bump();
                    return Ok(Value::Pi(span));
                }
                let id = self.ident("a value")?;
                self.resolve(&id, Decl::Param)?;
                Ok(Value::Param(id))
            }
            _ => self.unexpected("a value"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(src: &str) -> (NetlistErrorKind, Span) {
        let e = parse(src).unwrap_err();
        (e.kind, e.span.unwrap())
    }

    #[test]
    fn identity_phase() {
        let n = parse("network = phase(0)").unwrap();
        assert!(matches!(n.network(), Some(Expr::Prim(p)) if p.kind == PrimitiveKind::Phase));
    }

    #[test]
    fn series_binds_tighter() {
        let n = parse("comp a = phase(0)\ncomp b = phase(1)\nnetwork = a ++ b <| a").unwrap();
        match n.network().unwrap() {
            Expr::Concat(l, r, _) => {
                assert!(matches!(**l, Expr::Ref(_)));
                assert!(matches!(**r, Expr::Series(..)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complex_literals() {
        let n = parse("param z = -1.5+2i\nparam w = -3i\nparam v\nnetwork = drive(z)").unwrap();
        let p: Vec<_> = n.params().collect();
        assert_eq!(p[0], ("z", Some(Complex64::new(-1.5, 2.0))));
        assert_eq!(p[1], ("w", Some(Complex64::new(0.0, -3.0))));
        assert_eq!(p[2], ("v", None));
    }

    #[test]
    fn truncated_primitive() {
        let (k, s) = kind("mode a\nnetwork = mirror(a,");
        assert!(matches!(k, NetlistErrorKind::Unexpected { .. }));
        assert_eq!(s, Span::new(2, 20));
    }

    #[test]
    fn diagnostics() {
        assert_eq!(
            kind("network = x").0,
            NetlistErrorKind::UnknownIdentifier("x".into())
        );
        assert_eq!(
            kind("mode a\nnetwork = mirror(a, 1)"),
            (
                NetlistErrorKind::Arity {
                    name: "mirror".into(),
                    expected: 3,
                    got: 2
                },
                Span::new(2, 11)
            )
        );
        assert_eq!(
            kind("mode a\nmode a\nnetwork = phase(0)").0,
            NetlistErrorKind::Duplicate("a".into())
        );
        assert_eq!(kind("mode pi").0, NetlistErrorKind::Reserved("pi".into()));
        assert_eq!(
            kind("comp c = phase(0)").0,
            NetlistErrorKind::MissingNetwork
        );
        assert_eq!(
            kind("comp c = lens(0)\nnetwork = c").0,
            NetlistErrorKind::UnknownPrimitive("lens".into())
        );
        assert!(matches!(
            kind("mode a\nnetwork = phase(a)").0,
            NetlistErrorKind::WrongKind {
                expected: "parameter",
                ..
            }
        ));
        assert_eq!(
            kind("comp c = phase(0)\nnetwork = c\nnetwork = c").0,
            NetlistErrorKind::DuplicateNetwork
        );
        assert_eq!(
            kind("comp c = phase(sqrt(1, 2))\nnetwork = c").1,
            Span::new(1, 16)
        );
    }

    #[test]
    fn lone_literals() {
        assert_eq!(parse_literal("-1.5+2i").unwrap(), Complex64::new(-1.5, 2.0));
        assert_eq!(parse_literal(" 3e2 ").unwrap(), Complex64::new(300.0, 0.0));
        assert!(parse_literal("1 2").is_err());
        assert!(parse_literal("kappa").is_err());
    }

    #[test]
    fn self_reference_is_unknown() {
        assert_eq!(
            kind("comp c = phase(c)\nnetwork = c").0,
            NetlistErrorKind::UnknownIdentifier("c".into())
        );
    }
}
