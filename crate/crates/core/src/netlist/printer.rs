//! Canonical text form. Parsing the output yields the same tree.

use core::fmt::{self, Write};

use num_complex::Complex64;

use super::ast::*;

fn real(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // Debug formatting is the shortest representation that round-trips.
    write!(f, "{x:?}")
}

fn literal(f: &mut fmt::Formatter<'_>, z: Complex64) -> fmt::Result {
    if z.im == 0.0 {
        return real(f, z.re);
    }
    if z.re == 0.0 {
        real(f, z.im)?;
        return f.write_char('i');
    }
    real(f, z.re)?;
    f.write_char(if z.im.is_sign_negative() { '-' } else { '+' })?;
    real(f, z.im.abs())?;
    f.write_char('i')
}

fn prec(v: &Value) -> u8 {
    match v {
        Value::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Value::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Value::Neg(..) => 3,
        Value::Num(z, _) if z.re.is_sign_negative() || (z.re != 0.0 && z.im != 0.0) => 0,
        _ => 4,
    }
}

fn value(f: &mut fmt::Formatter<'_>, v: &Value, min: u8) -> fmt::Result {
    let wrap = prec(v) < min;
    if wrap {
        f.write_char('(')?;
    }
    match v {
        Value::Num(z, _) => literal(f, *z)?,
        Value::Param(id) => f.write_str(&id.name)?,
        Value::Pi(_) => f.write_str("pi")?,
        Value::Neg(x, _) => {
            f.write_char('-')?;
            value(f, x, 3)?;
        }
        Value::Binary(op, l, r, _) => {
            let (p, sym) = match op {
                BinOp::Add => (1, " + "),
                BinOp::Sub => (1, " - "),
                BinOp::Mul => (2, " * "),
                BinOp::Div => (2, " / "),
            };
            value(f, l, p)?;
            f.write_str(sym)?;
            value(f, r, p + 1)?;
        }
        Value::Call(func, args, _) => {
            f.write_str(func.name())?;
            f.write_char('(')?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                value(f, a, 0)?;
            }
            f.write_char(')')?;
        }
    }
    if wrap {
        f.write_char(')')?;
    }
    Ok(())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        value(f, self, 0)
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind.keyword())?;
        let mut first = true;
        if let Some(m) = &self.mode {
            f.write_str(&m.name)?;
            first = false;
        }
        for a in &self.args {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{a}")?;
        }
        f.write_char(')')
    }
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Concat(..) => 1,
        Expr::Series(..) => 2,
        _ => 3,
    }
}

fn expr(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    let wrap = expr_prec(e) < min;
    if wrap {
        f.write_char('(')?;
    }
    match e {
        Expr::Ref(id) => f.write_str(&id.name)?,
        Expr::Prim(p) => write!(f, "{p}")?,
        Expr::Series(l, r, _) => {
            expr(f, l, 2)?;
            f.write_str(" <| ")?;
            expr(f, r, 3)?;
        }
        Expr::Concat(l, r, _) => {
            expr(f, l, 1)?;
            f.write_str(" ++ ")?;
            expr(f, r, 2)?;
        }
    }
    if wrap {
        f.write_char(')')?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        expr(f, self, 0)
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let group = |s: &Stmt| match s {
            Stmt::Mode(_) => 0,
            Stmt::Param { .. } => 1,
            Stmt::Comp { .. } => 2,
            Stmt::Network { .. } => 3,
        };
        let mut last = None;
        for st in &self.stmts {
            if last.is_some_and(|g| g != group(st)) {
                f.write_char('\n')?;
            }
            last = Some(group(st));
            match st {
                Stmt::Mode(id) => writeln!(f, "mode {}", id.name)?,
                Stmt::Param {
                    name,
                    default: None,
                } => writeln!(f, "param {}", name.name)?,
                Stmt::Param {
                    name,
                    default: Some(z),
                } => {
                    write!(f, "param {} = ", name.name)?;
                    literal(f, *z)?;
                    f.write_char('\n')?;
                }
                Stmt::Comp { name, prim } => writeln!(f, "comp {} = {prim}", name.name)?,
                Stmt::Network { expr, .. } => writeln!(f, "network = {expr}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use alloc::string::ToString;

    use super::super::{parse, CCD_NETLIST};

    fn round_trip(src: &str) {
        let a = parse(src).unwrap();
        let text = a.to_string();
        let b = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert!(a.same_structure(&b), "{text}");
        assert_eq!(text, b.to_string());
    }

    #[test]
    fn fixed_point_on_shipped_netlist() {
        round_trip(CCD_NETLIST);
    }

    #[test]
    fn parentheses_are_kept_where_needed() {
        round_trip("comp x = phase(-(1 - 2) / (3 * -4) - --5)\ncomp y = passthrough(2)\nnetwork = (x ++ x) <| (y <| y) ++ (x ++ (x ++ x))");
        round_trip("param z = -1.5-0.25i\nparam w = 2e-300i\nparam q\nnetwork = drive(z * w + q)");
    }
}
