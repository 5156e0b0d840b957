use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;

use num_complex::Complex64;

use super::ast::*;
use super::{NetlistError, NetlistErrorKind, Span};
use crate::components;
use crate::linear::wavelength_to_omega;
use crate::operator::ModeRegistry;
use crate::slh::{SlhError, SlhTriple};

/// Parameter overrides by name.
pub type Overrides = BTreeMap<String, Complex64>;

// Imaginary parts below this (relative) are treated as round-off.
const REAL_TOL: f64 = 1e-12;

fn err<T>(kind: NetlistErrorKind, span: Span) -> Result<T, NetlistError> {
    Err(NetlistError::new(kind, span))
}

fn check_overrides(n: &Netlist, overrides: &Overrides) -> Result<(), NetlistError> {
    for key in overrides.keys() {
        if !n.params().any(|(name, _)| name == key) {
            return Err(NetlistError::unpositioned(
                NetlistErrorKind::UnknownOverride(key.clone()),
            ));
        }
    }
    Ok(())
}

impl Netlist {
    /// Copy with parameter defaults replaced by `overrides`. Binding twice
    /// with disjoint keys is the same as binding once with the union.
    pub fn bind(&self, overrides: &Overrides) -> Result<Netlist, NetlistError> {
        check_overrides(self, overrides)?;
        let mut out = self.clone();
        for st in &mut out.stmts {
            if let Stmt::Param { name, default } = st {
                if let Some(v) = overrides.get(&name.name) {
                    *default = Some(*v);
                }
            }
        }
        Ok(out)
    }

    /// Parameter values after applying `overrides`.
    pub fn resolve_params(
        &self,
        overrides: &Overrides,
    ) -> Result<BTreeMap<String, Complex64>, NetlistError> {
        check_overrides(self, overrides)?;
        let mut env = BTreeMap::new();
        for st in &self.stmts {
            if let Stmt::Param { name, default } = st {
                let v = overrides
                    .get(&name.name)
                    .copied()
                    .or(*default)
                    .ok_or_else(|| {
                        NetlistError::new(
                            NetlistErrorKind::MissingParam(name.name.clone()),
                            name.span,
                        )
                    })?;
                env.insert(name.name.clone(), v);
            }
        }
        Ok(env)
    }
}

/// Instantiates every primitive and folds the network expression with the
/// series and concatenation products.
pub fn compile(n: &Netlist, overrides: &Overrides) -> Result<SlhTriple, NetlistError> {
    let env = n.resolve_params(overrides)?;
    let registry =
        ModeRegistry::new(n.modes()).map_err(|e| NetlistError::unpositioned(e.into()))?;
    let mut comps: BTreeMap<&str, SlhTriple> = BTreeMap::new();
    let mut network = None;
    for st in &n.stmts {
        match st {
            Stmt::Comp { name, prim } => {
                let g = instantiate(prim, &registry, &env)?;
                comps.insert(&name.name, g);
            }
            Stmt::Network { expr, .. } => network = Some(fold(expr, &registry, &env, &comps)?),
            _ => {}
        }
    }
    let g = network.ok_or_else(|| NetlistError::unpositioned(NetlistErrorKind::MissingNetwork))?;
    let violations = g.validate();
    if let Some(v) = violations.first() {
        return Err(NetlistError::unpositioned(NetlistErrorKind::Invalid(
            alloc::format!("{v}"),
        )));
    }
    Ok(g)
}

fn fold(
    e: &Expr,
    reg: &Arc<ModeRegistry>,
    env: &BTreeMap<String, Complex64>,
    comps: &BTreeMap<&str, SlhTriple>,
) -> Result<SlhTriple, NetlistError> {
    match e {
        Expr::Ref(id) => comps.get(id.name.as_str()).cloned().ok_or_else(|| {
            NetlistError::new(
                NetlistErrorKind::UnknownIdentifier(id.name.clone()),
                id.span,
            )
        }),
        Expr::Prim(p) => instantiate(p, reg, env),
        Expr::Concat(l, r, span) => {
            let (l, r) = (fold(l, reg, env, comps)?, fold(r, reg, env, comps)?);
            l.concat(&r).map_err(|e| NetlistError::new(e.into(), *span))
        }
        Expr::Series(l, r, span) => {
            let (l, r) = (fold(l, reg, env, comps)?, fold(r, reg, env, comps)?);
            l.series(&r).map_err(|e| match e {
                SlhError::PortMismatch {
                    downstream,
                    upstream,
                } => NetlistError::new(
                    NetlistErrorKind::PortMismatch {
                        downstream,
                        upstream,
                    },
                    *span,
                ),
                other => NetlistError::new(other.into(), *span),
            })
        }
    }
}

fn real_arg(
    v: &Value,
    env: &BTreeMap<String, Complex64>,
    what: &'static str,
) -> Result<f64, NetlistError> {
    let z = eval(v, env)?;
    if z.im.abs() > REAL_TOL * z.re.abs().max(1.0) {
        return err(NetlistErrorKind::NotReal { what, value: z }, v.span());
    }
    Ok(z.re)
}

fn instantiate(
    p: &Primitive,
    reg: &Arc<ModeRegistry>,
    env: &BTreeMap<String, Complex64>,
) -> Result<SlhTriple, NetlistError> {
    let mode = || {
        let id = p.mode.as_ref().expect("parser supplies the mode");
        reg.mode(&id.name)
            .map_err(|e| NetlistError::new(e.into(), id.span))
    };
    let built = match p.kind {
        PrimitiveKind::Mirror => {
            let rate = real_arg(&p.args[0], env, "rate")?;
            let freq = real_arg(&p.args[1], env, "frequency")?;
            components::mirror(reg, &mode()?, rate, freq)
        }
        PrimitiveKind::LossMirror => {
            let rate = real_arg(&p.args[0], env, "rate")?;
            components::loss_mirror(reg, &mode()?, rate)
        }
        PrimitiveKind::Drive => components::drive(reg, eval(&p.args[0], env)?),
        PrimitiveKind::Phase => components::phase(reg, real_arg(&p.args[0], env, "phase")?),
        PrimitiveKind::Passthrough => {
            let n = real_arg(&p.args[0], env, "port count")?;
            if !(n >= 1.0 && n.fract() == 0.0 && n <= 1e6) {
                return err(NetlistErrorKind::PortCount(n), p.args[0].span());
            }
            components::passthrough(reg, n as usize)
        }
        PrimitiveKind::Beamsplitter => {
            components::beamsplitter(reg, real_arg(&p.args[0], env, "loss")?)
        }
    };
    built.map_err(|e| NetlistError::new(NetlistErrorKind::Component(e), p.span))
}

/// Evaluates an argument expression.
pub fn eval(v: &Value, env: &BTreeMap<String, Complex64>) -> Result<Complex64, NetlistError> {
    let out = match v {
        Value::Num(z, _) => *z,
        Value::Pi(_) => Complex64::new(core::f64::consts::PI, 0.0),
        Value::Param(id) => *env.get(&id.name).ok_or_else(|| {
            NetlistError::new(NetlistErrorKind::MissingParam(id.name.clone()), id.span)
        })?,
        Value::Neg(x, _) => -eval(x, env)?,
        Value::Binary(op, l, r, _) => {
            let (a, b) = (eval(l, env)?, eval(r, env)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            }
        }
        Value::Call(f, args, _) => {
            let x = eval(&args[0], env)?;
            match f {
                Func::Sqrt => x.sqrt(),
                Func::Exp => x.exp(),
                Func::Cos => x.cos(),
                Func::Sin => x.sin(),
                Func::OmegaNm => {
                    let lambda = real_arg(&args[0], env, "wavelength")?;
                    let n_eff = real_arg(&args[1], env, "effective index")?;
                    let w = wavelength_to_omega(lambda, n_eff)
                        .map_err(|e| NetlistError::new(NetlistErrorKind::Lowering(e), v.span()))?;
                    Complex64::new(w, 0.0)
                }
            }
        }
    };
    if !(out.re.is_finite() && out.im.is_finite()) {
        return err(NetlistErrorKind::NonFinite, v.span());
    }
    Ok(out)
}

/// Convenience: parse then compile.
pub fn compile_str(src: &str, overrides: &Overrides) -> Result<SlhTriple, NetlistError> {
    compile(&super::parse(src)?, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_networks() {
        let none = Overrides::new();
        let id = compile_str("network = phase(0)", &none).unwrap();
        assert_eq!(id, SlhTriple::passthrough(id.registry(), 1));
        let id = compile_str("network = drive(0)", &none).unwrap();
        assert_eq!(id, SlhTriple::passthrough(id.registry(), 1));
    }

    #[test]
    fn beamsplitter_matrix() {
        let g = compile_str(
            "param eta = 0.25\nnetwork = beamsplitter(eta)",
            &Overrides::new(),
        )
        .unwrap();
        let s = g.scalar_scattering().unwrap();
        let t = 0.75f64.sqrt();
        let want = CMatrix::from_row_major(
            2,
            2,
            alloc::vec![c(t, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(-t, 0.0)],
        );
        assert!(s.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn series_port_mismatch_is_located() {
        let e = compile_str("network = passthrough(2) <| phase(1)", &Overrides::new()).unwrap_err();
        assert_eq!(
            e.kind,
            NetlistErrorKind::PortMismatch {
                downstream: 2,
                upstream: 1
            }
        );
        assert_eq!(e.span, Some(Span::new(1, 26)));
    }

    #[test]
    fn overrides() {
        let src = "param x\nparam y = 2\nnetwork = phase(x * y)";
        let mut o = Overrides::new();
        assert_eq!(
            compile_str(src, &o).unwrap_err().kind,
            NetlistErrorKind::MissingParam("x".into())
        );
        o.insert("zzz".into(), c(1.0, 0.0));
        assert_eq!(
            compile_str(src, &o).unwrap_err().kind,
            NetlistErrorKind::UnknownOverride("zzz".into())
        );
        o.clear();
        o.insert("x".into(), c(0.25, 0.0));
        let g = compile_str(src, &o).unwrap();
        let s = g.s(0, 0).as_scalar().unwrap();
        assert!((s - Complex64::from_polar(1.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn argument_checks() {
        let none = Overrides::new();
        let e = compile_str("network = phase(1i)", &none).unwrap_err();
        assert!(matches!(
            e.kind,
            NetlistErrorKind::NotReal { what: "phase", .. }
        ));
        let e = compile_str("network = phase(1/0)", &none).unwrap_err();
        assert_eq!(e.kind, NetlistErrorKind::NonFinite);
        let e = compile_str("network = passthrough(1.5)", &none).unwrap_err();
        assert_eq!(e.kind, NetlistErrorKind::PortCount(1.5));
        let e = compile_str("mode a\nnetwork = loss_mirror(a, -1)", &none).unwrap_err();
        assert!(matches!(e.kind, NetlistErrorKind::Component(_)));
        assert_eq!(e.span, Some(Span::new(2, 11)));
    }

    #[test]
    fn arithmetic() {
        let env = BTreeMap::new();
        let n = super::super::parse("network = phase(-(1 + 2) * 3 / 4 - sqrt(4) + cos(0) + pi)")
            .unwrap();
        let Some(Expr::Prim(p)) = n.network() else {
            panic!()
        };
        let v = eval(&p.args[0], &env).unwrap();
        assert!((v.re - (-2.25 - 2.0 + 1.0 + core::f64::consts::PI)).abs() < 1e-15);
    }
}
