//! SLH triples and the network algebra.
//!
//! A triple `(S, L, H)` describes an open system with `n` field ports: the
//! scattering matrix `S`, the coupling column `L` and the Hamiltonian `H`.
//! Two products build networks out of components:
//!
//! * concatenation `G1 ⊞ G2` places systems side by side (block-diagonal `S`,
//!   stacked `L`, summed `H`; `G1`'s ports come first);
//! * the series product `G2 ◁ G1` feeds every output of `G1` into the matching
//!   input of `G2`: `S = S2 S1`, `L = S2 L1 + L2`,
//!   `H = H1 + H2 + Im{L2† S2 L1}` with `Im{X} = (X − X†)/2i`.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::operator::{same_registry, ModeRegistry, OperatorExpr};

/// Tolerance used by [`SlhTriple::validate`].
pub const VALIDATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlhError {
    #[error("series product needs equal port counts (downstream has {downstream}, upstream has {upstream})")]
    PortMismatch { downstream: usize, upstream: usize },
    #[error("triples belong to different mode registries")]
    RegistryMismatch,
    #[error("malformed triple: S is {rows}x{cols} but L has {l_len} entries")]
    Shape {
        rows: usize,
        cols: usize,
        l_len: usize,
    },
    #[error("L[{port}] is not affine in the mode operators (term `{monomial}`)")]
    NonlinearCoupling { port: usize, monomial: String },
    #[error("S[{row},{col}] is operator-valued")]
    OperatorScattering { row: usize, col: usize },
    #[error("expected {expected} input fields, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("expected {expected} mode amplitudes, got {got}")]
    AmplitudeArity { expected: usize, got: usize },
    #[error("input field for port {0} given twice")]
    DuplicateInput(usize),
}

/// A problem found by [`SlhTriple::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `S` is not square or does not match the length of `L`.
    Shape {
        rows: usize,
        cols: usize,
        l_len: usize,
    },
    /// `H` differs from its adjoint.
    NonHermitianHamiltonian,
    /// Scalar `S` with `‖S S† − I‖_max` above tolerance.
    NonUnitaryScattering { deviation: f64 },
    /// A coefficient is NaN or infinite.
    NonFinite { location: String },
    /// An entry was built over a different mode registry.
    ForeignRegistry { location: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { rows, cols, l_len } => {
                write!(f, "S is {rows}x{cols} but L has {l_len} entries")
            }
            Violation::NonHermitianHamiltonian => f.write_str("H is not Hermitian"),
            Violation::NonUnitaryScattering { deviation } => {
                write!(f, "S is not unitary (max |SS†-I| = {deviation:e})")
            }
            Violation::NonFinite { location } => write!(f, "non-finite coefficient in {location}"),
            Violation::ForeignRegistry { location } => {
                write!(f, "{location} uses a different mode registry")
            }
        }
    }
}

/// Coherent amplitude of an input or output field increment at one port
/// (0-based), in units of (rad/s)^½.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortField {
    pub port: usize,
    pub amplitude: Complex64,
}

impl PortField {
    pub fn new(port: usize, amplitude: Complex64) -> Self {
        Self { port, amplitude }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlhTriple {
    registry: Arc<ModeRegistry>,
    s: Vec<Vec<OperatorExpr>>,
    l: Vec<OperatorExpr>,
    h: OperatorExpr,
}

impl SlhTriple {
    /// Assembles a triple without checking it; see [`validate`](Self::validate).
    pub fn from_parts(
        registry: &Arc<ModeRegistry>,
        s: Vec<Vec<OperatorExpr>>,
        l: Vec<OperatorExpr>,
        h: OperatorExpr,
    ) -> Self {
        Self {
            registry: registry.clone(),
            s,
            l,
            h,
        }
    }

    /// Triple with scalar scattering matrix `s`, zero couplings and zero Hamiltonian.
    pub fn static_scattering(registry: &Arc<ModeRegistry>, s: &CMatrix) -> Self {
        assert!(s.is_square(), "scattering matrix must be square");
        let n = s.rows();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| OperatorExpr::scalar(registry, s[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_parts(
            registry,
            rows,
            vec![OperatorExpr::zero(registry); n],
            OperatorExpr::zero(registry),
        )
    }

    /// `(I_n, 0, 0)`.
    pub fn passthrough(registry: &Arc<ModeRegistry>, n: usize) -> Self {
        Self::static_scattering(registry, &CMatrix::identity(n))
    }

    /// The zero-port triple, identity of concatenation.
    pub fn empty(registry: &Arc<ModeRegistry>) -> Self {
        Self::passthrough(registry, 0)
    }

    /// Single-port triple `(1, l, h)`.
    pub fn single_port(l: OperatorExpr, h: OperatorExpr) -> Self {
        let registry = l.registry().clone();
        Self::from_parts(
            &registry,
            vec![vec![OperatorExpr::identity(&registry)]],
            vec![l],
            h,
        )
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn n_ports(&self) -> usize {
        self.l.len()
    }

    pub fn s(&self, row: usize, col: usize) -> &OperatorExpr {
        &self.s[row][col]
    }

    pub fn s_rows(&self) -> &[Vec<OperatorExpr>] {
        &self.s
    }

    pub fn l(&self) -> &[OperatorExpr] {
        &self.l
    }

    pub fn h(&self) -> &OperatorExpr {
        &self.h
    }

    fn check_shape(&self) -> Result<(), SlhError> {
        let rows = self.s.len();
        let square = self.s.iter().all(|r| r.len() == rows);
        if !square || rows != self.l.len() {
            return Err(SlhError::Shape {
                rows,
                cols: self.s.first().map_or(0, Vec::len),
                l_len: self.l.len(),
            });
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<(), SlhError> {
        if !same_registry(&self.registry, &other.registry) {
            return Err(SlhError::RegistryMismatch);
        }
        self.check_shape()?;
        other.check_shape()
    }

    /// `self ⊞ other`.
    pub fn concat(&self, other: &Self) -> Result<Self, SlhError> {
        self.check_compatible(other)?;
        let n1 = self.n_ports();
        let n = n1 + other.n_ports();
        let zero = OperatorExpr::zero(&self.registry);
        let mut s = vec![vec![zero.clone(); n]; n];
        for (i, row) in self.s.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                s[i][j] = e.clone();
            }
        }
        for (i, row) in other.s.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                s[n1 + i][n1 + j] = e.clone();
            }
        }
        let l = self.l.iter().chain(&other.l).cloned().collect();
        Ok(Self::from_parts(&self.registry, s, l, &self.h + &other.h))
    }

    /// `self ◁ upstream`: the outputs of `upstream` drive the inputs of `self`.
    pub fn series(&self, upstream: &Self) -> Result<Self, SlhError> {
        series(self, upstream)
    }

    /// Problems with this triple; empty when it is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let rows = self.s.len();
        if self.s.iter().any(|r| r.len() != rows) || rows != self.l.len() {
            out.push(Violation::Shape {
                rows,
                cols: self.s.first().map_or(0, Vec::len),
                l_len: self.l.len(),
            });
        }
        let mut entries: Vec<(String, &OperatorExpr)> = Vec::new();
        for (i, row) in self.s.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                entries.push((alloc::format!("S[{},{}]", i + 1, j + 1), e));
            }
        }
        for (i, e) in self.l.iter().enumerate() {
            entries.push((alloc::format!("L[{}]", i + 1), e));
        }
        entries.push(("H".to_string(), &self.h));
        for (loc, e) in &entries {
            if !same_registry(e.registry(), &self.registry) {
                out.push(Violation::ForeignRegistry {
                    location: loc.clone(),
                });
            }
            if e.terms()
                .any(|(_, c)| !c.re.is_finite() || !c.im.is_finite())
            {
                out.push(Violation::NonFinite {
                    location: loc.clone(),
                });
            }
        }
        if !self.h.approx_eq(&self.h.adjoint(), VALIDATION_TOL) {
            out.push(Violation::NonHermitianHamiltonian);
        }
        if let Some(s) = self.scalar_scattering() {
            let dev = s
                .matmul(&s.adjoint())
                .max_abs_diff(&CMatrix::identity(s.rows()));
            if !(dev <= VALIDATION_TOL) {
                out.push(Violation::NonUnitaryScattering { deviation: dev });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// `S` as a numeric matrix when every entry is a scalar and the shape is square.
    pub fn scalar_scattering(&self) -> Option<CMatrix> {
        let n = self.s.len();
        if self.s.iter().any(|r| r.len() != n) {
            return None;
        }
        let mut m = CMatrix::zeros(n, n);
        for (i, row) in self.s.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                m[(i, j)] = e.as_scalar()?;
            }
        }
        Some(m)
    }

    fn require_scalar_scattering(&self) -> Result<CMatrix, SlhError> {
        self.check_shape()?;
        for (i, row) in self.s.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if e.as_scalar().is_none() {
                    return Err(SlhError::OperatorScattering { row: i, col: j });
                }
            }
        }
        Ok(self.scalar_scattering().expect("checked above"))
    }

    /// Coherent output amplitudes `out_k = ⟨L_k⟩ + Σ_l S_kl in_l` with mode
    /// operators replaced by their coherent amplitudes. Ports absent from
    /// `inputs` carry vacuum. Requires affine `L` and scalar `S`.
    pub fn output_amplitudes(
        &self,
        mode_amps: &[Complex64],
        inputs: &[PortField],
    ) -> Result<Vec<PortField>, SlhError> {
        let s = self.require_scalar_scattering()?;
        if mode_amps.len() != self.registry.len() {
            return Err(SlhError::AmplitudeArity {
                expected: self.registry.len(),
                got: mode_amps.len(),
            });
        }
        let inp = self.input_vector(inputs)?;
        for (k, l) in self.l.iter().enumerate() {
            if let Some((m, _)) = l.terms().find(|(m, _)| m.degree() > 1) {
                return Err(SlhError::NonlinearCoupling {
                    port: k,
                    monomial: alloc::format!("{}", m.display_with(self.registry.names())),
                });
            }
        }
        let scattered = s.matvec(&inp);
        Ok(self
            .l
            .iter()
            .zip(scattered)
            .enumerate()
            .map(|(k, (l, sc))| PortField::new(k, l.eval_coherent(mode_amps) + sc))
            .collect())
    }

    pub(crate) fn input_vector(&self, inputs: &[PortField]) -> Result<Vec<Complex64>, SlhError> {
        let n = self.n_ports();
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        let mut seen = vec![false; n];
        for f in inputs {
            if f.port >= n {
                return Err(SlhError::InputArity {
                    expected: n,
                    got: f.port + 1,
                });
            }
            if core::mem::replace(&mut seen[f.port], true) {
                return Err(SlhError::DuplicateInput(f.port));
            }
            v[f.port] = f.amplitude;
        }
        Ok(v)
    }

    /// The same system seen from a frame rotating at `omega`: `H − ω Σ_m a_m† a_m`.
    pub fn in_rotating_frame(&self, omega: f64) -> Self {
        let mut h = self.h.clone();
        for mode in self.registry.modes() {
            let a = OperatorExpr::annihilation(&self.registry, &mode).expect("own mode");
            h = &h - &(&a.adjoint() * &a).scale(Complex64::new(omega, 0.0));
        }
        Self { h, ..self.clone() }
    }

    /// Feeds coherent inputs `β` into the ports: `self ◁ (I, β, 0)`. The
    /// result has vacuum inputs and the drives folded into `L` and `H`.
    pub fn with_coherent_inputs(&self, inputs: &[PortField]) -> Result<Self, SlhError> {
        self.check_shape()?;
        let beta = self.input_vector(inputs)?;
        let n = self.n_ports();
        let mut s = vec![vec![OperatorExpr::zero(&self.registry); n]; n];
        for (i, row) in s.iter_mut().enumerate() {
            row[i] = OperatorExpr::identity(&self.registry);
        }
        let l = beta
            .iter()
            .map(|&b| OperatorExpr::scalar(&self.registry, b))
            .collect();
        let source = Self::from_parts(&self.registry, s, l, OperatorExpr::zero(&self.registry));
        series(self, &source)
    }
}

/// `downstream ◁ upstream`.
pub fn series(downstream: &SlhTriple, upstream: &SlhTriple) -> Result<SlhTriple, SlhError> {
    downstream.check_compatible(upstream)?;
    let n = downstream.n_ports();
    if upstream.n_ports() != n {
        return Err(SlhError::PortMismatch {
            downstream: n,
            upstream: upstream.n_ports(),
        });
    }
    let reg = &downstream.registry;
    let zero = OperatorExpr::zero(reg);
    let (s2, s1) = (&downstream.s, &upstream.s);

    let mut s = vec![vec![zero.clone(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = zero.clone();
            for k in 0..n {
                acc = &acc + &(&s2[i][k] * &s1[k][j]);
            }
            s[i][j] = acc;
        }
    }

    // S2 L1, reused for both L3 and the interaction term.
    let s2l1: Vec<OperatorExpr> = (0..n)
        .map(|i| (0..n).fold(zero.clone(), |acc, k| &acc + &(&s2[i][k] * &upstream.l[k])))
        .collect();
    let l: Vec<OperatorExpr> = s2l1.iter().zip(&downstream.l).map(|(a, b)| a + b).collect();

    let cross = downstream
        .l
        .iter()
        .zip(&s2l1)
        .fold(zero.clone(), |acc, (l2, x)| &acc + &(&l2.adjoint() * x));
    let h = &(&upstream.h + &downstream.h) + &cross.imag_part();

    Ok(SlhTriple::from_parts(reg, s, l, h))
}

/// Canonical text form: port and mode header, `S` row-major, `L`, then `H`.
impl fmt::Display for SlhTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ports {}", self.n_ports())?;
        f.write_str("modes")?;
        for n in self.registry.names() {
            write!(f, " {n}")?;
        }
        writeln!(f)?;
        for (i, row) in self.s.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                writeln!(f, "S[{},{}] = {}", i + 1, j + 1, e)?;
            }
        }
        for (i, e) in self.l.iter().enumerate() {
            writeln!(f, "L[{}] = {}", i + 1, e)?;
        }
        writeln!(f, "H = {}", self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn reg() -> Arc<ModeRegistry> {
        ModeRegistry::new(["a", "b"]).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn concat_with_empty_is_identity() {
        let r = reg();
        let a = OperatorExpr::mode(&r, "a").unwrap();
        let g = SlhTriple::single_port(a.scale(c(2.0, 0.0)), &a.adjoint() * &a);
        assert_eq!(g.concat(&SlhTriple::empty(&r)).unwrap(), g);
        assert_eq!(SlhTriple::empty(&r).concat(&g).unwrap(), g);
    }

    #[test]
    fn series_port_mismatch() {
        let r = reg();
        let g1 = SlhTriple::passthrough(&r, 1);
        let g2 = SlhTriple::passthrough(&r, 2);
        assert_eq!(
            series(&g2, &g1).unwrap_err(),
            SlhError::PortMismatch {
                downstream: 2,
                upstream: 1
            }
        );
    }

    #[test]
    fn anti_hermitian_hamiltonian_is_flagged() {
        let r = reg();
        let a = OperatorExpr::mode(&r, "a").unwrap();
        let g = SlhTriple::single_port(
            OperatorExpr::zero(&r),
            (&a.adjoint() * &a).scale(c(0.0, 1.0)),
        );
        assert_eq!(g.validate(), vec![Violation::NonHermitianHamiltonian]);
    }

    #[test]
    fn shape_violation() {
        let r = reg();
        let z = OperatorExpr::zero(&r);
        let one = OperatorExpr::identity(&r);
        let g = SlhTriple::from_parts(
            &r,
            vec![vec![one.clone(), z.clone()], vec![z.clone(), one]],
            vec![z.clone(), z.clone(), z.clone()],
            z,
        );
        assert!(matches!(
            g.validate()[0],
            Violation::Shape {
                rows: 2,
                cols: 2,
                l_len: 3
            }
        ));
    }

    #[test]
    fn non_unitary_scattering_is_flagged() {
        let r = reg();
        let s = CMatrix::from_row_major(1, 1, vec![c(0.5, 0.0)]);
        let g = SlhTriple::static_scattering(&r, &s);
        assert!(matches!(
            g.validate()[0],
            Violation::NonUnitaryScattering { .. }
        ));
    }

    #[test]
    fn passthrough_output_equals_input() {
        let r = reg();
        let g = SlhTriple::passthrough(&r, 1);
        let out = g
            .output_amplitudes(&[c(0.0, 0.0); 2], &[PortField::new(0, c(0.3, -0.2))])
            .unwrap();
        assert_eq!(out[0].amplitude, c(0.3, -0.2));
    }

    #[test]
    fn output_rejects_nonlinear_coupling() {
        let r = reg();
        let a = OperatorExpr::mode(&r, "a").unwrap();
        let g = SlhTriple::single_port(&a * &a, OperatorExpr::zero(&r));
        let err = g.output_amplitudes(&[c(0.0, 0.0); 2], &[]).unwrap_err();
        assert_eq!(
            err,
            SlhError::NonlinearCoupling {
                port: 0,
                monomial: "a^2".into()
            }
        );
    }

    #[test]
    fn output_rejects_operator_scattering() {
        let r = reg();
        let a = OperatorExpr::mode(&r, "a").unwrap();
        let z = OperatorExpr::zero(&r);
        let g = SlhTriple::from_parts(&r, vec![vec![&a.adjoint() * &a]], vec![z.clone()], z);
        assert_eq!(
            g.output_amplitudes(&[c(0.0, 0.0); 2], &[]).unwrap_err(),
            SlhError::OperatorScattering { row: 0, col: 0 }
        );
    }

    #[test]
    fn text_form() {
        let r = reg();
        let a = OperatorExpr::mode(&r, "a").unwrap();
        let g =
            SlhTriple::single_port(a.scale(c(2.0, 0.0)), (&a.adjoint() * &a).scale(c(3.0, 0.0)));
        assert_eq!(
            format!("{g}"),
            "ports 1\nmodes a b\nS[1,1] = 1\nL[1] = 2*a\nH = 3*ad*a\n"
        );
    }

    #[test]
    fn rotating_frame_shifts_number_terms() {
        let r = reg();
        let a = OperatorExpr::mode(&r, "a").unwrap();
        let n = &a.adjoint() * &a;
        let g = SlhTriple::single_port(a.clone(), n.scale(c(5.0, 0.0)));
        let rot = g.in_rotating_frame(2.0);
        let b = OperatorExpr::mode(&r, "b").unwrap();
        let expected = &n.scale(c(3.0, 0.0)) - &(&b.adjoint() * &b).scale(c(2.0, 0.0));
        assert!(rot.h().equals_canonical(&expected, 0.0));
    }
}
