//! Polynomials in bosonic creation and annihilation operators.
//!
//! An [`OperatorExpr`] is kept in normal order at all times: every monomial is
//! stored as a per-mode pair `(creation power, annihilation power)`, read as
//! `a0†^p0 a0^q0 a1†^p1 a1^q1 …`. Operators of different modes commute, so
//! this representation is unique and structural equality of the term maps is
//! operator equality.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::AlgebraError;
use crate::linalg::CMatrix;

/// Terms whose coefficient magnitude falls below this are dropped.
pub const DROP_EPSILON: f64 = 1e-15;

/// Largest joint Hilbert-space dimension `to_matrix` will build.
pub const MAX_HILBERT_DIM: usize = 4096;

/// A registered bosonic mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeId {
    name: String,
    index: usize,
}

impl ModeId {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

/// Ordered set of mode names. Ordinals are dense and follow insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeRegistry {
    names: Vec<String>,
}

impl ModeRegistry {
    pub fn new<I, S>(names: I) -> Result<Arc<Self>, AlgebraError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        for n in names {
            let n = n.as_ref();
            if out.iter().any(|m| m == n) {
                return Err(AlgebraError::DuplicateMode(n.to_string()));
            }
            out.push(n.to_string());
        }
        Ok(Arc::new(Self { names: out }))
    }

    /// A registry without modes; only scalar expressions live here.
    pub fn empty() -> Arc<Self> {
        Arc::new(Self { names: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mode(&self, name: &str) -> Result<ModeId, AlgebraError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|index| ModeId {
                name: name.to_string(),
                index,
            })
            .ok_or_else(|| AlgebraError::UnknownMode(name.to_string()))
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeId> + '_ {
        self.names.iter().enumerate().map(|(index, name)| ModeId {
            name: name.clone(),
            index,
        })
    }

    fn owns(&self, mode: &ModeId) -> bool {
        self.names.get(mode.index).is_some_and(|n| *n == mode.name)
    }
}

/// Two registries are compatible when they list the same modes in the same order.
pub fn same_registry(a: &Arc<ModeRegistry>, b: &Arc<ModeRegistry>) -> bool {
    Arc::ptr_eq(a, b) || a.names == b.names
}

/// A normal-ordered product of mode operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    powers: Vec<(u32, u32)>,
}

impl Monomial {
    pub fn identity(n_modes: usize) -> Self {
        Self {
            powers: vec![(0, 0); n_modes],
        }
    }

    pub fn from_powers(powers: Vec<(u32, u32)>) -> Self {
        Self { powers }
    }

    pub fn annihilation(n_modes: usize, mode: usize) -> Self {
        let mut m = Self::identity(n_modes);
        m.powers[mode].1 = 1;
        m
    }

    pub fn creation(n_modes: usize, mode: usize) -> Self {
        let mut m = Self::identity(n_modes);
        m.powers[mode].0 = 1;
        m
    }

    /// `(creation power, annihilation power)` for each mode.
    pub fn powers(&self) -> &[(u32, u32)] {
        &self.powers
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().map(|(p, q)| p + q).sum()
    }

    pub fn creation_degree(&self) -> u32 {
        self.powers.iter().map(|(p, _)| p).sum()
    }

    pub fn annihilation_degree(&self) -> u32 {
        self.powers.iter().map(|(_, q)| q).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.degree() == 0
    }

    pub fn adjoint(&self) -> Self {
        Self {
            powers: self.powers.iter().map(|&(p, q)| (q, p)).collect(),
        }
    }

    /// If this is a single annihilation operator, its mode ordinal.
    pub fn as_annihilation(&self) -> Option<usize> {
        if self.degree() != 1 {
            return None;
        }
        self.powers.iter().position(|&(p, q)| p == 0 && q == 1)
    }

    /// If this is a single creation operator, its mode ordinal.
    pub fn as_creation(&self) -> Option<usize> {
        if self.degree() != 1 {
            return None;
        }
        self.powers.iter().position(|&(p, q)| p == 1 && q == 0)
    }

    /// If this is `a_i† a_j`, the pair `(i, j)`.
    pub fn as_hopping(&self) -> Option<(usize, usize)> {
        if self.creation_degree() != 1 || self.annihilation_degree() != 1 {
            return None;
        }
        let i = self.powers.iter().position(|&(p, _)| p == 1)?;
        let j = self.powers.iter().position(|&(_, q)| q == 1)?;
        Some((i, j))
    }

    /// Renders the monomial with mode names, e.g. `ad^2*a*bd`.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        MonomialDisplay { mono: self, names }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            for (a, b) in self.powers.iter().zip(&other.powers) {
                let ord = b.0.cmp(&a.0).then(b.1.cmp(&a.1));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            self.powers.len().cmp(&other.powers.len())
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct MonomialDisplay<'a> {
    mono: &'a Monomial,
    names: &'a [String],
}

impl fmt::Display for MonomialDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mono.is_identity() {
            return f.write_str("1");
        }
        let mut first = true;
        let mut factor =
            |f: &mut fmt::Formatter<'_>, base: &str, dag: bool, pow: u32| -> fmt::Result {
                if pow == 0 {
                    return Ok(());
                }
                if !first {
                    f.write_str("*")?;
                }
                first = false;
                f.write_str(base)?;
                if dag {
                    f.write_str("d")?;
                }
                if pow > 1 {
                    write!(f, "^{pow}")?;
                }
                Ok(())
            };
        for (i, &(p, q)) in self.mono.powers.iter().enumerate() {
            let name = self.names.get(i).map(String::as_str).unwrap_or("?");
            factor(f, name, true, p)?;
            factor(f, name, false, q)?;
        }
        Ok(())
    }
}

/// `a^q a†^r` in normal order for a single mode, as `(k, coefficient)` with
/// the result `coefficient · a†^(r-k) a^(q-k)`.
fn reorder_single_mode(q: u32, r: u32) -> impl Iterator<Item = (u32, f64)> {
    (0..=q.min(r)).map(move |k| (k, binomial(q, k) * binomial(r, k) * factorial(k)))
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

fn multiply_monomials(a: &Monomial, b: &Monomial) -> Vec<(Monomial, f64)> {
    // Per mode: a†^p a^q · a†^r a^s = Σ_k c_k a†^(p+r-k) a^(q+s-k).
    let mut acc: Vec<(Vec<(u32, u32)>, f64)> = vec![(Vec::with_capacity(a.powers.len()), 1.0)];
    for (&(p, q), &(r, s)) in a.powers.iter().zip(&b.powers) {
        if q == 0 || r == 0 {
            for (powers, _) in acc.iter_mut() {
                powers.push((p + r, q + s));
            }
            continue;
        }
        let mut next = Vec::with_capacity(acc.len() * (q.min(r) as usize + 1));
        for (powers, c) in &acc {
            for (k, ck) in reorder_single_mode(q, r) {
                let mut pw = powers.clone();
                pw.push((p + r - k, q + s - k));
                next.push((pw, c * ck));
            }
        }
        acc = next;
    }
    acc.into_iter()
        .map(|(powers, c)| (Monomial { powers }, c))
        .collect()
}

/// Normal-ordered polynomial in the operators of a mode registry.
#[derive(Debug, Clone)]
pub struct OperatorExpr {
    registry: Arc<ModeRegistry>,
    terms: BTreeMap<Monomial, Complex64>,
}

impl OperatorExpr {
    pub fn zero(registry: &Arc<ModeRegistry>) -> Self {
        Self {
            registry: registry.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// `c` times the identity operator.
    pub fn scalar(registry: &Arc<ModeRegistry>, c: Complex64) -> Self {
        Self::from_terms(registry, [(Monomial::identity(registry.len()), c)])
    }

    pub fn real(registry: &Arc<ModeRegistry>, x: f64) -> Self {
        Self::scalar(registry, Complex64::new(x, 0.0))
    }

    pub fn identity(registry: &Arc<ModeRegistry>) -> Self {
        Self::real(registry, 1.0)
    }

    pub fn annihilation(registry: &Arc<ModeRegistry>, mode: &ModeId) -> Result<Self, AlgebraError> {
        if !registry.owns(mode) {
            return Err(AlgebraError::UnknownMode(mode.name.clone()));
        }
        Ok(Self::from_terms(
            registry,
            [(
                Monomial::annihilation(registry.len(), mode.index),
                Complex64::new(1.0, 0.0),
            )],
        ))
    }

    pub fn creation(registry: &Arc<ModeRegistry>, mode: &ModeId) -> Result<Self, AlgebraError> {
        Ok(Self::annihilation(registry, mode)?.adjoint())
    }

    /// Annihilation operator of the mode called `name`.
    pub fn mode(registry: &Arc<ModeRegistry>, name: &str) -> Result<Self, AlgebraError> {
        let id = registry.mode(name)?;
        Self::annihilation(registry, &id)
    }

    /// Builds an expression from raw terms, merging duplicates and dropping dust.
    pub fn from_terms<I>(registry: &Arc<ModeRegistry>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Complex64)>,
    {
        let mut map: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m, c) in terms {
            assert_eq!(
                m.powers.len(),
                registry.len(),
                "monomial arity does not match registry"
            );
            *map.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let mut e = Self {
            registry: registry.clone(),
            terms: map,
        };
        e.canonicalize();
        e
    }

    fn canonicalize(&mut self) {
        self.terms.retain(|_, c| c.norm() >= DROP_EPSILON);
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Complex64 {
        self.terms
            .get(m)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The scalar value if this is a multiple of the identity (zero included).
    pub fn as_scalar(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_identity().then_some(*c)
            }
            _ => None,
        }
    }

    /// Highest total degree over all terms (0 for scalars and zero).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            registry: self.registry.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.adjoint(), c.conj()))
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self {
            registry: self.registry.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        };
        out.canonicalize();
        out
    }

    fn check_registry(&self, other: &Self) -> Result<(), AlgebraError> {
        if same_registry(&self.registry, &other.registry) {
            Ok(())
        } else {
            Err(AlgebraError::RegistryMismatch)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_registry(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            *terms.entry(m.clone()).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let mut out = Self {
            registry: self.registry.clone(),
            terms,
        };
        out.canonicalize();
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.checked_add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_registry(other)?;
        let mut terms: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let c = c1 * c2;
                for (m, k) in multiply_monomials(m1, m2) {
                    *terms.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c * k;
                }
            }
        }
        let mut out = Self {
            registry: self.registry.clone(),
            terms,
        };
        out.canonicalize();
        Ok(out)
    }

    /// `(X − X†)/2i`, the Hermitian "imaginary part" of an operator.
    pub fn imag_part(&self) -> Self {
        let diff = self - &self.adjoint();
        diff.scale(Complex64::new(0.0, -0.5))
    }

    /// Exact canonical comparison: identical monomial sets with coefficients
    /// within `eps` of each other. Terms missing on one side count as zero.
    pub fn equals_canonical(&self, other: &Self, eps: f64) -> bool {
        self.compare_terms(other, |_, _| eps)
    }

    /// Like [`equals_canonical`](Self::equals_canonical) but with a per-term
    /// tolerance of `rel · max(1, |c1|, |c2|)`, for expressions whose
    /// coefficients carry physical units far from unity.
    pub fn approx_eq(&self, other: &Self, rel: f64) -> bool {
        self.compare_terms(other, |a, b| rel * a.norm().max(b.norm()).max(1.0))
    }

    fn compare_terms(&self, other: &Self, tol: impl Fn(Complex64, Complex64) -> f64) -> bool {
        if !same_registry(&self.registry, &other.registry) {
            return false;
        }
        let check = |m: &Monomial| {
            let a = self.coefficient(m);
            let b = other.coefficient(m);
            (a - b).norm() <= tol(a, b)
        };
        self.terms.keys().all(check) && other.terms.keys().all(check)
    }

    /// Expectation value in a product coherent state with the given
    /// per-mode amplitudes. Exact for normal-ordered expressions.
    pub fn eval_coherent(&self, amplitudes: &[Complex64]) -> Complex64 {
        assert_eq!(
            amplitudes.len(),
            self.registry.len(),
            "one amplitude per mode required"
        );
        self.terms
            .iter()
            .map(|(m, c)| {
                m.powers
                    .iter()
                    .zip(amplitudes)
                    .fold(*c, |acc, (&(p, q), z)| acc * z.conj().powu(p) * z.powu(q))
            })
            .sum()
    }

    /// Matrix on the tensor product of truncated Fock spaces, modes in
    /// ordinal order (mode 0 is the most significant tensor factor).
    pub fn to_matrix(&self, dims: &[usize]) -> Result<CMatrix, AlgebraError> {
        let space = FockSpace::new(dims, self.registry.len(), MAX_HILBERT_DIM)?;
        let n = space.dim();
        let mut out = CMatrix::zeros(n, n);
        let mut digits = vec![0usize; dims.len()];
        for (m, c) in &self.terms {
            for col in 0..n {
                space.digits(col, &mut digits);
                let mut factor = *c;
                let mut row = 0usize;
                let mut alive = true;
                for (i, &(p, q)) in m.powers.iter().enumerate() {
                    match ladder_action(digits[i], p, q, dims[i]) {
                        Some((target, f)) => {
                            factor *= f;
                            row += target * space.strides[i];
                        }
                        None => {
                            alive = false;
                            break;
                        }
                    }
                }
                if alive {
                    out[(row, col)] += factor;
                }
            }
        }
        Ok(out)
    }
}

/// Action of `a†^p a^q` on `|n⟩` within a `d`-level truncation: the target
/// level and the amplitude, or `None` if the truncated operator kills it.
fn ladder_action(n: usize, p: u32, q: u32, d: usize) -> Option<(usize, f64)> {
    let (p, q) = (p as usize, q as usize);
    if n < q {
        return None;
    }
    let mid = n - q;
    let target = mid + p;
    if target >= d {
        return None;
    }
    let down: f64 = (mid + 1..=n).map(|k| (k as f64).sqrt()).product();
    let up: f64 = (mid + 1..=target).map(|k| (k as f64).sqrt()).product();
    Some((target, down * up))
}

/// Index arithmetic for a tensor product of truncated Fock spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl FockSpace {
    pub fn new(dims: &[usize], n_modes: usize, cap: usize) -> Result<Self, AlgebraError> {
        if dims.len() != n_modes {
            return Err(AlgebraError::TruncationArity {
                expected: n_modes,
                got: dims.len(),
            });
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(AlgebraError::TruncationTooSmall(d));
        }
        let mut dim: usize = 1;
        for &d in dims {
            dim = dim.saturating_mul(d);
        }
        if dim > cap {
            return Err(AlgebraError::DimensionCap { dim, cap });
        }
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Ok(Self {
            dims: dims.to_vec(),
            strides,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Per-mode occupation numbers of basis index `idx`.
    pub fn digits(&self, idx: usize, out: &mut [usize]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (idx / self.strides[i]) % self.dims[i];
        }
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }
}

impl PartialEq for OperatorExpr {
    fn eq(&self, other: &Self) -> bool {
        same_registry(&self.registry, &other.registry) && self.terms == other.terms
    }
}

impl<'a> Add<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;

    /// Panics on registry mismatch; use [`OperatorExpr::checked_add`] otherwise.
    fn add(self, rhs: &'a OperatorExpr) -> OperatorExpr {
        self.checked_add(rhs).expect("operator registry mismatch")
    }
}

impl<'a> Sub<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;

    fn sub(self, rhs: &'a OperatorExpr) -> OperatorExpr {
        self.checked_sub(rhs).expect("operator registry mismatch")
    }
}

impl<'a> Mul<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;

    fn mul(self, rhs: &'a OperatorExpr) -> OperatorExpr {
        self.checked_mul(rhs).expect("operator registry mismatch")
    }
}

impl Mul<Complex64> for &OperatorExpr {
    type Output = OperatorExpr;

    fn mul(self, rhs: Complex64) -> OperatorExpr {
        self.scale(rhs)
    }
}

impl Neg for &OperatorExpr {
    type Output = OperatorExpr;

    fn neg(self) -> OperatorExpr {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Formats a complex coefficient: `2`, `0.5i`, `(1+2i)`.
pub(crate) fn fmt_complex(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    if c.im == 0.0 {
        write!(f, "{}", c.re)
    } else if c.re == 0.0 {
        write!(f, "{}i", c.im)
    } else if c.im < 0.0 {
        write!(f, "({}-{}i)", c.re, -c.im)
    } else {
        write!(f, "({}+{}i)", c.re, c.im)
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let names = self.registry.names();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            // Pull a leading minus out of purely real or purely imaginary coefficients.
            let negative = (c.im == 0.0 && c.re < 0.0) || (c.re == 0.0 && c.im < 0.0);
            let shown = if negative { -c } else { *c };
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let unit = shown == Complex64::new(1.0, 0.0);
            if m.is_identity() {
                fmt_complex(f, shown)?;
            } else if unit {
                write!(f, "{}", m.display_with(names))?;
            } else {
                fmt_complex(f, shown)?;
                write!(f, "*{}", m.display_with(names))?;
            }
        }
        Ok(())
    }
}
