//! Brute-force steady states of the master equation implied by a triple.
//!
//! With vacuum inputs the scattering matrix drops out and the network evolves
//! under
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_k (L_k ρ L_k† − ½{L_k† L_k, ρ})
//! ```
//!
//! Coherent drives must therefore be part of the triple, as constants in `L`.
//! Every mode is truncated to a finite number of Fock levels, the generator
//! is written out as a dense matrix acting on row-major `vec(ρ)`, and the
//! steady state is its normalized null vector. This shares nothing with the
//! linear lowering except the triple itself, which is the point.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::error::AlgebraError;
use crate::linalg::CMatrix;
use crate::linear::{self, LoweringError};
use crate::operator::{FockSpace, OperatorExpr};
use crate::slh::SlhTriple;

/// Largest generator dimension (`D²` for a Hilbert dimension `D`).
pub const MAX_SUPEROP_DIM: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("S[{row},{col}] is operator-valued; vacuum-input master equation needs scalar S")]
    OperatorScattering { row: usize, col: usize },
    #[error("generator dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("generator has no unique steady state")]
    DegenerateNullSpace,
    #[error("steady state violates density-matrix invariants: {0}")]
    InvalidState(&'static str),
    #[error("dimension mismatch: operator acts on {expected}, state has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Lowering(#[from] LoweringError),
}

/// A density matrix on a tensor product of truncated Fock spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub const TOL: f64 = 1e-10;

    /// Checks the invariants (Hermitian, unit trace, positive) and wraps `rho`.
    pub fn new(rho: CMatrix, dims: &[usize]) -> Result<Self, OracleError> {
        let d: usize = dims.iter().product();
        if rho.rows() != d || rho.cols() != d {
            return Err(OracleError::DimensionMismatch {
                expected: d,
                got: rho.rows(),
            });
        }
        if rho.max_abs_diff(&rho.adjoint()) > Self::TOL {
            return Err(OracleError::InvalidState("not Hermitian"));
        }
        if (rho.trace() - Complex64::new(1.0, 0.0)).norm() > Self::TOL {
            return Err(OracleError::InvalidState("trace differs from one"));
        }
        if !rho.is_positive_semidefinite(Self::TOL) {
            return Err(OracleError::InvalidState("negative eigenvalue"));
        }
        Ok(Self {
            rho,
            dims: dims.to_vec(),
        })
    }

    /// The pure state `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(psi: &[Complex64], dims: &[usize]) -> Result<Self, OracleError> {
        let n = psi.len();
        let rho = CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj());
        Self::new(rho, dims)
    }

    pub fn vacuum(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        let mut rho = CMatrix::zeros(d, d);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        Self {
            rho,
            dims: dims.to_vec(),
        }
    }

    /// Product of coherent states `|z_0⟩ ⊗ |z_1⟩ ⊗ …`, each truncated and
    /// renormalized.
    pub fn coherent(amplitudes: &[Complex64], dims: &[usize]) -> Result<Self, OracleError> {
        let space = FockSpace::new(dims, amplitudes.len(), usize::MAX)?;
        let single: Vec<Vec<Complex64>> = amplitudes
            .iter()
            .zip(dims)
            .map(|(z, &d)| {
                let mut v = Vec::with_capacity(d);
                let mut term = Complex64::new(1.0, 0.0);
                for n in 0..d {
                    if n > 0 {
                        term = term * z / (n as f64).sqrt();
                    }
                    v.push(term);
                }
                let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                v.into_iter().map(|c| c / norm).collect()
            })
            .collect();
        let mut digits = vec![0usize; dims.len()];
        let psi: Vec<Complex64> = (0..space.dim())
            .map(|idx| {
                space.digits(idx, &mut digits);
                digits
                    .iter()
                    .zip(&single)
                    .fold(Complex64::new(1.0, 0.0), |acc, (&n, v)| acc * v[n])
            })
            .collect();
        Self::pure(&psi, dims)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho.matmul(&self.rho).trace().re
    }
}

fn scalar_s_check(g: &SlhTriple) -> Result<(), OracleError> {
    for (i, row) in g.s_rows().iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if e.as_scalar().is_none() {
                return Err(OracleError::OperatorScattering { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Dense Lindblad generator of `g` acting on row-major `vec(ρ)`.
pub fn liouvillian(g: &SlhTriple, dims: &[usize]) -> Result<CMatrix, OracleError> {
    scalar_s_check(g)?;
    let space = FockSpace::new(dims, g.registry().len(), usize::MAX)?;
    let d = space.dim();
    let n = d.saturating_mul(d);
    if n > MAX_SUPEROP_DIM {
        return Err(OracleError::DimensionCap {
            dim: n,
            cap: MAX_SUPEROP_DIM,
        });
    }
    let h = g.h().to_matrix(dims)?;
    let ls: Vec<CMatrix> = g
        .l()
        .iter()
        .map(|l| l.to_matrix(dims))
        .collect::<Result<_, _>>()?;

    // K = −iH − ½ Σ L†L, generator = K ⊗ I + I ⊗ conj(K) + Σ L ⊗ conj(L).
    let mut k = h.scale(Complex64::new(0.0, -1.0));
    for l in &ls {
        k = k.sub(&l.adjoint().matmul(l).scale(Complex64::new(0.5, 0.0)));
    }
    let mut sup = CMatrix::zeros(n, n);
    for i in 0..d {
        for kk in 0..d {
            let v = k[(i, kk)];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..d {
                sup[(i * d + j, kk * d + j)] += v;
                sup[(j * d + i, j * d + kk)] += v.conj();
            }
        }
    }
    for l in &ls {
        let nz: Vec<(usize, usize, Complex64)> = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = l[(i, j)];
                (v.norm_sqr() != 0.0).then_some((i, j, v))
            })
            .collect();
        for &(i, kk, a) in &nz {
            for &(j, ll, b) in &nz {
                sup[(i * d + j, kk * d + ll)] += a * b.conj();
            }
        }
    }
    Ok(sup)
}

/// Normalized null vector of a generator built by [`liouvillian`].
///
/// The trace rows of a trace-preserving generator are linearly dependent, so
/// the first of them is replaced by the normalization `tr ρ = 1`. The
/// bordered system is nonsingular exactly when the null space is
/// one-dimensional.
pub fn steady_state_rho(superop: &CMatrix, dims: &[usize]) -> Result<DensityMatrix, OracleError> {
    let d: usize = dims.iter().product();
    if superop.rows() != d * d || !superop.is_square() {
        return Err(OracleError::DimensionMismatch {
            expected: d * d,
            got: superop.rows(),
        });
    }
    let mut m = superop.clone();
    for j in 0..d * d {
        m[(0, j)] = Complex64::new(0.0, 0.0);
    }
    for i in 0..d {
        m[(0, i * d + i)] = Complex64::new(1.0, 0.0);
    }
    let mut rhs = vec![Complex64::new(0.0, 0.0); d * d];
    rhs[0] = Complex64::new(1.0, 0.0);
    let x = m
        .solve(&rhs)
        .map_err(|_| OracleError::DegenerateNullSpace)?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(OracleError::DegenerateNullSpace);
    }
    let rho = CMatrix::from_row_major(d, d, x);
    let dm = DensityMatrix::new(rho.clone(), dims)?;
    // Remove round-off asymmetry.
    let sym = rho.add(&rho.adjoint()).scale(Complex64::new(0.5, 0.0));
    Ok(DensityMatrix { rho: sym, ..dm })
}

/// `tr(op · ρ)`.
pub fn expectation(op: &OperatorExpr, rho: &DensityMatrix) -> Result<Complex64, OracleError> {
    if op.registry().len() != rho.dims.len() {
        return Err(OracleError::DimensionMismatch {
            expected: op.registry().len(),
            got: rho.dims.len(),
        });
    }
    let m = op.to_matrix(&rho.dims)?;
    let d = m.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += m[(i, j)] * rho.rho[(j, i)];
        }
    }
    Ok(acc)
}

/// Settings for [`solve_converged`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub initial_dim: usize,
    pub max_doublings: usize,
    /// Relative change of the mode amplitudes accepted as converged.
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            initial_dim: 3,
            max_doublings: 3,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub rho: DensityMatrix,
    /// `⟨a_m⟩` for every mode.
    pub amplitudes: Vec<Complex64>,
    /// Relative amplitude change over the last doubling.
    pub change: f64,
    pub converged: bool,
}

impl OracleSolution {
    pub fn dims(&self) -> &[usize] {
        self.rho.dims()
    }
}

/// Steady state at a single truncation, with mode amplitudes.
pub fn solve_at(
    g: &SlhTriple,
    dims: &[usize],
) -> Result<(DensityMatrix, Vec<Complex64>), OracleError> {
    let sup = liouvillian(g, dims)?;
    let rho = steady_state_rho(&sup, dims)?;
    let amps = g
        .registry()
        .modes()
        .map(|m| {
            let a = OperatorExpr::annihilation(g.registry(), &m)?;
            expectation(&a, &rho)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((rho, amps))
}

fn relative_change(old: &[Complex64], new: &[Complex64]) -> f64 {
    let diff = old
        .iter()
        .zip(new)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = new.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        diff / scale
    }
}

/// Solves at `initial_dim` per mode and doubles the truncation until the
/// mode amplitudes move by less than `tol` (relative), the doubling budget is
/// spent, or the next generator would exceed [`MAX_SUPEROP_DIM`].
pub fn solve_converged(g: &SlhTriple, cfg: &OracleConfig) -> Result<OracleSolution, OracleError> {
    let n_modes = g.registry().len();
    let mut dims = vec![cfg.initial_dim; n_modes];
    let (mut rho, mut amps) = solve_at(g, &dims)?;
    let mut change = f64::INFINITY;
    for _ in 0..cfg.max_doublings {
        let next: Vec<usize> = dims.iter().map(|d| d * 2).collect();
        let hilbert: usize = next.iter().product();
        if hilbert.saturating_mul(hilbert) > MAX_SUPEROP_DIM {
            break;
        }
        let (rho2, amps2) = solve_at(g, &next)?;
        change = relative_change(&amps, &amps2);
        rho = rho2;
        amps = amps2;
        dims = next;
        if change < cfg.tol {
            break;
        }
    }
    Ok(OracleSolution {
        rho,
        amplitudes: amps,
        change,
        converged: change < cfg.tol,
    })
}

/// `⟨L_k⟩` for each port: the coherent output amplitudes under vacuum inputs.
pub fn output_amplitudes(
    g: &SlhTriple,
    rho: &DensityMatrix,
) -> Result<Vec<Complex64>, OracleError> {
    g.l().iter().map(|l| expectation(l, rho)).collect()
}

/// Photon budget used by [`cross_check`] callers that have no better idea.
/// Small enough that the smallest truncation is already exact to ~1e-7.
pub const DEFAULT_MAX_PHOTONS: f64 = 1e-4;

/// The oracle and the linear model compared at one probe frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub probe_omega: f64,
    /// Factor applied to every drive so the cavities stay nearly empty.
    pub drive_scale: f64,
    /// Total mean photon number of the scaled linear steady state.
    pub mean_photons: f64,
    /// `|out_k|²` per port from the linear model, at the original drive.
    pub linear_power: Vec<f64>,
    /// `|⟨L_k⟩|²` per port from the oracle, rescaled to the original drive.
    pub oracle_power: Vec<f64>,
    /// Truncation change reported by [`solve_converged`].
    pub change: f64,
    pub converged: bool,
}

impl CrossCheck {
    /// `|oracle − linear| / linear` at `port`, with the denominator floored
    /// at `floor` so a dark port does not divide by zero.
    pub fn relative_error(&self, port: usize, floor: f64) -> f64 {
        let (o, l) = (self.oracle_power[port], self.linear_power[port]);
        (o - l).abs() / l.max(floor)
    }
}

/// Solves `g` at `probe_omega` both ways. Drives are scaled down until the
/// linear steady state holds at most `max_photons` in total; both models
/// are linear in the drive, so powers are scaled back by `1/c²`.
pub fn cross_check(
    g: &SlhTriple,
    probe_omega: f64,
    max_photons: f64,
    cfg: &OracleConfig,
) -> Result<CrossCheck, OracleError> {
    let model = linear::lower(g, probe_omega)?;
    let x = model.steady_state()?;
    let linear_power: Vec<f64> = model
        .outputs(&x, &[])
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let n: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    let c = if n > max_photons {
        (max_photons / n).sqrt()
    } else {
        1.0
    };
    let scaled = linear::scale_drive(g, c)?.in_rotating_frame(probe_omega);
    let sol = solve_converged(&scaled, cfg)?;
    let oracle_power = output_amplitudes(&scaled, &sol.rho)?
        .iter()
        .map(|z| z.norm_sqr() / (c * c))
        .collect();
    Ok(CrossCheck {
        probe_omega,
        drive_scale: c,
        mean_photons: n * c * c,
        linear_power,
        oracle_power,
        change: sol.change,
        converged: sol.converged,
    })
}
