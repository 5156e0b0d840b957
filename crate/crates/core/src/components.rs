//! Primitive linear-optics components as SLH triples.

use alloc::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::operator::{ModeId, ModeRegistry, OperatorExpr};
use crate::slh::SlhTriple;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComponentError {
    #[error("rate must be finite and non-negative (got {0})")]
    NegativeRate(f64),
    #[error("beamsplitter loss must lie in [0, 1] (got {0})")]
    LossOutOfRange(f64),
    #[error("passthrough needs at least one port")]
    NoPorts,
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error(transparent)]
    Algebra(#[from] crate::error::AlgebraError),
}

fn check_rate(rate: f64) -> Result<(), ComponentError> {
    if rate.is_finite() && rate >= 0.0 {
        Ok(())
    } else {
        Err(ComponentError::NegativeRate(rate))
    }
}

/// Cavity mirror with leakage `rate` and mode frequency `omega`:
/// `(1, √rate·a, ω a†a)`.
pub fn mirror(
    registry: &Arc<ModeRegistry>,
    mode: &ModeId,
    rate: f64,
    omega: f64,
) -> Result<SlhTriple, ComponentError> {
    check_rate(rate)?;
    if !omega.is_finite() {
        return Err(ComponentError::NonFinite("mode frequency"));
    }
    let a = OperatorExpr::annihilation(registry, mode)?;
    let h = (&a.adjoint() * &a).scale(Complex64::new(omega, 0.0));
    Ok(SlhTriple::single_port(
        a.scale(Complex64::new(rate.sqrt(), 0.0)),
        h,
    ))
}

/// Mirror without a Hamiltonian part, `(1, √rate·a, 0)`. Also models
/// intrinsic loss through a fictitious port.
pub fn loss_mirror(
    registry: &Arc<ModeRegistry>,
    mode: &ModeId,
    rate: f64,
) -> Result<SlhTriple, ComponentError> {
    check_rate(rate)?;
    let a = OperatorExpr::annihilation(registry, mode)?;
    Ok(SlhTriple::single_port(
        a.scale(Complex64::new(rate.sqrt(), 0.0)),
        OperatorExpr::zero(registry),
    ))
}

/// Coherent drive `(1, α, 0)`.
pub fn drive(registry: &Arc<ModeRegistry>, alpha: Complex64) -> Result<SlhTriple, ComponentError> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(ComponentError::NonFinite("drive amplitude"));
    }
    Ok(SlhTriple::single_port(
        OperatorExpr::scalar(registry, alpha),
        OperatorExpr::zero(registry),
    ))
}

/// Phase shifter `(e^{iθ}, 0, 0)`.
pub fn phase(registry: &Arc<ModeRegistry>, theta: f64) -> Result<SlhTriple, ComponentError> {
    if !theta.is_finite() {
        return Err(ComponentError::NonFinite("phase"));
    }
    let s = CMatrix::from_row_major(1, 1, alloc::vec![Complex64::from_polar(1.0, theta)]);
    Ok(SlhTriple::static_scattering(registry, &s))
}

/// `n`-port identity `(I_n, 0, 0)`.
pub fn passthrough(registry: &Arc<ModeRegistry>, n: usize) -> Result<SlhTriple, ComponentError> {
    if n == 0 {
        return Err(ComponentError::NoPorts);
    }
    Ok(SlhTriple::passthrough(registry, n))
}

/// Lossy-link beamsplitter transmitting the `√(1−η)` amplitude fraction:
/// `S = [[√(1−η), √η], [√η, −√(1−η)]]`.
///
/// The sign on the second diagonal entry makes `S` orthogonal. Couplings
/// and the first output only see the first row and column.
pub fn beamsplitter(registry: &Arc<ModeRegistry>, eta: f64) -> Result<SlhTriple, ComponentError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(ComponentError::LossOutOfRange(eta));
    }
    let t = Complex64::new((1.0 - eta).sqrt(), 0.0);
    let r = Complex64::new(eta.sqrt(), 0.0);
    let s = CMatrix::from_row_major(2, 2, alloc::vec![t, r, r, -t]);
    Ok(SlhTriple::static_scattering(registry, &s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beamsplitter_is_orthogonal() {
        let r = ModeRegistry::new(["a"]).unwrap();
        let g = beamsplitter(&r, 0.3).unwrap();
        assert!(g.validate().is_empty());
        let s = g.scalar_scattering().unwrap();
        assert!((s[(0, 0)].re - 0.7f64.sqrt()).abs() < 1e-15);
        assert!((s[(0, 1)].re - 0.3f64.sqrt()).abs() < 1e-15);
        assert!((s[(1, 1)].re + 0.7f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parameter_guards() {
        let r = ModeRegistry::new(["a"]).unwrap();
        let a = r.mode("a").unwrap();
        assert_eq!(
            loss_mirror(&r, &a, -1.0).unwrap_err(),
            ComponentError::NegativeRate(-1.0)
        );
        assert_eq!(
            beamsplitter(&r, 1.5).unwrap_err(),
            ComponentError::LossOutOfRange(1.5)
        );
        assert_eq!(passthrough(&r, 0).unwrap_err(), ComponentError::NoPorts);
    }

    #[test]
    fn zero_phase_and_zero_drive_are_identity() {
        let r = ModeRegistry::new(["a"]).unwrap();
        let id = SlhTriple::passthrough(&r, 1);
        assert_eq!(phase(&r, 0.0).unwrap(), id);
        assert_eq!(drive(&r, Complex64::new(0.0, 0.0)).unwrap(), id);
    }
}
