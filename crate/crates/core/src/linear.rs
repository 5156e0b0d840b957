//! Linear networks: lowering to a state-space model and steady-state spectra.
//!
//! A triple is linear here when `S` is scalar, every `L_k` is an affine
//! combination of annihilation operators and `H` is at most quadratic of the
//! form `Σ Ω_ij a_i† a_j + Σ (h_i a_i† + h.c.)`. For such a network the mode
//! amplitudes `x` obey
//!
//! ```text
//! dx/dt = A x + d,   A = −iΩ − ½ C†C,   d = −i h − ½ C† L0
//! ```
//!
//! and the coherent outputs are `C x + L0 + S·in`. Frequencies in `Ω` are
//! detunings from the probe once the model is placed in the rotating frame.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::operator::{Monomial, OperatorExpr};
use crate::slh::{PortField, SlhError, SlhTriple, VALIDATION_TOL};
use crate::SPEED_OF_LIGHT;

/// Effective index used for wavelength ↔ angular-frequency conversion.
pub const DEFAULT_N_EFF: f64 = 2.85;

/// Powers below this fraction of the reference clamp to [`DB_FLOOR`].
pub const DB_FLOOR_RATIO: f64 = 1e-18;
pub const DB_FLOOR: f64 = -180.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoweringError {
    #[error("{location} is not linear: unsupported term `{monomial}`")]
    Nonlinear { location: String, monomial: String },
    #[error("S[{row},{col}] is operator-valued")]
    OperatorScattering { row: usize, col: usize },
    #[error("H is not Hermitian")]
    NonHermitian,
    #[error("drift matrix is singular at grid point {index} ({wavelength_nm} nm)")]
    SingularDrift { index: usize, wavelength_nm: f64 },
    #[error("drift matrix is singular")]
    Singular,
    #[error("wavelength must be positive (got {0} nm)")]
    NonPositiveWavelength(f64),
    #[error("angular frequency must be positive (got {0} rad/s)")]
    NonPositiveFrequency(f64),
    #[error("effective index must be positive (got {0})")]
    NonPositiveIndex(f64),
    #[error("wavelength grid is empty")]
    EmptyGrid,
    #[error("wavelength grid must be strictly increasing (index {0})")]
    GridNotIncreasing(usize),
    #[error("monitored port {port} out of range for a {n_ports}-port network")]
    PortOutOfRange { port: usize, n_ports: usize },
    #[error(transparent)]
    Slh(#[from] SlhError),
}

/// Probe angular frequency for a vacuum wavelength in nm, using
/// `λ = 2πc / (n_eff ω)`.
pub fn wavelength_to_omega(lambda_nm: f64, n_eff: f64) -> Result<f64, LoweringError> {
    if !(lambda_nm > 0.0) || !lambda_nm.is_finite() {
        return Err(LoweringError::NonPositiveWavelength(lambda_nm));
    }
    if !(n_eff > 0.0) {
        return Err(LoweringError::NonPositiveIndex(n_eff));
    }
    Ok(2.0 * core::f64::consts::PI * SPEED_OF_LIGHT / (n_eff * lambda_nm * 1e-9))
}

/// Inverse of [`wavelength_to_omega`].
pub fn omega_to_wavelength(omega: f64, n_eff: f64) -> Result<f64, LoweringError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(LoweringError::NonPositiveFrequency(omega));
    }
    if !(n_eff > 0.0) {
        return Err(LoweringError::NonPositiveIndex(n_eff));
    }
    Ok(2.0 * core::f64::consts::PI * SPEED_OF_LIGHT / (n_eff * omega) * 1e9)
}

/// State-space data of a linear network.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Mode frequencies (diagonal, as detunings from `probe_omega`) and couplings.
    pub omega: CMatrix,
    /// `L = C a + L0`, `n_ports × n_modes`.
    pub coupling: CMatrix,
    pub scattering: CMatrix,
    /// Coefficients of `a_i†` in `H`.
    pub h_lin: Vec<Complex64>,
    pub l0: Vec<Complex64>,
    pub probe_omega: f64,
}

fn describe(m: &Monomial, g: &SlhTriple) -> String {
    format!("{}", m.display_with(g.registry().names()))
}

/// Extracts the state-space model of `g` in the frame rotating at `probe_omega`.
pub fn lower(g: &SlhTriple, probe_omega: f64) -> Result<LinearModel, LoweringError> {
    let n_modes = g.registry().len();
    let n_ports = g.n_ports();
    let scattering = g.scalar_scattering().ok_or_else(|| {
        for (i, row) in g.s_rows().iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if e.as_scalar().is_none() {
                    return LoweringError::OperatorScattering { row: i, col: j };
                }
            }
        }
        LoweringError::Slh(SlhError::Shape {
            rows: g.s_rows().len(),
            cols: g.s_rows().first().map_or(0, Vec::len),
            l_len: n_ports,
        })
    })?;
    if scattering.rows() != n_ports {
        return Err(LoweringError::Slh(SlhError::Shape {
            rows: scattering.rows(),
            cols: scattering.cols(),
            l_len: n_ports,
        }));
    }

    let mut coupling = CMatrix::zeros(n_ports, n_modes);
    let mut l0 = vec![Complex64::new(0.0, 0.0); n_ports];
    for (k, l) in g.l().iter().enumerate() {
        for (m, c) in l.terms() {
            if m.is_identity() {
                l0[k] = *c;
            } else if let Some(j) = m.as_annihilation() {
                coupling[(k, j)] = *c;
            } else {
                return Err(LoweringError::Nonlinear {
                    location: format!("L[{}]", k + 1),
                    monomial: describe(m, g),
                });
            }
        }
    }

    let h = g.h();
    if !h.approx_eq(&h.adjoint(), VALIDATION_TOL) {
        return Err(LoweringError::NonHermitian);
    }
    let mut omega = CMatrix::zeros(n_modes, n_modes);
    let mut h_lin = vec![Complex64::new(0.0, 0.0); n_modes];
    for (m, c) in h.terms() {
        if m.is_identity() || m.as_annihilation().is_some() {
            // Constant energy offset; annihilation terms are the adjoints of h_lin.
            continue;
        }
        if let Some(i) = m.as_creation() {
            h_lin[i] = *c;
        } else if let Some((i, j)) = m.as_hopping() {
            omega[(i, j)] = *c;
        } else {
            return Err(LoweringError::Nonlinear {
                location: "H".into(),
                monomial: describe(m, g),
            });
        }
    }
    for i in 0..n_modes {
        omega[(i, i)] -= Complex64::new(probe_omega, 0.0);
    }
    Ok(LinearModel {
        omega,
        coupling,
        scattering,
        h_lin,
        l0,
        probe_omega,
    })
}

impl LinearModel {
    pub fn n_modes(&self) -> usize {
        self.omega.rows()
    }

    pub fn n_ports(&self) -> usize {
        self.coupling.rows()
    }

    /// The same model seen from a frame rotating at `probe_omega`.
    pub fn at_probe(&self, probe_omega: f64) -> Self {
        let mut out = self.clone();
        let shift = probe_omega - self.probe_omega;
        for i in 0..self.n_modes() {
            out.omega[(i, i)] -= Complex64::new(shift, 0.0);
        }
        out.probe_omega = probe_omega;
        out
    }

    /// `A = −iΩ − ½ C†C`.
    pub fn drift(&self) -> CMatrix {
        let damping = self
            .coupling
            .adjoint()
            .matmul(&self.coupling)
            .scale(Complex64::new(-0.5, 0.0));
        self.omega.scale(Complex64::new(0.0, -1.0)).add(&damping)
    }

    /// `d = −i h − ½ C† L0`.
    pub fn drive(&self) -> Vec<Complex64> {
        let cl0 = self.coupling.adjoint().matvec(&self.l0);
        self.h_lin
            .iter()
            .zip(cl0)
            .map(|(h, c)| Complex64::new(0.0, -1.0) * h - 0.5 * c)
            .collect()
    }

    /// Solves `A x + d = 0`.
    pub fn steady_state(&self) -> Result<Vec<Complex64>, LoweringError> {
        let rhs: Vec<Complex64> = self.drive().into_iter().map(|d| -d).collect();
        self.drift()
            .solve(&rhs)
            .map_err(|_| LoweringError::Singular)
    }

    /// Coherent output amplitudes `C x + L0 + S·in`.
    pub fn outputs(&self, amplitudes: &[Complex64], inputs: &[Complex64]) -> Vec<Complex64> {
        let cx = self.coupling.matvec(amplitudes);
        let sin = if inputs.is_empty() {
            vec![Complex64::new(0.0, 0.0); self.n_ports()]
        } else {
            self.scattering.matvec(inputs)
        };
        cx.iter()
            .zip(&self.l0)
            .zip(sin)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }

    /// Output power with all modes empty, `‖L0‖²`: the total drive power
    /// injected through the network.
    pub fn bypass_power(&self) -> f64 {
        self.l0.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Multiplies every drive term of a linear triple by `c`: constants in `L`,
/// linear terms of `H` by `c`, and the constant of `H` by `c²`. Steady-state
/// amplitudes and output fields of the result scale by exactly `c`.
pub fn scale_drive(g: &SlhTriple, c: f64) -> Result<SlhTriple, LoweringError> {
    lower(g, 0.0)?;
    let reg = g.registry();
    // Factor applied to terms of degree 0 and 1.
    let scale_terms = |e: &OperatorExpr, f0: f64, f1: f64| {
        OperatorExpr::from_terms(
            reg,
            e.terms().map(|(m, v)| {
                let f = match m.degree() {
                    0 => f0,
                    1 => f1,
                    _ => 1.0,
                };
                (m.clone(), v * f)
            }),
        )
    };
    let l = g.l().iter().map(|e| scale_terms(e, c, 1.0)).collect();
    let h = scale_terms(g.h(), c * c, c);
    Ok(SlhTriple::from_parts(reg, g.s_rows().to_vec(), l, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerUnit {
    /// `|out|²` in the units of the drive (photon flux for amplitudes in (rad/s)^½).
    Linear,
    /// `10·log10(|out|² / reference)`, floored at [`DB_FLOOR`].
    Db,
}

/// Sampled output power versus probe wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub samples: Vec<(f64, f64)>,
    pub unit: PowerUnit,
    pub reference_power: f64,
}

impl Spectrum {
    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn powers(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Converts to the other unit using the stored reference power.
    pub fn to_unit(&self, unit: PowerUnit) -> Spectrum {
        if unit == self.unit {
            return self.clone();
        }
        let samples = self
            .samples
            .iter()
            .map(|&(w, p)| {
                let q = match unit {
                    PowerUnit::Db => to_db(p, self.reference_power),
                    PowerUnit::Linear => self.reference_power * 10f64.powf(p / 10.0),
                };
                (w, q)
            })
            .collect();
        Spectrum {
            samples,
            unit,
            reference_power: self.reference_power,
        }
    }

    /// Wavelength of the lowest sample.
    pub fn argmin(&self) -> Option<f64> {
        self.samples
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|s| s.0)
    }

    /// Wavelength of the deepest strict local minimum away from the grid
    /// ends, such as an interference null between two resonances.
    pub fn interior_minimum(&self) -> Option<f64> {
        self.samples
            .windows(3)
            .filter(|w| w[1].1 < w[0].1 && w[1].1 < w[2].1)
            .min_by(|a, b| a[1].1.total_cmp(&b[1].1))
            .map(|w| w[1].0)
    }
}

/// `10·log10(p / reference)` with the floor applied.
pub fn to_db(power: f64, reference: f64) -> f64 {
    if !(reference > 0.0) || power < DB_FLOOR_RATIO * reference {
        DB_FLOOR
    } else {
        10.0 * (power / reference).log10()
    }
}

/// Checks that a wavelength grid is non-empty, positive and strictly increasing.
pub fn check_grid(wavelengths_nm: &[f64]) -> Result<(), LoweringError> {
    if wavelengths_nm.is_empty() {
        return Err(LoweringError::EmptyGrid);
    }
    for (i, &w) in wavelengths_nm.iter().enumerate() {
        if !(w > 0.0) || !w.is_finite() {
            return Err(LoweringError::NonPositiveWavelength(w));
        }
        if i > 0 && !(w > wavelengths_nm[i - 1]) {
            return Err(LoweringError::GridNotIncreasing(i));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    pub n_eff: f64,
    /// 0-based output port.
    pub monitored_port: usize,
    pub unit: PowerUnit,
    /// Defaults to the bypass power of the driven network.
    pub reference_power: Option<f64>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            n_eff: DEFAULT_N_EFF,
            monitored_port: 0,
            unit: PowerUnit::Db,
            reference_power: None,
        }
    }
}

/// Per-wavelength solution of a driven linear network.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub wavelength_nm: f64,
    pub probe_omega: f64,
    pub amplitudes: Vec<Complex64>,
    pub outputs: Vec<Complex64>,
}

/// Solves the driven network at every grid wavelength. `inputs` are extra
/// coherent fields entering the ports, on top of any drives inside `g`.
pub fn sweep(
    g: &SlhTriple,
    inputs: &[PortField],
    wavelengths_nm: &[f64],
    n_eff: f64,
) -> Result<(LinearModel, Vec<SweepPoint>), LoweringError> {
    check_grid(wavelengths_nm)?;
    let driven = if inputs.is_empty() {
        g.clone()
    } else {
        g.with_coherent_inputs(inputs)?
    };
    let base = lower(&driven, 0.0)?;
    let mut points = Vec::with_capacity(wavelengths_nm.len());
    for (index, &wavelength_nm) in wavelengths_nm.iter().enumerate() {
        let probe_omega = wavelength_to_omega(wavelength_nm, n_eff)?;
        let m = base.at_probe(probe_omega);
        let amplitudes = m.steady_state().map_err(|_| LoweringError::SingularDrift {
            index,
            wavelength_nm,
        })?;
        let outputs = m.outputs(&amplitudes, &[]);
        points.push(SweepPoint {
            wavelength_nm,
            probe_omega,
            amplitudes,
            outputs,
        });
    }
    Ok((base, points))
}

/// Output-power spectrum at the monitored port.
pub fn spectrum(
    g: &SlhTriple,
    inputs: &[PortField],
    wavelengths_nm: &[f64],
    cfg: &SpectrumConfig,
) -> Result<Spectrum, LoweringError> {
    if cfg.monitored_port >= g.n_ports() {
        return Err(LoweringError::PortOutOfRange {
            port: cfg.monitored_port,
            n_ports: g.n_ports(),
        });
    }
    let (base, points) = sweep(g, inputs, wavelengths_nm, cfg.n_eff)?;
    let reference_power = cfg.reference_power.unwrap_or_else(|| base.bypass_power());
    let samples = points
        .iter()
        .map(|p| {
            let power = p.outputs[cfg.monitored_port].norm_sqr();
            let v = match cfg.unit {
                PowerUnit::Linear => power,
                PowerUnit::Db => to_db(power, reference_power),
            };
            (p.wavelength_nm, v)
        })
        .collect();
    Ok(Spectrum {
        samples,
        unit: cfg.unit,
        reference_power,
    })
}
