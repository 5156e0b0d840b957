//! The two-ring coupled-cavity device (CCD) and integrated-photonics design
//! rules.
//!
//! The plant ring `a` is driven through port 3 and monitored at port 1. The
//! controller ring `b` couples back into the plant through a feedback
//! waveguide with a phase shifter `φ` and power loss `η`. Ports 4 and 5 carry
//! the intrinsic ring losses.
//!
//! [`build_ccd`] assembles the device from its ten primitives with the series
//! and concatenation products; [`ccd_closed_form`] writes the resulting triple
//! down directly. The two agree exactly, which is the main consistency check
//! on the products.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use thiserror::Error;

use crate::components::{self, ComponentError};
use crate::linear::{self, LoweringError, Spectrum, SpectrumConfig};
use crate::netlist::{self, NetlistError, Overrides};
use crate::operator::{ModeRegistry, OperatorExpr};
use crate::slh::{SlhError, SlhTriple};
use crate::SPEED_OF_LIGHT;

pub use crate::linear::{omega_to_wavelength, wavelength_to_omega};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// 0-based index of the monitored output (port 1).
pub const MONITORED_PORT: usize = 0;
/// 0-based index of the drive input (port 3).
pub const DRIVE_PORT: usize = 2;

/// Threshold on the nonlinear phase above which Kerr effects matter. The
/// value is a rule of thumb.
pub const DEFAULT_NL_CRITERION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CcdError {
    #[error("{0} must be finite and non-negative")]
    NegativeRate(&'static str),
    #[error("eta must lie in [0, 1] (got {0})")]
    EtaOutOfRange(f64),
    #[error("{0} must be finite and positive")]
    NonPositive(&'static str),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("unknown CCD parameter `{0}`")]
    UnknownParam(String),
    #[error("parameter `{name}` must be real (got {value})")]
    ComplexValue { name: String, value: Complex64 },
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error(transparent)]
    Slh(#[from] SlhError),
    #[error(transparent)]
    Lowering(#[from] LoweringError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// Physical parameters of the CCD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcdParams {
    /// Plant resonance, nm.
    pub lambda_p_nm: f64,
    /// Controller resonance, nm.
    pub lambda_c_nm: f64,
    /// Bus coupling rate of every ring mirror, rad/s.
    pub kappa: f64,
    /// Intrinsic loss rates, rad/s.
    pub gamma_p: f64,
    pub gamma_c: f64,
    /// Feedback phase, rad.
    pub phi: f64,
    /// Feedback power loss.
    pub eta: f64,
    /// Drive amplitude, (rad/s)^½ or any consistent normalization.
    pub alpha: Complex64,
    pub n_eff: f64,
}

impl Default for CcdParams {
    /// Degenerate rings with loaded Q near 2.4×10³ and an interference null
    /// just above 1550 nm.
    fn default() -> Self {
        Self {
            lambda_p_nm: 1550.0,
            lambda_c_nm: 1550.0,
            kappa: 8e10,
            gamma_p: 1e10,
            gamma_c: 2e10,
            phi: 0.5,
            eta: 0.1,
            alpha: Complex64::new(1.0, 0.0),
            n_eff: linear::DEFAULT_N_EFF,
        }
    }
}

impl CcdParams {
    /// Parameter names, as used in `ccd.slh` and parameter files.
    pub const NAMES: [&'static str; 9] = [
        "lambda_p_nm",
        "lambda_c_nm",
        "n_eff",
        "kappa",
        "gamma_p",
        "gamma_c",
        "phi",
        "eta",
        "alpha",
    ];

    pub fn validate(&self) -> Result<(), CcdError> {
        for (name, v) in [
            ("lambda_p_nm", self.lambda_p_nm),
            ("lambda_c_nm", self.lambda_c_nm),
            ("n_eff", self.n_eff),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CcdError::NonPositive(name));
            }
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma_p", self.gamma_p),
            ("gamma_c", self.gamma_c),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CcdError::NegativeRate(name));
            }
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(CcdError::EtaOutOfRange(self.eta));
        }
        if !self.phi.is_finite() {
            return Err(CcdError::NonFinite("phi"));
        }
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return Err(CcdError::NonFinite("alpha"));
        }
        Ok(())
    }

    pub fn omega_p(&self) -> Result<f64, CcdError> {
        Ok(wavelength_to_omega(self.lambda_p_nm, self.n_eff)?)
    }

    pub fn omega_c(&self) -> Result<f64, CcdError> {
        Ok(wavelength_to_omega(self.lambda_c_nm, self.n_eff)?)
    }

    pub fn get(&self, name: &str) -> Option<Complex64> {
        let r = |x: f64| Some(Complex64::new(x, 0.0));
        match name {
            "lambda_p_nm" => r(self.lambda_p_nm),
            "lambda_c_nm" => r(self.lambda_c_nm),
            "n_eff" => r(self.n_eff),
            "kappa" => r(self.kappa),
            "gamma_p" => r(self.gamma_p),
            "gamma_c" => r(self.gamma_c),
            "phi" => r(self.phi),
            "eta" => r(self.eta),
            "alpha" => Some(self.alpha),
            _ => None,
        }
    }

    /// Sets one parameter by name. Only `alpha` accepts a complex value.
    pub fn set(&mut self, name: &str, value: Complex64) -> Result<(), CcdError> {
        if name == "alpha" {
            self.alpha = value;
            return Ok(());
        }
        if value.im != 0.0 {
            return Err(CcdError::ComplexValue {
                name: name.to_string(),
                value,
            });
        }
        let x = value.re;
        let slot = match name {
            "lambda_p_nm" => &mut self.lambda_p_nm,
            "lambda_c_nm" => &mut self.lambda_c_nm,
            "n_eff" => &mut self.n_eff,
            "kappa" => &mut self.kappa,
            "gamma_p" => &mut self.gamma_p,
            "gamma_c" => &mut self.gamma_c,
            "phi" => &mut self.phi,
            "eta" => &mut self.eta,
            _ => return Err(CcdError::UnknownParam(name.to_string())),
        };
        *slot = x;
        Ok(())
    }

    /// All parameters as netlist overrides for `ccd.slh`.
    pub fn to_overrides(&self) -> Overrides {
        Self::NAMES
            .iter()
            .map(|&n| (n.to_string(), self.get(n).expect("listed name")))
            .collect()
    }

    pub fn from_overrides(o: &BTreeMap<String, Complex64>) -> Result<Self, CcdError> {
        let mut p = Self::default();
        for (k, v) in o {
            p.set(k, *v)?;
        }
        p.validate()?;
        Ok(p)
    }
}

/// Mode registry of the device: plant `a`, controller `b`.
pub fn ccd_registry() -> Arc<ModeRegistry> {
    ModeRegistry::new(["a", "b"]).expect("distinct names")
}

/// Assembles the device from its primitives:
///
/// ```text
/// [(Gp2 ⊞ G1) ◁ Gη ◁ (Gφ ⊞ G1) ◁ (Gc2 ⊞ G1)] ⊞ [Gc1 ◁ Gp1 ◁ Gw] ⊞ Gp3 ⊞ Gc3
/// ```
pub fn build_ccd(p: &CcdParams) -> Result<SlhTriple, CcdError> {
    p.validate()?;
    let reg = ccd_registry();
    let a = reg.mode("a").expect("registered");
    let b = reg.mode("b").expect("registered");

    let gp1 = components::mirror(&reg, &a, p.kappa, p.omega_p()?)?;
    let gp2 = components::loss_mirror(&reg, &a, p.kappa)?;
    let gp3 = components::loss_mirror(&reg, &a, p.gamma_p)?;
    let gc1 = components::mirror(&reg, &b, p.kappa, p.omega_c()?)?;
    let gc2 = components::loss_mirror(&reg, &b, p.kappa)?;
    let gc3 = components::loss_mirror(&reg, &b, p.gamma_c)?;
    let gw = components::drive(&reg, p.alpha)?;
    let gphi = components::phase(&reg, p.phi)?;
    let g1 = components::passthrough(&reg, 1)?;
    let geta = components::beamsplitter(&reg, p.eta)?;

    let feedback = gp2
        .concat(&g1)?
        .series(&geta)?
        .series(&gphi.concat(&g1)?)?
        .series(&gc2.concat(&g1)?)?;
    let drive_path = gc1.series(&gp1)?.series(&gw)?;
    Ok(feedback.concat(&drive_path)?.concat(&gp3)?.concat(&gc3)?)
}

/// The composed device written out term by term.
pub fn ccd_closed_form(p: &CcdParams) -> Result<SlhTriple, CcdError> {
    p.validate()?;
    let reg = ccd_registry();
    let a = OperatorExpr::mode(&reg, "a").expect("registered");
    let b = OperatorExpr::mode(&reg, "b").expect("registered");
    let (ad, bd) = (a.adjoint(), b.adjoint());
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let sc = |z: Complex64| OperatorExpr::scalar(&reg, z);

    let t = (1.0 - p.eta).sqrt();
    let r = p.eta.sqrt();
    let e = Complex64::from_polar(1.0, p.phi);
    let sk = p.kappa.sqrt();
    let alpha = p.alpha;

    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let s_num = [
        [e * t, c(r, 0.0), zero, zero, zero],
        [e * r, c(-t, 0.0), zero, zero, zero],
        [zero, zero, one, zero, zero],
        [zero, zero, zero, one, zero],
        [zero, zero, zero, zero, one],
    ];
    let s: Vec<Vec<OperatorExpr>> = s_num
        .iter()
        .map(|row| row.iter().map(|&z| sc(z)).collect())
        .collect();

    let l = vec![
        &a.scale(c(sk, 0.0)) + &b.scale(e * t * sk),
        b.scale(e * (p.kappa * p.eta).sqrt()),
        &(&a + &b).scale(c(sk, 0.0)) + &sc(alpha),
        a.scale(c(p.gamma_p.sqrt(), 0.0)),
        b.scale(c(p.gamma_c.sqrt(), 0.0)),
    ];

    // 1/(2i) = −i/2
    let half_over_i = c(0.0, -0.5);
    let drive_a = (&ad.scale(alpha) - &a.scale(alpha.conj())).scale(half_over_i * sk);
    let drive_b = (&bd.scale(alpha) - &b.scale(alpha.conj())).scale(half_over_i * sk);
    let hop = (&(&ad * &b).scale(e * t - one) - &(&bd * &a).scale(e.conj() * t - one))
        .scale(half_over_i * p.kappa);
    let h = &(&(&(&(&ad * &a).scale(c(p.omega_p()?, 0.0))
        + &(&bd * &b).scale(c(p.omega_c()?, 0.0)))
        + &drive_a)
        + &drive_b)
        + &hop;

    Ok(SlhTriple::from_parts(&reg, s, l, h))
}

/// The device compiled from the shipped netlist.
pub fn ccd_from_netlist(p: &CcdParams) -> Result<SlhTriple, CcdError> {
    p.validate()?;
    Ok(netlist::compile_str(
        netlist::CCD_NETLIST,
        &p.to_overrides(),
    )?)
}

/// Spectrum at the monitored port (or `cfg.monitored_port`). The device's
/// own `n_eff` is used for the probe conversion.
pub fn ccd_spectrum(
    p: &CcdParams,
    wavelengths_nm: &[f64],
    cfg: &SpectrumConfig,
) -> Result<Spectrum, CcdError> {
    let g = build_ccd(p)?;
    let cfg = SpectrumConfig {
        n_eff: p.n_eff,
        ..*cfg
    };
    Ok(linear::spectrum(&g, &[], wavelengths_nm, &cfg)?)
}

/// Drive amplitude in √(photons/s) for an optical power in W at a vacuum
/// wavelength in nm.
pub fn drive_amplitude_from_power(power_w: f64, lambda_nm: f64) -> f64 {
    let photon_energy = HBAR * 2.0 * core::f64::consts::PI * SPEED_OF_LIGHT / (lambda_nm * 1e-9);
    (power_w / photon_energy).sqrt()
}

/// Nonlinearity parameter `γ = 2π n₂ / (λ A_eff)` in W⁻¹m⁻¹.
pub fn nonlinear_parameter(n2: f64, lambda_m: f64, a_eff: f64) -> f64 {
    2.0 * core::f64::consts::PI * n2 / (lambda_m * a_eff)
}

/// Kerr phase `γ ℓ P` accumulated over a waveguide, rad.
pub fn nonlinear_phase(gamma_nl: f64, length_m: f64, power_w: f64) -> f64 {
    gamma_nl * length_m * power_w
}

/// Circulating-power enhancement `λ Q / (π n_eff ℓ_r)` of a lossless ring.
pub fn enhancement_factor(lambda_m: f64, q: f64, n_eff: f64, ell_r_m: f64) -> f64 {
    lambda_m * q / (core::f64::consts::PI * n_eff * ell_r_m)
}

/// Mirror leakage rate `c T / (2 n_eff ℓ)` for power transmittance `T`.
pub fn kappa_from_transmittance(t: f64, n_eff: f64, length_m: f64) -> f64 {
    SPEED_OF_LIGHT * t / (2.0 * n_eff * length_m)
}

/// Waveguide length at which the Kerr phase reaches `criterion`.
pub fn length_threshold(gamma_nl: f64, power_w: f64, criterion: f64) -> f64 {
    criterion / (gamma_nl * power_w)
}

/// Ring Q at which the Kerr phase over one round trip, with the resonant
/// enhancement, reaches `criterion`. The ring length cancels.
pub fn q_threshold(gamma_nl: f64, power_w: f64, lambda_m: f64, n_eff: f64, criterion: f64) -> f64 {
    criterion * core::f64::consts::PI * n_eff / (gamma_nl * power_w * lambda_m)
}

/// Inputs to the nonlinearity design rules (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignRuleInputs {
    /// W⁻¹m⁻¹.
    pub gamma_nl: f64,
    pub lambda_m: f64,
    pub power_w: f64,
    /// Straight waveguide length.
    pub length_m: f64,
    pub q: f64,
    /// Ring circumference.
    pub ell_r_m: f64,
    pub n_eff: f64,
    pub criterion: f64,
}

impl Default for DesignRuleInputs {
    /// A silicon strip waveguide at 1550 nm with 1 µW input and a 6 µm ring.
    fn default() -> Self {
        Self {
            gamma_nl: 150.0,
            lambda_m: 1550e-9,
            power_w: 1e-6,
            length_m: 670.0,
            q: 3.5e9,
            ell_r_m: core::f64::consts::PI * 6e-6,
            n_eff: linear::DEFAULT_N_EFF,
            criterion: DEFAULT_NL_CRITERION,
        }
    }
}

impl DesignRuleInputs {
    pub const NAMES: [&'static str; 8] = [
        "gamma_nl",
        "lambda_m",
        "power_w",
        "length_m",
        "q",
        "ell_r_m",
        "n_eff",
        "criterion",
    ];

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CcdError> {
        let slot = match name {
            "gamma_nl" => &mut self.gamma_nl,
            "lambda_m" => &mut self.lambda_m,
            "power_w" => &mut self.power_w,
            "length_m" => &mut self.length_m,
            "q" => &mut self.q,
            "ell_r_m" => &mut self.ell_r_m,
            "n_eff" => &mut self.n_eff,
            "criterion" => &mut self.criterion,
            _ => return Err(CcdError::UnknownParam(name.to_string())),
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignReport {
    pub waveguide_phase: f64,
    pub length_threshold_m: f64,
    pub waveguide_significant: bool,
    pub enhancement: f64,
    pub ring_phase: f64,
    pub q_threshold: f64,
    pub ring_significant: bool,
}

/// Evaluates both rules: the bare waveguide, and one ring round trip with
/// resonant enhancement.
pub fn assess(d: &DesignRuleInputs) -> Result<DesignReport, CcdError> {
    for (name, v) in [
        ("gamma_nl", d.gamma_nl),
        ("lambda_m", d.lambda_m),
        ("length_m", d.length_m),
        ("q", d.q),
        ("ell_r_m", d.ell_r_m),
        ("n_eff", d.n_eff),
        ("criterion", d.criterion),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CcdError::NonPositive(name));
        }
    }
    if !(d.power_w.is_finite() && d.power_w >= 0.0) {
        return Err(CcdError::NegativeRate("power_w"));
    }
    let waveguide_phase = nonlinear_phase(d.gamma_nl, d.length_m, d.power_w);
    let enhancement = enhancement_factor(d.lambda_m, d.q, d.n_eff, d.ell_r_m);
    let ring_phase = nonlinear_phase(d.gamma_nl, d.ell_r_m, d.power_w * enhancement);
    Ok(DesignReport {
        waveguide_phase,
        length_threshold_m: length_threshold(d.gamma_nl, d.power_w, d.criterion),
        waveguide_significant: waveguide_phase >= d.criterion,
        enhancement,
        ring_phase,
        q_threshold: q_threshold(d.gamma_nl, d.power_w, d.lambda_m, d.n_eff, d.criterion),
        ring_significant: ring_phase >= d.criterion,
    })
}
