//! Parameter estimation from spectra by simulated annealing.
//!
//! The objective is the mean squared difference between model and data in
//! dB after removing the best constant offset, so the unknown detection
//! normalization never has to be modelled. Annealing uses Metropolis
//! acceptance, geometric cooling and one-parameter Gaussian proposals whose
//! widths adapt to keep the acceptance rate near one half. Periodic
//! parameters (phases) wrap instead of clipping.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::ccd::{self, CcdError, CcdParams};
use crate::linear::{self, LoweringError, PowerUnit, Spectrum, SpectrumConfig};
use crate::netlist::{self, Netlist, NetlistError, Overrides};

/// Objective values at or below this count as an exact fit.
pub const EXACT_FIT: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("no free parameters")]
    NothingToFit,
    #[error("bounds of `{0}` are empty or not finite")]
    DegenerateBounds(String),
    #[error("initial value of `{0}` lies outside its bounds")]
    InitialOutOfBounds(String),
    #[error("proposal scale of `{0}` must be positive")]
    BadScale(String),
    #[error("`{0}` is listed twice")]
    DuplicateParam(String),
    #[error("invalid schedule: {0}")]
    Schedule(&'static str),
    #[error("data spectrum is empty")]
    EmptyData,
    #[error("noise level must be finite and non-negative")]
    BadNoise,
    #[error("model evaluation failed: {0}")]
    Model(String),
    #[error(transparent)]
    Lowering(#[from] LoweringError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Ccd(#[from] CcdError),
}

/// A forward model: a full parameter assignment and a wavelength grid in,
/// a dB spectrum out.
pub trait SpectrumModel {
    /// Every parameter the model understands, with default values.
    fn defaults(&self) -> Overrides;
    fn spectrum(&self, params: &Overrides, wavelengths_nm: &[f64]) -> Result<Spectrum, FitError>;
}

/// A compiled netlist observed at one output port.
///
/// If the netlist declares a parameter named `n_eff` it also sets the probe
/// wavelength conversion; otherwise `n_eff` below is used.
#[derive(Debug, Clone)]
pub struct NetlistModel {
    pub netlist: Netlist,
    /// 0-based.
    pub monitored_port: usize,
    pub n_eff: f64,
}

impl NetlistModel {
    pub fn new(netlist: Netlist, monitored_port: usize) -> Self {
        Self {
            netlist,
            monitored_port,
            n_eff: linear::DEFAULT_N_EFF,
        }
    }
}

impl SpectrumModel for NetlistModel {
    fn defaults(&self) -> Overrides {
        self.netlist
            .params()
            .filter_map(|(n, v)| v.map(|v| (n.to_string(), v)))
            .collect()
    }

    fn spectrum(&self, params: &Overrides, wavelengths_nm: &[f64]) -> Result<Spectrum, FitError> {
        let g = netlist::compile(&self.netlist, params)?;
        let n_eff = match params.get("n_eff") {
            Some(v) => v.re,
            None => self
                .netlist
                .params()
                .find(|(n, _)| *n == "n_eff")
                .and_then(|(_, v)| v)
                .map_or(self.n_eff, |v| v.re),
        };
        let cfg = SpectrumConfig {
            n_eff,
            monitored_port: self.monitored_port,
            unit: PowerUnit::Db,
            reference_power: None,
        };
        Ok(linear::spectrum(&g, &[], wavelengths_nm, &cfg)?)
    }
}

/// The CCD built directly from [`CcdParams`], monitored at port 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct CcdModel {
    pub base: CcdParams,
}

impl SpectrumModel for CcdModel {
    fn defaults(&self) -> Overrides {
        self.base.to_overrides()
    }

    fn spectrum(&self, params: &Overrides, wavelengths_nm: &[f64]) -> Result<Spectrum, FitError> {
        let mut p = self.base;
        for (k, v) in params {
            p.set(k, *v)?;
        }
        Ok(ccd::ccd_spectrum(
            &p,
            wavelengths_nm,
            &SpectrumConfig::default(),
        )?)
    }
}

/// Mean squared dB residual after subtracting the optimal constant offset.
pub fn objective_from_db(model_db: &[f64], data_db: &[f64]) -> f64 {
    let n = model_db.len() as f64;
    let offset = model_db
        .iter()
        .zip(data_db)
        .map(|(m, d)| d - m)
        .sum::<f64>()
        / n;
    model_db
        .iter()
        .zip(data_db)
        .map(|(m, d)| {
            let r = d - m - offset;
            r * r
        })
        .sum::<f64>()
        / n
}

fn data_db(data: &Spectrum) -> Result<Vec<f64>, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    Ok(data.to_unit(PowerUnit::Db).powers().collect())
}

/// Objective of `params` against `data`.
pub fn objective<M: SpectrumModel + ?Sized>(
    model: &M,
    params: &Overrides,
    data: &Spectrum,
) -> Result<f64, FitError> {
    let d = data_db(data)?;
    let grid: Vec<f64> = data.wavelengths().collect();
    eval_objective(model, params, &grid, &d)
}

fn eval_objective<M: SpectrumModel + ?Sized>(
    model: &M,
    params: &Overrides,
    grid: &[f64],
    data_db: &[f64],
) -> Result<f64, FitError> {
    let s = model.spectrum(params, grid)?;
    let m: Vec<f64> = s.powers().collect();
    let f = objective_from_db(&m, data_db);
    if f.is_finite() {
        Ok(f)
    } else {
        Err(FitError::Model("objective is not finite".into()))
    }
}

/// Forward spectrum with i.i.d. Gaussian noise of `noise_db` standard
/// deviation added to every dB sample.
pub fn synth_data<M: SpectrumModel + ?Sized>(
    model: &M,
    params: &Overrides,
    wavelengths_nm: &[f64],
    noise_db: f64,
    seed: u64,
) -> Result<Spectrum, FitError> {
    if !(noise_db.is_finite() && noise_db >= 0.0) {
        return Err(FitError::BadNoise);
    }
    let mut s = model
        .spectrum(params, wavelengths_nm)?
        .to_unit(PowerUnit::Db);
    if noise_db > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_db).map_err(|_| FitError::BadNoise)?;
        for sample in &mut s.samples {
            sample.1 += normal.sample(&mut rng);
        }
    }
    Ok(s)
}

/// A parameter the annealer may move.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub initial: f64,
    /// Initial proposal standard deviation.
    pub scale: f64,
    /// Wrap into `[lower, upper)` instead of clipping.
    pub periodic: bool,
}

impl FitParam {
    /// Bounds `initial·(1 ∓ rel)`, proposal scale a tenth of the half-width.
    pub fn relative(name: &str, initial: f64, rel: f64) -> Self {
        let half = (initial.abs() * rel).max(f64::MIN_POSITIVE);
        Self {
            name: name.to_string(),
            lower: initial - half,
            upper: initial + half,
            initial,
            scale: half / 10.0,
            periodic: false,
        }
    }

    /// Explicit bounds, proposal scale a twentieth of the width.
    pub fn bounded(name: &str, initial: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            initial,
            scale: (upper - lower) / 20.0,
            periodic: false,
        }
    }

    /// A phase on `[0, 2π)`.
    pub fn phase(name: &str, initial: f64) -> Self {
        let tau = 2.0 * core::f64::consts::PI;
        Self {
            name: name.to_string(),
            lower: 0.0,
            upper: tau,
            initial: initial.rem_euclid(tau),
            scale: 0.05,
            periodic: true,
        }
    }

    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn confine(&self, x: f64) -> f64 {
        if self.periodic {
            self.lower + (x - self.lower).rem_euclid(self.width())
        } else {
            x.clamp(self.lower, self.upper)
        }
    }
}

/// Annealing settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub free: Vec<FitParam>,
    /// Values for parameters that are not free; model defaults fill the rest.
    pub fixed: Overrides,
    /// Starting temperature; the initial objective when `None`.
    pub t0: Option<f64>,
    pub cooling: f64,
    pub steps_per_temperature: usize,
    /// Stop once the temperature falls below `t0 · stop_ratio`.
    pub stop_ratio: f64,
    pub max_evaluations: usize,
    /// Re-randomized restarts allowed when a run ends above `restart_threshold`.
    pub restarts: usize,
    pub restart_threshold: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            free: Vec::new(),
            fixed: Overrides::new(),
            t0: None,
            cooling: 0.95,
            steps_per_temperature: 200,
            stop_ratio: 1e-6,
            max_evaluations: 200_000,
            restarts: 5,
            restart_threshold: 1e-4,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.free.is_empty() {
            return Err(FitError::NothingToFit);
        }
        for (i, p) in self.free.iter().enumerate() {
            if self.free[..i].iter().any(|q| q.name == p.name) {
                return Err(FitError::DuplicateParam(p.name.clone()));
            }
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                return Err(FitError::DegenerateBounds(p.name.clone()));
            }
            let inside = if p.periodic {
                p.initial.is_finite()
            } else {
                p.initial >= p.lower && p.initial <= p.upper
            };
            if !inside {
                return Err(FitError::InitialOutOfBounds(p.name.clone()));
            }
            if !(p.scale.is_finite() && p.scale > 0.0) {
                return Err(FitError::BadScale(p.name.clone()));
            }
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(FitError::Schedule("cooling factor must lie in (0, 1)"));
        }
        if self.steps_per_temperature == 0 {
            return Err(FitError::Schedule("steps per temperature must be positive"));
        }
        if !(self.stop_ratio > 0.0 && self.stop_ratio < 1.0) {
            return Err(FitError::Schedule("stop ratio must lie in (0, 1)"));
        }
        if let Some(t) = self.t0 {
            if !(t.is_finite() && t > 0.0) {
                return Err(FitError::Schedule("initial temperature must be positive"));
            }
        }
        if self.max_evaluations == 0 {
            return Err(FitError::Schedule("evaluation budget must be positive"));
        }
        Ok(())
    }
}

/// State after one temperature level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub restart: usize,
    pub evaluations: usize,
    pub temperature: f64,
    pub current: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Full parameter assignment at the best point.
    pub params: Overrides,
    /// Free parameter values at the best point, in configuration order.
    pub free: Vec<(String, f64)>,
    pub objective: f64,
    pub trace: Vec<TraceEntry>,
    pub evaluations: usize,
    pub restarts_used: usize,
    /// Best objective is at or below the restart threshold.
    pub converged: bool,
}

struct Problem<'a, M: ?Sized> {
    model: &'a M,
    cfg: &'a FitConfig,
    base: Overrides,
    grid: Vec<f64>,
    data: Vec<f64>,
    evaluations: usize,
}

impl<M: SpectrumModel + ?Sized> Problem<'_, M> {
    fn assemble(&self, x: &[f64]) -> Overrides {
        let mut p = self.base.clone();
        for (fp, &v) in self.cfg.free.iter().zip(x) {
            p.insert(fp.name.clone(), Complex64::new(v, 0.0));
        }
        p
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64, FitError> {
        self.evaluations += 1;
        eval_objective(self.model, &self.assemble(x), &self.grid, &self.data)
    }

    fn budget_left(&self) -> bool {
        self.evaluations < self.cfg.max_evaluations
    }
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Minimizes [`objective`] over the free parameters of `cfg`.
pub fn anneal<M: SpectrumModel + ?Sized>(
    model: &M,
    cfg: &FitConfig,
    data: &Spectrum,
) -> Result<FitResult, FitError> {
    cfg.validate()?;
    let data_db = data_db(data)?;
    let mut base = model.defaults();
    for (k, v) in &cfg.fixed {
        base.insert(k.clone(), *v);
    }
    let mut prob = Problem {
        model,
        cfg,
        base,
        grid: data.wavelengths().collect(),
        data: data_db,
        evaluations: 0,
    };

    let x0: Vec<f64> = cfg.free.iter().map(|p| p.confine(p.initial)).collect();
    let f0 = prob.eval(&x0)?;
    let mut best = (x0.clone(), f0);
    let mut trace = Vec::new();
    let mut restarts_used = 0;

    if f0 > EXACT_FIT {
        let mut start = (x0, f0);
        for restart in 0..=cfg.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, restart));
            if restart > 0 {
                let x: Vec<f64> = cfg
                    .free
                    .iter()
                    .map(|p| p.lower + rng.random::<f64>() * p.width())
                    .collect();
                // An infeasible random start is skipped rather than fatal.
                match prob.eval(&x) {
                    Ok(f) => start = (x, f),
                    Err(_) => continue,
                }
                restarts_used = restart;
            }
            let run = anneal_once(&mut prob, start.clone(), &mut rng, restart, &mut trace);
            if run.1 < best.1 {
                best = run;
            }
            if best.1 <= cfg.restart_threshold || !prob.budget_left() {
                break;
            }
        }
    }

    let params = prob.assemble(&best.0);
    Ok(FitResult {
        free: cfg
            .free
            .iter()
            .map(|p| p.name.clone())
            .zip(best.0.iter().copied())
            .collect(),
        params,
        objective: best.1,
        trace,
        evaluations: prob.evaluations,
        restarts_used,
        converged: best.1 <= cfg.restart_threshold,
    })
}

fn anneal_once<M: SpectrumModel + ?Sized>(
    prob: &mut Problem<'_, M>,
    start: (Vec<f64>, f64),
    rng: &mut ChaCha8Rng,
    restart: usize,
    trace: &mut Vec<TraceEntry>,
) -> (Vec<f64>, f64) {
    let cfg = prob.cfg;
    let n = cfg.free.len();
    let (mut x, mut f) = start;
    let mut best = (x.clone(), f);
    if f <= EXACT_FIT {
        return best;
    }
    let t0 = cfg.t0.unwrap_or(f);
    let t_stop = t0 * cfg.stop_ratio;
    let mut t = t0;
    let mut scales: Vec<f64> = cfg.free.iter().map(|p| p.scale.min(p.width())).collect();
    let mut k = 0usize;

    while t > t_stop && prob.budget_left() {
        let mut tries = alloc::vec![0usize; n];
        let mut accepts = alloc::vec![0usize; n];
        for _ in 0..cfg.steps_per_temperature {
            if !prob.budget_left() {
                break;
            }
            let i = k % n;
            k += 1;
            let p = &cfg.free[i];
            let step = Normal::new(0.0, scales[i])
                .expect("positive scale")
                .sample(rng);
            let mut y = x.clone();
            y[i] = p.confine(x[i] + step);
            tries[i] += 1;
            let fy = match prob.eval(&y) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let accept = fy <= f || rng.random::<f64>() < (-(fy - f) / t).exp();
            if accept {
                x = y;
                f = fy;
                accepts[i] += 1;
                if f < best.1 {
                    best = (x.clone(), f);
                }
            }
        }
        // Keep each acceptance rate in [0.4, 0.6].
        for i in 0..n {
            if tries[i] == 0 {
                continue;
            }
            let r = accepts[i] as f64 / tries[i] as f64;
            if r > 0.6 {
                scales[i] *= 1.0 + 2.0 * (r - 0.6) / 0.4;
            } else if r < 0.4 {
                scales[i] /= 1.0 + 2.0 * (0.4 - r) / 0.4;
            }
            let w = cfg.free[i].width();
            scales[i] = scales[i].clamp(w * 1e-12, w);
        }
        trace.push(TraceEntry {
            restart,
            evaluations: prob.evaluations,
            temperature: t,
            current: f,
            best: best.1,
        });
        if best.1 <= EXACT_FIT {
            break;
        }
        t *= cfg.cooling;
    }
    best
}

/// Free-parameter values of a result keyed by name.
pub fn free_map(r: &FitResult) -> BTreeMap<&str, f64> {
    r.free.iter().map(|(k, v)| (k.as_str(), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..41).map(|i| 1546.0 + 8.0 * i as f64 / 40.0).collect()
    }

    fn model() -> CcdModel {
        CcdModel::default()
    }

    #[test]
    fn self_fit_is_exact() {
        let m = model();
        let truth = m.defaults();
        let data = synth_data(&m, &truth, &grid(), 0.0, 1).unwrap();
        assert!(objective(&m, &truth, &data).unwrap() <= EXACT_FIT);
        let cfg = FitConfig {
            free: alloc::vec![FitParam::relative("kappa", 8e10, 0.2)],
            ..FitConfig::default()
        };
        let r = anneal(&m, &cfg, &data).unwrap();
        assert!(r.converged);
        assert_eq!(r.evaluations, 1);
        assert!(r.objective <= EXACT_FIT);
    }

    #[test]
    fn offset_is_absorbed() {
        let m = model();
        let truth = m.defaults();
        let mut data = synth_data(&m, &truth, &grid(), 0.0, 1).unwrap();
        let mut p = truth.clone();
        p.insert("kappa".into(), Complex64::new(8.8e10, 0.0));
        let before = objective(&m, &p, &data).unwrap();
        assert!(before > 0.0);
        for s in &mut data.samples {
            s.1 += 3.0;
        }
        let after = objective(&m, &p, &data).unwrap();
        assert!((before - after).abs() <= 1e-9 * before);
        assert!(objective(&m, &truth, &data).unwrap() <= EXACT_FIT);
    }

    #[test]
    fn noise_is_seeded() {
        let m = model();
        let t = m.defaults();
        let a = synth_data(&m, &t, &grid(), 0.2, 7).unwrap();
        let b = synth_data(&m, &t, &grid(), 0.2, 7).unwrap();
        let c = synth_data(&m, &t, &grid(), 0.2, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(
            synth_data(&m, &t, &grid(), -1.0, 7).unwrap_err(),
            FitError::BadNoise
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = FitConfig {
            free: alloc::vec![FitParam::bounded("kappa", 1.0, 1.0, 1.0)],
            ..FitConfig::default()
        };
        assert_eq!(
            cfg.validate().unwrap_err(),
            FitError::DegenerateBounds("kappa".into())
        );
        cfg.free = alloc::vec![FitParam::bounded("kappa", 3.0, 1.0, 2.0)];
        assert_eq!(
            cfg.validate().unwrap_err(),
            FitError::InitialOutOfBounds("kappa".into())
        );
        cfg.free = alloc::vec![FitParam::bounded("kappa", 1.5, 1.0, 2.0)];
        cfg.cooling = 1.0;
        assert!(matches!(cfg.validate().unwrap_err(), FitError::Schedule(_)));
        cfg.cooling = 0.9;
        cfg.free.push(cfg.free[0].clone());
        assert_eq!(
            cfg.validate().unwrap_err(),
            FitError::DuplicateParam("kappa".into())
        );
    }

    #[test]
    fn phase_wraps() {
        let p = FitParam::phase("phi", 0.1);
        let x = p.confine(-0.1);
        assert!((x - (2.0 * core::f64::consts::PI - 0.1)).abs() < 1e-12);
        let q = FitParam::bounded("x", 0.5, 0.0, 1.0);
        assert_eq!(q.confine(1.7), 1.0);
    }

    #[test]
    fn short_run_is_deterministic_and_bounded() {
        let m = model();
        let truth = m.defaults();
        let data = synth_data(&m, &truth, &grid(), 0.0, 1).unwrap();
        let cfg = FitConfig {
            free: alloc::vec![
                FitParam::relative("kappa", 9e10, 0.3),
                FitParam::phase("phi", 0.6)
            ],
            max_evaluations: 2_000,
            seed: 11,
            ..FitConfig::default()
        };
        let a = anneal(&m, &cfg, &data).unwrap();
        let b = anneal(&m, &cfg, &data).unwrap();
        assert_eq!(a, b);
        assert!(a.evaluations <= 2_000);
        let kappa = free_map(&a)["kappa"];
        assert!((6.3e10..=11.7e10).contains(&kappa));
        let mut running = f64::INFINITY;
        for e in &a.trace {
            assert!(e.best <= running);
            running = e.best;
            assert!(a.objective <= e.best);
        }
    }
}
