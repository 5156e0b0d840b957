//! Random networks shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slhnet::components::{drive, loss_mirror, mirror, passthrough, phase};
use slhnet::{CMatrix, Complex64, ModeRegistry, OperatorExpr, SlhTriple};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rand_c(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    c(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

pub fn registry(n_modes: usize) -> Arc<ModeRegistry> {
    ModeRegistry::new(["a", "b", "c"].into_iter().take(n_modes)).unwrap()
}

/// Haar-ish unitary from Gram-Schmidt on a random complex matrix.
pub fn rand_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<Complex64> = (0..n).map(|_| rand_c(rng, 1.0)).collect();
        for u in &cols {
            let dot: Complex64 = u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Random linear triple: unitary `S`, `L` affine in the annihilators,
/// Hermitian quadratic-plus-linear `H`. Scales are of order one.
pub fn random_linear(rng: &mut ChaCha8Rng, reg: &Arc<ModeRegistry>, n_ports: usize) -> SlhTriple {
    let modes: Vec<OperatorExpr> = reg
        .modes()
        .map(|m| OperatorExpr::annihilation(reg, &m).unwrap())
        .collect();
    let u = rand_unitary(rng, n_ports);
    let s = (0..n_ports)
        .map(|i| {
            (0..n_ports)
                .map(|j| OperatorExpr::scalar(reg, u[(i, j)]))
                .collect()
        })
        .collect();
    let l = (0..n_ports)
        .map(|_| {
            let mut e = OperatorExpr::scalar(reg, rand_c(rng, 1.0));
            for a in &modes {
                e = &e + &a.scale(rand_c(rng, 1.0));
            }
            e
        })
        .collect();
    let mut h = OperatorExpr::zero(reg);
    for (i, ai) in modes.iter().enumerate() {
        let w = c(rng.random_range(-2.0..2.0), 0.0);
        h = &h + &(&ai.adjoint() * ai).scale(w);
        let d = rand_c(rng, 1.0);
        h = &h + &(&ai.adjoint().scale(d) + &ai.scale(d.conj()));
        for aj in &modes[i + 1..] {
            let g = rand_c(rng, 1.0);
            let hop = &(&ai.adjoint() * aj).scale(g) + &(&aj.adjoint() * ai).scale(g.conj());
            h = &h + &hop;
        }
    }
    SlhTriple::from_parts(reg, s, l, h)
}

/// A driven chain of cavities built from components: the drive enters a
/// random cascade of mirrors and phase shifters on one bus, then every
/// cavity optionally leaks into its own loss port. Rates in [0.5, 2],
/// frequencies in [-2, 2] (rad/s, probe at 0).
pub fn random_chain(rng: &mut ChaCha8Rng, n_modes: usize, lossy: bool) -> SlhTriple {
    let reg = registry(n_modes);
    let mut bus = drive(&reg, rand_c(rng, 1.0)).unwrap();
    let stages = rng.random_range(n_modes..=n_modes + 2);
    for k in 0..stages {
        let m = reg.modes().nth(k % n_modes).unwrap();
        let stage = if rng.random_bool(0.3) {
            phase(&reg, rng.random_range(0.0..std::f64::consts::TAU)).unwrap()
        } else {
            mirror(
                &reg,
                &m,
                rng.random_range(0.5..2.0),
                rng.random_range(-2.0..2.0),
            )
            .unwrap()
        };
        bus = stage.series(&bus).unwrap();
    }
    // Every mode touches the bus at least once.
    for m in reg.modes() {
        bus = mirror(&reg, &m, rng.random_range(0.5..2.0), 0.0)
            .unwrap()
            .series(&bus)
            .unwrap();
    }
    if lossy {
        for m in reg.modes() {
            bus = bus
                .concat(&loss_mirror(&reg, &m, rng.random_range(0.1..1.0)).unwrap())
                .unwrap();
        }
    } else {
        bus = bus.concat(&passthrough(&reg, 1).unwrap()).unwrap();
    }
    bus
}

/// Entrywise `approx_eq` on S, L and H.
pub fn triples_close(x: &SlhTriple, y: &SlhTriple, rel: f64) -> bool {
    x.n_ports() == y.n_ports()
        && x.s_rows()
            .iter()
            .flatten()
            .zip(y.s_rows().iter().flatten())
            .all(|(p, q)| p.approx_eq(q, rel))
        && x.l().iter().zip(y.l()).all(|(p, q)| p.approx_eq(q, rel))
        && x.h().approx_eq(y.h(), rel)
}

/// CCD parameters drawn from physical ranges around 1550 nm.
pub fn random_ccd(rng: &mut ChaCha8Rng) -> slhnet::ccd::CcdParams {
    slhnet::ccd::CcdParams {
        lambda_p_nm: rng.random_range(1540.0..1560.0),
        lambda_c_nm: rng.random_range(1540.0..1560.0),
        kappa: rng.random_range(1e10..5e11),
        gamma_p: rng.random_range(0.0..1e11),
        gamma_c: rng.random_range(0.0..1e11),
        phi: rng.random_range(0.0..std::f64::consts::TAU),
        eta: rng.random_range(0.0..=1.0),
        alpha: rand_c(rng, 1e4),
        n_eff: rng.random_range(1.5..3.5),
    }
}

pub mod round_trip {
    use slhnet::ccd::CcdParams;
    use slhnet::fit::{FitConfig, FitParam};

    /// 41 points over 8 nm around the resonances.
    pub fn grid() -> Vec<f64> {
        (0..41).map(|i| 1546.0 + 8.0 * i as f64 / 40.0).collect()
    }

    /// Detuned rings, loaded Q about 1.2×10³.
    pub fn truth() -> CcdParams {
        CcdParams {
            lambda_p_nm: 1549.6,
            lambda_c_nm: 1550.6,
            kappa: 1.5e11,
            gamma_p: 8e10,
            gamma_c: 4e10,
            phi: 0.8,
            eta: 0.1,
            ..CcdParams::default()
        }
    }

    /// Rates and phase off by up to 20%, wavelengths by a fraction of a
    /// linewidth.
    pub fn guess(t: &CcdParams) -> CcdParams {
        CcdParams {
            lambda_p_nm: t.lambda_p_nm + 0.2,
            lambda_c_nm: t.lambda_c_nm - 0.15,
            kappa: t.kappa * 1.2,
            gamma_p: t.gamma_p * 0.82,
            gamma_c: t.gamma_c * 1.18,
            phi: t.phi * 0.85,
            eta: t.eta * 1.2,
            ..*t
        }
    }

    pub fn free_params(g: &CcdParams, with_eta: bool) -> Vec<FitParam> {
        let mut v = vec![
            FitParam::bounded(
                "lambda_p_nm",
                g.lambda_p_nm,
                g.lambda_p_nm - 1.0,
                g.lambda_p_nm + 1.0,
            ),
            FitParam::bounded(
                "lambda_c_nm",
                g.lambda_c_nm,
                g.lambda_c_nm - 1.0,
                g.lambda_c_nm + 1.0,
            ),
            FitParam::relative("kappa", g.kappa, 0.5),
            FitParam::relative("gamma_p", g.gamma_p, 0.5),
            FitParam::relative("gamma_c", g.gamma_c, 0.5),
            FitParam::phase("phi", g.phi),
        ];
        if with_eta {
            v.push(FitParam::bounded("eta", g.eta, 0.0, 1.0));
        }
        v
    }

    /// Starts cool so the annealer refines the guess rather than
    /// forgetting it, and runs long enough to pin every parameter.
    pub fn config(free: Vec<FitParam>, seed: u64) -> FitConfig {
        FitConfig {
            free,
            t0: Some(0.01),
            stop_ratio: 1e-8,
            restart_threshold: 1e-9,
            seed,
            ..FitConfig::default()
        }
    }
}
