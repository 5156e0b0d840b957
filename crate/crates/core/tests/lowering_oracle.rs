mod common;

use common::rng;
use rand::Rng;
use slhnet::ccd::{build_ccd, CcdParams};
use slhnet::linear::{self, PowerUnit, SpectrumConfig};
use slhnet::oracle::{self, CrossCheck, OracleConfig, DEFAULT_MAX_PHOTONS};
use slhnet::SlhTriple;

/// Ports carrying less than this fraction of the total output power are
/// compared in absolute terms.
const DARK_PORT: f64 = 1e-9;

fn assert_agrees(x: &CrossCheck, what: &str) {
    assert!(x.converged, "{what}: truncation change {}", x.change);
    assert!(x.change < 1e-6, "{what}: truncation change {}", x.change);
    assert!(x.mean_photons < 0.01, "{what}: {} photons", x.mean_photons);
    let total: f64 = x.linear_power.iter().sum();
    for port in 0..x.linear_power.len() {
        let err = x.relative_error(port, DARK_PORT * total);
        assert!(
            err < 1e-4,
            "{what} port {port}: {} vs {}",
            x.linear_power[port],
            x.oracle_power[port]
        );
    }
}

#[test]
fn random_networks_match_the_oracle() {
    let mut r = rng(21);
    let cfg = OracleConfig::default();
    for i in 0..20 {
        let n_modes = 1 + i % 2;
        let g: SlhTriple = if i < 10 {
            common::random_chain(&mut r, n_modes, i % 4 != 0)
        } else {
            let reg = common::registry(n_modes);
            let n_ports = r.random_range(n_modes..=3);
            common::random_linear(&mut r, &reg, n_ports)
        };
        let probe = r.random_range(-1.0..1.0);
        let x = oracle::cross_check(&g, probe, DEFAULT_MAX_PHOTONS, &cfg).unwrap();
        assert_agrees(&x, &format!("network {i}"));
    }
}

#[test]
fn ccd_matches_the_oracle_across_the_resonance() {
    let p = CcdParams::default();
    let g = build_ccd(&p).unwrap();
    for nm in [1549.0, 1549.9, 1550.0, 1550.09, 1551.0] {
        let w = linear::wavelength_to_omega(nm, p.n_eff).unwrap();
        let x = oracle::cross_check(&g, w, DEFAULT_MAX_PHOTONS, &OracleConfig::default()).unwrap();
        assert_agrees(&x, &format!("{nm} nm"));
    }
}

#[test]
fn weak_drive_oracle_amplitudes_match_directly() {
    // Already in the few-photon regime, so no rescaling is needed.
    let mut r = rng(22);
    let g = common::random_chain(&mut r, 2, true);
    let g = linear::scale_drive(&g, 1e-3).unwrap();
    let m = linear::lower(&g, 0.0).unwrap();
    let x = m.steady_state().unwrap();
    let sol = oracle::solve_converged(&g, &OracleConfig::default()).unwrap();
    for (lin, orc) in x.iter().zip(&sol.amplitudes) {
        assert!((lin - orc).norm() <= 1e-6 * lin.norm());
    }
    let rho = sol.rho.matrix();
    assert!((sol.rho.trace().re - 1.0).abs() < 1e-10);
    assert!(rho.max_abs_diff(&rho.adjoint()) < 1e-12);
    assert!(rho.is_positive_semidefinite(1e-10));
}

#[test]
fn rotating_frame_is_a_probe_shift() {
    let mut r = rng(23);
    for _ in 0..20 {
        let g = common::random_chain(&mut r, 2, true);
        let w = r.random_range(-2.0..2.0);
        let direct = linear::lower(&g, w).unwrap().steady_state().unwrap();
        let framed = linear::lower(&g.in_rotating_frame(w), 0.0)
            .unwrap()
            .steady_state()
            .unwrap();
        for (x, y) in direct.iter().zip(&framed) {
            assert!((x - y).norm() <= 1e-12 * x.norm().max(1.0));
        }
    }
}

#[test]
fn passive_networks_conserve_power() {
    let mut r = rng(24);
    for _ in 0..50 {
        let (n, lossy) = (r.random_range(1..=2), r.random_bool(0.5));
        let g = common::random_chain(&mut r, n, lossy);
        let m = linear::lower(&g, r.random_range(-3.0..3.0)).unwrap();
        let x = m.steady_state().unwrap();
        let total: f64 = m.outputs(&x, &[]).iter().map(|z| z.norm_sqr()).sum();
        let input = m.bypass_power();
        assert!((total - input).abs() <= 1e-9 * input);
    }
}

#[test]
fn drive_scaling_is_linear() {
    let mut r = rng(25);
    let g = common::random_chain(&mut r, 2, true);
    let m1 = linear::lower(&g, 0.4).unwrap();
    let m2 = linear::lower(&linear::scale_drive(&g, 0.25).unwrap(), 0.4).unwrap();
    let (x1, x2) = (m1.steady_state().unwrap(), m2.steady_state().unwrap());
    for (a, b) in x1.iter().zip(&x2) {
        assert!((a * 0.25 - b).norm() <= 1e-12 * a.norm().max(1.0));
    }
}

#[test]
fn db_and_linear_spectra_agree() {
    let p = CcdParams::default();
    let g = build_ccd(&p).unwrap();
    let grid: Vec<f64> = (0..41).map(|i| 1546.0 + 0.2 * i as f64).collect();
    let lin = linear::spectrum(
        &g,
        &[],
        &grid,
        &SpectrumConfig {
            unit: PowerUnit::Linear,
            ..SpectrumConfig::default()
        },
    )
    .unwrap();
    let db = linear::spectrum(&g, &[], &grid, &SpectrumConfig::default()).unwrap();
    assert_eq!(lin.reference_power, p.alpha.norm_sqr());
    for ((w, pw), (_, pd)) in lin.samples.iter().zip(&db.samples) {
        assert!(
            (linear::to_db(*pw, lin.reference_power) - pd).abs() < 1e-12,
            "{w}"
        );
        assert!(*pd <= 1e-9);
    }
    let back = db.to_unit(PowerUnit::Linear);
    for (x, y) in back.powers().zip(lin.powers()) {
        assert!((x - y).abs() <= 1e-12 * y.max(1e-30));
    }
}
