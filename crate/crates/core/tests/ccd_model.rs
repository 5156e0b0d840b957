mod common;

use common::{c, rng, triples_close};
use rand::Rng;
use slhnet::ccd::{
    self, build_ccd, ccd_closed_form, ccd_from_netlist, ccd_spectrum, CcdParams, DesignRuleInputs,
};
use slhnet::linear::{self, PowerUnit, SpectrumConfig};
use slhnet::{Complex64, OperatorExpr, PortField, SlhTriple};

const TOL: f64 = 1e-12;

/// The device triple exactly as it is usually quoted: same S up to the
/// sign of the lower-right loss entry, same L, and a Hamiltonian with the
/// drive on the plant only and the feedback coupling written as
/// `(κ/2i)[(1 − e^{−iφ}√(1−η)) a†b − (1 − e^{iφ}√(1−η)) a b†]`.
fn quoted_form(p: &CcdParams) -> SlhTriple {
    let g = ccd_closed_form(p).unwrap();
    let reg = g.registry().clone();
    let a = OperatorExpr::mode(&reg, "a").unwrap();
    let b = OperatorExpr::mode(&reg, "b").unwrap();
    let (ad, bd) = (a.adjoint(), b.adjoint());
    let t = (1.0 - p.eta).sqrt();
    let e = Complex64::from_polar(1.0, p.phi);
    let one = c(1.0, 0.0);
    let over_2i = c(0.0, -0.5);
    let h = &(&(&(&ad * &a).scale(c(p.omega_p().unwrap(), 0.0))
        + &(&bd * &b).scale(c(p.omega_c().unwrap(), 0.0)))
        + &(&ad.scale(p.alpha) - &a.scale(p.alpha.conj())).scale(over_2i * p.kappa.sqrt()))
        + &(&(&ad * &b).scale(one - e.conj() * t) - &(&a * &bd).scale(one - e * t))
            .scale(over_2i * p.kappa);
    let mut s: Vec<Vec<OperatorExpr>> = g.s_rows().to_vec();
    s[1][1] = OperatorExpr::real(&reg, t);
    SlhTriple::from_parts(&reg, s, g.l().to_vec(), h)
}

#[test]
fn composition_reproduces_closed_form() {
    let mut r = rng(11);
    for i in 0..100 {
        let p = common::random_ccd(&mut r);
        let built = build_ccd(&p).unwrap();
        let closed = ccd_closed_form(&p).unwrap();
        assert_eq!(built.n_ports(), 5);
        assert!(triples_close(&built, &closed, TOL), "draw {i}: {p:?}");
        assert!(built.is_valid(), "draw {i}");
    }
}

#[test]
fn shipped_netlist_reproduces_builder() {
    let mut r = rng(12);
    for _ in 0..20 {
        let p = common::random_ccd(&mut r);
        assert!(triples_close(
            &ccd_from_netlist(&p).unwrap(),
            &build_ccd(&p).unwrap(),
            TOL
        ));
    }
}

#[test]
fn quoted_hamiltonian_misses_controller_drive_and_swaps_coupling() {
    let mut r = rng(13);
    for _ in 0..20 {
        let p = common::random_ccd(&mut r);
        let built = build_ccd(&p).unwrap();
        let quoted = quoted_form(&p);
        let reg = built.registry().clone();
        let a = OperatorExpr::mode(&reg, "a").unwrap();
        let b = OperatorExpr::mode(&reg, "b").unwrap();
        let (ad, bd) = (a.adjoint(), b.adjoint());
        let t = (1.0 - p.eta).sqrt();
        let e = Complex64::from_polar(1.0, p.phi);
        let one = c(1.0, 0.0);
        let over_2i = c(0.0, -0.5);

        for k in 0..5 {
            assert!(built.l()[k].approx_eq(&quoted.l()[k], TOL));
        }
        for i in 0..5 {
            for j in 0..5 {
                let want = if (i, j) == (1, 1) {
                    -quoted.s(1, 1)
                } else {
                    quoted.s(i, j).clone()
                };
                assert!(built.s(i, j).approx_eq(&want, TOL));
            }
        }
        let drive_b =
            (&bd.scale(p.alpha) - &b.scale(p.alpha.conj())).scale(over_2i * p.kappa.sqrt());
        let quoted_coupling = (&(&ad * &b).scale(one - e.conj() * t)
            - &(&a * &bd).scale(one - e * t))
            .scale(over_2i * p.kappa);
        let swapped_coupling = (&(&bd * &a).scale(one - e.conj() * t)
            - &(&b * &ad).scale(one - e * t))
            .scale(over_2i * p.kappa);
        let diff = built.h() - quoted.h();
        assert!(diff.approx_eq(&(&drive_b + &(&swapped_coupling - &quoted_coupling)), 1e-9));
        if p.alpha.norm() > 0.0 && p.eta < 1.0 {
            assert!(!built.h().approx_eq(quoted.h(), TOL));
        }
    }
}

#[test]
fn monitored_output_formula() {
    let mut r = rng(14);
    for _ in 0..20 {
        let p = common::random_ccd(&mut r);
        let g = build_ccd(&p).unwrap();
        let reg = g.registry().clone();
        let a = OperatorExpr::mode(&reg, "a").unwrap();
        let b = OperatorExpr::mode(&reg, "b").unwrap();
        let t = (1.0 - p.eta).sqrt();
        let e = Complex64::from_polar(1.0, p.phi);
        let sk = c(p.kappa.sqrt(), 0.0);

        let l1 = (&a + &b.scale(e * t)).scale(sk);
        assert!(g.l()[0].approx_eq(&l1, TOL));
        assert!(g.s(0, 0).approx_eq(&OperatorExpr::scalar(&reg, e * t), TOL));
        assert!(g
            .s(0, 1)
            .approx_eq(&OperatorExpr::real(&reg, p.eta.sqrt()), TOL));
        for j in 2..5 {
            assert!(g.s(0, j).is_zero());
        }

        let amps = [common::rand_c(&mut r, 10.0), common::rand_c(&mut r, 10.0)];
        let inputs: Vec<PortField> = (0..5)
            .map(|k| PortField::new(k, common::rand_c(&mut r, 1e5)))
            .collect();
        let out = g.output_amplitudes(&amps, &inputs).unwrap();
        let want = sk * (amps[0] + t * e * amps[1])
            + t * e * inputs[0].amplitude
            + p.eta.sqrt() * inputs[1].amplitude;
        assert!((out[0].amplitude - want).norm() <= TOL * want.norm().max(1.0));
    }
}

fn grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
        .collect()
}

#[test]
fn lossless_device_conserves_power() {
    let mut r = rng(15);
    for _ in 0..5 {
        let p = CcdParams {
            gamma_p: 0.0,
            gamma_c: 0.0,
            eta: 0.0,
            lambda_p_nm: r.random_range(1549.0..1551.0),
            lambda_c_nm: r.random_range(1549.0..1551.0),
            kappa: r.random_range(2e10..2e11),
            phi: r.random_range(0.0..std::f64::consts::TAU),
            alpha: common::rand_c(&mut r, 1e4),
            ..CcdParams::default()
        };
        let g = build_ccd(&p).unwrap();
        let (_, points) = linear::sweep(&g, &[], &grid(1546.0, 1554.0, 201), p.n_eff).unwrap();
        let input = p.alpha.norm_sqr();
        for pt in &points {
            let total: f64 = pt.outputs.iter().map(|z| z.norm_sqr()).sum();
            assert!(
                (total - input).abs() <= 1e-9 * input,
                "{} nm: {total} vs {input}",
                pt.wavelength_nm
            );
        }
    }
}

#[test]
fn loss_ports_account_for_all_power() {
    let mut r = rng(16);
    for _ in 0..20 {
        let p = common::random_ccd(&mut r);
        let g = build_ccd(&p).unwrap();
        let (_, points) = linear::sweep(&g, &[], &grid(1540.0, 1560.0, 41), p.n_eff).unwrap();
        for pt in &points {
            let total: f64 = pt.outputs.iter().map(|z| z.norm_sqr()).sum();
            assert!((total - p.alpha.norm_sqr()).abs() <= 1e-9 * p.alpha.norm_sqr());
        }
    }
}

#[test]
fn drive_phase_does_not_change_the_spectrum() {
    let p = CcdParams::default();
    let turned = CcdParams {
        alpha: Complex64::from_polar(1.0, 1.234),
        ..p
    };
    let cfg = SpectrumConfig {
        unit: PowerUnit::Linear,
        ..SpectrumConfig::default()
    };
    let g = grid(1549.0, 1551.0, 101);
    let s1 = ccd_spectrum(&p, &g, &cfg).unwrap();
    let s2 = ccd_spectrum(&turned, &g, &cfg).unwrap();
    for (x, y) in s1.powers().zip(s2.powers()) {
        assert!((x - y).abs() <= 1e-12 * x.max(1e-18));
    }
}

#[test]
fn interference_null_moves_with_feedback_phase() {
    let g = grid(1549.5, 1550.7, 1201);
    let nulls: Vec<f64> = [0.4, 0.5, 0.6]
        .iter()
        .map(|&phi| {
            let p = CcdParams {
                phi,
                ..CcdParams::default()
            };
            ccd_spectrum(&p, &g, &SpectrumConfig::default())
                .unwrap()
                .interior_minimum()
                .unwrap()
        })
        .collect();
    assert!(nulls[0] < nulls[1] && nulls[1] < nulls[2], "{nulls:?}");
}

#[test]
fn kerr_design_rules() {
    // γ = 1.5×10⁵ W⁻¹km⁻¹, P = 1 µW
    let d = DesignRuleInputs {
        gamma_nl: 150.0,
        power_w: 1e-6,
        ..DesignRuleInputs::default()
    };
    let r = ccd::assess(&d).unwrap();
    assert!(
        (r.length_threshold_m - 670.0).abs() <= 6.7,
        "{}",
        r.length_threshold_m
    );
    assert!(
        (r.q_threshold / 3.5e9 - 1.0).abs() <= 0.2,
        "{}",
        r.q_threshold
    );

    // At the Q threshold the ring phase sits exactly on the criterion,
    // whatever the ring length.
    for ell in [1e-5, 3e-5, 1e-4] {
        let at = ccd::assess(&DesignRuleInputs {
            q: r.q_threshold,
            ell_r_m: ell,
            ..d
        })
        .unwrap();
        assert!((at.ring_phase - d.criterion).abs() < 1e-12);
    }
}

#[test]
fn leakage_rate_from_transmittance() {
    // κ = cT/(2 n ℓ)
    let k = ccd::kappa_from_transmittance(0.01, 2.85, 20e-6);
    assert!((k - slhnet::SPEED_OF_LIGHT * 0.01 / (2.0 * 2.85 * 20e-6)).abs() < 1e-3);
    assert!((k - 2.63e10).abs() / 2.63e10 < 1e-3);
}
