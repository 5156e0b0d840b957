mod common;

use common::round_trip::{config, free_params, grid, guess, truth};
use slhnet::ccd::CcdParams;
use slhnet::fit::{anneal, free_map, objective, synth_data, CcdModel, FitConfig, SpectrumModel};
use slhnet::Complex64;

fn setup(t: &CcdParams) -> (CcdModel, slhnet::netlist::Overrides) {
    let model = CcdModel { base: guess(t) };
    let mut fixed = slhnet::netlist::Overrides::new();
    fixed.insert("eta".into(), Complex64::new(t.eta, 0.0));
    (model, fixed)
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

#[test]
fn six_free_parameters_are_recovered() {
    let t = truth();
    let (model, fixed) = setup(&t);
    let data = synth_data(&CcdModel { base: t }, &t.to_overrides(), &grid(), 0.0, 0).unwrap();
    let cfg = FitConfig {
        fixed,
        ..config(free_params(&guess(&t), false), 1)
    };
    let r = anneal(&model, &cfg, &data).unwrap();
    let got = free_map(&r);
    assert!(r.evaluations <= cfg.max_evaluations);
    for name in [
        "lambda_p_nm",
        "lambda_c_nm",
        "kappa",
        "gamma_p",
        "gamma_c",
        "phi",
    ] {
        let want = t.get(name).unwrap().re;
        let e = rel_err(got[name], want);
        assert!(e < 0.01, "{name}: {} vs {want} ({e:.2e})", got[name]);
    }
}

#[test]
fn seven_free_fit_is_at_least_as_good_as_truth() {
    let t = truth();
    let (model, _) = setup(&t);
    let data = synth_data(&CcdModel { base: t }, &t.to_overrides(), &grid(), 0.2, 5).unwrap();
    let at_truth = objective(&model, &t.to_overrides(), &data).unwrap();
    let cfg = FitConfig {
        restarts: 0,
        ..config(free_params(&guess(&t), true), 2)
    };
    let r = anneal(&model, &cfg, &data).unwrap();
    assert!(r.objective <= at_truth, "{} > {at_truth}", r.objective);
}

#[test]
fn noisy_data_still_pins_the_resonances_and_coupling() {
    let t = truth();
    let (model, fixed) = setup(&t);
    let data = synth_data(&CcdModel { base: t }, &t.to_overrides(), &grid(), 0.2, 9).unwrap();
    let cfg = FitConfig {
        fixed,
        restarts: 0,
        ..config(free_params(&guess(&t), false), 3)
    };
    let r = anneal(&model, &cfg, &data).unwrap();
    let got = free_map(&r);
    // 0.2 dB of noise leaves the intrinsic losses and the phase loosely
    // determined; the line positions and the bus coupling stay sharp.
    assert!(rel_err(got["lambda_p_nm"], t.lambda_p_nm) < 1e-4);
    assert!(rel_err(got["lambda_c_nm"], t.lambda_c_nm) < 1e-4);
    assert!(
        rel_err(got["kappa"], t.kappa) < 0.01,
        "kappa {}",
        got["kappa"]
    );
    let at_truth = objective(&model, &t.to_overrides(), &data).unwrap();
    assert!(r.objective <= at_truth);
}

#[test]
fn fits_are_reproducible() {
    let t = truth();
    let (model, fixed) = setup(&t);
    let data = synth_data(&CcdModel { base: t }, &t.to_overrides(), &grid(), 0.1, 4).unwrap();
    let run = |seed| {
        let cfg = FitConfig {
            fixed: fixed.clone(),
            max_evaluations: 3000,
            ..config(free_params(&guess(&t), false), seed)
        };
        anneal(&model, &cfg, &data).unwrap()
    };
    let (a, b, c) = (run(7), run(7), run(8));
    assert_eq!(a, b);
    assert_ne!(a.free, c.free);
    assert_eq!(a.evaluations, 3000);
    // The trace's running best never increases.
    assert!(a
        .trace
        .windows(2)
        .all(|w| w[1].best <= w[0].best || w[1].restart != w[0].restart));
}

#[test]
fn truth_is_a_global_minimum_of_clean_data() {
    let t = truth();
    let model = CcdModel { base: t };
    let data = synth_data(&model, &model.defaults(), &grid(), 0.0, 0).unwrap();
    assert!(objective(&model, &t.to_overrides(), &data).unwrap() < 1e-20);
    let mut off = t.to_overrides();
    off.insert("kappa".into(), Complex64::new(t.kappa * 1.01, 0.0));
    assert!(objective(&model, &off, &data).unwrap() > 1e-8);
}
