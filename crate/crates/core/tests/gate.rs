use std::f64::consts::PI;

use cdgate::config::load_preset;
use cdgate::gate::{corrected_block, cz_distance, prepare_bell, run_cz, PhaseCorrection};
use cdgate::model::Blockade;
use cdgate::units::ghz;

#[test]
fn ideal_gate_is_cz_after_correction() {
    let cfg = load_preset("fig2").unwrap().protocol_config().unwrap();
    let run = run_cz(&cfg).unwrap();
    let block = run.logical_block(&cfg.system().unwrap()).unwrap();
    let phi01 = run.phase("01").unwrap();
    let d = cz_distance(&corrected_block(&block, -phi01));
    assert!(d < 5e-3, "{d}");
    for l in ["01", "10", "11"] {
        let p = run.phase(l).unwrap();
        assert!((p.abs() - PI).abs() < 1e-2, "{l}: {p}");
        assert!(run.input(l).unwrap().return_population > 0.999);
    }
}

#[test]
fn infidelity_falls_with_blockade() {
    let base = load_preset("fig3b").unwrap().protocol_config().unwrap();
    let mut last = 1.0;
    for b in [0.5, 1.0, 2.0, 4.0] {
        let mut cfg = base.clone();
        cfg.blockade = Blockade::Finite(ghz(b));
        let inf = prepare_bell(&cfg).unwrap().score.infidelity;
        assert!(inf <= last, "B = {b}: {inf} > {last}");
        last = inf;
    }
}

#[test]
fn strong_blockade_matches_infinite() {
    let base = load_preset("fig3b").unwrap().protocol_config().unwrap();
    let mut fin = base.clone();
    fin.blockade = Blockade::Finite(ghz(100.0));
    let mut inf = base;
    inf.blockade = Blockade::Infinite;
    let a = prepare_bell(&fin).unwrap().score.fidelity;
    let b = prepare_bell(&inf).unwrap().score.fidelity;
    assert!((a - b).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn uncorrected_score_is_reported_alongside() {
    let mut cfg = load_preset("fig4").unwrap().protocol_config().unwrap();
    let auto = prepare_bell(&cfg).unwrap().score;
    cfg.phase_correction = PhaseCorrection::None;
    let none = prepare_bell(&cfg).unwrap().score;
    assert_eq!(none.fidelity, auto.fidelity_uncorrected);
    assert_eq!(none.correction_phase, 0.0);
    assert!(auto.leakage > 0.0 && auto.leakage < 1e-3);
}

#[test]
fn hadamard_on_either_atom_scores_alike() {
    let mut cfg = load_preset("fig2").unwrap().protocol_config().unwrap();
    cfg.blockade = Blockade::Finite(ghz(4.0));
    let target = prepare_bell(&cfg).unwrap().score.fidelity;
    cfg.hadamard_atom = 0;
    let control = prepare_bell(&cfg).unwrap().score.fidelity;
    assert!((target - control).abs() < 1e-9);
}
