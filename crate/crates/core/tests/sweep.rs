use cdgate::config::{load_preset, RunConfig};
use cdgate::gate::prepare_bell;
use cdgate::sweep::{evaluate, optimize, run_sweep, Observable, SweepResult, SweepSpec};

fn small_grid() -> RunConfig {
    let mut cfg = load_preset("fig3a").unwrap();
    let s = cfg.sweep.as_mut().unwrap();
    for a in &mut s.axis {
        a.linspace.as_mut().unwrap().num = 3;
    }
    cfg
}

#[test]
fn parallel_matches_sequential() {
    let cfg = small_grid();
    let mut spec = SweepSpec::from_config(&cfg, false).unwrap();
    spec.jobs = Some(1);
    let seq = run_sweep(&spec).unwrap();
    spec.jobs = Some(3);
    let par = run_sweep(&spec).unwrap();
    assert_eq!(seq, par);
    assert_eq!(seq.rows.len(), 9);
    // Last axis varies fastest.
    assert_eq!(seq.rows[1].coords, vec![15.0, 10.0]);
}

#[test]
fn grid_point_equals_direct_run() {
    let cfg = small_grid();
    let r = run_sweep(&SweepSpec::from_config(&cfg, false).unwrap()).unwrap();
    // Centre point is the base config (20, 10) MHz.
    let direct = prepare_bell(&load_preset("fig2").unwrap().protocol_config().map(|mut p| {
        p.blockade = cfg.blockade().unwrap();
        p
    }).unwrap())
    .unwrap();
    assert_eq!(r.rows[4].coords, vec![20.0, 10.0]);
    assert_eq!(r.rows[4].value, Some(direct.score.fidelity));
}

#[test]
fn csv_round_trip_keeps_full_precision() {
    let r = run_sweep(&SweepSpec::from_config(&small_grid(), false).unwrap()).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let back = SweepResult::read_csv(buf.as_slice(), &r).unwrap();
    assert_eq!(back, r);
    let json = serde_json::to_string(&r).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 9);

    let mut grid = Vec::new();
    r.write_grid(&mut grid).unwrap();
    let text = String::from_utf8(grid).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 4);
}

#[test]
fn failing_points_are_recorded() {
    let mut cfg = small_grid();
    let s = cfg.sweep.as_mut().unwrap();
    s.axis[0].linspace.as_mut().unwrap().start = -5.0;
    let r = run_sweep(&SweepSpec::from_config(&cfg, false).unwrap()).unwrap();
    assert!(r.rows[0].value.is_none());
    assert!(r.rows[0].error.as_ref().unwrap().contains("omega_max"));
    assert!(r.rows[8].value.is_some());
}

#[test]
fn dense_flag_uses_dense_sizes() {
    let spec = SweepSpec::from_config(&load_preset("fig3a").unwrap(), true).unwrap();
    assert_eq!(spec.len(), 81 * 81);
    let spec = SweepSpec::from_config(&load_preset("fig3a").unwrap(), false).unwrap();
    assert_eq!(spec.len(), 21 * 21);
}

#[test]
fn phase_observables_need_closed_schemes() {
    assert!(evaluate(&load_preset("fig4").unwrap(), Observable::Phi01).is_err());
    let phi = evaluate(&load_preset("fig6a").unwrap(), Observable::Phi01).unwrap();
    assert!((phi - 1.7354).abs() < 1e-3, "{phi}");
}

#[test]
fn optimizer_is_deterministic_and_improves() {
    let mut cfg = load_preset("optimize_fig2").unwrap();
    cfg.optimize.as_mut().unwrap().max_evals = 20;
    let a = optimize(&cfg).unwrap();
    let b = optimize(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.best_f <= a.trace[0].f);
    assert_eq!(a.evals, a.trace.len());
    let p = &cfg.optimize.as_ref().unwrap().param;
    for t in &a.trace {
        for (x, q) in t.x.iter().zip(p) {
            assert!(*x >= q.lower && *x <= q.upper);
        }
    }
}
