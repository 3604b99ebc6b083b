//! Invariants of the pulse family, the propagators and the gate runs,
//! checked against independent closed-form or finite-difference oracles.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use cdgate::dynamics::{
    propagate_lindblad, propagate_schrodinger, uniform_grid, DenseGenerator, PropagationOptions, QuantumState,
};
use cdgate::gate::{run_cz, ProtocolConfig};
use cdgate::linalg::{max_abs_diff, min_eigenvalue, CMatrix, SparseMatrix};
use cdgate::model::{AtomSpecies, Blockade, Drive, LevelScheme, SchemeKind};
use cdgate::pulse::{DoubleSequence, PulseParams};
use cdgate::units::{ghz, mhz};

fn hermitian(n: usize, re: &[f64], im: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if i == j {
                m[(i, i)] = C64::new(re[k], 0.0);
            } else {
                m[(i, j)] = C64::new(re[k], im[k]);
                m[(j, i)] = C64::new(re[k], -im[k]);
            }
            k += 1;
        }
    }
    m
}

const N: usize = 3;
const TRI: usize = N * (N + 1) / 2;

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, TRI)
}

fn driven(h0: CMatrix, h1: CMatrix, w: f64) -> DenseGenerator {
    DenseGenerator::new(N, move |t| &h0 + &h1 * C64::new((w * t).cos(), 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lindblad_keeps_density_physical(
        a in entries(), b in entries(), c in entries(), d in entries(),
        w in 0.5..5.0f64,
        rates in prop::collection::vec(0.0..2.0f64, 3),
    ) {
        let gen = driven(hermitian(N, &a, &b), hermitian(N, &c, &d), w);
        let mut jumps = Vec::new();
        for (k, &g) in rates.iter().enumerate() {
            let mut l = SparseMatrix::zeros(N);
            l.add(k % N, (k + 1) % N, C64::new(g.sqrt(), 0.0));
            jumps.push(l);
        }
        let rho0 = QuantumState::pure(vec![C64::new(1.0, 0.0), C64::new(0.3, -0.2), C64::new(0.0, 0.5)]).unwrap();
        let opts = PropagationOptions::default().with_record(uniform_grid((0.0, 2.0), 21));
        let tr = propagate_lindblad(&gen, &jumps, &rho0, (0.0, 2.0), &opts).unwrap();
        prop_assert_eq!(tr.times.len(), 21);
        let rho = tr.final_state.to_density();
        prop_assert!(max_abs_diff(&rho, &rho.adjoint()) < 1e-12);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-8);
        prop_assert!(min_eigenvalue(&rho) > -1e-8);
        for pops in &tr.populations {
            prop_assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            prop_assert!(pops.iter().all(|&p| p > -1e-9));
        }
    }

    #[test]
    fn closed_lindblad_equals_schrodinger(
        a in entries(), b in entries(), c in entries(), d in entries(),
        w in 0.5..5.0f64,
        psi in prop::collection::vec(-1.0..1.0f64, 2 * N),
    ) {
        prop_assume!(psi.iter().map(|x| x * x).sum::<f64>() > 0.1);
        let gen = driven(hermitian(N, &a, &b), hermitian(N, &c, &d), w);
        let v: Vec<C64> = (0..N).map(|i| C64::new(psi[2 * i], psi[2 * i + 1])).collect();
        let init = QuantumState::pure(v).unwrap();
        let opts = PropagationOptions::default();
        let pure = propagate_schrodinger(&gen, &init, (0.0, 1.5), &opts).unwrap();
        let dens = propagate_lindblad(&gen, &[], &init, (0.0, 1.5), &opts).unwrap();
        let diff = max_abs_diff(&pure.final_state.to_density(), &dens.final_state.to_density());
        prop_assert!(diff < 1e-8, "diff {diff:e}");
    }

    #[test]
    fn analytic_derivatives_match_finite_differences(
        omega_max in 1.0..300.0f64,
        delta0 in -200.0..200.0f64,
        duration in 0.02..1.0f64,
        u in -0.49..0.49f64,
    ) {
        let p = PulseParams::new(omega_max, delta0, duration, 0.0).unwrap();
        let t = u * duration;
        let h = 1e-5 * duration;
        let fd = |f: &dyn Fn(f64) -> f64| (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
        let scale_o = omega_max / duration;
        let scale_d = delta0.abs().max(1.0) / duration;
        prop_assert!((p.omega0_dot(t) - fd(&|x| p.omega0(x))).abs() < 1e-6 * scale_o);
        prop_assert!((p.delta_dot(t) - fd(&|x| p.delta(x))).abs() < 1e-6 * scale_d);

        // Counterdiabatic term from the finite-difference derivatives.
        let (om, dl) = (p.omega0(t), p.delta(t));
        let den = om * om + dl * dl;
        prop_assume!(den > 1e-6 * (omega_max * omega_max + delta0 * delta0));
        let oracle = (fd(&|x| p.omega0(x)) * dl - om * fd(&|x| p.delta(x))) / den;
        let scale = (scale_o * omega_max + scale_d * delta0.abs()) / den;
        prop_assert!((p.cd_term(t) - oracle).abs() < 1e-6 * scale.max(oracle.abs()));
    }

    #[test]
    fn constant_drive_follows_rabi_formula(
        omega in 1.0..100.0f64,
        delta in -100.0..100.0f64,
        t1 in 0.01..0.5f64,
    ) {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = C64::new(omega / 2.0, 0.0);
        h[(1, 0)] = C64::new(omega / 2.0, 0.0);
        h[(1, 1)] = C64::new(delta, 0.0);
        let gen = DenseGenerator::new(2, move |_| h.clone());
        let grid = uniform_grid((0.0, t1), 11);
        let opts = PropagationOptions::default().with_record(grid.clone());
        let tr = propagate_schrodinger(&gen, &QuantumState::basis(2, 0), (0.0, t1), &opts).unwrap();
        let g = (omega * omega + delta * delta).sqrt();
        for (t, pops) in tr.times.iter().zip(&tr.populations) {
            let oracle = omega * omega / (g * g) * (g * t / 2.0).sin().powi(2);
            prop_assert!((pops[1] - oracle).abs() < 1e-8, "t {t}: {} vs {oracle}", pops[1]);
        }
    }

    #[test]
    fn gate_run_is_swap_symmetric(
        omega in 14.0..26.0f64,
        delta in 6.0..14.0f64,
        b in 0.5..5.0f64,
        decay in any::<bool>(),
    ) {
        let seq = DoubleSequence::new(mhz(omega), mhz(delta), 0.05, 1.0).unwrap();
        let scheme = if decay {
            LevelScheme::new(SchemeKind::SinglePhoton, vec![AtomSpecies::Cs107p.rydberg_decay()]).unwrap()
        } else {
            LevelScheme::closed(SchemeKind::SinglePhoton)
        };
        let cfg = ProtocolConfig::new(scheme, Drive::SinglePhoton(seq), Blockade::Finite(ghz(b))).unwrap();
        let run = run_cz(&cfg).unwrap();
        let (a, c) = (run.input("01").unwrap(), run.input("10").unwrap());
        prop_assert!((a.return_population - c.return_population).abs() < 1e-9);
        prop_assert!((a.leakage - c.leakage).abs() < 1e-9);
        if let (Some(pa), Some(pc)) = (a.phase, c.phase) {
            let d = (pa - pc + PI).rem_euclid(2.0 * PI) - PI;
            prop_assert!(d.abs() < 1e-9, "{pa} vs {pc}");
        }
    }
}
