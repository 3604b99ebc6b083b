//! CZ protocol runs over the computational basis, ideal single-qubit gates,
//! and Bell-state preparation and scoring.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate_lindblad, propagate_schrodinger, uniform_grid, wrap_phase, MasterSign,
    PropagationOptions, QuantumState, Tolerance, Trajectory,
};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ONE, ZERO};
use crate::model::{lindblad_operators, Blockade, Drive, HamiltonianAssembler, Level, LevelScheme, TwoAtomSystem};

/// Computational-basis inputs in run order.
pub const INPUTS: [&str; 4] = ["00", "01", "10", "11"];

/// Single-qubit phase correction applied before the final Hadamard.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "phase")]
pub enum PhaseCorrection {
    /// `-phi01` from a zero-decay calibration run, on both atoms.
    #[default]
    Auto,
    /// Fixed phase (rad) on both atoms.
    Explicit(f64),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub scheme: LevelScheme,
    pub drive: Drive,
    pub blockade: Blockade,
    #[serde(default)]
    pub phase_correction: PhaseCorrection,
    /// Atom receiving the final Hadamard: 0 = control, 1 = target.
    #[serde(default = "default_hadamard_atom")]
    pub hadamard_atom: usize,
    #[serde(default)]
    pub tol: Tolerance,
    #[serde(default)]
    pub sign: MasterSign,
    /// Recorded points per pulse for trajectories; 0 records only the
    /// endpoints.
    #[serde(default)]
    pub record_points: usize,
}

fn default_hadamard_atom() -> usize {
    1
}

impl ProtocolConfig {
    pub fn new(scheme: LevelScheme, drive: Drive, blockade: Blockade) -> Result<Self> {
        let cfg = Self {
            scheme,
            drive,
            blockade,
            phase_correction: PhaseCorrection::Auto,
            hadamard_atom: 1,
            tol: Tolerance::default(),
            sign: MasterSign::default(),
            record_points: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.drive.scheme_kind() != self.scheme.kind {
            return Err(Error::SchemeMismatch {
                expected: self.scheme.kind.to_string(),
                got: self.drive.scheme_kind().to_string(),
            });
        }
        if self.hadamard_atom > 1 {
            return Err(Error::param("hadamard_atom", "must be 0 or 1"));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<TwoAtomSystem> {
        TwoAtomSystem::new(self.scheme.clone(), self.blockade)
    }

    /// Same protocol with all decay removed.
    pub fn closed(&self) -> Self {
        Self {
            scheme: self.scheme.without_decay(),
            ..self.clone()
        }
    }

    fn options(&self) -> PropagationOptions {
        let span = self.drive.span();
        let pulses = match self.drive {
            Drive::PhaseJump(_) => 1,
            _ => 2,
        };
        let record = if self.record_points == 0 {
            vec![span.0, span.1]
        } else {
            uniform_grid(span, pulses * self.record_points + 1)
        };
        PropagationOptions {
            tol: self.tol,
            sign: self.sign,
            record,
            ..Default::default()
        }
    }
}

/// Outcome of propagating one computational-basis input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRun {
    pub input: String,
    /// Probability of returning to the input state.
    pub return_population: f64,
    /// Population outside states with both atoms in `{0, 1, r}`.
    pub leakage: f64,
    /// Phase of the returned amplitude relative to `|00>`; pure runs only.
    pub phase: Option<f64>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
    #[serde(skip)]
    pub final_state: Option<QuantumState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateRun {
    pub inputs: Vec<InputRun>,
    pub conditional_phase: Option<f64>,
    pub duration_us: f64,
    pub wall_clock_s: f64,
    pub pure: bool,
}

impl GateRun {
    pub fn input(&self, label: &str) -> Option<&InputRun> {
        self.inputs.iter().find(|r| r.input == label)
    }

    pub fn phase(&self, label: &str) -> Option<f64> {
        self.input(label)?.phase
    }

    /// `[phi00, phi01, phi10, phi11]` when all are defined.
    pub fn phases(&self) -> Option<[f64; 4]> {
        let mut out = [0.0; 4];
        for (o, l) in out.iter_mut().zip(INPUTS) {
            *o = self.phase(l)?;
        }
        Some(out)
    }

    /// Logical 4x4 block `<ab| U |cd>` of a pure run, in `INPUTS` order.
    pub fn logical_block(&self, system: &TwoAtomSystem) -> Option<CMatrix> {
        let idx: Vec<usize> = INPUTS
            .iter()
            .map(|l| system.index_of_label(l).ok())
            .collect::<Option<_>>()?;
        let mut m = CMatrix::zeros(4, 4);
        for (c, run) in self.inputs.iter().enumerate() {
            let st = run.final_state.as_ref()?;
            for (r, &i) in idx.iter().enumerate() {
                m[(r, c)] = st.amplitude(i)?;
            }
        }
        Some(m)
    }
}

fn leakage(state: &QuantumState, system: &TwoAtomSystem) -> f64 {
    let kept = [Level::Zero, Level::One, Level::R];
    let levels = &system.scheme.levels;
    let inside: f64 = system
        .basis_pairs()
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| kept.contains(&levels[a]) && kept.contains(&levels[b]))
        .map(|(i, _)| state.population(i))
        .sum();
    (1.0 - inside).max(0.0)
}

fn propagate(
    cfg: &ProtocolConfig,
    system: &TwoAtomSystem,
    assembler: &HamiltonianAssembler,
    initial: QuantumState,
) -> Result<Trajectory> {
    let opts = cfg.options();
    let span = cfg.drive.span();
    if system.scheme.has_decay() {
        propagate_lindblad(assembler, &lindblad_operators(system), &initial, span, &opts)
    } else {
        propagate_schrodinger(assembler, &initial, span, &opts)
    }
}

/// Propagates each computational-basis input through the protocol. Inputs
/// run concurrently.
pub fn run_cz(cfg: &ProtocolConfig) -> Result<GateRun> {
    cfg.validate()?;
    let start = Instant::now();
    let system = cfg.system()?;
    let assembler = HamiltonianAssembler::new(&system, cfg.drive)?;
    let pure = !system.scheme.has_decay();
    let results: Vec<Result<(Trajectory, usize)>> = INPUTS
        .par_iter()
        .map(|label| {
            let wrap = |e: Error| Error::Input {
                input: label.to_string(),
                source: Box::new(e),
            };
            let i = system.index_of_label(label).map_err(wrap)?;
            let tr = propagate(cfg, &system, &assembler, QuantumState::basis(system.dim(), i))
                .map_err(wrap)?;
            Ok((tr, i))
        })
        .collect();
    let mut runs = Vec::with_capacity(4);
    for r in results {
        runs.push(r?);
    }
    let reference = if pure {
        let i00 = runs[0].1;
        Some(runs[0].0.final_state.amplitude(i00).expect("pure").arg())
    } else {
        None
    };
    let mut inputs = Vec::with_capacity(4);
    for ((tr, i), label) in runs.into_iter().zip(INPUTS) {
        let st = &tr.final_state;
        let phase = reference.and_then(|r0| {
            let a = st.amplitude(i)?;
            (a.norm() >= crate::dynamics::PHASE_MIN_AMPLITUDE).then(|| wrap_phase(a.arg() - r0))
        });
        inputs.push(InputRun {
            input: label.to_string(),
            return_population: st.population(i),
            leakage: leakage(st, &system),
            phase,
            final_state: Some(tr.final_state.clone()),
            trajectory: Some(tr),
        });
    }
    let mut run = GateRun {
        inputs,
        conditional_phase: None,
        duration_us: cfg.drive.span().1 - cfg.drive.span().0,
        wall_clock_s: 0.0,
        pure,
    };
    run.conditional_phase = cz_conditional_phase(&run);
    run.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(run)
}

/// `wrap(phi11 + phi00 - phi01 - phi10)` to `(-pi, pi]`.
pub fn cz_conditional_phase(run: &GateRun) -> Option<f64> {
    let [p00, p01, p10, p11] = run.phases()?;
    Some(wrap_phase(p11 + p00 - p01 - p10))
}

fn single_qubit(system: &TwoAtomSystem, atom: usize, block: [[C64; 2]; 2]) -> CMatrix {
    let n = system.n_levels();
    let mut op = CMatrix::identity(n, n);
    let i0 = system.scheme.index_of(Level::Zero).expect("0");
    let i1 = system.scheme.index_of(Level::One).expect("1");
    let idx = [i0, i1];
    for r in 0..2 {
        for c in 0..2 {
            op[(idx[r], idx[c])] = block[r][c];
        }
    }
    system.embed(&op, atom).to_dense()
}

/// Hadamard on the qubit levels of one atom, identity elsewhere.
pub fn hadamard_operator(system: &TwoAtomSystem, atom: usize) -> CMatrix {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    single_qubit(system, atom, [[h, h], [h, -h]])
}

/// `diag(1, e^{i phi})` on the qubit levels of one atom.
pub fn phase_operator(system: &TwoAtomSystem, atom: usize, phi: f64) -> CMatrix {
    single_qubit(system, atom, [[ONE, ZERO], [ZERO, C64::from_polar(1.0, phi)]])
}

pub fn ideal_hadamard(state: &QuantumState, system: &TwoAtomSystem, atom: usize) -> QuantumState {
    state.transformed(&hadamard_operator(system, atom))
}

pub fn ideal_phase(state: &QuantumState, system: &TwoAtomSystem, atom: usize, phi: f64) -> QuantumState {
    state.transformed(&phase_operator(system, atom, phi))
}

/// `(P00 + P11)/2 + |<00| rho |11>|`.
pub fn bell_fidelity(state: &QuantumState, system: &TwoAtomSystem) -> Result<f64> {
    let i00 = system.index_of_label("00")?;
    let i11 = system.index_of_label("11")?;
    Ok((state.population(i00) + state.population(i11)) / 2.0 + state.coherence(i00, i11).norm())
}

fn round6<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((x * 1e6).round() / 1e6)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BellScore {
    /// Fidelity after the configured phase correction.
    #[serde(serialize_with = "round6")]
    pub fidelity: f64,
    /// Fidelity with no phase correction.
    #[serde(serialize_with = "round6")]
    pub fidelity_uncorrected: f64,
    /// `1 - fidelity`, full precision.
    pub infidelity: f64,
    pub correction_phase: f64,
    /// `phi01` of the zero-decay calibration run, when one was made.
    pub calibration_phi01: Option<f64>,
    pub p00: f64,
    pub p11: f64,
    pub coherence_00_11: f64,
    pub leakage: f64,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone)]
pub struct BellRun {
    pub score: BellScore,
    pub state: QuantumState,
    pub system: TwoAtomSystem,
}

/// `phi01` from a pure-state run of `|01>` with decay removed.
pub fn calibrate_phi01(cfg: &ProtocolConfig) -> Result<f64> {
    let closed = ProtocolConfig {
        record_points: 0,
        ..cfg.closed()
    };
    let system = closed.system()?;
    let assembler = HamiltonianAssembler::new(&system, closed.drive)?;
    let i01 = system.index_of_label("01")?;
    let tr = propagate(&closed, &system, &assembler, QuantumState::basis(system.dim(), i01))?;
    let a = tr.final_state.amplitude(i01).expect("pure");
    if a.norm() < crate::dynamics::PHASE_MIN_AMPLITUDE {
        return Err(Error::PhaseUndefined {
            label: "01".into(),
            amplitude: a.norm(),
        });
    }
    // |00> is uncoupled, so its phase is 0 and phi01 is the absolute phase.
    Ok(wrap_phase(a.arg()))
}

/// `H (x) H |00>`, CZ pulses, phase correction, Hadamard on one atom, score.
pub fn prepare_bell(cfg: &ProtocolConfig) -> Result<BellRun> {
    cfg.validate()?;
    let start = Instant::now();
    let system = cfg.system()?;
    let assembler = HamiltonianAssembler::new(&system, cfg.drive)?;
    let (correction, calibration) = match cfg.phase_correction {
        PhaseCorrection::Auto => {
            let phi01 = calibrate_phi01(cfg)?;
            (-phi01, Some(phi01))
        }
        PhaseCorrection::Explicit(phi) => (phi, None),
        PhaseCorrection::None => (0.0, None),
    };
    let plus = hadamard_state(&system)?;
    let tr = propagate(cfg, &system, &assembler, plus)?;
    let after = tr.final_state;
    let finish = |phi: f64| -> Result<QuantumState> {
        let mut s = ideal_phase(&after, &system, 0, phi);
        s = ideal_phase(&s, &system, 1, phi);
        Ok(ideal_hadamard(&s, &system, cfg.hadamard_atom))
    };
    let corrected = finish(correction)?;
    let uncorrected = finish(0.0)?;
    let fidelity = bell_fidelity(&corrected, &system)?;
    let i00 = system.index_of_label("00")?;
    let i11 = system.index_of_label("11")?;
    let score = BellScore {
        fidelity,
        fidelity_uncorrected: bell_fidelity(&uncorrected, &system)?,
        infidelity: 1.0 - fidelity,
        correction_phase: correction,
        calibration_phi01: calibration,
        p00: corrected.population(i00),
        p11: corrected.population(i11),
        coherence_00_11: corrected.coherence(i00, i11).norm(),
        leakage: leakage(&corrected, &system),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    Ok(BellRun {
        score,
        state: corrected,
        system,
    })
}

/// `H (x) H |00>` in the system basis.
pub fn hadamard_state(system: &TwoAtomSystem) -> Result<QuantumState> {
    let i00 = system.index_of_label("00")?;
    let s = QuantumState::basis(system.dim(), i00);
    let s = ideal_hadamard(&s, system, 0);
    Ok(ideal_hadamard(&s, system, 1))
}

/// Logical block after the symmetric phase correction `diag(1, e^{i phi})`
/// on both atoms.
pub fn corrected_block(block: &CMatrix, phi: f64) -> CMatrix {
    let p = C64::from_polar(1.0, phi);
    let d = [ONE, p, p, p * p];
    CMatrix::from_fn(4, 4, |r, c| block[(r, c)] * d[r])
}

/// Max-norm distance from `block` to `diag(1, 1, 1, -1)` after removing the
/// best global phase.
pub fn cz_distance(block: &CMatrix) -> f64 {
    let cz = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE]));
    let overlap: C64 = (cz.adjoint() * block).trace();
    let g = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    crate::linalg::max_abs_diff(block, &(cz * g))
}
