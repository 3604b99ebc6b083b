//! Level schemes, drives and two-atom operators.
//!
//! Per-atom basis ordering is fixed to the subsequence of `[0, 1, d, p, s, r]`
//! present in the scheme. Two-atom states are row-major products
//! `control (x) target`; with an infinite blockade the `|rr>` product state is
//! dropped from the basis.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Csr, SparseMatrix, ZERO};
use crate::pulse::{DoubleSequence, PhaseJumpParams, ThreePhotonPulseParams, TwoPhotonPulseParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "d")]
    Dark,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "s")]
    S,
    #[serde(rename = "r")]
    R,
}

impl Level {
    pub const ALL: [Level; 6] = [Level::Zero, Level::One, Level::Dark, Level::P, Level::S, Level::R];

    pub fn label(self) -> &'static str {
        match self {
            Level::Zero => "0",
            Level::One => "1",
            Level::Dark => "d",
            Level::P => "p",
            Level::S => "s",
            Level::R => "r",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        Level::ALL
            .into_iter()
            .find(|l| l.label() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }

    /// Position in the ladder `[0, 1, d, p, s, r]`.
    pub fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    SinglePhoton,
    TwoPhoton,
    ThreePhoton,
}

impl SchemeKind {
    pub fn levels(self) -> Vec<Level> {
        use Level::*;
        match self {
            SchemeKind::SinglePhoton => vec![Zero, One, Dark, R],
            SchemeKind::TwoPhoton => vec![Zero, One, Dark, P, R],
            SchemeKind::ThreePhoton => vec![Zero, One, Dark, P, S, R],
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::SinglePhoton => "single_photon",
            SchemeKind::TwoPhoton => "two_photon",
            SchemeKind::ThreePhoton => "three_photon",
        })
    }
}

/// Spontaneous decay out of one level with branching into lower levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    pub from: Level,
    /// Population decay rate `1/tau`, 1/us.
    pub gamma: f64,
    pub branches: Vec<(Level, f64)>,
}

impl DecayChannel {
    pub fn new(from: Level, gamma: f64, branches: Vec<(Level, f64)>) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be >= 0, got {gamma}")));
        }
        let mut sum = 0.0;
        for &(to, b) in &branches {
            if to.rank() >= from.rank() {
                return Err(Error::param(
                    "branches",
                    format!("{from} -> {to} does not decay to a lower level"),
                ));
            }
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::param("branches", format!("ratio {b} outside [0, 1]")));
            }
            sum += b;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param(
                "branches",
                format!("ratios out of {from} sum to {sum}, expected 1"),
            ));
        }
        Ok(Self { from, gamma, branches })
    }
}

/// Rydberg-state presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomSpecies {
    /// Cs 107p_{3/2}.
    #[serde(rename = "Cs107p")]
    Cs107p,
    /// Rb 113p_{3/2}.
    #[serde(rename = "Rb113p")]
    Rb113p,
}

impl AtomSpecies {
    pub const RYDBERG_LIFETIME_US: f64 = 540.0;

    pub fn rydberg_decay(self) -> DecayChannel {
        let gamma = 1.0 / Self::RYDBERG_LIFETIME_US;
        let (b_q, b_d) = match self {
            AtomSpecies::Cs107p => (1.0 / 16.0, 7.0 / 8.0),
            AtomSpecies::Rb113p => (1.0 / 8.0, 3.0 / 4.0),
        };
        DecayChannel::new(
            Level::R,
            gamma,
            vec![(Level::Zero, b_q), (Level::One, b_q), (Level::Dark, b_d)],
        )
        .expect("preset branching closes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    pub kind: SchemeKind,
    pub levels: Vec<Level>,
    pub decay: Vec<DecayChannel>,
}

impl LevelScheme {
    pub fn new(kind: SchemeKind, decay: Vec<DecayChannel>) -> Result<Self> {
        let levels = kind.levels();
        for ch in &decay {
            if !levels.contains(&ch.from) {
                return Err(Error::param(
                    "decay",
                    format!("level {} not in {kind} scheme", ch.from),
                ));
            }
            if let Some((to, _)) = ch.branches.iter().find(|(to, _)| !levels.contains(to)) {
                return Err(Error::param("decay", format!("level {to} not in {kind} scheme")));
            }
        }
        let mut seen = Vec::new();
        for ch in &decay {
            if seen.contains(&ch.from) {
                return Err(Error::param("decay", format!("duplicate channel from {}", ch.from)));
            }
            seen.push(ch.from);
        }
        Ok(Self { kind, levels, decay })
    }

    pub fn closed(kind: SchemeKind) -> Self {
        Self::new(kind, Vec::new()).expect("no channels")
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn index_of(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }

    pub fn has_decay(&self) -> bool {
        self.decay.iter().any(|c| c.gamma > 0.0)
    }

    /// Same scheme with every decay channel removed.
    pub fn without_decay(&self) -> Self {
        Self {
            kind: self.kind,
            levels: self.levels.clone(),
            decay: Vec::new(),
        }
    }
}

/// Time-dependent laser drive for one atom, identical on both atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drive {
    SinglePhoton(DoubleSequence),
    TwoPhoton(TwoPhotonPulseParams),
    ThreePhoton(ThreePhotonPulseParams),
    /// Constant three-photon drive with a mid-gate phase jump.
    PhaseJump(PhaseJumpParams),
}

/// Instantaneous couplings of the ladder. Steps not used by a scheme are 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Couplings {
    pub step1: C64,
    pub step2: C64,
    pub step3: C64,
    pub detuning_p: f64,
    pub detuning_r: f64,
}

impl Drive {
    pub fn scheme_kind(&self) -> SchemeKind {
        match self {
            Drive::SinglePhoton(_) => SchemeKind::SinglePhoton,
            Drive::TwoPhoton(_) => SchemeKind::TwoPhoton,
            Drive::ThreePhoton(_) | Drive::PhaseJump(_) => SchemeKind::ThreePhoton,
        }
    }

    pub fn span(&self) -> (f64, f64) {
        match self {
            Drive::SinglePhoton(s) => s.span(),
            Drive::TwoPhoton(p) => p.base.span(),
            Drive::ThreePhoton(p) => p.base.span(),
            Drive::PhaseJump(p) => p.span(),
        }
    }

    /// Interior times where the drive is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Drive::SinglePhoton(s) => vec![s.seam()],
            Drive::TwoPhoton(p) => vec![p.base.seam()],
            Drive::ThreePhoton(p) => vec![p.base.seam()],
            Drive::PhaseJump(p) => vec![p.half_time],
        }
    }

    pub fn couplings(&self, t: f64) -> Couplings {
        match self {
            Drive::SinglePhoton(s) => Couplings {
                step1: s.complex_rabi(t),
                detuning_r: s.delta(t),
                ..Default::default()
            },
            Drive::TwoPhoton(p) => {
                let step = p.step_rabi(t);
                Couplings {
                    step1: step,
                    step2: step,
                    detuning_p: p.intermediate_detuning,
                    detuning_r: p.base.delta(t),
                    ..Default::default()
                }
            }
            Drive::ThreePhoton(p) => Couplings {
                step1: p.first_step(t),
                step2: C64::new(p.omega2, 0.0),
                step3: C64::new(p.omega3, 0.0),
                detuning_r: p.base.delta(t),
                ..Default::default()
            },
            Drive::PhaseJump(p) => {
                let (lo, hi) = p.span();
                let on = t >= lo && t <= hi;
                Couplings {
                    step1: p.profile(t),
                    step2: C64::new(p.omega2, 0.0),
                    step3: C64::new(p.omega3, 0.0),
                    detuning_r: if on { p.delta } else { 0.0 },
                    ..Default::default()
                }
            }
        }
    }
}

/// Single-atom Hamiltonian (`hbar = 1`) in the scheme's basis.
pub fn single_atom_hamiltonian(scheme: &LevelScheme, drive: &Drive, t: f64) -> Result<CMatrix> {
    if drive.scheme_kind() != scheme.kind {
        return Err(Error::SchemeMismatch {
            expected: scheme.kind.to_string(),
            got: drive.scheme_kind().to_string(),
        });
    }
    let n = scheme.n_levels();
    let mut h = CMatrix::zeros(n, n);
    fill_single_atom(scheme, &drive.couplings(t), |r, c, v| h[(r, c)] += v);
    Ok(h)
}

/// Writes the nonzero elements of the single-atom Hamiltonian via `put`.
fn fill_single_atom(scheme: &LevelScheme, c: &Couplings, mut put: impl FnMut(usize, usize, C64)) {
    let idx = |l| scheme.index_of(l).expect("level in scheme");
    let mut couple = |lo: usize, hi: usize, omega: C64| {
        let v = omega * 0.5;
        put(hi, lo, v);
        put(lo, hi, v.conj());
    };
    let (one, r) = (idx(Level::One), idx(Level::R));
    match scheme.kind {
        SchemeKind::SinglePhoton => couple(one, r, c.step1),
        SchemeKind::TwoPhoton => {
            let p = idx(Level::P);
            couple(one, p, c.step1);
            couple(p, r, c.step2);
            put(p, p, C64::new(c.detuning_p, 0.0));
        }
        SchemeKind::ThreePhoton => {
            let (p, s) = (idx(Level::P), idx(Level::S));
            couple(one, p, c.step1);
            couple(p, s, c.step2);
            couple(s, r, c.step3);
        }
    }
    put(r, r, C64::new(c.detuning_r, 0.0));
}

/// Diagonal interaction of the doubly excited state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blockade {
    /// Finite shift, rad/us.
    Finite(f64),
    /// `|rr>` removed from the basis.
    Infinite,
}

/// Two atoms sharing a level scheme, with the product basis precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAtomSystem {
    pub scheme: LevelScheme,
    pub blockade: Blockade,
    basis: Vec<(usize, usize)>,
    index: Vec<Option<usize>>,
}

impl TwoAtomSystem {
    pub fn new(scheme: LevelScheme, blockade: Blockade) -> Result<Self> {
        if let Blockade::Finite(b) = blockade {
            if !b.is_finite() {
                return Err(Error::param("blockade", "finite blockade must be a finite number"));
            }
        }
        let n = scheme.n_levels();
        let r = scheme.index_of(Level::R).expect("every scheme has r");
        let mut basis = Vec::with_capacity(n * n);
        let mut index = vec![None; n * n];
        for a in 0..n {
            for b in 0..n {
                if blockade == Blockade::Infinite && a == r && b == r {
                    continue;
                }
                index[a * n + b] = Some(basis.len());
                basis.push((a, b));
            }
        }
        Ok(Self {
            scheme,
            blockade,
            basis,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n_levels(&self) -> usize {
        self.scheme.n_levels()
    }

    /// Basis position of the product state `|a b>` (scheme indices).
    pub fn product_index(&self, a: usize, b: usize) -> Option<usize> {
        self.index[a * self.n_levels() + b]
    }

    pub fn state_index(&self, control: Level, target: Level) -> Option<usize> {
        let a = self.scheme.index_of(control)?;
        let b = self.scheme.index_of(target)?;
        self.product_index(a, b)
    }

    /// Basis position of a two-character label such as `"1r"`.
    pub fn index_of_label(&self, label: &str) -> Result<usize> {
        let mut chars = label.chars();
        let (Some(a), Some(b), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::UnknownLabel(label.to_string()));
        };
        let a = Level::from_label(&a.to_string())?;
        let b = Level::from_label(&b.to_string())?;
        self.state_index(a, b)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn label(&self, i: usize) -> String {
        let (a, b) = self.basis[i];
        format!("{}{}", self.scheme.levels[a], self.scheme.levels[b])
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dim()).map(|i| self.label(i)).collect()
    }

    pub fn basis_pairs(&self) -> &[(usize, usize)] {
        &self.basis
    }

    /// Dense two-atom Hamiltonian `H_c (x) I + I (x) H_t + B |rr><rr|`.
    pub fn hamiltonian(&self, drive: &Drive, t: f64) -> Result<CMatrix> {
        let assembler = HamiltonianAssembler::new(self, *drive)?;
        let mut h = assembler.pattern();
        assembler.fill(t, &mut h);
        Ok(h.to_dense())
    }

    /// Atom-exchange permutation on this basis.
    pub fn swap_operator(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (i, &(a, b)) in self.basis.iter().enumerate() {
            let j = self.product_index(b, a).expect("swap stays in basis");
            m[(j, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Embeds a single-atom operator on atom 0 (control) or 1 (target),
    /// dropping matrix elements that leave the truncated basis.
    pub fn embed(&self, op: &CMatrix, atom: usize) -> SparseMatrix {
        let mut out = SparseMatrix::zeros(self.dim());
        let n = self.n_levels();
        for (col, &(a, b)) in self.basis.iter().enumerate() {
            let src = if atom == 0 { a } else { b };
            for dst in 0..n {
                let v = op[(dst, src)];
                if v == ZERO {
                    continue;
                }
                let (na, nb) = if atom == 0 { (dst, b) } else { (a, dst) };
                if let Some(row) = self.product_index(na, nb) {
                    out.add(row, col, v);
                }
            }
        }
        out
    }
}

/// Jump operators `sqrt(b_jk gamma_k) |j><k|` on each atom.
pub fn lindblad_operators(system: &TwoAtomSystem) -> Vec<SparseMatrix> {
    let n = system.n_levels();
    let mut out = Vec::new();
    for ch in &system.scheme.decay {
        if ch.gamma == 0.0 {
            continue;
        }
        let k = system.scheme.index_of(ch.from).expect("validated");
        for &(to, b) in &ch.branches {
            if b == 0.0 {
                continue;
            }
            let j = system.scheme.index_of(to).expect("validated");
            let mut single = CMatrix::zeros(n, n);
            single[(j, k)] = C64::new((b * ch.gamma).sqrt(), 0.0);
            for atom in 0..2 {
                out.push(system.embed(&single, atom));
            }
        }
    }
    out
}

/// Effective blockaded two-level Hamiltonian over
/// `{|11>, (|1r> + |r1>)/sqrt 2}` for a single-photon drive.
pub fn effective_blockaded_two_level(seq: &DoubleSequence, t: f64) -> CMatrix {
    let omega = seq.complex_rabi(t);
    let c = omega * (std::f64::consts::SQRT_2 / 2.0);
    let mut h = CMatrix::zeros(2, 2);
    h[(1, 0)] = c;
    h[(0, 1)] = c.conj();
    h[(1, 1)] = C64::new(seq.delta(t), 0.0);
    h
}

/// Fills two-atom Hamiltonian values into a fixed CSR pattern.
#[derive(Debug, Clone)]
pub struct HamiltonianAssembler {
    system: TwoAtomSystem,
    drive: Drive,
    pattern: Csr,
    /// `(slot, h1 row, h1 col)` per single-atom contribution.
    terms: Vec<(usize, usize, usize)>,
    /// Time-independent diagonal part (blockade shift).
    constant: Vec<(usize, C64)>,
}

impl HamiltonianAssembler {
    pub fn new(system: &TwoAtomSystem, drive: Drive) -> Result<Self> {
        if drive.scheme_kind() != system.scheme.kind {
            return Err(Error::SchemeMismatch {
                expected: system.scheme.kind.to_string(),
                got: drive.scheme_kind().to_string(),
            });
        }
        let n = system.n_levels();
        // Single-atom structural nonzeros, from couplings with every step on.
        let probe = Couplings {
            step1: C64::new(1.0, 0.0),
            step2: C64::new(1.0, 0.0),
            step3: C64::new(1.0, 0.0),
            detuning_p: 1.0,
            detuning_r: 1.0,
        };
        let mut single = Vec::new();
        fill_single_atom(&system.scheme, &probe, |r, c, _| single.push((r, c)));
        // Keep the diagonal present even when undriven.
        for i in 0..n {
            if !single.contains(&(i, i)) {
                single.push((i, i));
            }
        }

        let mut pairs = Vec::new();
        let mut raw_terms = Vec::new();
        for (col, &(a, b)) in system.basis.iter().enumerate() {
            for &(dst, src) in &single {
                if src == a {
                    if let Some(row) = system.product_index(dst, b) {
                        pairs.push((row, col));
                        raw_terms.push((dst, src));
                    }
                }
                if src == b {
                    if let Some(row) = system.product_index(a, dst) {
                        pairs.push((row, col));
                        raw_terms.push((dst, src));
                    }
                }
            }
        }
        let mut constant = Vec::new();
        let r = system.scheme.index_of(Level::R).expect("r");
        if let Blockade::Finite(bshift) = system.blockade {
            let rr = system.product_index(r, r).expect("rr present for finite blockade");
            pairs.push((rr, rr));
            constant.push((pairs.len() - 1, C64::new(bshift, 0.0)));
        }
        let (pattern, slots) = Csr::from_pattern(system.dim(), &pairs);
        let terms = raw_terms
            .iter()
            .zip(&slots)
            .map(|(&(dst, src), &slot)| (slot, dst, src))
            .collect();
        let constant = constant.into_iter().map(|(i, v)| (slots[i], v)).collect();
        Ok(Self {
            system: system.clone(),
            drive,
            pattern,
            terms,
            constant,
        })
    }

    pub fn system(&self) -> &TwoAtomSystem {
        &self.system
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    /// Empty matrix with the assembler's sparsity pattern.
    pub fn pattern(&self) -> Csr {
        self.pattern.clone()
    }

    /// Writes `H(t)` into `out`, which must come from [`pattern`](Self::pattern).
    pub fn fill(&self, t: f64, out: &mut Csr) {
        let n = self.system.n_levels();
        let mut h1 = [ZERO; 36];
        fill_single_atom(&self.system.scheme, &self.drive.couplings(t), |r, c, v| {
            h1[r * n + c] += v
        });
        out.vals.iter_mut().for_each(|v| *v = ZERO);
        for &(slot, dst, src) in &self.terms {
            out.vals[slot] += h1[dst * n + src];
        }
        for &(slot, v) in &self.constant {
            out.vals[slot] += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::units::{ghz, mhz};

    fn fig2_drive() -> Drive {
        Drive::SinglePhoton(DoubleSequence::new(mhz(20.0), mhz(10.0), 0.05, 1.0).unwrap())
    }

    #[test]
    fn single_photon_edge_is_zero() {
        let s = LevelScheme::closed(SchemeKind::SinglePhoton);
        for t in [-0.05, 0.0, 0.05] {
            let h = single_atom_hamiltonian(&s, &fig2_drive(), t).unwrap();
            assert!(h.iter().all(|v| *v == ZERO));
        }
    }

    #[test]
    fn scheme_mismatch_rejected() {
        let s = LevelScheme::closed(SchemeKind::TwoPhoton);
        assert!(matches!(
            single_atom_hamiltonian(&s, &fig2_drive(), 0.0),
            Err(Error::SchemeMismatch { .. })
        ));
    }

    #[test]
    fn two_photon_intermediate_diagonal() {
        let base = DoubleSequence::new(mhz(20.0), mhz(10.0), 0.05, 1.0).unwrap();
        let drive = Drive::TwoPhoton(TwoPhotonPulseParams::new(base, -ghz(4.0)).unwrap());
        let s = LevelScheme::closed(SchemeKind::TwoPhoton);
        let h = single_atom_hamiltonian(&s, &drive, -0.02).unwrap();
        let p = s.index_of(Level::P).unwrap();
        assert!((h[(p, p)].re / (2.0 * std::f64::consts::PI) + 4000.0).abs() < 1e-9);
    }

    #[test]
    fn uncoupled_levels_stay_zero() {
        for (kind, drive) in [
            (SchemeKind::SinglePhoton, fig2_drive()),
            (
                SchemeKind::ThreePhoton,
                Drive::ThreePhoton(
                    ThreePhotonPulseParams::new(
                        DoubleSequence::new(mhz(10.0), mhz(5.0), 0.1, 1.0).unwrap(),
                        ghz(2.0),
                        mhz(100.0),
                    )
                    .unwrap(),
                ),
            ),
        ] {
            let s = LevelScheme::closed(kind);
            let h = single_atom_hamiltonian(&s, &drive, -0.013).unwrap();
            for l in [Level::Zero, Level::Dark] {
                let i = s.index_of(l).unwrap();
                for j in 0..s.n_levels() {
                    assert_eq!(h[(i, j)], ZERO);
                    assert_eq!(h[(j, i)], ZERO);
                }
            }
        }
    }

    #[test]
    fn rr_diagonal_accounting() {
        let sys = TwoAtomSystem::new(
            LevelScheme::closed(SchemeKind::SinglePhoton),
            Blockade::Finite(ghz(4.0)),
        )
        .unwrap();
        let drive = fig2_drive();
        let t = -0.011;
        let h = sys.hamiltonian(&drive, t).unwrap();
        let rr = sys.index_of_label("rr").unwrap();
        let delta = match drive {
            Drive::SinglePhoton(s) => s.delta(t),
            _ => unreachable!(),
        };
        assert!((h[(rr, rr)].re - (ghz(4.0) + 2.0 * delta)).abs() < 1e-9);
    }

    #[test]
    fn infinite_blockade_drops_rr() {
        let sys = TwoAtomSystem::new(LevelScheme::closed(SchemeKind::ThreePhoton), Blockade::Infinite)
            .unwrap();
        assert_eq!(sys.dim(), 35);
        assert!(sys.index_of_label("rr").is_err());
        assert_eq!(sys.label(sys.index_of_label("1r").unwrap()), "1r");
    }

    #[test]
    fn blockaded_pair_coupling_is_enhanced() {
        let sys = TwoAtomSystem::new(LevelScheme::closed(SchemeKind::SinglePhoton), Blockade::Infinite)
            .unwrap();
        let drive = fig2_drive();
        let seq = match drive {
            Drive::SinglePhoton(s) => s,
            _ => unreachable!(),
        };
        let t = -0.02;
        let h = sys.hamiltonian(&drive, t).unwrap();
        let i11 = sys.index_of_label("11").unwrap();
        let i1r = sys.index_of_label("1r").unwrap();
        let ir1 = sys.index_of_label("r1").unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let coupling = (h[(i1r, i11)] + h[(ir1, i11)]) * s;
        let eff = effective_blockaded_two_level(&seq, t);
        assert!((coupling - eff[(1, 0)]).norm() < 1e-12);
        assert!((eff[(1, 0)].re - std::f64::consts::SQRT_2 * seq.omega0(t) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_sum_spectrum() {
        let scheme = LevelScheme::closed(SchemeKind::SinglePhoton);
        let sys = TwoAtomSystem::new(scheme.clone(), Blockade::Finite(0.0)).unwrap();
        let drive = fig2_drive();
        let t = -0.018;
        let h1 = single_atom_hamiltonian(&scheme, &drive, t).unwrap();
        let e1 = h1.symmetric_eigenvalues();
        let mut expected: Vec<f64> = e1.iter().flat_map(|a| e1.iter().map(move |b| a + b)).collect();
        let mut got: Vec<f64> = sys.hamiltonian(&drive, t).unwrap().symmetric_eigenvalues().iter().cloned().collect();
        expected.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        for (a, b) in expected.iter().zip(&got) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cs_jump_operators() {
        let scheme =
            LevelScheme::new(SchemeKind::SinglePhoton, vec![AtomSpecies::Cs107p.rydberg_decay()]).unwrap();
        let sys = TwoAtomSystem::new(scheme, Blockade::Finite(ghz(4.0))).unwrap();
        let ls = lindblad_operators(&sys);
        assert_eq!(ls.len(), 6);
        let r = sys.scheme.index_of(Level::R).unwrap();
        let d = sys.scheme.index_of(Level::Dark).unwrap();
        let col = sys.product_index(r, 0).unwrap();
        let row = sys.product_index(d, 0).unwrap();
        let found = ls
            .iter()
            .map(|l| l.get(row, col).norm_sqr())
            .fold(0.0, f64::max);
        assert!((found - 7.0 / 8.0 / 540.0).abs() < 1e-15);

        let closed = TwoAtomSystem::new(LevelScheme::closed(SchemeKind::SinglePhoton), Blockade::Infinite)
            .unwrap();
        assert!(lindblad_operators(&closed).is_empty());
    }

    #[test]
    fn branching_must_close() {
        assert!(DecayChannel::new(Level::R, 1.0, vec![(Level::Zero, 0.5)]).is_err());
        assert!(DecayChannel::new(Level::P, 1.0, vec![(Level::R, 1.0)]).is_err());
        assert!(DecayChannel::new(Level::R, -1.0, vec![(Level::Zero, 1.0)]).is_err());
        for sp in [AtomSpecies::Cs107p, AtomSpecies::Rb113p] {
            let s: f64 = sp.rydberg_decay().branches.iter().map(|b| b.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_commutes_with_symmetric_drive() {
        let sys = TwoAtomSystem::new(LevelScheme::closed(SchemeKind::SinglePhoton), Blockade::Finite(ghz(1.0)))
            .unwrap();
        let h = sys.hamiltonian(&fig2_drive(), -0.03).unwrap();
        let sw = sys.swap_operator();
        assert!(max_abs_diff(&(&h * &sw), &(&sw * &h)) < 1e-12);
    }
}
