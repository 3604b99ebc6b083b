//! Pure-state and density-matrix propagation under a time-dependent
//! Hamiltonian, with optional Lindblad dissipation.
//!
//! The coherent part is `d psi/dt = s i H psi` and
//! `d rho/dt = s i [H, rho] + sum_k (L rho L^+ - {L^+ L, rho}/2)`, where the
//! sign `s` is selected by [`MasterSign`]. The default matches the sign
//! convention under which the counterdiabatic term cancels the
//! nonadiabatic coupling of the pulse family in [`crate::pulse`].

mod ode;
mod tableau;

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use ode::{IntegrationStats, Integrator, Tolerance};

use crate::error::{Error, Result};
use crate::linalg::{from_row_major, CMatrix, Csr, SparseMatrix, ZERO};
use crate::model::{single_atom_hamiltonian, Drive, HamiltonianAssembler, LevelScheme, TwoAtomSystem};

/// Sign of the coherent generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasterSign {
    /// `d rho/dt = +i [H, rho]`.
    #[default]
    PlusI,
    /// `d rho/dt = -i [H, rho]`.
    MinusI,
}

impl MasterSign {
    fn factor(self) -> C64 {
        match self {
            MasterSign::PlusI => C64::new(0.0, 1.0),
            MasterSign::MinusI => C64::new(0.0, -1.0),
        }
    }
}

/// Source of `H(t)` values on a fixed sparsity pattern.
pub trait Generator: Send + Sync {
    fn dim(&self) -> usize;
    /// Matrix with the right pattern; values are overwritten by `fill`.
    fn pattern(&self) -> Csr;
    fn fill(&self, t: f64, out: &mut Csr);
    /// Interior times where `H` jumps; integration restarts there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl Generator for HamiltonianAssembler {
    fn dim(&self) -> usize {
        self.system().dim()
    }
    fn pattern(&self) -> Csr {
        HamiltonianAssembler::pattern(self)
    }
    fn fill(&self, t: f64, out: &mut Csr) {
        HamiltonianAssembler::fill(self, t, out)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.drive().breakpoints()
    }
}

type DenseFn = dyn Fn(f64) -> CMatrix + Send + Sync;

/// Generator backed by a closure returning a dense matrix.
pub struct DenseGenerator {
    dim: usize,
    f: Box<DenseFn>,
    breaks: Vec<f64>,
}

impl DenseGenerator {
    pub fn new(dim: usize, f: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        Self {
            dim,
            f: Box::new(f),
            breaks: Vec::new(),
        }
    }

    pub fn with_breakpoints(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    /// One atom of `scheme` under `drive`.
    pub fn single_atom(scheme: LevelScheme, drive: Drive) -> Result<Self> {
        single_atom_hamiltonian(&scheme, &drive, drive.span().0)?;
        let n = scheme.n_levels();
        let breaks = drive.breakpoints();
        Ok(Self::new(n, move |t| {
            single_atom_hamiltonian(&scheme, &drive, t).expect("scheme checked")
        })
        .with_breakpoints(breaks))
    }
}

impl Generator for DenseGenerator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn pattern(&self) -> Csr {
        Csr::dense_pattern(self.dim)
    }
    fn fill(&self, t: f64, out: &mut Csr) {
        let m = (self.f)(t);
        let n = self.dim;
        for r in 0..n {
            for k in out.row_ptr[r]..out.row_ptr[r + 1] {
                out.vals[k] = m[(r, out.cols[k])];
            }
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Pure state vector or row-major density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantumState {
    Pure(Vec<C64>),
    Density { dim: usize, data: Vec<C64> },
}

impl QuantumState {
    /// Normalized pure state; rejects zero-norm input.
    pub fn pure(v: Vec<C64>) -> Result<Self> {
        let norm = v.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::param("state", "pure state must have finite nonzero norm"));
        }
        Ok(Self::Pure(v.into_iter().map(|x| x / norm).collect()))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[index] = C64::new(1.0, 0.0);
        Self::Pure(v)
    }

    /// Density matrix from a dense matrix; must be Hermitian, unit trace
    /// and positive semidefinite to within `1e-9`.
    pub fn density(m: &CMatrix) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::param("state", "density matrix must be square"));
        }
        if crate::linalg::max_abs_diff(m, &m.adjoint()) > 1e-9 {
            return Err(Error::param("state", "density matrix must be Hermitian"));
        }
        let tr: f64 = (0..n).map(|i| m[(i, i)].re).sum();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::param("state", format!("density trace is {tr}")));
        }
        if crate::linalg::min_eigenvalue(m) < -1e-9 {
            return Err(Error::param("state", "density matrix is not positive"));
        }
        Ok(Self::Density {
            dim: n,
            data: crate::linalg::to_row_major(m),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Density { dim, .. } => *dim,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure(_))
    }

    pub fn amplitude(&self, i: usize) -> Option<C64> {
        match self {
            Self::Pure(v) => Some(v[i]),
            Self::Density { .. } => None,
        }
    }

    pub fn population(&self, i: usize) -> f64 {
        match self {
            Self::Pure(v) => v[i].norm_sqr(),
            Self::Density { dim, data } => data[i * dim + i].re,
        }
    }

    /// `<i| rho |j>`.
    pub fn coherence(&self, i: usize, j: usize) -> C64 {
        match self {
            Self::Pure(v) => v[i] * v[j].conj(),
            Self::Density { dim, data } => data[i * dim + j],
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }

    pub fn to_density(&self) -> CMatrix {
        match self {
            Self::Pure(v) => {
                let n = v.len();
                CMatrix::from_fn(n, n, |r, c| v[r] * v[c].conj())
            }
            Self::Density { dim, data } => from_row_major(*dim, data),
        }
    }

    /// Applies a unitary (or any operator) `U`: `psi -> U psi`, `rho -> U rho U^+`.
    pub fn transformed(&self, u: &CMatrix) -> Self {
        match self {
            Self::Pure(v) => {
                let x = nalgebra::DVector::from_column_slice(v);
                Self::Pure((u * x).iter().cloned().collect())
            }
            Self::Density { dim, .. } => {
                let rho = self.to_density();
                Self::Density {
                    dim: *dim,
                    data: crate::linalg::to_row_major(&(u * rho * u.adjoint())),
                }
            }
        }
    }

    fn raw(&self) -> &[C64] {
        match self {
            Self::Pure(v) => v,
            Self::Density { data, .. } => data,
        }
    }

    fn with_raw(&self, raw: Vec<C64>) -> Self {
        match self {
            Self::Pure(_) => Self::Pure(raw),
            Self::Density { dim, .. } => Self::Density { dim: *dim, data: raw },
        }
    }
}

/// Expectation of the projector onto a basis label of `system`. A label of
/// the form `"1r+r1"` projects onto the normalized symmetric combination.
pub fn population(state: &QuantumState, system: &TwoAtomSystem, label: &str) -> Result<f64> {
    let idx: Vec<usize> = label
        .split('+')
        .map(|l| system.index_of_label(l.trim()))
        .collect::<Result<_>>()?;
    if idx.len() == 1 {
        return Ok(state.population(idx[0]));
    }
    let w = 1.0 / idx.len() as f64;
    let mut acc = ZERO;
    for &i in &idx {
        for &j in &idx {
            acc += state.coherence(i, j);
        }
    }
    Ok(acc.re * w)
}

/// `<a| rho |b>` by labels.
pub fn coherence(state: &QuantumState, system: &TwoAtomSystem, a: &str, b: &str) -> Result<C64> {
    Ok(state.coherence(system.index_of_label(a)?, system.index_of_label(b)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub tol: Tolerance,
    pub sign: MasterSign,
    /// Sorted times at which populations (and states) are recorded.
    pub record: Vec<f64>,
    /// Keep full density matrices at record times (pure states always kept).
    pub keep_states: bool,
    /// Abort when `|tr rho - 1|` exceeds this.
    pub trace_limit: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            sign: MasterSign::default(),
            record: Vec::new(),
            keep_states: false,
            trace_limit: 1e-6,
        }
    }
}

impl PropagationOptions {
    pub fn with_record(mut self, record: Vec<f64>) -> Self {
        self.record = record;
        self
    }
}

/// `n` evenly spaced times covering `[t0, t1]` inclusive.
pub fn uniform_grid(span: (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![span.1],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    span.1
                } else {
                    (span.0 + (span.1 - span.0) * k as f64 / (n - 1) as f64).min(span.1)
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `populations[k][i]` is the population of basis state `i` at `times[k]`.
    pub populations: Vec<Vec<f64>>,
    /// States at `times`; empty for density runs without `keep_states`.
    pub states: Vec<QuantumState>,
    pub final_state: QuantumState,
    pub stats: IntegrationStats,
}

impl Trajectory {
    /// Population series of basis state `i`.
    pub fn series(&self, i: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[i]).collect()
    }
}

fn segments(span: (f64, f64), breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > span.0 && b < span.1)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = span.0;
    for c in cuts {
        out.push((lo, c));
        lo = c;
    }
    out.push((lo, span.1));
    out
}

fn check_span(span: (f64, f64), record: &[f64]) -> Result<()> {
    if !(span.0.is_finite() && span.1.is_finite() && span.1 >= span.0) {
        return Err(Error::param("span", "need finite t0 <= t1"));
    }
    if record.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("record", "record times must be sorted"));
    }
    if record.iter().any(|&t| t < span.0 || t > span.1) {
        return Err(Error::param("record", "record times must lie inside the span"));
    }
    Ok(())
}

fn run<F, S>(
    gen: &dyn Generator,
    mut rhs: F,
    initial: &QuantumState,
    span: (f64, f64),
    opts: &PropagationOptions,
    mut on_step: S,
) -> Result<Trajectory>
where
    F: FnMut(&Csr, &[C64], &mut [C64]),
    S: FnMut(f64, &[C64]) -> Result<()>,
{
    check_span(span, &opts.record)?;
    let integ = Integrator::new(opts.tol);
    let mut h = gen.pattern();
    let mut y = initial.raw().to_vec();
    let mut times = Vec::with_capacity(opts.record.len());
    let mut populations = Vec::with_capacity(opts.record.len());
    let mut states = Vec::new();
    let keep = initial.is_pure() || opts.keep_states;
    let mut stats = IntegrationStats::default();
    let mut consumed = 0;
    for (lo, hi) in segments(span, &gen.breakpoints()) {
        let end = consumed + opts.record[consumed..].partition_point(|&t| t <= hi);
        let rec = &opts.record[consumed..end];
        let s = integ.integrate(
            |t, y, dy| {
                gen.fill(t, &mut h);
                rhs(&h, y, dy)
            },
            lo,
            hi,
            &mut y,
            rec,
            |t, y| {
                let st = initial.with_raw(y.to_vec());
                times.push(t);
                populations.push(st.populations());
                if keep {
                    states.push(st);
                }
            },
            &mut on_step,
        )?;
        stats.merge(s);
        consumed = end;
    }
    Ok(Trajectory {
        times,
        populations,
        states,
        final_state: initial.with_raw(y),
        stats,
    })
}

/// Propagates a pure state. Fails if the norm drifts by more than
/// `opts.trace_limit`.
pub fn propagate_schrodinger(
    gen: &dyn Generator,
    psi0: &QuantumState,
    span: (f64, f64),
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    let QuantumState::Pure(v) = psi0 else {
        return Err(Error::param("state", "Schrodinger propagation needs a pure state"));
    };
    if v.len() != gen.dim() {
        return Err(Error::param("state", "dimension does not match the Hamiltonian"));
    }
    let s = opts.sign.factor();
    let limit = opts.trace_limit;
    run(
        gen,
        |h, y, dy| {
            h.apply(y, dy);
            dy.iter_mut().for_each(|x| *x *= s);
        },
        psi0,
        span,
        opts,
        |t, y| {
            let norm: f64 = y.iter().map(C64::norm_sqr).sum();
            if (norm - 1.0).abs() > limit {
                return Err(Error::TraceDrift { t, trace: norm });
            }
            Ok(())
        },
    )
}

/// Propagates a density matrix under the Lindblad equation with the given
/// jump operators. Fails if the trace drifts by more than `opts.trace_limit`.
pub fn propagate_lindblad(
    gen: &dyn Generator,
    jumps: &[SparseMatrix],
    rho0: &QuantumState,
    span: (f64, f64),
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    let rho0 = match rho0 {
        QuantumState::Pure(_) => QuantumState::Density {
            dim: rho0.dim(),
            data: crate::linalg::to_row_major(&rho0.to_density()),
        },
        d => d.clone(),
    };
    let n = gen.dim();
    if rho0.dim() != n || jumps.iter().any(|l| l.dim() != n) {
        return Err(Error::param("state", "dimension does not match the Hamiltonian"));
    }
    let mut k = SparseMatrix::zeros(n);
    for l in jumps {
        let ll = l.adjoint().mul(l);
        for (r, c, v) in ll.entries() {
            k.add(r, c, v);
        }
    }
    let k = Csr::from_sparse(&k);
    let jumps: Vec<Csr> = jumps.iter().map(Csr::from_sparse).collect();
    let s = opts.sign.factor();
    let mut a_rho = vec![ZERO; n * n];
    let mut tmp = vec![ZERO; n * n];
    let limit = opts.trace_limit;
    run(
        gen,
        |h, rho, drho| {
            h.apply_left(rho, &mut a_rho);
            k.apply_left(rho, &mut tmp);
            for (a, t) in a_rho.iter_mut().zip(&tmp) {
                *a = *a * s - t * 0.5;
            }
            for r in 0..n {
                for c in 0..n {
                    drho[r * n + c] = a_rho[r * n + c] + a_rho[c * n + r].conj();
                }
            }
            for l in &jumps {
                l.apply_left(rho, &mut tmp);
                // drho += (L rho) L^+
                for b in 0..n {
                    for idx in l.row_ptr[b]..l.row_ptr[b + 1] {
                        let j = l.cols[idx];
                        let v = l.vals[idx].conj();
                        for a in 0..n {
                            drho[a * n + b] += tmp[a * n + j] * v;
                        }
                    }
                }
            }
        },
        &rho0,
        span,
        opts,
        |t, y| {
            let tr: f64 = (0..n).map(|i| y[i * n + i].re).sum();
            if (tr - 1.0).abs() > limit {
                return Err(Error::TraceDrift { t, trace: tr });
            }
            Ok(())
        },
    )
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Phase picked up by one basis amplitude over a pure-state trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccumulatedPhase {
    pub phase: f64,
    /// Smallest amplitude seen on the record grid.
    pub min_amplitude: f64,
    /// True when the amplitude came too close to zero to unwrap by
    /// continuity; `phase` is then the wrapped endpoint difference.
    pub endpoint_only: bool,
}

/// Threshold below which unwrapping by continuity is not attempted.
pub const UNWRAP_MIN_AMPLITUDE: f64 = 1e-3;
/// Threshold below which the endpoint phase is undefined.
pub const PHASE_MIN_AMPLITUDE: f64 = 1e-6;

/// `arg psi_i(t_end) - arg psi_i(t_start)` over the recorded times,
/// unwrapped by continuity when possible.
pub fn accumulated_phase(traj: &Trajectory, index: usize, label: &str) -> Result<AccumulatedPhase> {
    let amps: Vec<C64> = traj
        .states
        .iter()
        .map(|s| s.amplitude(index))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::param("trajectory", "phase needs a pure-state trajectory"))?;
    let (Some(first), Some(last)) = (amps.first(), amps.last()) else {
        return Err(Error::param("trajectory", "phase needs recorded states"));
    };
    for a in [first, last] {
        if a.norm() < PHASE_MIN_AMPLITUDE {
            return Err(Error::PhaseUndefined {
                label: label.to_string(),
                amplitude: a.norm(),
            });
        }
    }
    let min_amplitude = amps.iter().map(|a| a.norm()).fold(f64::INFINITY, f64::min);
    if min_amplitude < UNWRAP_MIN_AMPLITUDE {
        return Ok(AccumulatedPhase {
            phase: wrap_phase(last.arg() - first.arg()),
            min_amplitude,
            endpoint_only: true,
        });
    }
    let unwrapped = unwrap(&amps.iter().map(|a| a.arg()).collect::<Vec<_>>());
    Ok(AccumulatedPhase {
        phase: unwrapped.last().unwrap() - unwrapped[0],
        min_amplitude,
        endpoint_only: false,
    })
}

/// Removes `2 pi` jumps between consecutive samples.
pub fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (k, &p) in phases.iter().enumerate() {
        if k > 0 {
            let d = p - phases[k - 1];
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rabi(omega: f64, delta: f64) -> DenseGenerator {
        DenseGenerator::new(2, move |_| {
            let mut h = CMatrix::zeros(2, 2);
            h[(1, 0)] = C64::new(omega / 2.0, 0.0);
            h[(0, 1)] = C64::new(omega / 2.0, 0.0);
            h[(1, 1)] = C64::new(delta, 0.0);
            h
        })
    }

    #[test]
    fn resonant_rabi_matches_closed_form() {
        let omega = 12.0;
        let grid = uniform_grid((0.0, 1.0), 51);
        let opts = PropagationOptions::default().with_record(grid.clone());
        let tr = propagate_schrodinger(&rabi(omega, 0.0), &QuantumState::basis(2, 0), (0.0, 1.0), &opts)
            .unwrap();
        for (t, p) in grid.iter().zip(tr.series(1)) {
            assert!((p - (omega * t / 2.0).sin().powi(2)).abs() < 1e-7, "t={t}");
        }
        for sign in [MasterSign::PlusI, MasterSign::MinusI] {
            let opts = PropagationOptions { sign, ..Default::default() };
            let tr = propagate_schrodinger(&rabi(omega, 0.0), &QuantumState::basis(2, 0), (0.0, 1.0), &opts)
                .unwrap();
            assert!((tr.final_state.population(1) - (omega / 2.0).sin().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn detuned_rabi_matches_closed_form() {
        let (omega, delta): (f64, f64) = (10.0, 7.0);
        let w = (omega * omega + delta * delta).sqrt();
        let tr = propagate_schrodinger(
            &rabi(omega, delta),
            &QuantumState::basis(2, 0),
            (0.0, 0.8),
            &PropagationOptions::default(),
        )
        .unwrap();
        let expect = (omega / w).powi(2) * (w * 0.8 / 2.0).sin().powi(2);
        assert!((tr.final_state.population(1) - expect).abs() < 1e-9);
    }

    #[test]
    fn sign_conventions_are_complex_conjugates() {
        let gen = rabi(9.0, 4.0);
        let run = |sign| {
            let opts = PropagationOptions { sign, ..Default::default() };
            propagate_schrodinger(&gen, &QuantumState::basis(2, 0), (0.0, 0.6), &opts)
                .unwrap()
                .final_state
        };
        let a = run(MasterSign::PlusI);
        let b = run(MasterSign::MinusI);
        for i in 0..2 {
            assert!((a.amplitude(i).unwrap() - b.amplitude(i).unwrap().conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn closed_lindblad_matches_pure() {
        let gen = rabi(9.0, 4.0);
        let opts = PropagationOptions::default();
        let psi = propagate_schrodinger(&gen, &QuantumState::basis(2, 0), (0.0, 0.6), &opts).unwrap();
        let rho = propagate_lindblad(&gen, &[], &QuantumState::basis(2, 0), (0.0, 0.6), &opts).unwrap();
        let diff = crate::linalg::max_abs_diff(&psi.final_state.to_density(), &rho.final_state.to_density());
        assert!(diff < 1e-9);
    }

    #[test]
    fn spontaneous_decay_is_exponential() {
        let gamma: f64 = 2.5;
        let gen = DenseGenerator::new(2, |_| CMatrix::zeros(2, 2));
        let mut l = SparseMatrix::zeros(2);
        l.add(0, 1, C64::new(gamma.sqrt(), 0.0));
        let grid = uniform_grid((0.0, 1.0), 11);
        let opts = PropagationOptions::default().with_record(grid.clone());
        let tr = propagate_lindblad(&gen, &[l], &QuantumState::basis(2, 1), (0.0, 1.0), &opts).unwrap();
        for (t, p) in grid.iter().zip(tr.series(1)) {
            assert!((p - (-gamma * t).exp()).abs() < 1e-8);
        }
        assert!((tr.final_state.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dephasing_of_coherence() {
        // L = sqrt(g) |1><1| damps rho_01 at rate g/2.
        let g: f64 = 3.0;
        let gen = DenseGenerator::new(2, |_| CMatrix::zeros(2, 2));
        let mut l = SparseMatrix::zeros(2);
        l.add(1, 1, C64::new(g.sqrt(), 0.0));
        let plus = QuantumState::pure(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let tr = propagate_lindblad(&gen, &[l], &plus, (0.0, 1.0), &PropagationOptions::default()).unwrap();
        assert!((tr.final_state.coherence(0, 1).re - 0.5 * (-g / 2.0).exp()).abs() < 1e-9);
    }

    #[test]
    fn breakpoints_split_integration() {
        let gen = DenseGenerator::new(2, |t| {
            let mut h = CMatrix::zeros(2, 2);
            let w = if t < 0.5 { 6.0 } else { 0.0 };
            h[(1, 0)] = C64::new(w / 2.0, 0.0);
            h[(0, 1)] = C64::new(w / 2.0, 0.0);
            h
        })
        .with_breakpoints(vec![0.5]);
        let grid = uniform_grid((0.0, 1.0), 5);
        let opts = PropagationOptions::default().with_record(grid);
        let tr = propagate_schrodinger(&gen, &QuantumState::basis(2, 0), (0.0, 1.0), &opts).unwrap();
        assert_eq!(tr.times.len(), 5);
        assert!((tr.final_state.population(1) - (1.5f64).sin().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn phase_of_free_evolution() {
        let e = 3.0;
        let gen = DenseGenerator::new(1, move |_| CMatrix::from_element(1, 1, C64::new(e, 0.0)));
        let grid = uniform_grid((0.0, 2.0), 400);
        let opts = PropagationOptions {
            sign: MasterSign::MinusI,
            record: grid,
            ..Default::default()
        };
        let tr = propagate_schrodinger(&gen, &QuantumState::basis(1, 0), (0.0, 2.0), &opts).unwrap();
        let ph = accumulated_phase(&tr, 0, "0").unwrap();
        assert!(!ph.endpoint_only);
        assert!((ph.phase + e * 2.0).abs() < 1e-8);
    }

    #[test]
    fn phase_undefined_at_node() {
        let gen = rabi(PI, 0.0);
        let opts = PropagationOptions::default().with_record(uniform_grid((0.0, 1.0), 20));
        let tr = propagate_schrodinger(&gen, &QuantumState::basis(2, 0), (0.0, 1.0), &opts).unwrap();
        assert!(matches!(
            accumulated_phase(&tr, 0, "0"),
            Err(Error::PhaseUndefined { .. })
        ));
    }

    #[test]
    fn wrap_is_half_open() {
        assert!((wrap_phase(PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_density_rejected() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.2, 0.0),
            C64::new(-0.2, 0.0),
        ]));
        assert!(QuantumState::density(&m).is_err());
    }
}
