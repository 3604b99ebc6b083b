//! Parameter grids over any config field, and a bounded Nelder-Mead
//! optimizer.
//!
//! Axes address config fields by dotted path (`"gate.blockade"`,
//! `"pulse.omega_max"`). Each grid point re-parses the edited config, so unit
//! tags and validation apply exactly as for a single run.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{set_path, RunConfig};
use crate::dynamics::wrap_phase;
use crate::error::{Error, Result};
use crate::gate::{prepare_bell, run_cz};
use crate::units::Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    BellFidelity,
    #[default]
    BellInfidelity,
    Phi01,
    Phi11,
    /// `2 phi01 - phi11`, wrapped to `(-pi, pi]`.
    TwoPhi01MinusPhi11,
    /// Distance of `2 phi01 - phi11` from `+-pi`.
    CzPhaseDefect,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::BellFidelity => "bell_fidelity",
            Observable::BellInfidelity => "bell_infidelity",
            Observable::Phi01 => "phi01",
            Observable::Phi11 => "phi11",
            Observable::TwoPhi01MinusPhi11 => "two_phi01_minus_phi11",
            Observable::CzPhaseDefect => "cz_phase_defect",
        }
    }

    fn needs_phases(self) -> bool {
        !matches!(self, Observable::BellFidelity | Observable::BellInfidelity)
    }
}

/// Evaluates an observable for one validated config.
pub fn evaluate(cfg: &RunConfig, observable: Observable) -> Result<f64> {
    let proto = cfg.protocol_config()?;
    if !observable.needs_phases() {
        let f = prepare_bell(&proto)?.score.fidelity;
        return Ok(match observable {
            Observable::BellFidelity => f,
            _ => 1.0 - f,
        });
    }
    if proto.scheme.has_decay() {
        return Err(Error::config(
            "sweep.observable",
            format!("`{}` needs a decay-free scheme", observable.name()),
        ));
    }
    let run = run_cz(&proto)?;
    let phase = |l: &str| {
        run.phase(l).ok_or_else(|| Error::PhaseUndefined {
            label: l.to_string(),
            amplitude: run.input(l).map_or(0.0, |r| r.return_population.sqrt()),
        })
    };
    let two = || -> Result<f64> { Ok(wrap_phase(2.0 * phase("01")? - phase("11")?)) };
    Ok(match observable {
        Observable::Phi01 => phase("01")?,
        Observable::Phi11 => phase("11")?,
        Observable::TwoPhi01MinusPhi11 => two()?,
        Observable::CzPhaseDefect => PI - two()?.abs(),
        _ => unreachable!(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linspace {
    pub start: f64,
    pub stop: f64,
    pub num: usize,
}

/// One sweep axis as written in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub path: String,
    /// Unit tag appended to numeric values; omit for raw TOML values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<toml::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linspace: Option<Linspace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub observable: Observable,
    pub axis: Vec<AxisSection>,
    /// Denser alternative grid sizes for `--dense` runs, per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_num: Option<Vec<usize>>,
}

/// A resolved axis: TOML values to assign, with numeric coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub path: String,
    pub unit: Option<String>,
    pub coords: Vec<f64>,
    #[serde(skip)]
    pub values: Vec<toml::Value>,
}

impl Axis {
    fn from_section(s: &AxisSection, dense: Option<usize>) -> Result<Self> {
        let name = format!("sweep.axis[{}]", s.path);
        if let Some(u) = &s.unit {
            u.parse::<Unit>().map_err(|e| Error::config(&name, e.to_string()))?;
        }
        let tag = |v: f64| match &s.unit {
            Some(u) => toml::Value::String(format!("{v} {u}")),
            None => toml::Value::Float(v),
        };
        let (coords, values) = match (&s.values, &s.linspace) {
            (Some(vals), None) => {
                let mut coords = Vec::new();
                let mut out = Vec::new();
                for v in vals {
                    let (c, val) = match v {
                        toml::Value::Float(x) => (*x, tag(*x)),
                        toml::Value::Integer(i) => (*i as f64, tag(*i as f64)),
                        toml::Value::String(st) => {
                            let c = st.split_whitespace().next().and_then(|n| n.parse().ok());
                            (c.unwrap_or(f64::NAN), v.clone())
                        }
                        other => (f64::NAN, other.clone()),
                    };
                    coords.push(c);
                    out.push(val);
                }
                (coords, out)
            }
            (None, Some(ls)) => {
                let num = dense.unwrap_or(ls.num);
                if num == 0 || !ls.start.is_finite() || !ls.stop.is_finite() {
                    return Err(Error::config(&name, "linspace needs finite bounds and num >= 1"));
                }
                let coords: Vec<f64> = if num == 1 {
                    vec![ls.start]
                } else {
                    (0..num)
                        .map(|k| ls.start + (ls.stop - ls.start) * k as f64 / (num - 1) as f64)
                        .collect()
                };
                let values = coords.iter().map(|&c| tag(c)).collect();
                (coords, values)
            }
            _ => return Err(Error::config(&name, "give exactly one of `values` or `linspace`")),
        };
        if values.is_empty() {
            return Err(Error::config(&name, "axis has no values"));
        }
        Ok(Self {
            path: s.path.clone(),
            unit: s.unit.clone(),
            coords,
            values,
        })
    }

    pub fn header(&self) -> String {
        match &self.unit {
            Some(u) => format!("{} [{u}]", self.path),
            None => self.path.clone(),
        }
    }
}

/// Fully resolved sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub axes: Vec<Axis>,
    pub observable: Observable,
    /// Worker-pool bound; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl SweepSpec {
    /// Builds the sweep described by `cfg.sweep`.
    pub fn from_config(cfg: &RunConfig, dense: bool) -> Result<Self> {
        let s = cfg
            .sweep
            .as_ref()
            .ok_or_else(|| Error::config("sweep", "config has no [sweep] section"))?;
        if s.axis.is_empty() {
            return Err(Error::config("sweep.axis", "at least one axis is required"));
        }
        let axes = s
            .axis
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let d = if dense {
                    s.dense_num.as_ref().and_then(|v| v.get(k).copied())
                } else {
                    None
                };
                Axis::from_section(a, d)
            })
            .collect::<Result<_>>()?;
        let mut base = cfg.clone();
        base.sweep = None;
        base.optimize = None;
        Ok(Self {
            base,
            axes,
            observable: s.observable,
            jobs: None,
        })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis indices of grid point `k`; the last axis varies fastest.
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (i, a) in self.axes.iter().enumerate().rev() {
            idx[i] = k % a.values.len();
            k /= a.values.len();
        }
        idx
    }

    fn point_config(&self, idx: &[usize]) -> Result<RunConfig> {
        let mut table = self.base.to_table()?;
        for (a, &i) in self.axes.iter().zip(idx) {
            set_path(&mut table, &a.path, a.values[i].clone())?;
        }
        RunConfig::from_table(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub coords: Vec<f64>,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub observable: Observable,
    pub axes: Vec<Axis>,
    pub rows: Vec<SweepRow>,
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::config("jobs", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Evaluates the observable at every grid point. Failing points keep their
/// error message; rows are in grid order regardless of completion order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let eval = |k: usize| {
        let idx = spec.multi_index(k);
        let coords = spec.axes.iter().zip(&idx).map(|(a, &i)| a.coords[i]).collect();
        let out = spec
            .point_config(&idx)
            .and_then(|c| evaluate(&c, spec.observable));
        match out {
            Ok(v) => SweepRow {
                index: k,
                coords,
                value: Some(v),
                error: None,
            },
            Err(e) => {
                log::warn!("sweep point {k} failed: {e}");
                SweepRow {
                    index: k,
                    coords,
                    value: None,
                    error: Some(e.to_string()),
                }
            }
        }
    };
    let rows = if spec.jobs == Some(1) {
        (0..spec.len()).map(eval).collect()
    } else {
        in_pool(spec.jobs, || (0..spec.len()).into_par_iter().map(eval).collect())?
    };
    Ok(SweepResult {
        observable: spec.observable,
        axes: spec.axes.clone(),
        rows,
    })
}

impl SweepResult {
    pub fn values(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        header.extend(self.axes.iter().map(Axis::header));
        header.push(self.observable.name().to_string());
        header.push("error".to_string());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.index.to_string()];
            rec.extend(r.coords.iter().map(|c| format!("{c:e}")));
            rec.push(r.value.map(|v| format!("{v:e}")).unwrap_or_default());
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a table written by [`write_csv`](Self::write_csv) against the
    /// axes of `like`.
    pub fn read_csv<R: std::io::Read>(input: R, like: &SweepResult) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let n = like.axes.len();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .unwrap_or_default()
                    .parse()
                    .map_err(|_| Error::config("csv", format!("bad number in column {i}")))
            };
            let index = num(0)? as usize;
            let coords = (1..=n).map(num).collect::<Result<_>>()?;
            let value = match rec.get(n + 1).unwrap_or_default() {
                "" => None,
                _ => Some(num(n + 1)?),
            };
            let error = Some(rec.get(n + 2).unwrap_or_default().to_string()).filter(|s| !s.is_empty());
            rows.push(SweepRow {
                index,
                coords,
                value,
                error,
            });
        }
        Ok(Self {
            observable: like.observable,
            axes: like.axes.clone(),
            rows,
        })
    }

    /// Heat-map matrix for 2D sweeps: first row holds the second axis, first
    /// column the first axis. Missing values are left empty.
    pub fn write_grid<W: Write>(&self, out: W) -> Result<()> {
        if self.axes.len() != 2 {
            return Err(Error::config("sweep.axis", "gridded output needs exactly two axes"));
        }
        let (a, b) = (&self.axes[0], &self.axes[1]);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![format!("{} \\ {}", a.header(), b.header())];
        header.extend(b.coords.iter().map(|c| format!("{c:e}")));
        w.write_record(&header)?;
        for (i, ca) in a.coords.iter().enumerate() {
            let mut rec = vec![format!("{ca:e}")];
            for j in 0..b.coords.len() {
                let v = self.rows[i * b.coords.len() + j].value;
                rec.push(v.map(|v| format!("{v:e}")).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Free parameter of an optimization, in the units of `unit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSection {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub lower: f64,
    pub upper: f64,
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default)]
    pub objective: Observable,
    /// Evaluate the objective with all decay removed.
    #[serde(default = "yes")]
    pub zero_decay: bool,
    #[serde(default = "max_evals")]
    pub max_evals: usize,
    /// Convergence threshold on the spread of simplex objective values.
    #[serde(default = "ftol")]
    pub tol: f64,
    /// Initial simplex step as a fraction of each bound range.
    #[serde(default = "simplex_scale")]
    pub simplex_scale: f64,
    pub param: Vec<ParamSection>,
}

fn yes() -> bool {
    true
}

fn max_evals() -> usize {
    200
}

fn ftol() -> f64 {
    1e-10
}

fn simplex_scale() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub tol: f64,
    pub simplex_scale: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: max_evals(),
            tol: ftol(),
            simplex_scale: simplex_scale(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub eval: usize,
    pub x: Vec<f64>,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evals: usize,
    pub converged: bool,
    /// Stopped by the evaluation budget; `best_x` is the best seen so far.
    pub max_evals_reached: bool,
    pub trace: Vec<TracePoint>,
}

/// Bounded Nelder-Mead. Candidates are clipped into `[lower, upper]`;
/// non-finite objective values count as `+inf`.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 || lower.len() != n || upper.len() != n {
        return Err(Error::param("bounds", "dimension mismatch"));
    }
    for i in 0..n {
        if !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i]) {
            return Err(Error::param("bounds", "bounds must be finite with lower < upper"));
        }
        if !(lower[i]..=upper[i]).contains(&x0[i]) {
            return Err(Error::param("initial", "initial point outside bounds"));
        }
    }
    let clip = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut trace = Vec::new();
    let mut eval = |x: &[f64], trace: &mut Vec<TracePoint>| {
        let v = f(x);
        let v = if v.is_finite() { v } else { f64::INFINITY };
        trace.push(TracePoint {
            eval: trace.len() + 1,
            x: x.to_vec(),
            f: v,
        });
        v
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut trace)));
    for i in 0..n {
        let mut x = x0.to_vec();
        let step = opts.simplex_scale * (upper[i] - lower[i]);
        x[i] += step;
        if x[i] > upper[i] {
            x[i] = x0[i] - step;
        }
        clip(&mut x);
        let v = eval(&x, &mut trace);
        simplex.push((x, v));
    }

    let mut converged = false;
    while trace.len() < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= opts.tol || (simplex[0].1.is_finite() && spread.is_nan()) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64, worst: &[f64]| -> Vec<f64> {
            let mut x: Vec<f64> = (0..n).map(|i| centroid[i] + t * (worst[i] - centroid[i])).collect();
            clip(&mut x);
            x
        };
        let worst = simplex[n].0.clone();
        let xr = toward(-1.0, &worst);
        let fr = eval(&xr, &mut trace);
        if fr < simplex[0].1 {
            let xe = toward(-2.0, &worst);
            let fe = eval(&xe, &mut trace);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = toward(-0.5, &worst);
                let fc = eval(&xc, &mut trace);
                (xc, fc)
            } else {
                let xc = toward(0.5, &worst);
                let fc = eval(&xc, &mut trace);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = (0..n).map(|i| best[i] + 0.5 * (s.0[i] - best[i])).collect();
                    clip(&mut x);
                    let v = eval(&x, &mut trace);
                    *s = (x, v);
                }
            }
        }
    }
    let best = trace
        .iter()
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .expect("at least one evaluation");
    Ok(OptimizeResult {
        best_x: best.x.clone(),
        best_f: best.f,
        evals: trace.len(),
        converged,
        max_evals_reached: !converged && trace.len() >= opts.max_evals,
        trace,
    })
}

/// Optimizes the `[optimize]` section of `cfg`.
pub fn optimize(cfg: &RunConfig) -> Result<OptimizeResult> {
    let spec = cfg
        .optimize
        .as_ref()
        .ok_or_else(|| Error::config("optimize", "config has no [optimize] section"))?;
    if spec.param.is_empty() {
        return Err(Error::config("optimize.param", "at least one parameter is required"));
    }
    let mut base = cfg.clone();
    base.sweep = None;
    base.optimize = None;
    if spec.zero_decay {
        base.scheme.no_decay = true;
    }
    let table = base.to_table()?;
    for p in &spec.param {
        if let Some(u) = &p.unit {
            u.parse::<Unit>()
                .map_err(|e| Error::config(format!("optimize.param[{}]", p.path), e.to_string()))?;
        }
    }
    let objective = |x: &[f64]| -> f64 {
        let mut t = table.clone();
        for (p, &v) in spec.param.iter().zip(x) {
            let val = match &p.unit {
                Some(u) => toml::Value::String(format!("{v} {u}")),
                None => toml::Value::Float(v),
            };
            if set_path(&mut t, &p.path, val).is_err() {
                return f64::INFINITY;
            }
        }
        match RunConfig::from_table(t).and_then(|c| evaluate(&c, spec.objective)) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("objective failed at {x:?}: {e}");
                f64::INFINITY
            }
        }
    };
    let x0: Vec<f64> = spec.param.iter().map(|p| p.initial).collect();
    let lo: Vec<f64> = spec.param.iter().map(|p| p.lower).collect();
    let hi: Vec<f64> = spec.param.iter().map(|p| p.upper).collect();
    let opts = NelderMeadOptions {
        max_evals: spec.max_evals,
        tol: spec.tol,
        simplex_scale: spec.simplex_scale,
    };
    nelder_mead(objective, &x0, &lo, &hi, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges() {
        let target = 2.0 * PI * 20.0;
        let r = nelder_mead(
            |x| (x[0] - target).powi(2),
            &[2.0 * PI * 18.0],
            &[2.0 * PI * 10.0],
            &[2.0 * PI * 30.0],
            &NelderMeadOptions {
                max_evals: 500,
                tol: 1e-14,
                simplex_scale: 0.1,
            },
        )
        .unwrap();
        assert!(r.converged);
        assert!(((r.best_x[0] - target) / target).abs() < 1e-4);
    }

    #[test]
    fn rosenbrock_stays_in_bounds() {
        let lo = [-1.5, -0.5];
        let hi = [0.8, 2.0];
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.0, 1.0],
            &lo,
            &hi,
            &NelderMeadOptions {
                max_evals: 2000,
                tol: 1e-14,
                simplex_scale: 0.2,
            },
        )
        .unwrap();
        for p in &r.trace {
            for i in 0..2 {
                assert!(p.x[i] >= lo[i] && p.x[i] <= hi[i]);
            }
        }
        // Constrained optimum sits on the x = 0.8 face.
        assert!((r.best_x[0] - 0.8).abs() < 1e-3, "{:?}", r.best_x);
        assert!((r.best_x[1] - 0.64).abs() < 1e-3, "{:?}", r.best_x);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let r = nelder_mead(
            |x| (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2),
            &[0.9, 0.9],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            &NelderMeadOptions {
                max_evals: 8,
                tol: 0.0,
                simplex_scale: 0.1,
            },
        )
        .unwrap();
        assert!(r.max_evals_reached && !r.converged);
        assert_eq!(r.evals, r.trace.len());
        let min = r.trace.iter().map(|p| p.f).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_f, min);
    }

    #[test]
    fn rejects_start_outside_bounds() {
        assert!(nelder_mead(|x| x[0], &[2.0], &[0.0], &[1.0], &NelderMeadOptions::default()).is_err());
    }
}
