//! Command implementations behind the `cdgate` binary.
//!
//! Each command takes a validated config, writes its artifacts into an output
//! directory and returns a [`RunManifest`] listing them. The manifest is
//! written last, next to the artifacts.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, PRESETS};
use crate::dynamics::{population, Tolerance};
use crate::error::{Error, Result};
use crate::gate::{prepare_bell, run_cz, BellScore, GateRun};
use crate::manifest::RunManifest;
use crate::model::{Drive, Level, TwoAtomSystem};
use crate::pulse::PulseTable;
use crate::sweep::{optimize, run_sweep, OptimizeResult, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub format: Format,
    pub jobs: Option<usize>,
    pub preset: Option<String>,
}

impl RunContext {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            format: Format::Csv,
            jobs: None,
            preset: None,
        }
    }

    fn path(&self, cfg: &RunConfig, suffix: &str) -> PathBuf {
        let stem = cfg.name.as_deref().unwrap_or("run");
        self.out_dir.join(format!("{stem}_{suffix}"))
    }

    fn prepare(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }

    fn finish(&self, mut m: RunManifest, cfg: &RunConfig, start: Instant) -> Result<RunManifest> {
        m.jobs = self.jobs;
        m.wall_clock_s = start.elapsed().as_secs_f64();
        let path = self.path(cfg, &format!("{}_manifest.json", m.command));
        m.outputs.push(path.clone());
        m.write(&path)?;
        Ok(m)
    }
}

/// Overrides the integrator tolerance; `atol` keeps its ratio to `rtol`.
pub fn apply_tolerance(cfg: &mut RunConfig, rtol: f64) -> Result<()> {
    let d = Tolerance::default();
    let tol = Tolerance::new(rtol, rtol * d.atol / d.rtol)?;
    cfg.integrator.rtol = tol.rtol;
    cfg.integrator.atol = tol.atol;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(create(path)?, value)?;
    Ok(())
}

/// Samples the drive. ARP sequences give `omega0`, `omega_cd` and `delta`;
/// the phase-jump drive gives the first-step amplitude and phase.
pub fn pulse_curves(cfg: &RunConfig, points_per_pulse: usize) -> Result<PulseTable> {
    match cfg.drive()? {
        Drive::SinglePhoton(s) => PulseTable::sample(&s, points_per_pulse),
        Drive::TwoPhoton(p) => PulseTable::sample(&p.base, points_per_pulse),
        Drive::ThreePhoton(p) => PulseTable::sample(&p.base, points_per_pulse),
        Drive::PhaseJump(_) => Err(Error::config(
            "protocol.kind",
            "phase-jump drives are piecewise constant; use `omega1_profile`",
        )),
    }
}

/// `(t_us, |Omega1|, arg Omega1)` for a phase-jump drive.
pub fn omega1_profile(cfg: &RunConfig, points: usize) -> Result<Vec<[f64; 3]>> {
    let Drive::PhaseJump(p) = cfg.drive()? else {
        return Err(Error::config("protocol.kind", "not a phase-jump drive"));
    };
    if points == 0 {
        return Err(Error::param("points_per_pulse", "empty time range"));
    }
    let (lo, hi) = p.span();
    Ok((0..=points)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / points as f64;
            let v = p.profile(t);
            [t, v.norm(), v.arg()]
        })
        .collect())
}

pub fn cmd_pulse(cfg: &RunConfig, ctx: &RunContext, points_per_pulse: Option<usize>) -> Result<RunManifest> {
    let start = Instant::now();
    ctx.prepare()?;
    let points = points_per_pulse.unwrap_or(cfg.sampling.points_per_pulse);
    let mut m = RunManifest::new("pulse", cfg, ctx.preset.as_deref())?;
    if let Drive::PhaseJump(_) = cfg.drive()? {
        let rows = omega1_profile(cfg, points)?;
        let path = ctx.path(cfg, "omega1.csv");
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["t_us", "abs", "phase_rad"])?;
        for r in rows {
            w.write_record(r.iter().map(|v| format!("{v:.12e}")))?;
        }
        w.flush()?;
        m.outputs.push(path);
        return ctx.finish(m, cfg, start);
    }
    let table = pulse_curves(cfg, points)?;
    match ctx.format {
        Format::Csv => {
            for name in ["omega0", "omega_cd", "delta"] {
                let path = ctx.path(cfg, &format!("{name}.csv"));
                table.write_curve_csv(name, create(&path)?)?;
                m.outputs.push(path);
            }
        }
        Format::Json => {
            let path = ctx.path(cfg, "pulse.json");
            write_json(&path, &table)?;
            m.outputs.push(path);
        }
    }
    ctx.finish(m, cfg, start)
}

fn write_trajectories(run: &GateRun, system: &TwoAtomSystem, cfg: &RunConfig, ctx: &RunContext, m: &mut RunManifest) -> Result<()> {
    let labels = system.labels();
    let levels = &system.scheme.levels;
    let kept = [Level::Zero, Level::One, Level::R];
    let inside: Vec<bool> = system
        .basis_pairs()
        .iter()
        .map(|&(a, b)| kept.contains(&levels[a]) && kept.contains(&levels[b]))
        .collect();
    for input in &run.inputs {
        let Some(tr) = &input.trajectory else { continue };
        let path = ctx.path(cfg, &format!("trajectory_{}.csv", input.input));
        let mut w = csv::Writer::from_writer(create(&path)?);
        let sym = !tr.states.is_empty();
        let mut header = vec!["t_us".to_string()];
        header.extend(labels.iter().cloned());
        if sym {
            header.push("1r+r1".into());
        }
        header.push("leakage".into());
        w.write_record(&header)?;
        for (k, (t, pops)) in tr.times.iter().zip(&tr.populations).enumerate() {
            let mut rec = vec![format!("{t:.9e}")];
            rec.extend(pops.iter().map(|p| format!("{p:.12e}")));
            if sym {
                rec.push(format!("{:.12e}", population(&tr.states[k], system, "1r+r1")?));
            }
            let kept: f64 = pops.iter().zip(&inside).filter(|(_, &i)| i).map(|(p, _)| p).sum();
            rec.push(format!("{:.12e}", (1.0 - kept).max(0.0)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        m.outputs.push(path);
    }
    Ok(())
}

pub fn cmd_gate(cfg: &RunConfig, ctx: &RunContext) -> Result<(GateRun, RunManifest)> {
    let start = Instant::now();
    ctx.prepare()?;
    let proto = cfg.protocol_config()?;
    let run = run_cz(&proto)?;
    let mut m = RunManifest::new("gate", cfg, ctx.preset.as_deref())?;
    match ctx.format {
        Format::Csv => {
            let path = ctx.path(cfg, "gate.csv");
            let mut w = csv::Writer::from_writer(create(&path)?);
            w.write_record(["input", "return_population", "leakage", "phase_rad"])?;
            for r in &run.inputs {
                w.write_record([
                    r.input.clone(),
                    format!("{:.12e}", r.return_population),
                    format!("{:.12e}", r.leakage),
                    r.phase.map(|p| format!("{p:.12e}")).unwrap_or_default(),
                ])?;
            }
            w.flush()?;
            m.outputs.push(path);
        }
        Format::Json => {
            let path = ctx.path(cfg, "gate.json");
            write_json(&path, &run)?;
            m.outputs.push(path);
        }
    }
    if cfg.gate.record_points > 0 {
        write_trajectories(&run, &proto.system()?, cfg, ctx, &mut m)?;
    }
    let m = ctx.finish(m, cfg, start)?;
    Ok((run, m))
}

pub fn cmd_bell(cfg: &RunConfig, ctx: &RunContext) -> Result<(BellScore, RunManifest)> {
    let start = Instant::now();
    ctx.prepare()?;
    let score = prepare_bell(&cfg.protocol_config()?)?.score;
    let mut m = RunManifest::new("bell", cfg, ctx.preset.as_deref())?;
    match ctx.format {
        Format::Csv => {
            let path = ctx.path(cfg, "bell.csv");
            let mut w = csv::Writer::from_writer(create(&path)?);
            w.write_record(["quantity", "value"])?;
            let json = serde_json::to_value(&score)?;
            if let serde_json::Value::Object(map) = json {
                for (k, v) in map {
                    w.write_record([k, v.to_string()])?;
                }
            }
            w.flush()?;
            m.outputs.push(path);
        }
        Format::Json => {
            let path = ctx.path(cfg, "bell.json");
            write_json(&path, &score)?;
            m.outputs.push(path);
        }
    }
    let m = ctx.finish(m, cfg, start)?;
    Ok((score, m))
}

pub fn cmd_sweep(cfg: &RunConfig, ctx: &RunContext, dense: bool) -> Result<(crate::sweep::SweepResult, RunManifest)> {
    let start = Instant::now();
    ctx.prepare()?;
    let mut spec = SweepSpec::from_config(cfg, dense)?;
    spec.jobs = ctx.jobs;
    let result = run_sweep(&spec)?;
    let mut m = RunManifest::new("sweep", cfg, ctx.preset.as_deref())?;
    let csv_path = ctx.path(cfg, "sweep.csv");
    result.write_csv(create(&csv_path)?)?;
    m.outputs.push(csv_path);
    let json_path = ctx.path(cfg, "sweep.json");
    write_json(
        &json_path,
        &serde_json::json!({ "manifest": &m, "result": &result }),
    )?;
    m.outputs.push(json_path);
    if result.axes.len() == 2 {
        let grid = ctx.path(cfg, "sweep_grid.csv");
        result.write_grid(create(&grid)?)?;
        m.outputs.push(grid);
    }
    let m = ctx.finish(m, cfg, start)?;
    Ok((result, m))
}

pub fn cmd_optimize(cfg: &RunConfig, ctx: &RunContext) -> Result<(OptimizeResult, RunManifest)> {
    let start = Instant::now();
    ctx.prepare()?;
    let result = optimize(cfg)?;
    let mut m = RunManifest::new("optimize", cfg, ctx.preset.as_deref())?;
    let params: Vec<&str> = cfg
        .optimize
        .as_ref()
        .map(|o| o.param.iter().map(|p| p.path.as_str()).collect())
        .unwrap_or_default();
    let path = ctx.path(cfg, "optimize.json");
    write_json(&path, &serde_json::json!({ "params": params, "result": &result }))?;
    m.outputs.push(path);
    let trace = ctx.path(cfg, "optimize_trace.csv");
    let mut w = csv::Writer::from_writer(create(&trace)?);
    let mut header = vec!["eval".to_string()];
    header.extend(params.iter().map(|p| p.to_string()));
    header.push("objective".into());
    w.write_record(&header)?;
    for p in &result.trace {
        let mut rec = vec![p.eval.to_string()];
        rec.extend(p.x.iter().map(|v| format!("{v:.12e}")));
        rec.push(format!("{:.12e}", p.f));
        w.write_record(&rec)?;
    }
    w.flush()?;
    m.outputs.push(trace);
    let m = ctx.finish(m, cfg, start)?;
    Ok((result, m))
}

/// `name  summary` lines for every bundled preset.
pub fn preset_list() -> Vec<String> {
    PRESETS
        .iter()
        .map(|p| format!("{:<18} {}", p.name, p.summary))
        .collect()
}

/// Error report printed on failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_preset;

    #[test]
    fn pulse_export_writes_three_curves() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load_preset("fig2").unwrap();
        let m = cmd_pulse(&cfg, &RunContext::new(dir.path()), Some(50)).unwrap();
        assert_eq!(m.outputs.len(), 4);
        let text = std::fs::read_to_string(&m.outputs[1]).unwrap();
        assert!(text.starts_with("t_us,omega_cd"));
        assert_eq!(text.lines().count(), 1 + 101);
    }

    #[test]
    fn zero_points_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load_preset("fig2").unwrap();
        assert!(cmd_pulse(&cfg, &RunContext::new(dir.path()), Some(0)).is_err());
    }

    #[test]
    fn tolerance_override_keeps_ratio() {
        let mut cfg = load_preset("fig2").unwrap();
        apply_tolerance(&mut cfg, 1e-8).unwrap();
        assert_eq!(cfg.integrator.rtol, 1e-8);
        assert!((cfg.integrator.atol - 1e-10).abs() < 1e-24);
        assert!(apply_tolerance(&mut cfg, -1.0).is_err());
    }
}
