//! TOML run configuration with explicit unit tags, and the bundled presets.
//!
//! Every dimensional value is a string `"<number> <unit>"`:
//!
//! ```toml
//! [scheme]
//! kind = "single_photon"
//! species = "Cs107p"
//!
//! [pulse]
//! omega_max = "20 MHz_over_2pi"
//! delta0 = "10 MHz_over_2pi"
//! duration = "0.05 us"
//!
//! [gate]
//! blockade = "4 GHz_over_2pi"
//! ```
//!
//! Sweeps and optimizations edit the parsed TOML tree by dotted path, so any
//! field can be an axis.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{MasterSign, Tolerance};
use crate::error::{Error, Result};
use crate::gate::{PhaseCorrection, ProtocolConfig};
use crate::model::{AtomSpecies, Blockade, DecayChannel, Drive, Level, LevelScheme, SchemeKind};
use crate::pulse::{DoubleSequence, EffectiveSign, PhaseJumpParams, ThreePhotonPulseParams, TwoPhotonPulseParams};
use crate::sweep::{OptimizeSection, SweepSection};
use crate::units::Quantity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub scheme: SchemeSection,
    pub pulse: PulseSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub gate: GateSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    /// Rydberg-state decay preset; omit for no Rydberg decay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<AtomSpecies>,
    /// Additional channels, e.g. intermediate-state decay.
    #[serde(default)]
    pub decay: Vec<DecaySection>,
    /// Drop every decay channel (ideal gate).
    #[serde(default)]
    pub no_decay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    pub from: Level,
    /// Lifetime (`us`/`ns`) or rate (`per_us`).
    pub lifetime: Quantity,
    /// Branching ratio per destination label.
    pub branches: BTreeMap<Level, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub omega_max: Quantity,
    pub delta0: Quantity,
    pub duration: Quantity,
    #[serde(default = "one")]
    pub second_pulse_sign: f64,
    /// Two-photon intermediate detuning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate_detuning: Option<Quantity>,
    #[serde(default)]
    pub effective_sign: EffectiveSign,
    /// Three-photon middle and upper step Rabi frequencies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega3: Option<Quantity>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    #[default]
    CdArp,
    PhaseJump,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default)]
    pub kind: ProtocolKind,
    /// Phase jump: target effective Rabi frequency `Omega1 Omega3 / Omega2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_rabi: Option<Quantity>,
    /// Phase jump: explicit first-step amplitude (overrides `effective_rabi`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_time: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_psi: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HadamardAtom {
    Control,
    #[default]
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    /// `"<value> <unit>"` or `"infinite"`.
    #[serde(default = "infinite")]
    pub blockade: String,
    /// `"auto"`, `"none"` or a phase such as `"0.5 rad"`.
    #[serde(default = "auto")]
    pub phase_correction: String,
    #[serde(default)]
    pub hadamard_atom: HadamardAtom,
    #[serde(default)]
    pub master_sign: MasterSign,
    /// Recorded points per pulse for trajectories; 0 keeps endpoints only.
    #[serde(default)]
    pub record_points: usize,
}

fn infinite() -> String {
    "infinite".into()
}

fn auto() -> String {
    "auto".into()
}

impl Default for GateSection {
    fn default() -> Self {
        Self {
            blockade: infinite(),
            phase_correction: auto(),
            hadamard_atom: HadamardAtom::Target,
            master_sign: MasterSign::PlusI,
            record_points: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "rtol")]
    pub rtol: f64,
    #[serde(default = "atol")]
    pub atol: f64,
}

fn rtol() -> f64 {
    Tolerance::default().rtol
}

fn atol() -> f64 {
    Tolerance::default().atol
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            rtol: rtol(),
            atol: atol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    #[serde(default = "points_per_pulse")]
    pub points_per_pulse: usize,
}

fn points_per_pulse() -> usize {
    2000
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            points_per_pulse: points_per_pulse(),
        }
    }
}

fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(name, other.to_string()),
    })
}

fn required<'a>(name: &str, q: &'a Option<Quantity>) -> Result<&'a Quantity> {
    q.as_ref().ok_or_else(|| Error::config(name, "required for this scheme"))
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| {
            let at = e
                .span()
                .map(|sp| {
                    let line = s[..sp.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<toml>".into());
            Error::config(at, e.message().to_string())
        })?;
        cfg.protocol_config()?;
        Ok(cfg)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("<schema>", e.message().to_string()))?;
        cfg.protocol_config()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::config("<serialize>", e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("<serialize>", e.to_string()))
    }

    pub fn tolerance(&self) -> Result<Tolerance> {
        field("integrator", Tolerance::new(self.integrator.rtol, self.integrator.atol))
    }

    pub fn level_scheme(&self) -> Result<LevelScheme> {
        let s = &self.scheme;
        if s.no_decay {
            return Ok(LevelScheme::closed(s.kind));
        }
        let mut channels = Vec::new();
        if let Some(sp) = s.species {
            channels.push(sp.rydberg_decay());
        }
        for (k, d) in s.decay.iter().enumerate() {
            let name = format!("scheme.decay[{k}]");
            let gamma = field(&name, d.lifetime.rate())?;
            let branches = d.branches.iter().map(|(&l, &b)| (l, b)).collect();
            channels.push(field(&name, DecayChannel::new(d.from, gamma, branches))?);
        }
        field("scheme", LevelScheme::new(s.kind, channels))
    }

    pub fn double_sequence(&self) -> Result<DoubleSequence> {
        let p = &self.pulse;
        let omega_max = field("pulse.omega_max", p.omega_max.angular())?;
        let delta0 = field("pulse.delta0", p.delta0.angular())?;
        let duration = field("pulse.duration", p.duration.micros())?;
        field(
            "pulse",
            DoubleSequence::new(omega_max, delta0, duration, p.second_pulse_sign),
        )
    }

    pub fn drive(&self) -> Result<Drive> {
        let p = &self.pulse;
        match (self.protocol.kind, self.scheme.kind) {
            (ProtocolKind::PhaseJump, SchemeKind::ThreePhoton) => {
                let pr = &self.protocol;
                let omega2 = field("pulse.omega2", required("pulse.omega2", &p.omega2)?.angular())?;
                let omega3 = field("pulse.omega3", required("pulse.omega3", &p.omega3)?.angular())?;
                let omega1 = match (&pr.omega1, &pr.effective_rabi) {
                    (Some(o1), _) => field("protocol.omega1", o1.angular())?,
                    (None, Some(eff)) => {
                        field("protocol.effective_rabi", eff.angular())? * omega2 / omega3
                    }
                    (None, None) => {
                        return Err(Error::config(
                            "protocol.effective_rabi",
                            "phase jump needs `effective_rabi` or `omega1`",
                        ))
                    }
                };
                let detuning = field(
                    "protocol.detuning",
                    required("protocol.detuning", &pr.detuning)?.angular(),
                )?;
                let half_time = field(
                    "protocol.half_time",
                    required("protocol.half_time", &pr.half_time)?.micros(),
                )?;
                let dpsi = field(
                    "protocol.delta_psi",
                    required("protocol.delta_psi", &pr.delta_psi)?.radians(),
                )?;
                Ok(Drive::PhaseJump(field(
                    "protocol",
                    PhaseJumpParams::new(omega1, detuning, half_time, dpsi, omega2, omega3),
                )?))
            }
            (ProtocolKind::PhaseJump, kind) => Err(Error::config(
                "protocol.kind",
                format!("phase_jump is only defined for three_photon, not {kind}"),
            )),
            (ProtocolKind::CdArp, SchemeKind::SinglePhoton) => {
                Ok(Drive::SinglePhoton(self.double_sequence()?))
            }
            (ProtocolKind::CdArp, SchemeKind::TwoPhoton) => {
                let d = required("pulse.intermediate_detuning", &p.intermediate_detuning)?;
                let d = field("pulse.intermediate_detuning", d.angular())?;
                let mut tp = field(
                    "pulse.intermediate_detuning",
                    TwoPhotonPulseParams::new(self.double_sequence()?, d),
                )?;
                tp.convention = p.effective_sign;
                Ok(Drive::TwoPhoton(tp))
            }
            (ProtocolKind::CdArp, SchemeKind::ThreePhoton) => {
                let omega2 = field("pulse.omega2", required("pulse.omega2", &p.omega2)?.angular())?;
                let omega3 = field("pulse.omega3", required("pulse.omega3", &p.omega3)?.angular())?;
                Ok(Drive::ThreePhoton(field(
                    "pulse",
                    ThreePhotonPulseParams::new(self.double_sequence()?, omega2, omega3),
                )?))
            }
        }
    }

    pub fn blockade(&self) -> Result<Blockade> {
        let b = self.gate.blockade.trim();
        if b.eq_ignore_ascii_case("infinite") {
            return Ok(Blockade::Infinite);
        }
        let q: Quantity = field("gate.blockade", b.parse())?;
        Ok(Blockade::Finite(field("gate.blockade", q.angular())?))
    }

    pub fn phase_correction(&self) -> Result<PhaseCorrection> {
        let s = self.gate.phase_correction.trim();
        Ok(match s {
            "auto" => PhaseCorrection::Auto,
            "none" => PhaseCorrection::None,
            other => {
                let q: Quantity = field("gate.phase_correction", other.parse())?;
                PhaseCorrection::Explicit(field("gate.phase_correction", q.radians())?)
            }
        })
    }

    /// Fully validated protocol for the gate module.
    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let mut cfg = field(
            "scheme",
            ProtocolConfig::new(self.level_scheme()?, self.drive()?, self.blockade()?),
        )?;
        cfg.phase_correction = self.phase_correction()?;
        cfg.hadamard_atom = match self.gate.hadamard_atom {
            HadamardAtom::Control => 0,
            HadamardAtom::Target => 1,
        };
        cfg.sign = self.gate.master_sign;
        cfg.tol = self.tolerance()?;
        cfg.record_points = self.gate.record_points;
        Ok(cfg)
    }
}

/// Sets `value` at a dotted `path` such as `"pulse.omega_max"`, creating
/// intermediate tables.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::config(path, "empty parameter path"))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(path, format!("`{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

pub fn get_path<'a>(table: &'a toml::Table, path: &str) -> Option<&'a toml::Value> {
    let mut parts = path.split('.');
    let mut cur = table.get(parts.next()?)?;
    for p in parts {
        cur = cur.as_table()?.get(p)?;
    }
    Some(cur)
}

/// A bundled configuration.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

macro_rules! preset {
    ($name:literal, $summary:literal) => {
        Preset {
            name: $name,
            summary: $summary,
            text: include_str!(concat!("../presets/", $name, ".toml")),
        }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("fig2", "Ideal single-photon double ARP, infinite blockade"),
    preset!("fig3a", "Bell fidelity over (Omega0max, delta0), ideal, B = 4 GHz"),
    preset!("fig3b", "Bell infidelity versus blockade strength, ideal"),
    preset!("fig4", "Cs 107p single-photon gate with decay, B = 4 GHz"),
    preset!("fig4_rb", "Rb 113p single-photon gate with decay, B = 4 GHz"),
    preset!("fig4d", "Bell infidelity versus blockade strength, Cs with decay"),
    preset!("fig6a", "Two-photon phi01 versus intermediate detuning, infinite blockade"),
    preset!("fig6b", "Two-photon 2 phi01 - phi11 versus intermediate detuning"),
    preset!("fig6c", "Two-photon Bell fidelity with decay versus detuning, B = 1 GHz"),
    preset!("fig6c_point", "Two-photon Cs gate with decay at -4 GHz, B = 1 GHz"),
    preset!("fig7", "Three-photon CD-ARP with decay at Omega2 = 10 GHz, B = 1 GHz"),
    preset!("fig7b_cdarp", "Three-photon CD-ARP infidelity versus Omega2"),
    preset!("fig7b_phasejump", "Three-photon phase-jump infidelity versus Omega2"),
    preset!("optimize_fig2", "Local optimization of (Omega0max, delta0), ideal"),
];

pub fn preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::config("preset", format!("unknown preset `{name}`; known: {}", known.join(", ")))
    })
}

pub fn load_preset(name: &str) -> Result<RunConfig> {
    RunConfig::from_toml_str(preset(name)?.text)
}
