//! Run manifests: everything needed to re-run a result exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dynamics::{MasterSign, Tolerance};
use crate::error::Result;

/// Integrator settings that are fixed in code rather than configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorInfo {
    pub method: String,
    pub rtol: f64,
    pub atol: f64,
    pub dense_output: String,
    pub master_sign: MasterSign,
}

impl IntegratorInfo {
    pub fn new(tol: Tolerance, sign: MasterSign) -> Self {
        Self {
            method: "DOP853 (adaptive, restarted at drive breakpoints)".into(),
            rtol: tol.rtol,
            atol: tol.atol,
            dense_output: "7th order".into(),
            master_sign: sign,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub timestamp: String,
    /// Full config as run, in TOML; loadable with `--config`.
    pub config: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub integrator: IntegratorInfo,
    pub jobs: Option<usize>,
    pub wall_clock_s: f64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig, preset: Option<&str>) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            version: crate::VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            config: cfg.to_toml_string()?,
            preset: preset.map(str::to_string),
            integrator: IntegratorInfo::new(cfg.tolerance()?, cfg.gate.master_sign),
            jobs: None,
            wall_clock_s: 0.0,
            outputs: Vec::new(),
        })
    }

    /// Parses the echoed config back.
    pub fn run_config(&self) -> Result<RunConfig> {
        RunConfig::from_toml_str(&self.config)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_preset;

    #[test]
    fn config_echo_round_trips() {
        let cfg = load_preset("fig7b_phasejump").unwrap();
        let m = RunManifest::new("bell", &cfg, Some("fig7b_phasejump")).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back.run_config().unwrap(), cfg);
        assert_eq!(back.integrator.rtol, 1e-10);
    }
}
