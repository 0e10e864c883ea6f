use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qlight::signal::BaselineConfig;
use qlight::{AgentConfig, SimParams};

use crate::AppError;

/// Run-level settings: which experiment to run, on what, and where results
/// go. Command-line flags override these.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub pattern: Option<String>,
    pub episodes: Option<u32>,
    pub runs: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub models: Option<String>,
    pub controller: Option<String>,
    pub trace: Option<bool>,
}

/// The on-disk configuration document: flat sections for the simulation,
/// the agent, the baselines, and the run itself. Every field has a default,
/// so `{}` is a valid config. `effective_config.json` files written by a
/// run load back through this same shape.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub version: Option<String>,
    pub sim: SimParams,
    pub agent: AgentConfig,
    pub baseline: BaselineConfig,
    pub run: RunSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| AppError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&body)
            .map_err(|e| AppError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn load_or_default(path: Option<&PathBuf>) -> Result<Self, AppError> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(FileConfig::default()),
        }
    }

    /// Validate the parameter sections; the error names the offending field.
    pub fn validate_params(&self) -> Result<(), AppError> {
        self.sim
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))?;
        self.agent
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))?;
        self.baseline
            .validate()
            .map_err(|e| AppError::Config(e.to_string()))?;
        Ok(())
    }

    /// Write the fully resolved configuration into the run directory so the
    /// run can be reproduced from that file alone.
    pub fn write_effective(&self, out_dir: &Path) -> Result<PathBuf, AppError> {
        let mut doc = self.clone();
        doc.version = Some(env!("CARGO_PKG_VERSION").to_string());
        let path = out_dir.join("effective_config.json");
        let body = serde_json::to_string_pretty(&doc).expect("serializable config");
        std::fs::write(&path, body)
            .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_a_valid_config() {
        let cfg: FileConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.sim, SimParams::default());
        assert_eq!(cfg.agent, AgentConfig::default());
        cfg.validate_params().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<FileConfig>(r#"{"simulation": {}}"#).unwrap_err();
        assert!(err.to_string().contains("simulation"));
    }

    #[test]
    fn section_overrides_apply() {
        let cfg: FileConfig = serde_json::from_str(
            r#"{"sim": {"v_max": 10.0}, "run": {"pattern": "P2", "episodes": 5}}"#,
        )
        .unwrap();
        assert_eq!(cfg.sim.v_max, 10.0);
        assert_eq!(cfg.run.pattern.as_deref(), Some("P2"));
        assert_eq!(cfg.run.episodes, Some(5));
    }

    #[test]
    fn invalid_field_is_named_in_the_error() {
        let cfg: FileConfig = serde_json::from_str(r#"{"agent": {"gamma": 1.5}}"#).unwrap();
        let err = cfg.validate_params().unwrap_err();
        match err {
            AppError::Config(msg) => assert!(msg.contains("gamma"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
