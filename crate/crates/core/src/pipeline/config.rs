use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::forge::DomainId;

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "STEPFORGE_CONFIG";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mopl_bounds: Option<(u32, u32)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub size_params: BTreeMap<String, i64>,
}

/// Optional settings file. Command-line flags take precedence over it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_inapp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_expansions: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time_secs: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub domains: BTreeMap<DomainId, DomainOverrides>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(super::io_err(path))?;
        Self::from_json(&text).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if let Some(p) = self.p_inapp {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("p_inapp {p} is outside [0, 1]"));
            }
        }
        if self.y == Some(0) {
            return bad("y must be at least 1".into());
        }
        for (d, o) in &self.domains {
            if o.y == Some(0) {
                return bad(format!("{d}: y must be at least 1"));
            }
            if let Some((lo, hi)) = o.mopl_bounds {
                if lo > hi {
                    return bad(format!("{d}: mopl_bounds [{lo}, {hi}] is empty"));
                }
            }
        }
        Ok(())
    }
}
