//! Runtime configuration: a TOML file layered under environment-variable
//! overrides. Everything has a default, so a bare offline run needs no
//! configuration at all.
//!
//! Environment overrides (highest precedence):
//! - `SLIDESMITH_API_BASE_URL`, `SLIDESMITH_API_KEY`, `SLIDESMITH_MODEL`
//! - `SLIDESMITH_SEARCH_KEY`
//!
//! TOML layout:
//! ```toml
//! [api]
//! base_url = "https://api.example.com/v1"
//! api_key = "sk-..."
//! model = "default-model"
//!
//! [api.models]        # optional per-stage overrides, keyed by stage tag
//! design = "designer-model"
//! judge = "judge-model"
//!
//! [search]
//! api_key = "..."
//!
//! [pipeline]
//! max_refine_iters = 3
//! accept_threshold = 0.75
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("configuration file: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default)]
    pub api: ApiConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub pipeline: PipelineTuning,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiConfig {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    /// Default model for every stage without a per-stage override.
    pub model: Option<String>,
    /// Stage-tag prefix → model name (e.g. `design`, `judge`, `outline`).
    #[serde(default)]
    pub models: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub api_key: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineTuning {
    pub max_refine_iters: Option<u32>,
    pub accept_threshold: Option<f64>,
}

impl Default for PipelineTuning {
    fn default() -> Self {
        Self { max_refine_iters: None, accept_threshold: None }
    }
}

impl AppConfig {
    /// Load a TOML file (or start from defaults when `path` is `None`),
    /// then apply environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => toml::from_str(&std::fs::read_to_string(p)?)?,
            None => Self::default(),
        };
        config.apply_env();
        Ok(config)
    }

    fn apply_env(&mut self) {
        if let Ok(v) = std::env::var("SLIDESMITH_API_BASE_URL") {
            self.api.base_url = Some(v);
        }
        if let Ok(v) = std::env::var("SLIDESMITH_API_KEY") {
            self.api.api_key = Some(v);
        }
        if let Ok(v) = std::env::var("SLIDESMITH_MODEL") {
            self.api.model = Some(v);
        }
        if let Ok(v) = std::env::var("SLIDESMITH_SEARCH_KEY") {
            self.search.api_key = Some(v);
        }
    }

    /// Model for a stage tag: longest configured prefix wins, then the
    /// default model.
    pub fn model_for(&self, tag: &str) -> Option<&str> {
        self.api
            .models
            .iter()
            .filter(|(prefix, _)| tag.starts_with(prefix.as_str()))
            .max_by_key(|(prefix, _)| prefix.len())
            .map(|(_, model)| model.as_str())
            .or(self.api.model.as_deref())
    }
}
