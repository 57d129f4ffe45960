use std::path::{Path, PathBuf};

use mmrec_core::ranker::RankerConfig;
use mmrec_core::representation::DEFAULT_HISTORY_WINDOW;
use mmrec_core::{AttentionPredictor, BlendWeights, ModePolicy, PreferenceParams};
use serde::{Deserialize, Serialize};

use crate::formats::{read_json, FormatError};

pub const ENV_LISTEN: &str = "MMREC_LISTEN";
pub const ENV_SNAPSHOT: &str = "MMREC_SNAPSHOT";
pub const ENV_INTERACTION_LOG: &str = "MMREC_INTERACTION_LOG";

/// Service configuration, loaded from a single JSON document. Every field
/// has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub listen: String,
    pub snapshot_path: PathBuf,
    pub interaction_log_path: PathBuf,
    pub preference: PreferenceParams,
    pub mode_policy: ModePolicy,
    pub blend: BlendWeights,
    pub predictor: AttentionPredictor,
    /// Cluster count for `cluster`; `None` means ⌈√catalog size⌉.
    pub cluster_k: Option<usize>,
    pub history_window: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            snapshot_path: "catalog.json".into(),
            interaction_log_path: "interactions.jsonl".into(),
            preference: PreferenceParams::default(),
            mode_policy: ModePolicy::default(),
            blend: BlendWeights::default(),
            predictor: AttentionPredictor::default(),
            cluster_k: None,
            history_window: DEFAULT_HISTORY_WINDOW,
        }
    }
}

impl ServiceConfig {
    /// Reads the config file and applies environment overrides.
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let mut cfg: Self = read_json(path)?;
        cfg.apply_env(|k| std::env::var(k).ok());
        cfg.validate().map_err(|msg| FormatError::Invalid {
            path: path.to_path_buf(),
            msg,
        })?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get(ENV_LISTEN) {
            self.listen = v;
        }
        if let Some(v) = get(ENV_SNAPSHOT) {
            self.snapshot_path = v.into();
        }
        if let Some(v) = get(ENV_INTERACTION_LOG) {
            self.interaction_log_path = v.into();
        }
    }

    pub fn ranker(&self) -> RankerConfig {
        RankerConfig {
            preference: self.preference,
            policy: self.mode_policy,
            blend: self.blend,
            history_window: self.history_window,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.ranker().validate().map_err(|e| e.to_string())?;
        if self.cluster_k == Some(0) {
            return Err("cluster_k must be positive".into());
        }
        if !(self.predictor.beta.is_finite() && self.predictor.gamma.is_finite()) {
            return Err("predictor parameters must be finite".into());
        }
        Ok(())
    }
}
