//! Aggregate configuration loaded from one TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::ActionSpaceSpec;
use crate::expert::{ExpertConfig, SceneRules};
use crate::sim::SimConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Nearest-neighbor cloner settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    pub pool_cols: u32,
    pub pool_rows: u32,
    /// Scale of the instruction one-hot relative to pooled pixels in [0, 1].
    pub instruction_weight: f32,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 1,
            pool_cols: 8,
            pool_rows: 6,
            instruction_weight: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct QuardConfig {
    pub action_space: ActionSpaceSpec,
    pub sim: SimConfig,
    pub expert: ExpertConfig,
    pub scene: SceneRules,
    pub knn: KnnConfig,
}

impl QuardConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: QuardConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim
            .rates
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.expert.validate().map_err(ConfigError::Invalid)?;
        if self.knn.k == 0 || self.knn.pool_cols == 0 || self.knn.pool_rows == 0 {
            return Err(ConfigError::Invalid("knn k and pool size must be positive".into()));
        }
        let r = &self.scene;
        if r.target_x[0] > r.target_x[1] || r.target_y[0] > r.target_y[1] {
            return Err(ConfigError::Invalid("target ranges must be ordered".into()));
        }
        if r.letter_offsets.len() < 2 {
            return Err(ConfigError::Invalid("need at least two letter offsets".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = QuardConfig::default();
        assert_eq!(QuardConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let partial = QuardConfig::from_toml(
            "[sim]\nmax_steps = 60\n[expert.gains]\nkp_lin = 1.0\nkd_lin = 0.0\nkp_ang = 1.5\nkd_ang = 0.0\n",
        )
        .unwrap();
        assert_eq!(partial.sim.max_steps, 60);
        assert_eq!(partial.expert.gains.kp_ang, 1.5);
        assert_eq!(partial.expert.lookahead, 0.4);
    }

    #[test]
    fn rejects_bad_rates() {
        let e = QuardConfig::from_toml("[sim.rates]\nf_high = 50.0\nf_low = 3.0\n").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)));
    }
}
