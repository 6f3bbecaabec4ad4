//! Run configuration: validated before any backend call and serialized
//! into every results file so runs are self-describing.

use got_core::backends::llm::LlmConfig;
use got_core::builder::BuildBudget;
use got_core::tasks::{TASK_GAME24, TASK_POLYNOMIAL, TASK_RECURRENCE};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Oracle,
    Noisy,
    Llm,
    Replay,
}

impl std::str::FromStr for BackendChoice {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(BackendChoice::Oracle),
            "noisy" => Ok(BackendChoice::Noisy),
            "llm" => Ok(BackendChoice::Llm),
            "replay" => Ok(BackendChoice::Replay),
            other => Err(ConfigError::Invalid(format!("unknown backend {other}"))),
        }
    }
}

/// Everything one run needs; recorded verbatim in the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: String,
    pub backend: BackendChoice,
    pub inspectors: u32,
    pub rounds: u32,
    pub max_rebuilds: u32,
    pub budget: BuildBudget,
    pub seed: u64,
    /// Per-call correctness of the noisy simulator.
    pub p_correct: f64,
    /// Replay fixture (a calls.jsonl) when backend = replay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    /// The backend the fixture was recorded from; lets a replay reproduce
    /// stochastic-backend control flow (set automatically by `replay`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_backend: Option<BackendChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
    /// Chat-completions settings (endpoint, model, temperature, retries);
    /// the API key itself comes from the environment only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm: Option<LlmSettings>,
}

/// The serializable subset of the LLM configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSettings {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub api_key_env: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates_dir: Option<PathBuf>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        let base = LlmConfig::default();
        LlmSettings {
            base_url: base.base_url,
            model: base.model,
            temperature: base.temperature,
            max_retries: base.max_retries,
            backoff_ms: base.backoff_ms,
            api_key_env: base.api_key_env,
            templates_dir: None,
        }
    }
}

impl LlmSettings {
    pub fn to_llm_config(&self) -> LlmConfig {
        LlmConfig {
            base_url: self.base_url.clone(),
            model: self.model.clone(),
            temperature: self.temperature,
            max_retries: self.max_retries,
            backoff_ms: self.backoff_ms,
            api_key_env: self.api_key_env.clone(),
            ..LlmConfig::default()
        }
    }

    /// Parses the documented `key = value` config format (one pair per
    /// line, `#` comments).
    pub fn from_file(path: &Path) -> Result<LlmSettings, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut settings = LlmSettings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Invalid(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let parse_err = |what: &str| {
                ConfigError::Invalid(format!(
                    "{}:{}: bad {what}: {value}",
                    path.display(),
                    lineno + 1
                ))
            };
            match key {
                "endpoint" | "base_url" => settings.base_url = value.to_string(),
                "model" => settings.model = value.to_string(),
                "temperature" => {
                    settings.temperature = value.parse().map_err(|_| parse_err("temperature"))?
                }
                "max_retries" => {
                    settings.max_retries = value.parse().map_err(|_| parse_err("max_retries"))?
                }
                "backoff_ms" => {
                    settings.backoff_ms = value.parse().map_err(|_| parse_err("backoff_ms"))?
                }
                "api_key_env" => settings.api_key_env = value.to_string(),
                "templates_dir" => settings.templates_dir = Some(PathBuf::from(value)),
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "{}:{}: unknown key {other}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Ok(settings)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: TASK_GAME24.into(),
            backend: BackendChoice::Oracle,
            inspectors: 3,
            rounds: 5,
            max_rebuilds: 2,
            budget: BuildBudget::default(),
            seed: 0,
            p_correct: 0.8,
            fixtures: None,
            fixture_backend: None,
            out_dir: None,
            jobs: 1,
            llm: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.task.as_str() {
            TASK_GAME24 | TASK_POLYNOMIAL | TASK_RECURRENCE => {}
            other => return Err(ConfigError::Invalid(format!("unknown task {other}"))),
        }
        if !(0.0..=1.0).contains(&self.p_correct) {
            return Err(ConfigError::Invalid(format!(
                "p_correct {} out of [0, 1]",
                self.p_correct
            )));
        }
        if self.budget.max_nodes == 0 || self.budget.max_depth == 0 || self.budget.max_paths_per_node == 0
        {
            return Err(ConfigError::Invalid("budget bounds must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(ConfigError::Invalid("jobs must be at least 1".into()));
        }
        if self.backend == BackendChoice::Replay && self.fixtures.is_none() {
            return Err(ConfigError::Invalid(
                "replay backend requires --fixtures".into(),
            ));
        }
        Ok(())
    }

    /// Derives an independent seed stream for one purpose within one
    /// problem; all randomness flows from the single run seed.
    pub fn derived_seed(&self, problem_id: &str, purpose: &str) -> u64 {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(format!("{}\n{problem_id}\n{purpose}", self.seed).as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_values_rejected() {
        let mut c = RunConfig {
            task: "sudoku".into(),
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        c.task = TASK_GAME24.into();
        c.p_correct = 1.5;
        assert!(c.validate().is_err());
        c.p_correct = 0.8;
        c.backend = BackendChoice::Replay;
        assert!(c.validate().is_err());
    }

    #[test]
    fn derived_seeds_differ_by_purpose_and_problem() {
        let c = RunConfig::default();
        assert_ne!(c.derived_seed("p1", "gen"), c.derived_seed("p1", "inspect"));
        assert_ne!(c.derived_seed("p1", "gen"), c.derived_seed("p2", "gen"));
        assert_eq!(c.derived_seed("p1", "gen"), c.derived_seed("p1", "gen"));
    }

    #[test]
    fn llm_settings_parse_from_key_value_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("got.conf");
        std::fs::write(
            &path,
            "# endpoint settings\nendpoint = http://localhost:8080/v1\nmodel = test-model\ntemperature = 0.2\nmax_retries = 5\n",
        )
        .unwrap();
        let settings = LlmSettings::from_file(&path).unwrap();
        assert_eq!(settings.base_url, "http://localhost:8080/v1");
        assert_eq!(settings.model, "test-model");
        assert_eq!(settings.temperature, 0.2);
        assert_eq!(settings.max_retries, 5);

        std::fs::write(&path, "unknown_key = 1\n").unwrap();
        assert!(LlmSettings::from_file(&path).is_err());
    }
}
