//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use concat_core::{Method, Predictor, RunConfig, TaskKind};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Where agent calls go.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    /// OpenAI-compatible endpoint URL.
    Http(String),
    /// Path to a simulation profile file.
    Sim(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("http", url)) if !url.is_empty() => Ok(BackendSpec::Http(url.to_string())),
            Some(("sim", path)) if !path.is_empty() => Ok(BackendSpec::Sim(PathBuf::from(path))),
            _ => Err(ConfigError::Invalid(format!(
                "backend `{s}` must be http:<endpoint> or sim:<profile file>"
            ))),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Http(url) => write!(f, "http:{url}"),
            BackendSpec::Sim(path) => write!(f, "sim:{}", path.display()),
        }
    }
}

impl Serialize for BackendSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BackendSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn default_model() -> String {
    "default".into()
}

fn default_timeout() -> f64 {
    600.0
}

fn default_retries() -> u32 {
    2
}

/// Settings for `http:` backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpOptions {
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Confidence used when the endpoint returns no log-probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence_fallback: Option<f64>,
}

impl Default for HttpOptions {
    fn default() -> Self {
        HttpOptions {
            model: default_model(),
            api_key: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            confidence_fallback: None,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(String),
        Many(Vec<String>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

fn default_methods() -> Vec<String> {
    vec!["concat".into()]
}

fn default_output() -> PathBuf {
    PathBuf::from("runs/latest")
}

fn default_repetitions() -> usize {
    3
}

fn default_parallelism() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub kind: TaskKind,
    /// `concat`, `llm_debate`, `vanilla:<topology>`, `cot` or `sc_cot`;
    /// a single string is accepted too.
    #[serde(default = "default_methods", alias = "method", deserialize_with = "one_or_many")]
    pub methods: Vec<String>,
    pub backend: BackendSpec,
    #[serde(default)]
    pub http: HttpOptions,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub predictor: Predictor,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Tasks executed concurrently.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Shell command run against code answers, with `{file}` replaced by a
    /// script holding the candidate, the tests and a `check(<entry_point>)`
    /// call. Exit status 0 means the tests passed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_command: Option<String>,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, kind: TaskKind, backend: BackendSpec) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            kind,
            methods: default_methods(),
            backend,
            http: HttpOptions::default(),
            run: RunConfig::default(),
            predictor: Predictor::default(),
            output_dir: default_output(),
            repetitions: default_repetitions(),
            parallelism: default_parallelism(),
            test_command: None,
        }
    }

    /// Reads, applies environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::load_with(path, |k| std::env::var(k).ok())
    }

    pub fn load_with(path: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = Self::parse_file(path)?;
        cfg.apply_env(env);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n").map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// `CONCAT_ENDPOINT` replaces the URL of an `http:` backend;
    /// `CONCAT_API_KEY` and `CONCAT_MODEL` replace the auth token and model.
    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) {
        if let (BackendSpec::Http(url), Some(v)) = (&mut self.backend, env("CONCAT_ENDPOINT")) {
            *url = v;
        }
        if let Some(v) = env("CONCAT_API_KEY") {
            self.http.api_key = Some(v);
        }
        if let Some(v) = env("CONCAT_MODEL") {
            self.http.model = v;
        }
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>, ConfigError> {
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("no methods given".into()));
        }
        self.methods
            .iter()
            .map(|m| m.parse().map_err(|e: concat_core::CoreError| ConfigError::Invalid(e.to_string())))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.run.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.parsed_methods()?;
        if !self.dataset.is_file() {
            return Err(ConfigError::Invalid(format!("dataset {} does not exist", self.dataset.display())));
        }
        if let BackendSpec::Sim(profile) = &self.backend {
            if !profile.is_file() {
                return Err(ConfigError::Invalid(format!(
                    "sim profile {} does not exist",
                    profile.display()
                )));
            }
        }
        if self.repetitions == 0 {
            return Err(ConfigError::Invalid("repetitions must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be at least 1".into()));
        }
        if let Some(c) = self.http.confidence_fallback {
            if !(0.0..=1.0).contains(&c) {
                return Err(ConfigError::Invalid(format!("confidence_fallback {c} not in [0, 1]")));
            }
        }
        Ok(())
    }

    /// Copy safe to write next to results: the auth token is dropped.
    pub fn snapshot(&self) -> Self {
        let mut copy = self.clone();
        copy.http.api_key = None;
        copy
    }
}
