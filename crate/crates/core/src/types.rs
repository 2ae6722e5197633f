//! Domain types shared by every stage of the protocol.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Dense agent index in `0..n`. All "lowest index" tie-breaks refer to this value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent-{}", self.0)
    }
}

impl From<usize> for AgentId {
    fn from(value: usize) -> Self {
        AgentId(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Multiple choice with options A-D.
    Choice,
    /// Free-form numeric answer.
    Numeric,
    /// Python code generation.
    Code,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Choice => "choice",
            TaskKind::Numeric => "numeric",
            TaskKind::Code => "code",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TaskKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "choice" | "mmlu" => Ok(TaskKind::Choice),
            "numeric" | "gsm8k" => Ok(TaskKind::Numeric),
            "code" | "humaneval" => Ok(TaskKind::Code),
            other => Err(CoreError::InvalidConfig(format!("unknown task kind `{other}`"))),
        }
    }
}

/// A benchmark item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub question: String,
    /// Used only for scoring. Code tasks carry the canonical solution here when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_point: Option<String>,
    /// Opaque test source for code tasks, only consumed by an external test hook.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests: Option<String>,
}

impl Task {
    pub fn new(id: impl Into<String>, question: impl Into<String>, kind: TaskKind) -> Self {
        Task {
            id: id.into(),
            question: question.into(),
            reference_answer: None,
            kind,
            entry_point: None,
            tests: None,
        }
    }

    pub fn with_reference(mut self, answer: impl Into<String>) -> Self {
        self.reference_answer = Some(answer.into());
        self
    }
}

/// One agent's answer and confidence at a given round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub answer: String,
    /// `None` when no answer could be extracted; such agents always form singleton clusters.
    pub normalized_answer: Option<String>,
    pub confidence: f64,
    pub round: usize,
}

impl AgentState {
    /// Builds a state, normalizing `answer` for `kind`.
    pub fn new(answer: impl Into<String>, kind: TaskKind, confidence: f64, round: usize) -> Self {
        let answer = answer.into();
        let normalized_answer = crate::normalize::normalize_answer(&answer, kind).ok();
        AgentState {
            answer,
            normalized_answer,
            confidence: confidence.clamp(0.0, 1.0),
            round,
        }
    }

    /// The text other agents see as this agent's answer.
    pub fn shared_answer(&self) -> &str {
        self.normalized_answer.as_deref().unwrap_or(&self.answer)
    }
}

/// Directed communication graph for one round.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub n: usize,
    pub edges: BTreeSet<(AgentId, AgentId)>,
}

impl Topology {
    pub fn empty(n: usize) -> Self {
        Topology {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (AgentId, AgentId)>,
    ) -> Result<Self, CoreError> {
        let mut topology = Topology::empty(n);
        for (src, dst) in edges {
            topology.insert(src, dst)?;
        }
        Ok(topology)
    }

    pub fn insert(&mut self, src: AgentId, dst: AgentId) -> Result<(), CoreError> {
        if src == dst {
            return Err(CoreError::InvalidTopology(format!("self-loop on {src}")));
        }
        if src.0 >= self.n || dst.0 >= self.n {
            return Err(CoreError::InvalidTopology(format!(
                "edge ({}, {}) out of range for n = {}",
                src.0, dst.0, self.n
            )));
        }
        self.edges.insert((src, dst));
        Ok(())
    }

    pub fn contains(&self, src: AgentId, dst: AgentId) -> bool {
        self.edges.contains(&(src, dst))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Sources with an edge into `dst`, ascending.
    pub fn in_neighbors(&self, dst: AgentId) -> Vec<AgentId> {
        self.edges
            .iter()
            .filter(|(_, d)| *d == dst)
            .map(|(s, _)| *s)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("topology serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let raw: Topology =
            serde_json::from_str(text).map_err(|e| CoreError::InvalidTopology(e.to_string()))?;
        // re-validate endpoints
        Topology::from_edges(raw.n, raw.edges)
    }
}

fn default_agents() -> usize {
    5
}
fn default_rounds() -> usize {
    2
}
fn default_alpha() -> f64 {
    0.20
}
fn default_retention() -> f64 {
    0.70
}
fn default_theta_sim() -> f64 {
    0.5
}
fn default_code_threshold() -> f64 {
    0.45
}
fn default_temperature() -> f64 {
    0.7
}
fn default_top_p() -> f64 {
    0.8
}
fn default_max_tokens() -> u32 {
    32_768
}
fn default_density() -> f64 {
    0.5
}
fn default_samples() -> usize {
    5
}
fn default_workers() -> usize {
    8
}

/// Protocol hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_agents")]
    pub n_agents: usize,
    /// Refinement rounds after initialization (m - 1).
    #[serde(default = "default_rounds")]
    pub refinement_rounds: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_retention")]
    pub retention_rate: f64,
    #[serde(default)]
    pub tau_min: f64,
    /// Supporter/challenger boundary on answer similarity.
    #[serde(default = "default_theta_sim")]
    pub theta_sim: f64,
    /// Average-linkage merge threshold for code clustering.
    #[serde(default = "default_code_threshold")]
    pub code_threshold: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub seed: u64,
    /// Edge probability for the random baseline topology.
    #[serde(default = "default_density")]
    pub random_density: f64,
    /// Sample count for self-consistency CoT.
    #[serde(default = "default_samples")]
    pub sc_samples: usize,
    /// Skip leaders whose reference set is empty instead of re-invoking them.
    #[serde(default)]
    pub skip_empty_refinement: bool,
    /// Upper bound on concurrent backend calls within a round.
    #[serde(default = "default_workers")]
    pub max_concurrent_calls: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_agents: default_agents(),
            refinement_rounds: default_rounds(),
            alpha: default_alpha(),
            retention_rate: default_retention(),
            tau_min: 0.0,
            theta_sim: default_theta_sim(),
            code_threshold: default_code_threshold(),
            temperature: default_temperature(),
            top_p: default_top_p(),
            max_tokens: default_max_tokens(),
            seed: 0,
            random_density: default_density(),
            sc_samples: default_samples(),
            skip_empty_refinement: false,
            max_concurrent_calls: default_workers(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |msg: String| Err(CoreError::InvalidConfig(msg));
        if self.n_agents == 0 {
            return bad("n_agents must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.retention_rate) {
            return bad(format!("retention_rate {} not in [0, 1]", self.retention_rate));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return bad(format!("alpha {} must be positive", self.alpha));
        }
        for (name, value) in [
            ("theta_sim", self.theta_sim),
            ("code_threshold", self.code_threshold),
            ("top_p", self.top_p),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return bad(format!("{name} {value} not in [0, 1]"));
            }
        }
        if !(self.random_density > 0.0 && self.random_density <= 1.0) {
            return bad(format!("random_density {} not in (0, 1]", self.random_density));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad(format!("temperature {} must be non-negative", self.temperature));
        }
        if self.tau_min.is_nan() {
            return bad("tau_min is NaN".into());
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive".into());
        }
        if self.sc_samples == 0 {
            return bad("sc_samples must be at least 1".into());
        }
        if self.max_concurrent_calls == 0 {
            return bad("max_concurrent_calls must be at least 1".into());
        }
        Ok(())
    }
}
