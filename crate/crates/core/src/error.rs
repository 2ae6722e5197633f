use thiserror::Error;

use crate::types::AgentId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("no answer could be extracted from the response")]
    NoAnswerFound,
    #[error("could not parse code: {0}")]
    ParseFailure(String),
    #[error("empty input")]
    EmptyInput,
    #[error("degenerate belief: c_k = {c_k}, signal = {signal}")]
    DegenerateBelief { c_k: f64, signal: f64 },
    #[error("length mismatch: {left} scores, {right} labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("labels must contain at least one positive and one negative")]
    DegenerateLabels,
    #[error("latency must be positive")]
    ZeroLatency,
    #[error("response carries no token log-probabilities")]
    MissingLogprobs,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
}

/// Failure of a single model invocation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("response carries no token log-probabilities")]
    MissingLogprobs,
    #[error("invalid simulation profile: {0}")]
    InvalidProfile(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// A backend failure annotated with where it happened.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("task {task_id}, round {round}, {caller}: {source}")]
pub struct CallError {
    pub task_id: String,
    pub round: usize,
    pub caller: Caller,
    #[source]
    pub source: BackendError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "role", content = "agent")]
pub enum Caller {
    Agent(AgentId),
    Aggregator,
}

impl std::fmt::Display for Caller {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Caller::Agent(id) => write!(f, "{id}"),
            Caller::Aggregator => f.write_str("aggregator"),
        }
    }
}
