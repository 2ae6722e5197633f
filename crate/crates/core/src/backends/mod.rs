//! Agent execution backends: a live OpenAI-compatible HTTP client and a
//! deterministic simulator.

mod http;
mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, Caller, CoreError};
use crate::types::{AgentId, Task};

pub use http::{HttpBackend, HttpConfig};
pub use sim::{SimAgentProfile, SimBackend, SimProfileSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub want_logprobs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub token_probabilities: Option<Vec<f64>>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Seconds; synthetic for simulated backends.
    pub wall_latency: f64,
    /// Set by a backend configured with a fixed confidence for endpoints that
    /// omit log-probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_confidence: Option<f64>,
}

impl GenerationResult {
    /// Mean token probability, or the configured fallback.
    pub fn confidence(&self) -> Result<f64, CoreError> {
        match (&self.token_probabilities, self.fallback_confidence) {
            (Some(p), _) if !p.is_empty() => mean_token_probability(p),
            (_, Some(c)) => Ok(c.clamp(0.0, 1.0)),
            _ => Err(CoreError::MissingLogprobs),
        }
    }
}

/// Another agent's answer as shown to the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerAnswer {
    pub agent: AgentId,
    pub answer: String,
    pub normalized: Option<String>,
    pub confidence: f64,
    /// Test-runner output for code answers, when a hook is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
}

/// Everything a backend sees for one model invocation.
#[derive(Debug, Clone)]
pub struct AgentCall<'a> {
    pub task: &'a Task,
    pub caller: Caller,
    pub round: usize,
    pub seed: u64,
    pub peers: Vec<PeerAnswer>,
    pub request: GenerationRequest,
}

pub trait AgentBackend: Send + Sync {
    fn generate(&self, call: &AgentCall<'_>) -> Result<GenerationResult, BackendError>;

    /// True when reported latencies are modeled rather than measured.
    fn synthetic_latency(&self) -> bool {
        false
    }
}

pub fn mean_token_probability(probs: &[f64]) -> Result<f64, CoreError> {
    if probs.is_empty() {
        return Err(CoreError::MissingLogprobs);
    }
    let sum: f64 = probs.iter().map(|p| p.clamp(0.0, 1.0)).sum();
    Ok((sum / probs.len() as f64).clamp(0.0, 1.0))
}
