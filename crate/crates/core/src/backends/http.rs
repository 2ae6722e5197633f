//! Client for OpenAI-compatible chat-completion endpoints.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{AgentBackend, AgentCall, GenerationResult};
use crate::error::BackendError;

fn default_timeout() -> f64 {
    600.0
}

fn default_retries() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpConfig {
    /// Full chat-completions URL; a bare `.../v1` base gets
    /// `/chat/completions` appended.
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Extra attempts after a transport error, 429 or 5xx.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Confidence to report when the endpoint returns no log-probabilities.
    /// Unset means such responses are an error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence_fallback: Option<f64>,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            confidence_fallback: None,
        }
    }

    /// Applies `CONCAT_ENDPOINT`, `CONCAT_MODEL` and `CONCAT_API_KEY`.
    pub fn with_env_overrides(mut self) -> Self {
        self.apply_overrides(|k| std::env::var(k).ok());
        self
    }

    pub fn apply_overrides(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get("CONCAT_ENDPOINT") {
            self.endpoint = v;
        }
        if let Some(v) = get("CONCAT_MODEL") {
            self.model = v;
        }
        if let Some(v) = get("CONCAT_API_KEY") {
            self.api_key = Some(v);
        }
    }

    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        if let Some(c) = config.confidence_fallback {
            if !(0.0..=1.0).contains(&c) {
                return Err(BackendError::InvalidProfile(format!(
                    "confidence_fallback {c} not in [0, 1]"
                )));
            }
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs.max(0.001)))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, BackendError> {
        let mut req = self.client.post(self.config.url()).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Endpoint {
                status: status.as_u16(),
                body: text.chars().take(2000).collect(),
            });
        }
        Ok(text)
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceLogprobs {
    content: Option<Vec<TokenLogprob>>,
}

#[derive(Deserialize)]
struct TokenLogprob {
    logprob: f64,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

fn retryable(err: &BackendError) -> bool {
    match err {
        BackendError::Transport(_) => true,
        BackendError::Endpoint { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl AgentBackend for HttpBackend {
    fn generate(&self, call: &AgentCall<'_>) -> Result<GenerationResult, BackendError> {
        let req = &call.request;
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
            "temperature": req.temperature,
            "top_p": req.top_p,
            "max_tokens": req.max_tokens,
            "logprobs": req.want_logprobs,
        });
        let started = Instant::now();
        let mut attempt = 0;
        let raw = loop {
            match self.attempt(&body) {
                Ok(raw) => break raw,
                Err(e) if attempt < self.config.max_retries && retryable(&e) => {
                    tracing::warn!(task = %call.task.id, round = call.round, caller = %call.caller, error = %e, "retrying");
                    std::thread::sleep(Duration::from_millis(200 << attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        let wall_latency = started.elapsed().as_secs_f64();
        parse_response(&raw, req.want_logprobs, self.config.confidence_fallback, wall_latency)
    }
}

fn parse_response(
    raw: &str,
    want_logprobs: bool,
    fallback: Option<f64>,
    wall_latency: f64,
) -> Result<GenerationResult, BackendError> {
    let parsed: ChatResponse =
        serde_json::from_str(raw).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
    let choice = parsed
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| BackendError::MalformedResponse("no choices".into()))?;
    let text = choice.message.content.unwrap_or_default();
    let probs: Option<Vec<f64>> = choice
        .logprobs
        .and_then(|l| l.content)
        .filter(|c| !c.is_empty())
        .map(|c| c.iter().map(|t| t.logprob.exp().clamp(0.0, 1.0)).collect());
    let fallback_confidence = match (&probs, want_logprobs, fallback) {
        (None, true, None) => return Err(BackendError::MissingLogprobs),
        (None, _, f) => f,
        (Some(_), _, _) => None,
    };
    let (prompt_tokens, completion_tokens) = parsed
        .usage
        .map(|u| (u.prompt_tokens, u.completion_tokens))
        .unwrap_or((0, probs.as_ref().map_or(0, |p| p.len() as u64)));
    Ok(GenerationResult {
        text,
        token_probabilities: probs,
        prompt_tokens,
        completion_tokens,
        wall_latency,
        fallback_confidence,
    })
}
