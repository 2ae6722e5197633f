//! Seeded agent simulator.
//!
//! Each task gets a finite answer pool: the true answer plus `D - 1`
//! distractors. A simulated agent answers correctly with probability
//!
//! ```text
//! w = conformity * mean(peer confidence)
//! q = confidence share of peers holding the true answer
//! p = (1 - w) * skill + w * q
//! ```
//!
//! When wrong it adopts a wrong peer answer (confidence-weighted) with
//! probability `conformity`, otherwise a random distractor. Confidence is
//! `calibration * band + (1 - calibration) * U(0, 1)` where the band draw is
//! `U(0.7, 1)` for correct answers and `U(0.2, 0.6)` for wrong ones.
//!
//! The aggregator role takes a plurality vote over the peers it is shown,
//! breaking ties by summed confidence and then by first appearance.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AgentBackend, AgentCall, GenerationResult, PeerAnswer};
use crate::error::{BackendError, Caller};
use crate::normalize::normalize_answer;
use crate::types::{Task, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimAgentProfile {
    pub skill: f64,
    pub calibration: f64,
    pub conformity: f64,
    /// Seconds.
    pub base_latency: f64,
    /// Seconds per completion token.
    pub per_token_latency: f64,
}

impl SimAgentProfile {
    pub fn validate(&self) -> Result<(), BackendError> {
        for (name, v) in [
            ("skill", self.skill),
            ("calibration", self.calibration),
            ("conformity", self.conformity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(BackendError::InvalidProfile(format!("{name} {v} not in [0, 1]")));
            }
        }
        for (name, v) in [
            ("base_latency", self.base_latency),
            ("per_token_latency", self.per_token_latency),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(BackendError::InvalidProfile(format!("{name} {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for SimAgentProfile {
    fn default() -> Self {
        SimAgentProfile {
            skill: 0.6,
            calibration: 0.8,
            conformity: 0.4,
            base_latency: 0.5,
            per_token_latency: 0.02,
        }
    }
}

fn default_distractors() -> usize {
    4
}

/// Profiles for a population; agent `i` uses `agents[i % agents.len()]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimProfileSet {
    /// Pool size `D`, true answer included.
    #[serde(default = "default_distractors")]
    pub distractors: usize,
    pub agents: Vec<SimAgentProfile>,
}

impl Default for SimProfileSet {
    fn default() -> Self {
        SimProfileSet {
            distractors: default_distractors(),
            agents: vec![SimAgentProfile::default()],
        }
    }
}

impl SimProfileSet {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.agents.is_empty() {
            return Err(BackendError::InvalidProfile("no agent profiles".into()));
        }
        if self.distractors < 2 {
            return Err(BackendError::InvalidProfile(format!(
                "answer pool size {} must be at least 2",
                self.distractors
            )));
        }
        self.agents.iter().try_for_each(SimAgentProfile::validate)
    }
}

#[derive(Debug, Clone)]
pub struct SimBackend {
    profiles: SimProfileSet,
}

impl SimBackend {
    pub fn new(profiles: SimProfileSet) -> Result<Self, BackendError> {
        profiles.validate()?;
        Ok(SimBackend { profiles })
    }

    pub fn profiles(&self) -> &SimProfileSet {
        &self.profiles
    }

    /// The task's answer pool in normalized form; index 0 is the true answer.
    pub fn answer_pool(&self, task: &Task) -> Vec<String> {
        answer_pool(task, self.profiles.distractors)
    }
}

impl AgentBackend for SimBackend {
    fn generate(&self, call: &AgentCall<'_>) -> Result<GenerationResult, BackendError> {
        let mut rng = ChaCha8Rng::from_seed(call_digest(call));
        let kind = call.task.kind;
        let pool = self.answer_pool(call.task);
        let (answer, correct, profile) = match call.caller {
            Caller::Aggregator => {
                let voted = plurality(&call.peers);
                let correct = voted.as_deref() == Some(pool[0].as_str());
                (voted, correct, None)
            }
            Caller::Agent(id) => {
                let profile = &self.profiles.agents[id.0 % self.profiles.agents.len()];
                let (answer, correct) = draw_answer(profile, &pool, &call.peers, &mut rng);
                (Some(answer), correct, Some(profile))
            }
        };
        let text = match &answer {
            Some(a) => render(kind, a, &mut rng),
            None => "The other responses do not contain a usable answer.".to_string(),
        };
        let confidence = match profile {
            Some(p) => {
                let band = if correct {
                    rng.random_range(0.7..1.0)
                } else {
                    rng.random_range(0.2..0.6)
                };
                p.calibration * band + (1.0 - p.calibration) * rng.random::<f64>()
            }
            None => 0.9,
        };
        let prompt_tokens = approx_tokens(&call.request.system_prompt) + approx_tokens(&call.request.user_prompt);
        let completion_tokens = approx_tokens(&text);
        let token_probabilities = symmetric_probabilities(confidence, completion_tokens as usize, &mut rng);
        let wall_latency = match profile {
            Some(p) => p.base_latency + p.per_token_latency * completion_tokens as f64,
            None => {
                let p = &self.profiles.agents[0];
                p.base_latency + p.per_token_latency * completion_tokens as f64
            }
        };
        Ok(GenerationResult {
            text,
            token_probabilities: Some(token_probabilities),
            prompt_tokens,
            completion_tokens,
            wall_latency,
            fallback_confidence: None,
        })
    }

    fn synthetic_latency(&self) -> bool {
        true
    }
}

fn call_digest(call: &AgentCall<'_>) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(call.seed.to_le_bytes());
    for part in [call.task.id.as_str(), &call.caller.to_string()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.update((call.round as u64).to_le_bytes());
    let req = &call.request;
    for part in [&req.system_prompt, &req.user_prompt] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.update(req.temperature.to_le_bytes());
    h.update(req.top_p.to_le_bytes());
    h.update(req.max_tokens.to_le_bytes());
    for p in &call.peers {
        h.update((p.agent.0 as u64).to_le_bytes());
        h.update(p.confidence.to_le_bytes());
        h.update(p.normalized.as_deref().unwrap_or("").as_bytes());
        h.update([0]);
    }
    h.finalize().into()
}

fn task_rng(task: &Task) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"pool");
    h.update(task.id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn true_answer(task: &Task, rng: &mut ChaCha8Rng) -> String {
    if let Some(a) = task
        .reference_answer
        .as_deref()
        .and_then(|r| normalize_answer(r, task.kind).ok())
    {
        return a;
    }
    // unscored task: invent a stable answer so the protocol still has a target
    match task.kind {
        TaskKind::Choice => ["A", "B", "C", "D"][rng.random_range(0..4)].to_string(),
        TaskKind::Numeric => rng.random_range(2..500u32).to_string(),
        TaskKind::Code => format!("def {}(*args):\n    return args", entry_point(task)),
    }
}

fn entry_point(task: &Task) -> &str {
    task.entry_point.as_deref().unwrap_or("solution")
}

fn answer_pool(task: &Task, size: usize) -> Vec<String> {
    let mut rng = task_rng(task);
    let truth = true_answer(task, &mut rng);
    let mut candidates: Vec<String> = match task.kind {
        TaskKind::Choice => ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect(),
        TaskKind::Numeric => numeric_candidates(&truth),
        TaskKind::Code => code_candidates(entry_point(task)),
    };
    candidates.retain(|c| *c != truth);
    let mut seen = BTreeSet::new();
    candidates.retain(|c| seen.insert(c.clone()));
    // Fisher-Yates with the task-local stream
    for i in (1..candidates.len()).rev() {
        let j = rng.random_range(0..=i);
        candidates.swap(i, j);
    }
    let mut pool = vec![truth];
    pool.extend(candidates.into_iter().take(size.saturating_sub(1)));
    pool
}

fn numeric_candidates(truth: &str) -> Vec<String> {
    let v: f64 = truth.parse().unwrap_or(0.0);
    let raw = [
        v + 1.0,
        v - 1.0,
        v + 2.0,
        v * 2.0,
        v + 10.0,
        v - 10.0,
        v / 2.0,
        v * 10.0,
        v + 100.0,
        v * 3.0,
    ];
    raw.iter()
        .filter_map(|x| normalize_answer(&format!("The answer is {x}"), TaskKind::Numeric).ok())
        .collect()
}

fn code_candidates(name: &str) -> Vec<String> {
    vec![
        format!("def {name}(*args):\n    return None"),
        format!(
            "def {name}(*args):\n    result = []\n    for item in args:\n        result.append(item)\n    return result"
        ),
        format!(
            "def {name}(*args):\n    try:\n        return len(args)\n    except TypeError:\n        return 0"
        ),
        format!(
            "def {name}(*args):\n    count = 0\n    while count < len(args):\n        count += 1\n    return count > 1"
        ),
        format!("def {name}(*args):\n    return {{k: v for k, v in enumerate(args) if v}}"),
    ]
}

fn draw_answer(
    profile: &SimAgentProfile,
    pool: &[String],
    peers: &[PeerAnswer],
    rng: &mut ChaCha8Rng,
) -> (String, bool) {
    let truth = &pool[0];
    let total: f64 = peers.iter().map(|p| p.confidence).sum();
    let (w, q) = if peers.is_empty() {
        (0.0, 0.0)
    } else {
        let correct_mass: f64 = peers
            .iter()
            .filter(|p| p.normalized.as_ref() == Some(truth))
            .map(|p| p.confidence)
            .sum();
        let q = if total > 0.0 { correct_mass / total } else { 0.0 };
        (profile.conformity * total / peers.len() as f64, q)
    };
    let p = (1.0 - w) * profile.skill + w * q;
    if rng.random::<f64>() < p {
        return (truth.clone(), true);
    }
    let wrong: Vec<&PeerAnswer> = peers
        .iter()
        .filter(|p| p.normalized.as_ref().is_some_and(|a| a != truth))
        .collect();
    // consume the conformity draw unconditionally so streams stay aligned
    let conform = rng.random::<f64>() < profile.conformity;
    if conform && !wrong.is_empty() {
        let mass: f64 = wrong.iter().map(|p| p.confidence).sum();
        let pick = if mass > 0.0 {
            let mut x = rng.random::<f64>() * mass;
            let mut chosen = wrong[wrong.len() - 1];
            for p in &wrong {
                if x < p.confidence {
                    chosen = p;
                    break;
                }
                x -= p.confidence;
            }
            chosen
        } else {
            wrong[rng.random_range(0..wrong.len())]
        };
        return (pick.normalized.clone().unwrap_or_default(), false);
    }
    let idx = 1 + rng.random_range(0..pool.len() - 1);
    (pool[idx].clone(), false)
}

fn plurality(peers: &[PeerAnswer]) -> Option<String> {
    // (answer, votes, confidence sum), in order of first appearance
    let mut tally: Vec<(&str, usize, f64)> = Vec::new();
    for p in peers {
        let Some(a) = p.normalized.as_deref() else { continue };
        match tally.iter_mut().find(|(x, _, _)| *x == a) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 += p.confidence;
            }
            None => tally.push((a, 1, p.confidence)),
        }
    }
    let mut best: Option<(&str, usize, f64)> = None;
    for entry in tally {
        let better = match best {
            None => true,
            Some((_, votes, conf)) => entry.1 > votes || (entry.1 == votes && entry.2 > conf),
        };
        if better {
            best = Some(entry);
        }
    }
    best.map(|(a, _, _)| a.to_string())
}

const REASONING: [&str; 6] = [
    "Let me restate what is being asked.",
    "I will work through the relevant facts one at a time.",
    "Each step follows from the previous one.",
    "Checking the intermediate result against the question confirms it.",
    "Other readings of the question do not hold up.",
    "That settles it.",
];

fn render(kind: TaskKind, answer: &str, rng: &mut ChaCha8Rng) -> String {
    let steps = rng.random_range(1..=REASONING.len());
    match kind {
        TaskKind::Choice | TaskKind::Numeric => {
            format!("{}\nThe answer is {answer}", REASONING[..steps].join(" "))
        }
        TaskKind::Code => format!("```python\n{answer}\n```"),
    }
}

fn approx_tokens(text: &str) -> u64 {
    text.chars().count().div_ceil(4) as u64
}

/// Token probabilities whose arithmetic mean is `confidence`.
fn symmetric_probabilities(confidence: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = n.max(1);
    let spread = confidence.min(1.0 - confidence);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n / 2 {
        let d = rng.random::<f64>() * spread;
        out.push(confidence + d);
        out.push(confidence - d);
    }
    if n % 2 == 1 {
        out.push(confidence);
    }
    out
}
