//! Collaboration statistics over experiment records: correctness
//! transitions, dissent strength with its ROC-AUC, and efficiency.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Caller, CoreError};
use crate::normalize::normalize_answer;
use crate::orchestrator::ExperimentRecord;
use crate::types::{AgentState, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransitionLabel {
    WrongToCorrect,
    CorrectToCorrect,
    WrongToWrong,
    CorrectToWrong,
}

impl TransitionLabel {
    pub const ALL: [TransitionLabel; 4] = [
        TransitionLabel::WrongToCorrect,
        TransitionLabel::CorrectToCorrect,
        TransitionLabel::WrongToWrong,
        TransitionLabel::CorrectToWrong,
    ];

    /// Only a wrong answer turned right counts as helpful.
    pub fn helpful(self) -> bool {
        self == TransitionLabel::WrongToCorrect
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionLabel::WrongToCorrect => "wrong_to_correct",
            TransitionLabel::CorrectToCorrect => "correct_to_correct",
            TransitionLabel::WrongToWrong => "wrong_to_wrong",
            TransitionLabel::CorrectToWrong => "correct_to_wrong",
        }
    }
}

pub fn label_transition(before_correct: bool, after_correct: bool) -> TransitionLabel {
    match (before_correct, after_correct) {
        (false, true) => TransitionLabel::WrongToCorrect,
        (true, true) => TransitionLabel::CorrectToCorrect,
        (false, false) => TransitionLabel::WrongToWrong,
        (true, false) => TransitionLabel::CorrectToWrong,
    }
}

/// `c_j * (1 - agree)`.
pub fn dissent_strength(mean_source_confidence: f64, agree: bool) -> f64 {
    if agree {
        0.0
    } else {
        mean_source_confidence
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from midranks in `O(n log n)`.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, CoreError> {
    if scores.len() != labels.len() {
        return Err(CoreError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(CoreError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum keeps midranks integral
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share the midrank (i + j + 2) / 2
        let twice_mid = (i + j + 2) as u64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        twice_rank_sum += twice_mid * pos_in_group;
        i = j + 1;
    }
    let p = positives as u64;
    // U = R_pos - P(P+1)/2, doubled
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * positives * negatives) as f64)
}

/// Accuracy (percent) per second of latency.
pub fn efficiency(avg_accuracy: f64, avg_latency: f64) -> Result<f64, CoreError> {
    if avg_latency.is_nan() || avg_latency <= 0.0 {
        return Err(CoreError::ZeroLatency);
    }
    Ok(avg_accuracy / avg_latency)
}

/// Whether a state's extracted answer matches the reference.
pub fn state_correct(state: &AgentState, reference: Option<&str>, kind: TaskKind) -> bool {
    let Some(reference) = reference.and_then(|r| normalize_answer(r, kind).ok()) else {
        return false;
    };
    state.normalized_answer.as_deref() == Some(reference.as_str())
}

/// Grouping key for transition statistics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransitionKey {
    pub method: String,
    pub n_agents: usize,
    pub round: usize,
    /// Number of peer answers the focal agent referenced.
    pub in_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionBucket {
    pub key: TransitionKey,
    pub counts: BTreeMap<TransitionLabel, usize>,
}

impl TransitionBucket {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn count(&self, label: TransitionLabel) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn proportion(&self, label: TransitionLabel) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.count(label) as f64 / t as f64,
        }
    }
}

/// One re-invoked agent in one refinement round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionObservation {
    pub key: TransitionKey,
    pub task_id: String,
    pub agent: usize,
    pub label: TransitionLabel,
}

/// Labels every agent that was re-invoked in a refinement round by the
/// correctness of its answer before and after the call.
pub fn transitions(records: &[ExperimentRecord]) -> Vec<TransitionObservation> {
    let mut out = Vec::new();
    for rec in records {
        let kind = rec.kind;
        let reference = rec.reference_answer.as_deref();
        for pair in rec.round_traces.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            for call in &cur.calls {
                let Caller::Agent(id) = call.caller else { continue };
                let (Some(before), Some(after)) = (prev.states_after.get(id.0), cur.states_after.get(id.0)) else {
                    continue;
                };
                out.push(TransitionObservation {
                    key: TransitionKey {
                        method: rec.method.clone(),
                        n_agents: rec.config.n_agents,
                        round: cur.round,
                        in_degree: call.sources.len(),
                    },
                    task_id: rec.task_id.clone(),
                    agent: id.0,
                    label: label_transition(
                        state_correct(before, reference, kind),
                        state_correct(after, reference, kind),
                    ),
                });
            }
        }
    }
    out
}

pub fn transition_histogram(records: &[ExperimentRecord]) -> Vec<TransitionBucket> {
    let mut buckets: BTreeMap<TransitionKey, BTreeMap<TransitionLabel, usize>> = BTreeMap::new();
    for obs in transitions(records) {
        *buckets.entry(obs.key).or_default().entry(obs.label).or_default() += 1;
    }
    buckets
        .into_iter()
        .map(|(key, counts)| TransitionBucket { key, counts })
        .collect()
}

/// Label counts summed over buckets.
pub fn pooled_counts(buckets: &[TransitionBucket]) -> BTreeMap<TransitionLabel, usize> {
    let mut out = BTreeMap::new();
    for b in buckets {
        for (label, n) in &b.counts {
            *out.entry(*label).or_default() += n;
        }
    }
    out
}

/// A source answer shown to a re-invoked focal agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissentPair {
    pub method: String,
    pub n_agents: usize,
    pub task_id: String,
    pub round: usize,
    pub source: usize,
    pub target: usize,
    /// Source confidence in the round the answer was produced.
    pub source_confidence: f64,
    /// Mean confidence of the source over all its pairs in the same
    /// (method, n_agents) configuration.
    pub mean_source_confidence: f64,
    pub agree: bool,
    pub dissent: f64,
    pub helpful: bool,
}

pub fn dissent_pairs(records: &[ExperimentRecord]) -> Vec<DissentPair> {
    let mut pairs = Vec::new();
    for rec in records {
        let kind = rec.kind;
        let reference = rec.reference_answer.as_deref();
        for window in rec.round_traces.windows(2) {
            let (prev, cur) = (&window[0], &window[1]);
            for call in &cur.calls {
                let Caller::Agent(k) = call.caller else { continue };
                let (Some(before), Some(after)) = (prev.states_after.get(k.0), cur.states_after.get(k.0)) else {
                    continue;
                };
                let helpful = label_transition(
                    state_correct(before, reference, kind),
                    state_correct(after, reference, kind),
                )
                .helpful();
                for j in &call.sources {
                    let Some(src) = prev.states_after.get(j.0) else { continue };
                    let agree = match (&src.normalized_answer, &before.normalized_answer) {
                        (Some(a), Some(b)) => a == b,
                        _ => false,
                    };
                    pairs.push(DissentPair {
                        method: rec.method.clone(),
                        n_agents: rec.config.n_agents,
                        task_id: rec.task_id.clone(),
                        round: cur.round,
                        source: j.0,
                        target: k.0,
                        source_confidence: src.confidence,
                        mean_source_confidence: 0.0,
                        agree,
                        dissent: 0.0,
                        helpful,
                    });
                }
            }
        }
    }
    let mut sums: BTreeMap<(String, usize, usize), (f64, usize)> = BTreeMap::new();
    for p in &pairs {
        let e = sums.entry((p.method.clone(), p.n_agents, p.source)).or_default();
        e.0 += p.source_confidence;
        e.1 += 1;
    }
    for p in &mut pairs {
        let (sum, n) = sums[&(p.method.clone(), p.n_agents, p.source)];
        p.mean_source_confidence = sum / n as f64;
        p.dissent = dissent_strength(p.mean_source_confidence, p.agree);
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissentAuc {
    pub method: String,
    pub n_agents: usize,
    pub pairs: usize,
    pub helpful: usize,
    /// `None` when every pair has the same label.
    pub auc: Option<f64>,
}

pub fn dissent_auc_table(pairs: &[DissentPair]) -> Vec<DissentAuc> {
    let mut groups: BTreeMap<(String, usize), (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for p in pairs {
        let g = groups.entry((p.method.clone(), p.n_agents)).or_default();
        g.0.push(p.dissent);
        g.1.push(p.helpful);
    }
    groups
        .into_iter()
        .map(|((method, n_agents), (scores, labels))| DissentAuc {
            method,
            n_agents,
            pairs: scores.len(),
            helpful: labels.iter().filter(|l| **l).count(),
            auc: roc_auc(&scores, &labels).ok(),
        })
        .collect()
}

/// Per-method accuracy, latency and cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub tasks: usize,
    pub failures: usize,
    /// Percent of tasks answered correctly; failed tasks count as wrong.
    pub accuracy: f64,
    /// Mean critical-path latency in seconds.
    pub mean_latency: f64,
    pub efficiency: Option<f64>,
    pub mean_calls: f64,
    pub mean_prompt_tokens: f64,
    pub mean_completion_tokens: f64,
    pub total_prompt_tokens: u64,
    pub total_completion_tokens: u64,
    pub synthetic_latency: bool,
}

/// Groups records by method, in order of first appearance.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<MethodSummary> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
    }
    order
        .into_iter()
        .map(|method| {
            let group: Vec<&ExperimentRecord> = records.iter().filter(|r| r.method == method).collect();
            let n = group.len() as f64;
            let correct = group.iter().filter(|r| r.correct && r.error.is_none()).count();
            let accuracy = 100.0 * correct as f64 / n;
            let mean_latency = group.iter().map(|r| r.total_latency).sum::<f64>() / n;
            let prompt: u64 = group.iter().map(|r| r.total_tokens.prompt).sum();
            let completion: u64 = group.iter().map(|r| r.total_tokens.completion).sum();
            MethodSummary {
                method: method.to_string(),
                tasks: group.len(),
                failures: group.iter().filter(|r| r.error.is_some()).count(),
                accuracy,
                mean_latency,
                efficiency: efficiency(accuracy, mean_latency).ok(),
                mean_calls: group.iter().map(|r| r.total_calls as f64).sum::<f64>() / n,
                mean_prompt_tokens: prompt as f64 / n,
                mean_completion_tokens: completion as f64 / n,
                total_prompt_tokens: prompt,
                total_completion_tokens: completion,
                synthetic_latency: group.iter().any(|r| r.synthetic_latency),
            }
        })
        .collect()
}
