//! Theory-of-Mind collaboration benefit prediction.
//!
//! For a focal leader `k` and a source leader `j`, the predictor classifies
//! `j` as a supporter or challenger of `k` by answer similarity, scales `j`'s
//! confidence into an effective signal, and scores the edge `j -> k`:
//!
//! * supporter: `alpha * (signal - c_k)`
//! * challenger: `4 c_k (1 - c_k) signal - alpha * p_stay + alpha * (1 - c_k)`
//!
//! where `p_stay = (1 + 2 c_k) / (2 + 2 c_k + 2 signal)` is the Beta-Binomial
//! posterior mean of the focal agent keeping its answer.
//!
//! The second half of this module is the exact Bayesian expected utility of
//! communication that the challenger heuristic linearizes. It is used to
//! verify the heuristic and is available as an alternative predictor.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::similarity::SimilarityScore;
use crate::types::{AgentId, AgentState, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Supporter,
    Challenger,
}

pub fn classify_relation(s_jk: SimilarityScore, theta_sim: f64) -> Relation {
    if s_jk.value() >= theta_sim {
        Relation::Supporter
    } else {
        Relation::Challenger
    }
}

/// Source confidence scaled by similarity (supporter) or dissimilarity (challenger).
pub fn effective_signal(c_j: f64, s_jk: f64, rel: Relation) -> f64 {
    match rel {
        Relation::Supporter => c_j * s_jk,
        Relation::Challenger => c_j * (1.0 - s_jk),
    }
}

/// Posterior probability that the focal agent keeps its answer.
pub fn p_stay(c_k: f64, c_hat_j: f64) -> f64 {
    (1.0 + 2.0 * c_k) / (2.0 + 2.0 * c_k + 2.0 * c_hat_j)
}

/// Correction gain minus inertia discount plus epistemic openness.
pub fn benefit_challenger(c_k: f64, c_hat_j: f64, alpha: f64) -> f64 {
    let correction_gain = 4.0 * c_k * (1.0 - c_k) * c_hat_j;
    let inertia = alpha * p_stay(c_k, c_hat_j);
    let openness = alpha * (1.0 - c_k);
    correction_gain - inertia + openness
}

pub fn benefit_supporter(c_k: f64, c_hat_j: f64, alpha: f64) -> f64 {
    alpha * (c_hat_j - c_k)
}

/// Predicted benefit of `target` referencing `source`.
pub fn tom_predict(
    target: &AgentState,
    source: &AgentState,
    s_jk: SimilarityScore,
    cfg: &RunConfig,
) -> f64 {
    let rel = classify_relation(s_jk, cfg.theta_sim);
    let signal = effective_signal(source.confidence, s_jk.value(), rel);
    match rel {
        Relation::Supporter => benefit_supporter(target.confidence, signal, cfg.alpha),
        Relation::Challenger => benefit_challenger(target.confidence, signal, cfg.alpha),
    }
}

/// Which formula scores challenger edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    /// The linearized heuristic with inertia and openness terms.
    #[default]
    Heuristic,
    /// The exact expected utility of communication, with confidences clamped
    /// into `[1e-6, 1 - 1e-6]` so that corner beliefs stay finite.
    ExactEuc,
}

const EXACT_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenefitEntry {
    pub source: AgentId,
    pub target: AgentId,
    pub benefit: f64,
}

/// Benefits for every ordered pair of distinct leaders, sorted by (source, target).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BenefitMatrix {
    pub entries: Vec<BenefitEntry>,
}

impl BenefitMatrix {
    /// Builds a matrix from arbitrary entries; rejects self-pairs.
    pub fn from_entries(mut entries: Vec<BenefitEntry>) -> Result<Self, CoreError> {
        if entries.iter().any(|e| e.source == e.target) {
            return Err(CoreError::InvalidTopology("benefit matrix has a diagonal entry".into()));
        }
        entries.sort_by_key(|e| (e.source, e.target));
        Ok(BenefitMatrix { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, source: AgentId, target: AgentId) -> Option<f64> {
        self.entries
            .binary_search_by_key(&(source, target), |e| (e.source, e.target))
            .ok()
            .map(|i| self.entries[i].benefit)
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.benefit).collect()
    }
}

/// Scores every ordered leader pair.
///
/// `similarity(j, k)` gives the answer similarity between two agents.
pub fn benefit_matrix(
    leaders: &[AgentId],
    states: &[AgentState],
    cfg: &RunConfig,
    predictor: Predictor,
    similarity: impl Fn(AgentId, AgentId) -> SimilarityScore,
) -> BenefitMatrix {
    let mut entries = Vec::with_capacity(leaders.len() * leaders.len().saturating_sub(1));
    for &source in leaders {
        for &target in leaders {
            if source == target {
                continue;
            }
            let s_jk = similarity(source, target);
            let (tgt, src) = (&states[target.0], &states[source.0]);
            let benefit = match predictor {
                Predictor::Heuristic => tom_predict(tgt, src, s_jk, cfg),
                Predictor::ExactEuc => {
                    let rel = classify_relation(s_jk, cfg.theta_sim);
                    let signal = effective_signal(src.confidence, s_jk.value(), rel);
                    match rel {
                        Relation::Supporter => benefit_supporter(tgt.confidence, signal, cfg.alpha),
                        Relation::Challenger => {
                            let clamp = |x: f64| x.clamp(EXACT_CLAMP, 1.0 - EXACT_CLAMP);
                            exact_euc(clamp(tgt.confidence), clamp(signal))
                                .expect("clamped beliefs are interior")
                        }
                    }
                }
            };
            entries.push(BenefitEntry {
                source,
                target,
                benefit,
            });
        }
    }
    entries.sort_by_key(|e| (e.source, e.target));
    BenefitMatrix { entries }
}

/// Exact expected utility of communication for a challenger signal.
///
/// The focal agent holds answer `a_k` with prior `c_k`; the challenger's
/// signal has likelihood `signal` under "`a_j` is correct" and `1 - signal`
/// under "`a_k` is correct". The value is the posterior probability of the
/// challenger's answer, `(1 - c_k) signal / Z`, minus the prior expected
/// correctness `c_k`, with `Z = c_k (1 - signal) + (1 - c_k) signal`. It is
/// positive exactly when `signal` exceeds [`correction_threshold`]`(c_k)`,
/// nondecreasing in `signal`, nonincreasing in `c_k`, and its expansion
/// around `signal = 0.5` is [`taylor_benefit`].
///
/// Inputs must lie strictly inside `(0, 1)`.
pub fn exact_euc(c_k: f64, signal: f64) -> Result<f64, CoreError> {
    let open = |x: f64| x > 0.0 && x < 1.0;
    if !open(c_k) || !open(signal) {
        return Err(CoreError::DegenerateBelief { c_k, signal });
    }
    let keep = c_k * (1.0 - signal);
    let switch = (1.0 - c_k) * signal;
    let z = keep + switch;
    if z <= 0.0 {
        return Err(CoreError::DegenerateBelief { c_k, signal });
    }
    Ok(switch / z - c_k)
}

/// Minimum challenger signal for a positive exact EUC: `c^2 / (1 - 2c + 2c^2)`.
pub fn correction_threshold(c_k: f64) -> f64 {
    // the denominator is at least 1/2 on [0, 1]
    c_k * c_k / (1.0 - 2.0 * c_k + 2.0 * c_k * c_k)
}

/// First-order expansion of [`exact_euc`] around `signal = 0.5`.
pub fn taylor_benefit(c_k: f64, signal: f64) -> f64 {
    (1.0 - 2.0 * c_k) + 4.0 * c_k * (1.0 - c_k) * (signal - 0.5)
}
