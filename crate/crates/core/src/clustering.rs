//! Consensus clustering and per-cluster leader selection.

use serde::{Deserialize, Serialize};

use crate::similarity::{answer_similarity, SyntaxProvider};
use crate::types::{AgentId, AgentState, TaskKind};

/// Agents whose current answers agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusCluster {
    /// Ascending, nonempty.
    pub members: Vec<AgentId>,
    /// Normalized answer of the cluster's most confident member.
    pub representative_answer: Option<String>,
}

impl ConsensusCluster {
    pub fn lowest(&self) -> AgentId {
        self.members[0]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// One leader per cluster, in cluster order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LeaderSet {
    pub leaders: Vec<AgentId>,
}

impl LeaderSet {
    pub fn len(&self) -> usize {
        self.leaders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaders.is_empty()
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.leaders.contains(&id)
    }
}

/// Partitions agents by answer similarity.
///
/// Choice and numeric answers group by exact match. Code answers go through
/// average-linkage agglomerative clustering on AST Jaccard similarity: the
/// closest pair of clusters merges while its mean pairwise similarity is at
/// least `code_threshold`. Agents without an extractable answer always stay
/// singletons. Clusters come back ordered by their lowest member.
pub fn cluster_by_similarity(
    states: &[AgentState],
    kind: TaskKind,
    code_threshold: f64,
    provider: &dyn SyntaxProvider,
) -> Vec<ConsensusCluster> {
    let groups = match kind {
        TaskKind::Choice | TaskKind::Numeric => exact_groups(states),
        TaskKind::Code => {
            let n = states.len();
            let mut sim = vec![vec![0.0; n]; n];
            for i in 0..n {
                sim[i][i] = 1.0;
                for j in (i + 1)..n {
                    let s = answer_similarity(&states[i], &states[j], kind, provider).value();
                    sim[i][j] = s;
                    sim[j][i] = s;
                }
            }
            let mergeable: Vec<bool> = states.iter().map(|s| s.normalized_answer.is_some()).collect();
            average_linkage(&sim, &mergeable, code_threshold)
        }
    };
    groups
        .into_iter()
        .map(|members| {
            let leader = most_confident(&members, states);
            ConsensusCluster {
                representative_answer: states[leader.0].normalized_answer.clone(),
                members,
            }
        })
        .collect()
}

fn exact_groups(states: &[AgentState]) -> Vec<Vec<AgentId>> {
    let mut groups: Vec<(Option<&str>, Vec<AgentId>)> = Vec::new();
    for (i, state) in states.iter().enumerate() {
        let key = state.normalized_answer.as_deref();
        let existing = key.and_then(|k| groups.iter_mut().find(|(g, _)| *g == Some(k)));
        match existing {
            Some((_, members)) => members.push(AgentId(i)),
            None => groups.push((key, vec![AgentId(i)])),
        }
    }
    groups.into_iter().map(|(_, members)| members).collect()
}

/// Average-linkage agglomeration over a symmetric similarity matrix.
///
/// Ties between candidate merges resolve to the pair whose lowest members
/// come first lexicographically.
pub fn average_linkage(sim: &[Vec<f64>], mergeable: &[bool], threshold: f64) -> Vec<Vec<AgentId>> {
    let mut clusters: Vec<Vec<usize>> = (0..sim.len()).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            if !clusters[a].iter().all(|&i| mergeable[i]) {
                continue;
            }
            for b in (a + 1)..clusters.len() {
                if !clusters[b].iter().all(|&i| mergeable[i]) {
                    continue;
                }
                let total: f64 = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| sim[i][j]))
                    .sum();
                let mean = total / (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|(score, _, _)| mean > score) {
                    best = Some((mean, a, b));
                }
            }
        }
        match best {
            Some((score, a, b)) if score >= threshold => {
                let absorbed = clusters.remove(b);
                clusters[a].extend(absorbed);
                clusters[a].sort_unstable();
            }
            _ => break,
        }
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
        .into_iter()
        .map(|c| c.into_iter().map(AgentId).collect())
        .collect()
}

fn most_confident(members: &[AgentId], states: &[AgentState]) -> AgentId {
    // members ascend, so a strict comparison keeps the lowest index on ties
    let mut best = members[0];
    for &m in &members[1..] {
        if states[m.0].confidence > states[best.0].confidence {
            best = m;
        }
    }
    best
}

/// Picks the highest-confidence member of each cluster, lowest index on ties.
pub fn select_leaders(clusters: &[ConsensusCluster], states: &[AgentState]) -> LeaderSet {
    LeaderSet {
        leaders: clusters
            .iter()
            .map(|c| most_confident(&c.members, states))
            .collect(),
    }
}
