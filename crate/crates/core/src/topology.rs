//! Benefit-driven edge pruning and the fixed baseline topologies.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benefit::BenefitMatrix;
use crate::error::CoreError;
use crate::types::{AgentId, Topology};

/// Nearest-rank percentile: the element at 1-based rank `ceil(q/100 * n)` of
/// the ascending values, with `q = 0` giving the minimum.
pub fn percentile(values: &[f64], q: f64) -> Result<f64, CoreError> {
    if values.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // absorb float noise such as (1 - 0.7) * 100 = 30.000000000000004
    let rank = ((q.clamp(0.0, 100.0) / 100.0) * n as f64 - 1e-9).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneResult {
    pub threshold: f64,
    /// Kept leader-to-leader edges, over the full agent index space.
    pub kept: Topology,
    pub dropped: BTreeSet<(AgentId, AgentId)>,
}

/// Keeps edges whose benefit reaches `max(percentile((1 - r) * 100), tau_min)`.
///
/// `n` is the agent count of the topology the kept edges live in. An empty
/// matrix (a single leader) yields no edges and a threshold of `tau_min`.
pub fn prune_edges(
    benefits: &BenefitMatrix,
    n: usize,
    retention_rate: f64,
    tau_min: f64,
) -> Result<PruneResult, CoreError> {
    if !(0.0..=1.0).contains(&retention_rate) {
        return Err(CoreError::InvalidConfig(format!(
            "retention_rate {retention_rate} not in [0, 1]"
        )));
    }
    let mut kept = Topology::empty(n);
    let mut dropped = BTreeSet::new();
    if benefits.is_empty() {
        return Ok(PruneResult {
            threshold: tau_min,
            kept,
            dropped,
        });
    }
    let cut = percentile(&benefits.values(), (1.0 - retention_rate) * 100.0)?;
    let threshold = cut.max(tau_min);
    for e in &benefits.entries {
        if e.benefit >= threshold {
            kept.insert(e.source, e.target)?;
        } else {
            dropped.insert((e.source, e.target));
        }
    }
    Ok(PruneResult {
        threshold,
        kept,
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Star,
    Chain,
    Random,
    Layered,
    Full,
    Debate,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Star => "star",
            TopologyKind::Chain => "chain",
            TopologyKind::Random => "random",
            TopologyKind::Layered => "layered",
            TopologyKind::Full => "full",
            TopologyKind::Debate => "debate",
        }
    }
}

impl FromStr for TopologyKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "star" => TopologyKind::Star,
            "chain" => TopologyKind::Chain,
            "random" => TopologyKind::Random,
            "layered" => TopologyKind::Layered,
            "full" | "fully_connected" | "fullconnected" => TopologyKind::Full,
            "debate" => TopologyKind::Debate,
            other => return Err(CoreError::InvalidConfig(format!("unknown topology `{other}`"))),
        })
    }
}

/// Fixed communication graphs for the vanilla multi-agent baselines.
///
/// * star: hub 0, edges `0 -> i` and `i -> 0`
/// * chain: `i -> i + 1`
/// * random: each ordered pair independently with probability `density`
/// * layered: first `ceil(n/2)` agents feed every agent of the remaining layer
/// * full, debate: every ordered pair
pub fn build_baseline_topology(
    kind: TopologyKind,
    n: usize,
    seed: u64,
    density: f64,
) -> Result<Topology, CoreError> {
    if n == 0 {
        return Err(CoreError::InvalidConfig("topology needs at least one agent".into()));
    }
    let ids = (0..n).map(AgentId);
    let pairs = || {
        ids.clone()
            .flat_map(move |s| (0..n).map(AgentId).filter(move |d| *d != s).map(move |d| (s, d)))
    };
    let edges: Vec<(AgentId, AgentId)> = match kind {
        TopologyKind::Star => (1..n)
            .flat_map(|i| [(AgentId(0), AgentId(i)), (AgentId(i), AgentId(0))])
            .collect(),
        TopologyKind::Chain => (1..n).map(|i| (AgentId(i - 1), AgentId(i))).collect(),
        TopologyKind::Random => {
            if !(density > 0.0 && density <= 1.0) {
                return Err(CoreError::InvalidConfig(format!("density {density} not in (0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            pairs().filter(|_| rng.random::<f64>() < density).collect()
        }
        TopologyKind::Layered => {
            let split = n.div_ceil(2);
            (0..split)
                .flat_map(|s| (split..n).map(move |d| (AgentId(s), AgentId(d))))
                .collect()
        }
        TopologyKind::Full | TopologyKind::Debate => pairs().collect(),
    };
    Topology::from_edges(n, edges)
}
