//! Consensus- and confidence-driven multi-agent collaboration.
//!
//! Agents answer a task independently, group into consensus clusters, and
//! elect their most confident member as leader. Each refinement round scores
//! every ordered leader pair with a Theory-of-Mind benefit predictor, prunes
//! low-benefit edges, and re-invokes only the leaders with the answers that
//! survived pruning. A final aggregation call merges all agents' answers.

pub mod analysis;
pub mod backends;
pub mod benefit;
pub mod clustering;
pub mod error;
pub mod normalize;
pub mod orchestrator;
pub mod prompts;
pub mod similarity;
pub mod topology;
pub mod types;

pub use analysis::{
    dissent_strength, efficiency, label_transition, roc_auc, transition_histogram, TransitionLabel,
};
pub use backends::{
    mean_token_probability, AgentBackend, GenerationRequest, GenerationResult, HttpBackend,
    HttpConfig, SimAgentProfile, SimBackend, SimProfileSet,
};
pub use benefit::{
    benefit_challenger, benefit_matrix, benefit_supporter, correction_threshold, exact_euc,
    taylor_benefit, BenefitMatrix, Predictor,
};
pub use clustering::{cluster_by_similarity, select_leaders, ConsensusCluster, LeaderSet};
pub use error::{BackendError, CallError, Caller, CoreError};
pub use normalize::normalize_answer;
pub use orchestrator::{ExperimentRecord, Method, Orchestrator, RoundTrace, SCHEMA_VERSION};
pub use similarity::{ast_jaccard, exact_similarity, PythonSubset, SimilarityScore, SyntaxProvider};
pub use topology::{build_baseline_topology, percentile, prune_edges, PruneResult, TopologyKind};
pub use types::{AgentId, AgentState, RunConfig, Task, TaskKind, Topology};
