//! Task-dependent answer similarity.
//!
//! Choice and numeric answers compare by exact match on their normalized
//! form. Code compares by the Jaccard coefficient of the sets of syntax node
//! types in each snippet.

mod lexer;
mod python;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::{AgentState, TaskKind};

pub use lexer::token_classes;

/// Similarity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub const IDENTICAL: SimilarityScore = SimilarityScore(1.0);
    pub const DISJOINT: SimilarityScore = SimilarityScore(0.0);

    /// Clamps into `[0, 1]`.
    pub fn new(value: f64) -> Self {
        SimilarityScore(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Source of syntax node types for a code snippet.
pub trait SyntaxProvider: Send + Sync {
    fn node_types(&self, code: &str) -> Result<BTreeSet<String>, CoreError>;
}

/// Reference grammar: the Python subset documented in `python.rs`, with
/// node types named after CPython's `ast` classes.
#[derive(Debug, Clone, Copy, Default)]
pub struct PythonSubset;

impl SyntaxProvider for PythonSubset {
    fn node_types(&self, code: &str) -> Result<BTreeSet<String>, CoreError> {
        python::node_types(code).map(|set| set.into_iter().map(str::to_string).collect())
    }
}

pub fn exact_similarity(a: &str, b: &str) -> SimilarityScore {
    if a == b {
        SimilarityScore::IDENTICAL
    } else {
        SimilarityScore::DISJOINT
    }
}

pub fn extract_node_types(
    code: &str,
    provider: &dyn SyntaxProvider,
) -> Result<BTreeSet<String>, CoreError> {
    if code.trim().is_empty() {
        return Err(CoreError::ParseFailure("empty input".into()));
    }
    provider.node_types(code)
}

/// `|a ∩ b| / |a ∪ b|`, and 1 when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> SimilarityScore {
    let union = a.union(b).count();
    if union == 0 {
        return SimilarityScore::IDENTICAL;
    }
    let intersection = a.intersection(b).count();
    SimilarityScore::new(intersection as f64 / union as f64)
}

/// Jaccard over syntax node types.
///
/// If either snippet fails to parse, both are reduced to token-class sets so
/// the comparison stays within one vocabulary.
pub fn ast_jaccard(
    code_a: &str,
    code_b: &str,
    provider: &dyn SyntaxProvider,
) -> Result<SimilarityScore, CoreError> {
    match (
        extract_node_types(code_a, provider),
        extract_node_types(code_b, provider),
    ) {
        (Ok(a), Ok(b)) => Ok(jaccard(&a, &b)),
        _ => {
            let a = token_classes(code_a)?;
            let b = token_classes(code_b)?;
            Ok(jaccard(&a, &b))
        }
    }
}

/// Similarity between two agents' current answers under `kind`.
///
/// Agents without an extractable answer are dissimilar to everyone,
/// themselves included.
pub fn answer_similarity(
    a: &AgentState,
    b: &AgentState,
    kind: TaskKind,
    provider: &dyn SyntaxProvider,
) -> SimilarityScore {
    let (Some(x), Some(y)) = (&a.normalized_answer, &b.normalized_answer) else {
        return SimilarityScore::DISJOINT;
    };
    match kind {
        TaskKind::Choice | TaskKind::Numeric => exact_similarity(x, y),
        TaskKind::Code => ast_jaccard(x, y, provider).unwrap_or(SimilarityScore::DISJOINT),
    }
}
