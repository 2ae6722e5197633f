//! Results files and the analysis tables derived from them.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use concat_core::analysis::{
    dissent_auc_table, dissent_pairs, summarize, transition_histogram, DissentAuc, DissentPair,
    MethodSummary, TransitionLabel,
};
use concat_core::{ExperimentRecord, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};

use crate::dataset::SchemaError;

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub repetition: usize,
    #[serde(flatten)]
    pub record: ExperimentRecord,
}

pub fn read_results(path: &Path) -> Result<Vec<ResultLine>, SchemaError> {
    let file = std::fs::File::open(path).map_err(|e| SchemaError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| SchemaError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| SchemaError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        let version = value.get("schema_version");
        if version.and_then(|v| v.as_u64()) != Some(SCHEMA_VERSION as u64) {
            return Err(SchemaError::Version {
                line: line_no,
                found: version.map_or("missing".into(), |v| v.to_string()),
                expected: SCHEMA_VERSION,
            });
        }
        let parsed: ResultLine = serde_json::from_value(value).map_err(|e| SchemaError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(parsed);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub method: String,
    pub n_agents: usize,
    pub round: usize,
    pub in_degree: usize,
    pub label: String,
    pub helpful: bool,
    pub count: usize,
    pub bucket_total: usize,
    pub proportion: f64,
}

const TRANSITION_HEADERS: [&str; 9] = [
    "method",
    "n_agents",
    "round",
    "in_degree",
    "label",
    "helpful",
    "count",
    "bucket_total",
    "proportion",
];

const AUC_HEADERS: [&str; 5] = ["method", "n_agents", "pairs", "helpful", "auc"];

const PAIR_HEADERS: [&str; 11] = [
    "method",
    "n_agents",
    "task_id",
    "round",
    "source",
    "target",
    "source_confidence",
    "mean_source_confidence",
    "agree",
    "dissent",
    "helpful",
];

const EFFICIENCY_HEADERS: [&str; 12] = [
    "method",
    "tasks",
    "failures",
    "accuracy",
    "mean_latency",
    "efficiency",
    "mean_calls",
    "mean_prompt_tokens",
    "mean_completion_tokens",
    "total_prompt_tokens",
    "total_completion_tokens",
    "synthetic_latency",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: usize,
    pub transitions: Vec<TransitionRow>,
    pub dissent_auc: Vec<DissentAuc>,
    pub efficiency: Vec<MethodSummary>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, headers: &[&str], rows: &[T]) -> Result<(), ReportError> {
    let err = |e: &dyn std::fmt::Display| ReportError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| err(&e))?;
    w.write_record(headers).map_err(|e| err(&e))?;
    for row in rows {
        w.serialize(row).map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ReportError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    std::fs::write(path, text).map_err(|e| ReportError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn build_report(records: &[ExperimentRecord]) -> (Report, Vec<DissentPair>) {
    let mut transitions = Vec::new();
    for bucket in transition_histogram(records) {
        let total = bucket.total();
        for label in TransitionLabel::ALL {
            transitions.push(TransitionRow {
                method: bucket.key.method.clone(),
                n_agents: bucket.key.n_agents,
                round: bucket.key.round,
                in_degree: bucket.key.in_degree,
                label: label.as_str().to_string(),
                helpful: label.helpful(),
                count: bucket.count(label),
                bucket_total: total,
                proportion: bucket.proportion(label),
            });
        }
    }
    let pairs = dissent_pairs(records);
    let report = Report {
        records: records.len(),
        transitions,
        dissent_auc: dissent_auc_table(&pairs),
        efficiency: summarize(records),
    };
    (report, pairs)
}

/// Writes transition, dissent-AUC and efficiency tables (CSV and JSON)
/// into `out_dir`.
pub fn emit_report(results: &Path, out_dir: &Path) -> Result<Report, ReportError> {
    let lines = read_results(results)?;
    let records: Vec<ExperimentRecord> = lines.into_iter().map(|l| l.record).collect();
    let (report, pairs) = build_report(&records);
    std::fs::create_dir_all(out_dir).map_err(|e| ReportError::Write {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    write_csv(&out_dir.join("transitions.csv"), &TRANSITION_HEADERS, &report.transitions)?;
    write_csv(&out_dir.join("dissent_auc.csv"), &AUC_HEADERS, &report.dissent_auc)?;
    write_csv(&out_dir.join("dissent_pairs.csv"), &PAIR_HEADERS, &pairs)?;
    write_csv(&out_dir.join("efficiency.csv"), &EFFICIENCY_HEADERS, &report.efficiency)?;
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}
