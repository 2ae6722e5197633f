//! Experiment execution: methods x repetitions x tasks.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use concat_core::analysis::efficiency;
use concat_core::backends::AgentBackend;
use concat_core::{
    ExperimentRecord, HttpBackend, HttpConfig, Orchestrator, PythonSubset, SimBackend, SimProfileSet,
    Task, SCHEMA_VERSION,
};
use serde::{Deserialize, Serialize};

use crate::config::{BackendSpec, ExperimentConfig};
use crate::dataset::load_dataset;
use crate::hook::CommandTester;
use crate::report::{read_results, write_csv, write_json, ResultLine};

/// A run fails when more than this fraction of its tasks fail.
pub const MAX_FAILURE_RATE: f64 = 0.10;

/// Metrics of one (method, repetition) pass over the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub method: String,
    pub repetition: usize,
    pub seed: u64,
    pub tasks: usize,
    pub failures: usize,
    /// Percent correct; failed tasks count as wrong.
    pub accuracy: f64,
    /// Mean critical-path latency per task, seconds.
    pub mean_latency: f64,
    pub efficiency: Option<f64>,
    pub mean_calls: f64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

const METRIC_HEADERS: [&str; 11] = [
    "method",
    "repetition",
    "seed",
    "tasks",
    "failures",
    "accuracy",
    "mean_latency",
    "efficiency",
    "mean_calls",
    "prompt_tokens",
    "completion_tokens",
];

/// Per-method figures averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub repetitions: usize,
    pub tasks_per_repetition: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub accuracy: f64,
    pub accuracy_by_repetition: Vec<f64>,
    pub mean_latency: f64,
    /// Mean accuracy over mean latency.
    pub efficiency: Option<f64>,
    pub mean_calls: f64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub records: usize,
    pub synthetic_latency: bool,
    pub methods: Vec<MethodResult>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub metrics: Vec<RunMetrics>,
    pub output_dir: PathBuf,
    /// Worst per-run failure fraction.
    pub failure_rate: f64,
}

impl RunOutcome {
    pub fn failed(&self) -> bool {
        self.failure_rate > MAX_FAILURE_RATE
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn run_metrics(method: &str, repetition: usize, records: &[&ExperimentRecord]) -> RunMetrics {
    let n = records.len().max(1) as f64;
    let correct = records.iter().filter(|r| r.correct && r.error.is_none()).count();
    let accuracy = 100.0 * correct as f64 / n;
    let mean_latency = records.iter().map(|r| r.total_latency).sum::<f64>() / n;
    RunMetrics {
        method: method.to_string(),
        repetition,
        seed: records.first().map_or(0, |r| r.config.seed),
        tasks: records.len(),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        accuracy,
        mean_latency,
        efficiency: efficiency(accuracy, mean_latency).ok(),
        mean_calls: records.iter().map(|r| r.total_calls as f64).sum::<f64>() / n,
        prompt_tokens: records.iter().map(|r| r.total_tokens.prompt).sum(),
        completion_tokens: records.iter().map(|r| r.total_tokens.completion).sum(),
    }
}

/// Derives per-run metrics and the summary from result lines alone.
pub fn summarize_lines(lines: &[ResultLine]) -> (Vec<RunMetrics>, RunSummary) {
    let mut methods: Vec<&str> = Vec::new();
    for l in lines {
        if !methods.contains(&l.record.method.as_str()) {
            methods.push(&l.record.method);
        }
    }
    let mut metrics = Vec::new();
    let mut results = Vec::new();
    for method in methods {
        let mut reps: Vec<usize> = lines
            .iter()
            .filter(|l| l.record.method == method)
            .map(|l| l.repetition)
            .collect();
        reps.sort_unstable();
        reps.dedup();
        let per_rep: Vec<RunMetrics> = reps
            .iter()
            .map(|&rep| {
                let records: Vec<&ExperimentRecord> = lines
                    .iter()
                    .filter(|l| l.record.method == method && l.repetition == rep)
                    .map(|l| &l.record)
                    .collect();
                run_metrics(method, rep, &records)
            })
            .collect();
        let total_tasks: usize = per_rep.iter().map(|m| m.tasks).sum();
        let failures: usize = per_rep.iter().map(|m| m.failures).sum();
        let accuracy = mean(per_rep.iter().map(|m| m.accuracy));
        let mean_latency = mean(per_rep.iter().map(|m| m.mean_latency));
        results.push(MethodResult {
            method: method.to_string(),
            repetitions: per_rep.len(),
            tasks_per_repetition: per_rep.first().map_or(0, |m| m.tasks),
            failures,
            failure_rate: if total_tasks == 0 { 0.0 } else { failures as f64 / total_tasks as f64 },
            accuracy,
            accuracy_by_repetition: per_rep.iter().map(|m| m.accuracy).collect(),
            mean_latency,
            efficiency: efficiency(accuracy, mean_latency).ok(),
            mean_calls: mean(per_rep.iter().map(|m| m.mean_calls)),
            prompt_tokens: per_rep.iter().map(|m| m.prompt_tokens).sum(),
            completion_tokens: per_rep.iter().map(|m| m.completion_tokens).sum(),
        });
        metrics.extend(per_rep);
    }
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        records: lines.len(),
        synthetic_latency: lines.iter().any(|l| l.record.synthetic_latency),
        methods: results,
    };
    (metrics, summary)
}

/// Rebuilds the summary from a results file.
pub fn recompute_summary(results: &Path) -> Result<RunSummary> {
    let lines = read_results(results)?;
    Ok(summarize_lines(&lines).1)
}

pub fn build_backend(cfg: &ExperimentConfig) -> Result<Box<dyn AgentBackend>> {
    Ok(match &cfg.backend {
        BackendSpec::Sim(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let profiles: SimProfileSet =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Box::new(SimBackend::new(profiles)?)
        }
        BackendSpec::Http(url) => {
            let http = &cfg.http;
            Box::new(HttpBackend::new(HttpConfig {
                endpoint: url.clone(),
                model: http.model.clone(),
                api_key: http.api_key.clone(),
                timeout_secs: http.timeout_secs,
                max_retries: http.max_retries,
                confidence_fallback: http.confidence_fallback,
            })?)
        }
    })
}

/// Applies `f` to every item on up to `workers` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().unwrap() = Some(f(item));
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every slot is filled"))
        .collect()
}

/// Runs every method over the dataset `repetitions` times and writes
/// `config.json`, `results.jsonl`, `metrics.csv` and `summary.json` into the
/// output directory. Repetition `r` uses seed `run.seed + r`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let methods = cfg.parsed_methods()?;
    let tasks: Vec<Task> = load_dataset(&cfg.dataset, cfg.kind)?;
    let backend = build_backend(cfg)?;
    let tester = cfg.test_command.as_ref().map(CommandTester::new);
    let orch = Orchestrator {
        backend: backend.as_ref(),
        syntax: &PythonSubset,
        predictor: cfg.predictor,
        tester: tester.as_ref().map(|t| t as _),
    };
    let out = &cfg.output_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    cfg.snapshot().save(&out.join("config.json"))?;

    let mut lines = Vec::new();
    for method in &methods {
        for repetition in 0..cfg.repetitions {
            let mut run = cfg.run.clone();
            run.seed = cfg.run.seed.wrapping_add(repetition as u64);
            tracing::info!(method = %method, repetition, tasks = tasks.len(), "running");
            let records = parallel_map(&tasks, cfg.parallelism, |task| match orch.run(*method, task, &run) {
                Ok(r) => r,
                Err(failure) => {
                    tracing::warn!(error = %failure.error, "task failed");
                    *failure.partial
                }
            });
            lines.extend(records.into_iter().map(|record| ResultLine { repetition, record }));
        }
    }

    let mut jsonl = String::new();
    for l in &lines {
        jsonl.push_str(&serde_json::to_string(l)?);
        jsonl.push('\n');
    }
    fs::write(out.join("results.jsonl"), jsonl)?;
    let (metrics, summary) = summarize_lines(&lines);
    write_csv(&out.join("metrics.csv"), &METRIC_HEADERS, &metrics)?;
    write_json(&out.join("summary.json"), &summary)?;
    let failure_rate = metrics
        .iter()
        .map(|m| if m.tasks == 0 { 0.0 } else { m.failures as f64 / m.tasks as f64 })
        .fold(0.0, f64::max);
    Ok(RunOutcome {
        summary,
        metrics,
        output_dir: out.clone(),
        failure_rate,
    })
}
