use std::fs;
use std::path::{Path, PathBuf};

use concat_cli::config::{BackendSpec, ExperimentConfig};
use concat_cli::report::{emit_report, read_results};
use concat_cli::runner::{recompute_summary, run_experiment};
use concat_cli::SchemaError;
use concat_core::{Predictor, TaskKind};

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn sim_config(dir: &Path, methods: &[&str], repetitions: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        repo_file("configs/data/arith50.jsonl"),
        TaskKind::Numeric,
        BackendSpec::Sim(repo_file("configs/sim_profiles.json")),
    );
    cfg.methods = methods.iter().map(|m| m.to_string()).collect();
    cfg.repetitions = repetitions;
    cfg.run.n_agents = 4;
    cfg.run.refinement_rounds = 1;
    cfg.run.seed = 11;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sim_config(dir.path(), &["concat", "vanilla:chain", "sc_cot"], 2);
    cfg.predictor = Predictor::ExactEuc;
    cfg.test_command = Some("python3 {file}".into());
    cfg.http.confidence_fallback = Some(0.5);
    let path = dir.path().join("cfg.json");
    cfg.save(&path).unwrap();
    assert_eq!(ExperimentConfig::load_with(&path, |_| None).unwrap(), cfg);
}

#[test]
fn config_accepts_single_method_and_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let text = format!(
        r#"{{"dataset": {:?}, "kind": "numeric", "method": "cot", "backend": "http:http://a/v1"}}"#,
        repo_file("configs/data/arith50.jsonl")
    );
    fs::write(&path, text).unwrap();
    let env = |k: &str| match k {
        "CONCAT_ENDPOINT" => Some("http://b/v1".to_string()),
        "CONCAT_API_KEY" => Some("secret".to_string()),
        _ => None,
    };
    let cfg = ExperimentConfig::load_with(&path, env).unwrap();
    assert_eq!(cfg.methods, vec!["cot"]);
    assert_eq!(cfg.backend, BackendSpec::Http("http://b/v1".into()));
    assert_eq!(cfg.http.api_key.as_deref(), Some("secret"));
    assert_eq!(cfg.repetitions, 3);
    assert!(cfg.snapshot().http.api_key.is_none());
}

#[test]
fn config_rejects_missing_files_and_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sim_config(dir.path(), &["concat"], 1);
    cfg.dataset = dir.path().join("nope.jsonl");
    assert!(cfg.validate().is_err());
    let mut cfg = sim_config(dir.path(), &["concat"], 1);
    cfg.methods = vec!["vanilla:ring".into()];
    assert!(cfg.validate().is_err());
    let path = dir.path().join("cfg.json");
    fs::write(&path, r#"{"dataset":"x","kind":"numeric","backend":"sim:y","bogus":1}"#).unwrap();
    assert!(ExperimentConfig::parse_file(&path).is_err());
    assert!("ftp:x".parse::<BackendSpec>().is_err());
}

#[test]
fn sim_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_experiment(&sim_config(a.path(), &["concat"], 1)).unwrap();
    let mut cfg_b = sim_config(b.path(), &["concat"], 1);
    cfg_b.parallelism = 1;
    run_experiment(&cfg_b).unwrap();
    for f in ["results.jsonl", "summary.json", "metrics.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert!(!ra.failed());
    assert!(a.path().join("config.json").is_file());
}

#[test]
fn cot_is_one_call_per_task() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&sim_config(dir.path(), &["cot"], 1)).unwrap();
    let lines = read_results(&dir.path().join("results.jsonl")).unwrap();
    assert_eq!(lines.len(), 50);
    assert!(lines.iter().all(|l| l.record.total_calls == 1));
}

#[test]
fn summary_averages_repetitions_and_is_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&sim_config(dir.path(), &["concat", "cot"], 3)).unwrap();
    assert_eq!(out.metrics.len(), 6);
    for m in &out.summary.methods {
        assert_eq!(m.repetitions, 3);
        assert_eq!(m.accuracy_by_repetition.len(), 3);
        let mean = m.accuracy_by_repetition.iter().sum::<f64>() / 3.0;
        assert!((m.accuracy - mean).abs() < 1e-9);
    }
    let seeds: Vec<u64> = out.metrics.iter().filter(|m| m.method == "cot").map(|m| m.seed).collect();
    assert_eq!(seeds, vec![11, 12, 13]);
    let recomputed = recompute_summary(&dir.path().join("results.jsonl")).unwrap();
    assert_eq!(recomputed, out.summary);
    let on_disk: concat_cli::RunSummary =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, out.summary);
}

#[test]
fn empty_results_give_empty_tables() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("results.jsonl");
    fs::write(&results, "").unwrap();
    let report = emit_report(&results, dir.path()).unwrap();
    assert_eq!(report.records, 0);
    assert!(report.transitions.is_empty() && report.dissent_auc.is_empty() && report.efficiency.is_empty());
    let csv = fs::read_to_string(dir.path().join("efficiency.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn mixed_methods_get_one_row_each() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&sim_config(dir.path(), &["concat", "llm_debate", "cot"], 1)).unwrap();
    let report = emit_report(&dir.path().join("results.jsonl"), &dir.path().join("report")).unwrap();
    let methods: Vec<&str> = report.efficiency.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, vec!["concat", "llm_debate", "cot"]);
    let auc_methods: Vec<&str> = report.dissent_auc.iter().map(|r| r.method.as_str()).collect();
    assert!(auc_methods.contains(&"llm_debate"));
    for f in ["transitions.csv", "dissent_auc.csv", "dissent_pairs.csv", "efficiency.csv", "report.json"] {
        assert!(dir.path().join("report").join(f).is_file(), "{f}");
    }
}

#[test]
fn schema_version_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&sim_config(dir.path(), &["cot"], 1)).unwrap();
    let path = dir.path().join("results.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let bumped = text.replacen("\"schema_version\":1", "\"schema_version\":99", 1);
    assert_ne!(bumped, text);
    fs::write(&path, bumped).unwrap();
    match read_results(&path) {
        Err(SchemaError::Version { line: 1, expected: 1, .. }) => {}
        other => panic!("{other:?}"),
    }
    assert!(emit_report(&path, dir.path()).is_err());
}
