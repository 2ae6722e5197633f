use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use concat_cli::config::{BackendSpec, ExperimentConfig};
use concat_cli::math::math_checks;
use concat_cli::report::emit_report;
use concat_cli::runner::{run_experiment, MAX_FAILURE_RATE};
use concat_core::TaskKind;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "concat", version, about = "Consensus-aware multi-agent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method over a dataset.
    Run(RunArgs),
    /// Build transition, dissent-AUC and efficiency tables from results.jsonl.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Defaults to the directory holding the results file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load and check a config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the belief-update identities on the 99x99 grid.
    BenchMath,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    kind: Option<TaskKind>,
    /// May be repeated; replaces the configured methods.
    #[arg(long = "method")]
    methods: Vec<String>,
    /// `http:<endpoint>` or `sim:<profile file>`.
    #[arg(long)]
    backend: Option<BackendSpec>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::parse_file(&self.config)?;
        cfg.apply_env(|k| std::env::var(k).ok());
        if let Some(d) = &self.dataset {
            cfg.dataset = d.clone();
        }
        if let Some(k) = self.kind {
            cfg.kind = k;
        }
        if !self.methods.is_empty() {
            cfg.methods = self.methods.clone();
        }
        if let Some(b) = &self.backend {
            cfg.backend = b.clone();
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(r) = self.repetitions {
            cfg.repetitions = r;
        }
        if let Some(p) = self.parallelism {
            cfg.parallelism = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = args.config()?;
    let outcome = run_experiment(&cfg)?;
    for m in &outcome.summary.methods {
        println!(
            "{:<16} accuracy {:6.2}%  latency {:8.3}s  calls {:6.2}  failures {}",
            m.method, m.accuracy, m.mean_latency, m.mean_calls, m.failures
        );
    }
    println!("wrote {}", outcome.output_dir.display());
    if outcome.failed() {
        eprintln!(
            "error: {:.1}% of tasks failed in the worst run (limit {:.0}%)",
            100.0 * outcome.failure_rate,
            100.0 * MAX_FAILURE_RATE
        );
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Report { results, out } => (|| {
            let out = out.unwrap_or_else(|| results.parent().map(PathBuf::from).unwrap_or_default());
            let report = emit_report(&results, &out).context("building report")?;
            println!(
                "{} records: {} transition rows, {} dissent rows, {} efficiency rows -> {}",
                report.records,
                report.transitions.len(),
                report.dissent_auc.len(),
                report.efficiency.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        })(),
        Command::ValidateConfig { config } => ExperimentConfig::load(&config)
            .map(|cfg| {
                println!("ok: {} methods, backend {}", cfg.methods.len(), cfg.backend);
                ExitCode::SUCCESS
            })
            .map_err(Into::into),
        Command::BenchMath => {
            let checks = math_checks();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
