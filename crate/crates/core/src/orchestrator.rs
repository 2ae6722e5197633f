//! Round-by-round execution of CONCAT and the training-free baselines.
//!
//! Every method produces an [`ExperimentRecord`] whose `round_traces[0]` is
//! the independent initialization round. Later traces hold one refinement
//! round each. Calls inside a round run concurrently on a bounded pool and
//! are merged in `AgentId` order, so results never depend on completion
//! order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::backends::{AgentBackend, AgentCall, GenerationRequest, GenerationResult, PeerAnswer};
use crate::benefit::{benefit_matrix, BenefitMatrix, Predictor};
use crate::clustering::{cluster_by_similarity, select_leaders, ConsensusCluster, LeaderSet};
use crate::error::{BackendError, CallError, Caller, CoreError};
use crate::normalize::normalize_answer;
use crate::prompts;
use crate::similarity::{answer_similarity, SyntaxProvider};
use crate::topology::{build_baseline_topology, prune_edges, PruneResult, TopologyKind};
use crate::types::{AgentId, AgentState, RunConfig, Task, TaskKind, Topology};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTotals {
    pub prompt: u64,
    pub completion: u64,
}

impl TokenTotals {
    pub fn total(self) -> u64 {
        self.prompt + self.completion
    }

    fn add(&mut self, other: TokenTotals) {
        self.prompt += other.prompt;
        self.completion += other.completion;
    }
}

/// One backend invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub caller: Caller,
    /// Agents whose answers were shown to the caller.
    pub sources: Vec<AgentId>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Seconds.
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<ConsensusCluster>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaders: Option<LeaderSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benefits: Option<BenefitMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune: Option<PruneResult>,
    /// Communication graph the round's calls used.
    pub topology: Topology,
    pub states_after: Vec<AgentState>,
    pub calls: Vec<CallRecord>,
    pub calls_made: usize,
    /// Slowest call of the round, in seconds.
    pub critical_path_latency: f64,
    /// Sum over the round's calls, in seconds.
    pub serial_latency: f64,
    pub token_totals: TokenTotals,
}

impl RoundTrace {
    fn new(round: usize, topology: Topology, states_after: Vec<AgentState>, calls: Vec<CallRecord>) -> Self {
        let mut tokens = TokenTotals::default();
        for c in &calls {
            tokens.add(TokenTotals {
                prompt: c.prompt_tokens,
                completion: c.completion_tokens,
            });
        }
        RoundTrace {
            round,
            clusters: None,
            leaders: None,
            benefits: None,
            prune: None,
            topology,
            states_after,
            calls_made: calls.len(),
            critical_path_latency: calls.iter().map(|c| c.latency).fold(0.0, f64::max),
            serial_latency: calls.iter().map(|c| c.latency).sum(),
            token_totals: tokens,
            calls,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationTrace {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<CallRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// The final answer came from a majority vote instead of the aggregator.
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub task_id: String,
    pub kind: TaskKind,
    pub method: String,
    pub config: RunConfig,
    pub round_traces: Vec<RoundTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationTrace>,
    pub final_answer: Option<String>,
    pub reference_answer: Option<String>,
    pub correct: bool,
    /// Sum of per-round critical paths plus aggregation, in seconds.
    pub total_latency: f64,
    pub serial_latency: f64,
    pub synthetic_latency: bool,
    pub total_tokens: TokenTotals,
    pub total_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExperimentRecord {
    /// States at the end of initialization.
    pub fn initial_states(&self) -> &[AgentState] {
        self.round_traces.first().map_or(&[], |t| &t.states_after)
    }

    pub fn final_states(&self) -> &[AgentState] {
        self.round_traces.last().map_or(&[], |t| &t.states_after)
    }
}

/// Result of running external tests against a code answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestOutcome {
    pub passed: bool,
    pub output: String,
}

/// Optional runner for code answers; supplies correctness and the test
/// feedback shown to the code aggregator.
pub trait CodeTester: Send + Sync {
    fn run(&self, task: &Task, code: &str) -> Result<TestOutcome, String>;
}

/// A task that failed part-way, with everything recorded up to the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error}")]
pub struct TaskFailure {
    pub error: CallError,
    pub partial: Box<ExperimentRecord>,
}

/// Baseline or protocol to run over a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "topology")]
pub enum Method {
    Concat,
    LlmDebate,
    Vanilla(TopologyKind),
    Cot,
    ScCot,
}

impl Method {
    pub fn name(self) -> String {
        match self {
            Method::Concat => "concat".into(),
            Method::LlmDebate => "llm_debate".into(),
            Method::Vanilla(k) => format!("vanilla:{}", k.as_str()),
            Method::Cot => "cot".into(),
            Method::ScCot => "sc_cot".into(),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(kind) = s.strip_prefix("vanilla:") {
            return Ok(Method::Vanilla(kind.parse()?));
        }
        Ok(match s.as_str() {
            "concat" => Method::Concat,
            "llm_debate" | "debate" => Method::LlmDebate,
            "cot" => Method::Cot,
            "sc_cot" | "sc-cot" => Method::ScCot,
            other => return Err(CoreError::InvalidConfig(format!("unknown method `{other}`"))),
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

/// Everything needed to run methods against one backend.
pub struct Orchestrator<'a> {
    pub backend: &'a dyn AgentBackend,
    pub syntax: &'a dyn SyntaxProvider,
    pub predictor: Predictor,
    pub tester: Option<&'a dyn CodeTester>,
}

struct PlannedCall {
    caller: Caller,
    sources: Vec<AgentId>,
    system_prompt: String,
    user_prompt: String,
    peers: Vec<PeerAnswer>,
}

struct Recorder {
    task_id: String,
    kind: TaskKind,
    method: String,
    cfg: RunConfig,
    traces: Vec<RoundTrace>,
}

impl Recorder {
    fn fail(self, error: CallError, synthetic: bool) -> TaskFailure {
        let mut record = finish(self, None, None, None, false, synthetic);
        record.error = Some(error.to_string());
        TaskFailure {
            error,
            partial: Box::new(record),
        }
    }
}

fn finish(
    rec: Recorder,
    aggregation: Option<AggregationTrace>,
    final_answer: Option<String>,
    reference: Option<String>,
    correct: bool,
    synthetic: bool,
) -> ExperimentRecord {
    let mut total_tokens = TokenTotals::default();
    let mut total_latency = 0.0;
    let mut serial = 0.0;
    let mut total_calls = 0;
    for t in &rec.traces {
        total_tokens.add(t.token_totals);
        total_latency += t.critical_path_latency;
        serial += t.serial_latency;
        total_calls += t.calls_made;
    }
    if let Some(call) = aggregation.as_ref().and_then(|a| a.call.as_ref()) {
        total_tokens.add(TokenTotals {
            prompt: call.prompt_tokens,
            completion: call.completion_tokens,
        });
        total_latency += call.latency;
        serial += call.latency;
    }
    if aggregation.is_some() {
        total_calls += 1;
    }
    ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        task_id: rec.task_id,
        kind: rec.kind,
        method: rec.method,
        config: rec.cfg,
        round_traces: rec.traces,
        aggregation,
        final_answer,
        reference_answer: reference,
        correct,
        total_latency,
        serial_latency: serial,
        synthetic_latency: synthetic,
        total_tokens,
        total_calls,
        error: None,
    }
}

fn peer(id: AgentId, state: &AgentState) -> PeerAnswer {
    PeerAnswer {
        agent: id,
        answer: state.answer.clone(),
        normalized: state.normalized_answer.clone(),
        confidence: state.confidence,
        feedback: None,
    }
}

/// Majority over extracted answers; ties go to the higher mean confidence,
/// then to the earliest first occurrence.
pub fn majority_vote(states: &[AgentState]) -> Option<String> {
    let mut tally: Vec<(&str, usize, f64)> = Vec::new();
    for s in states {
        let Some(a) = s.normalized_answer.as_deref() else { continue };
        match tally.iter_mut().find(|(x, _, _)| *x == a) {
            Some(t) => {
                t.1 += 1;
                t.2 += s.confidence;
            }
            None => tally.push((a, 1, s.confidence)),
        }
    }
    let mut best: Option<(&str, usize, f64)> = None;
    for t in tally {
        let better = best.is_none_or(|(_, votes, conf)| {
            t.1 > votes || (t.1 == votes && t.2 / t.1 as f64 > conf / votes as f64)
        });
        if better {
            best = Some(t);
        }
    }
    best.map(|(a, _, _)| a.to_string())
}

impl<'a> Orchestrator<'a> {
    pub fn new(backend: &'a dyn AgentBackend, syntax: &'a dyn SyntaxProvider) -> Self {
        Orchestrator {
            backend,
            syntax,
            predictor: Predictor::default(),
            tester: None,
        }
    }

    pub fn run(&self, method: Method, task: &Task, cfg: &RunConfig) -> Result<ExperimentRecord, TaskFailure> {
        match method {
            Method::Concat => self.run_concat(task, cfg),
            Method::LlmDebate => self.run_llm_debate(task, cfg),
            Method::Vanilla(kind) => self.run_vanilla_mas(task, kind, cfg),
            Method::Cot => self.run_cot(task, cfg),
            Method::ScCot => self.run_sc_cot(task, cfg, cfg.sc_samples),
        }
    }

    fn request(&self, cfg: &RunConfig, system_prompt: String, user_prompt: String) -> GenerationRequest {
        GenerationRequest {
            system_prompt,
            user_prompt,
            temperature: cfg.temperature,
            top_p: cfg.top_p,
            max_tokens: cfg.max_tokens,
            want_logprobs: true,
        }
    }

    fn agent_call(task: &Task, id: AgentId, sources: Vec<AgentId>, states: &[AgentState]) -> PlannedCall {
        let peers: Vec<PeerAnswer> = sources.iter().map(|&j| peer(j, &states[j.0])).collect();
        PlannedCall {
            caller: Caller::Agent(id),
            system_prompt: prompts::agent_system_prompt(task.kind, id),
            user_prompt: prompts::agent_user_prompt(task, &peers),
            sources,
            peers,
        }
    }

    /// Runs `planned` on the worker pool and returns results in input order.
    fn fan_out(
        &self,
        task: &Task,
        cfg: &RunConfig,
        round: usize,
        planned: Vec<PlannedCall>,
    ) -> Vec<Result<(CallRecord, GenerationResult), CallError>> {
        let calls: Vec<AgentCall<'_>> = planned
            .iter()
            .map(|p| AgentCall {
                task,
                caller: p.caller,
                round,
                seed: cfg.seed,
                peers: p.peers.clone(),
                request: self.request(cfg, p.system_prompt.clone(), p.user_prompt.clone()),
            })
            .collect();
        let slots: Vec<Mutex<Option<Result<GenerationResult, BackendError>>>> =
            calls.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = cfg.max_concurrent_calls.clamp(1, calls.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(call) = calls.get(i) else { break };
                    let result = self.backend.generate(call);
                    *slots[i].lock().unwrap() = Some(result);
                });
            }
        });
        planned
            .into_iter()
            .zip(slots)
            .map(|(p, slot)| {
                let result = slot.into_inner().unwrap().expect("every slot is filled");
                let annotate = |source| CallError {
                    task_id: task.id.clone(),
                    round,
                    caller: p.caller,
                    source,
                };
                let gen = result.map_err(annotate)?;
                Ok((
                    CallRecord {
                        caller: p.caller,
                        sources: p.sources,
                        prompt_tokens: gen.prompt_tokens,
                        completion_tokens: gen.completion_tokens,
                        latency: gen.wall_latency,
                    },
                    gen,
                ))
            })
            .collect()
    }

    /// Executes the planned agent calls of one round and folds the answers
    /// into a copy of `previous`. Agents without a call keep their state.
    fn execute_round(
        &self,
        task: &Task,
        cfg: &RunConfig,
        round: usize,
        previous: &[AgentState],
        mut planned: Vec<PlannedCall>,
    ) -> Result<(Vec<AgentState>, Vec<CallRecord>), CallError> {
        planned.sort_by_key(|p| match p.caller {
            Caller::Agent(id) => id,
            Caller::Aggregator => AgentId(usize::MAX),
        });
        let mut states = previous.to_vec();
        let mut records = Vec::with_capacity(planned.len());
        for result in self.fan_out(task, cfg, round, planned) {
            let (record, gen) = result?;
            let Caller::Agent(id) = record.caller else { unreachable!("agent rounds only") };
            let confidence = gen.confidence().map_err(|_| CallError {
                task_id: task.id.clone(),
                round,
                caller: record.caller,
                source: BackendError::MissingLogprobs,
            })?;
            if id.0 >= states.len() {
                states.resize(id.0 + 1, AgentState::new("", task.kind, 0.0, round));
            }
            states[id.0] = AgentState::new(gen.text, task.kind, confidence, round);
            records.push(record);
        }
        Ok((states, records))
    }

    /// Independent answer generation with no peer responses.
    pub fn run_initialization(&self, task: &Task, cfg: &RunConfig) -> Result<RoundTrace, CallError> {
        let n = cfg.n_agents;
        let planned = (0..n).map(|i| Self::agent_call(task, AgentId(i), vec![], &[])).collect();
        let blank: Vec<AgentState> = Vec::new();
        let (states, calls) = self.execute_round(task, cfg, 0, &blank, planned)?;
        Ok(RoundTrace::new(0, Topology::empty(n), states, calls))
    }

    /// One refinement round: cluster, elect leaders, score and prune
    /// leader-to-leader edges, then re-invoke leaders with the answers of
    /// their kept in-neighbors. Non-leaders carry over unchanged.
    pub fn run_concat_round(
        &self,
        states: &[AgentState],
        task: &Task,
        cfg: &RunConfig,
        round: usize,
    ) -> Result<RoundTrace, CallError> {
        let n = states.len();
        let clusters = cluster_by_similarity(states, task.kind, cfg.code_threshold, self.syntax);
        let leaders = select_leaders(&clusters, states);
        let benefits = benefit_matrix(&leaders.leaders, states, cfg, self.predictor, |j, k| {
            answer_similarity(&states[j.0], &states[k.0], task.kind, self.syntax)
        });
        let prune = prune_edges(&benefits, n, cfg.retention_rate, cfg.tau_min).map_err(|e| CallError {
            task_id: task.id.clone(),
            round,
            caller: Caller::Aggregator,
            source: BackendError::InvalidRequest(e.to_string()),
        })?;
        let planned = leaders
            .leaders
            .iter()
            .filter_map(|&k| {
                let sources = prune.kept.in_neighbors(k);
                if sources.is_empty() && cfg.skip_empty_refinement {
                    return None;
                }
                Some(Self::agent_call(task, k, sources, states))
            })
            .collect();
        let (states_after, calls) = self.execute_round(task, cfg, round, states, planned)?;
        let mut trace = RoundTrace::new(round, prune.kept.clone(), states_after, calls);
        trace.clusters = Some(clusters);
        trace.leaders = Some(leaders);
        trace.benefits = Some(benefits);
        trace.prune = Some(prune);
        Ok(trace)
    }

    fn run_rounds(
        &self,
        task: &Task,
        cfg: &RunConfig,
        method: String,
        round_fn: impl Fn(&[AgentState], usize) -> Result<RoundTrace, CallError>,
    ) -> Result<ExperimentRecord, TaskFailure> {
        let synthetic = self.backend.synthetic_latency();
        let mut rec = Recorder {
            task_id: task.id.clone(),
            kind: task.kind,
            method,
            cfg: cfg.clone(),
            traces: Vec::new(),
        };
        if let Err(e) = cfg.validate() {
            return Err(rec.fail(
                CallError {
                    task_id: task.id.clone(),
                    round: 0,
                    caller: Caller::Aggregator,
                    source: BackendError::InvalidRequest(e.to_string()),
                },
                synthetic,
            ));
        }
        match self.run_initialization(task, cfg) {
            Ok(t) => rec.traces.push(t),
            Err(e) => return Err(rec.fail(e, synthetic)),
        }
        for round in 1..=cfg.refinement_rounds {
            let prev = &rec.traces.last().expect("initialized").states_after;
            match round_fn(prev, round) {
                Ok(t) => rec.traces.push(t),
                Err(e) => return Err(rec.fail(e, synthetic)),
            }
        }
        let last = rec.traces.last().expect("initialized").states_after.clone();
        let (final_answer, aggregation) = self.aggregate_final(&last, task, cfg);
        let correct = self.grade(task, final_answer.as_deref());
        Ok(finish(
            rec,
            Some(aggregation),
            final_answer,
            task.reference_answer.clone(),
            correct,
            synthetic,
        ))
    }

    /// Initialization, `refinement_rounds` CONCAT rounds, then aggregation.
    pub fn run_concat(&self, task: &Task, cfg: &RunConfig) -> Result<ExperimentRecord, TaskFailure> {
        self.run_rounds(task, cfg, Method::Concat.name(), |states, round| {
            self.run_concat_round(states, task, cfg, round)
        })
    }

    fn fixed_topology_round(
        &self,
        task: &Task,
        cfg: &RunConfig,
        topology: &Topology,
        states: &[AgentState],
        round: usize,
    ) -> Result<RoundTrace, CallError> {
        let planned = (0..states.len())
            .map(AgentId)
            .filter_map(|k| {
                let sources = topology.in_neighbors(k);
                (!sources.is_empty()).then(|| Self::agent_call(task, k, sources, states))
            })
            .collect();
        let (after, calls) = self.execute_round(task, cfg, round, states, planned)?;
        Ok(RoundTrace::new(round, topology.clone(), after, calls))
    }

    /// Every agent sees every other agent's previous answer each round.
    pub fn run_llm_debate(&self, task: &Task, cfg: &RunConfig) -> Result<ExperimentRecord, TaskFailure> {
        let topology = build_baseline_topology(TopologyKind::Debate, cfg.n_agents.max(1), cfg.seed, 1.0)
            .expect("full topology is always valid");
        self.run_rounds(task, cfg, Method::LlmDebate.name(), |states, round| {
            self.fixed_topology_round(task, cfg, &topology, states, round)
        })
    }

    /// A fixed baseline graph for all rounds; agents without in-edges keep
    /// their initial answer.
    pub fn run_vanilla_mas(
        &self,
        task: &Task,
        kind: TopologyKind,
        cfg: &RunConfig,
    ) -> Result<ExperimentRecord, TaskFailure> {
        let method = Method::Vanilla(kind).name();
        let topology = match build_baseline_topology(kind, cfg.n_agents.max(1), cfg.seed, cfg.random_density) {
            Ok(t) => t,
            Err(e) => {
                let rec = Recorder {
                    task_id: task.id.clone(),
                    kind: task.kind,
                    method,
                    cfg: cfg.clone(),
                    traces: Vec::new(),
                };
                let err = CallError {
                    task_id: task.id.clone(),
                    round: 0,
                    caller: Caller::Aggregator,
                    source: BackendError::InvalidRequest(e.to_string()),
                };
                return Err(rec.fail(err, self.backend.synthetic_latency()));
            }
        };
        self.run_rounds(task, cfg, method, |states, round| {
            self.fixed_topology_round(task, cfg, &topology, states, round)
        })
    }

    fn sample_round(&self, task: &Task, cfg: &RunConfig, samples: usize, method: Method) -> Result<ExperimentRecord, TaskFailure> {
        let synthetic = self.backend.synthetic_latency();
        let mut rec = Recorder {
            task_id: task.id.clone(),
            kind: task.kind,
            method: method.name(),
            cfg: cfg.clone(),
            traces: Vec::new(),
        };
        // all samples share one persona; only the sampling stream differs
        let system = prompts::agent_system_prompt(task.kind, AgentId(0));
        let user = prompts::agent_user_prompt(task, &[]);
        let planned = (0..samples)
            .map(|i| PlannedCall {
                caller: Caller::Agent(AgentId(i)),
                sources: vec![],
                system_prompt: system.clone(),
                user_prompt: user.clone(),
                peers: vec![],
            })
            .collect();
        let (states, calls) = match self.execute_round(task, cfg, 0, &[], planned) {
            Ok(r) => r,
            Err(e) => return Err(rec.fail(e, synthetic)),
        };
        let final_answer = majority_vote(&states);
        rec.traces.push(RoundTrace::new(0, Topology::empty(samples), states, calls));
        let correct = self.grade(task, final_answer.as_deref());
        Ok(finish(rec, None, final_answer, task.reference_answer.clone(), correct, synthetic))
    }

    /// Single chain-of-thought call.
    pub fn run_cot(&self, task: &Task, cfg: &RunConfig) -> Result<ExperimentRecord, TaskFailure> {
        self.sample_round(task, cfg, 1, Method::Cot)
    }

    /// `samples` independent chains and a majority vote.
    pub fn run_sc_cot(&self, task: &Task, cfg: &RunConfig, samples: usize) -> Result<ExperimentRecord, TaskFailure> {
        self.sample_round(task, cfg, samples.max(1), Method::ScCot)
    }

    /// One aggregator call over all agents' final answers. On failure, or
    /// when nothing can be extracted from the reply, falls back to a
    /// majority vote.
    pub fn aggregate_final(
        &self,
        states: &[AgentState],
        task: &Task,
        cfg: &RunConfig,
    ) -> (Option<String>, AggregationTrace) {
        let round = cfg.refinement_rounds + 1;
        let mut peers: Vec<PeerAnswer> = states
            .iter()
            .enumerate()
            .map(|(i, s)| peer(AgentId(i), s))
            .collect();
        if task.kind == TaskKind::Code {
            if let Some(tester) = self.tester {
                for p in &mut peers {
                    if let Some(code) = &p.normalized {
                        p.feedback = Some(match tester.run(task, code) {
                            Ok(o) if o.passed => "passed internal testing".to_string(),
                            Ok(o) => format!("failed internal testing: {}", o.output.trim()),
                            Err(e) => format!("tests could not run: {e}"),
                        });
                    }
                }
            }
        }
        let call = AgentCall {
            task,
            caller: Caller::Aggregator,
            round,
            seed: cfg.seed,
            request: self.request(
                cfg,
                prompts::aggregation_system_prompt(task.kind).to_string(),
                prompts::aggregation_user_prompt(task, &peers, ""),
            ),
            peers,
        };
        let sources = (0..states.len()).map(AgentId).collect();
        match self.backend.generate(&call) {
            Ok(gen) => {
                let record = CallRecord {
                    caller: Caller::Aggregator,
                    sources,
                    prompt_tokens: gen.prompt_tokens,
                    completion_tokens: gen.completion_tokens,
                    latency: gen.wall_latency,
                };
                match normalize_answer(&gen.text, task.kind) {
                    Ok(answer) => (
                        Some(answer),
                        AggregationTrace {
                            call: Some(record),
                            response: Some(gen.text),
                            fallback: false,
                            error: None,
                        },
                    ),
                    Err(e) => (
                        majority_vote(states),
                        AggregationTrace {
                            call: Some(record),
                            response: Some(gen.text),
                            fallback: true,
                            error: Some(e.to_string()),
                        },
                    ),
                }
            }
            Err(e) => {
                let err = CallError {
                    task_id: task.id.clone(),
                    round,
                    caller: Caller::Aggregator,
                    source: e,
                };
                tracing::warn!(error = %err, "aggregation failed, using majority vote");
                (
                    majority_vote(states),
                    AggregationTrace {
                        call: None,
                        response: None,
                        fallback: true,
                        error: Some(err.to_string()),
                    },
                )
            }
        }
    }

    /// Compares against the reference answer, or runs the configured tests
    /// for code tasks.
    pub fn grade(&self, task: &Task, answer: Option<&str>) -> bool {
        let Some(answer) = answer else { return false };
        if task.kind == TaskKind::Code {
            if let Some(tester) = self.tester {
                return tester.run(task, answer).is_ok_and(|o| o.passed);
            }
        }
        task.reference_answer
            .as_deref()
            .and_then(|r| normalize_answer(r, task.kind).ok())
            .is_some_and(|r| r == answer)
    }
}
