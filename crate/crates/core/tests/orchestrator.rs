use std::sync::Mutex;
use std::time::Duration;

use concat_core::backends::{AgentBackend, AgentCall, GenerationResult};
use concat_core::orchestrator::majority_vote;
use concat_core::{
    AgentId, AgentState, BackendError, Caller, Method, Orchestrator, PythonSubset, RunConfig,
    SimAgentProfile, SimBackend, SimProfileSet, Task, TaskKind, TopologyKind,
};

fn sim(skill: f64, conformity: f64) -> SimBackend {
    SimBackend::new(SimProfileSet {
        distractors: 4,
        agents: vec![SimAgentProfile {
            skill,
            calibration: 0.8,
            conformity,
            base_latency: 0.2,
            per_token_latency: 0.01,
        }],
    })
    .unwrap()
}

fn mixed() -> SimBackend {
    let p = |skill| SimAgentProfile {
        skill,
        calibration: 0.8,
        conformity: 0.5,
        base_latency: 0.2,
        per_token_latency: 0.01,
    };
    SimBackend::new(SimProfileSet {
        distractors: 4,
        agents: vec![p(0.7), p(0.3), p(0.5), p(0.2), p(0.6)],
    })
    .unwrap()
}

fn cfg(n: usize, rounds: usize, seed: u64) -> RunConfig {
    RunConfig {
        n_agents: n,
        refinement_rounds: rounds,
        seed,
        ..RunConfig::default()
    }
}

fn choice_task(i: usize) -> Task {
    Task::new(format!("q{i}"), format!("Question {i}?"), TaskKind::Choice).with_reference(["A", "B", "C", "D"][i % 4])
}

type Shown = (Caller, usize, Vec<(AgentId, String)>);

/// Records what every call was shown.
struct Recording<B> {
    inner: B,
    log: Mutex<Vec<Shown>>,
}

impl<B: AgentBackend> AgentBackend for Recording<B> {
    fn generate(&self, call: &AgentCall<'_>) -> Result<GenerationResult, BackendError> {
        let peers = call.peers.iter().map(|p| (p.agent, p.answer.clone())).collect();
        self.log.lock().unwrap().push((call.caller, call.round, peers));
        self.inner.generate(call)
    }
}

#[test]
fn unanimous_population_costs_one_call_per_round() {
    let backend = sim(1.0, 0.0);
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let rec = orch.run_concat(&choice_task(1), &cfg(5, 2, 0)).unwrap();
    assert_eq!(rec.total_calls, 8);
    for t in &rec.round_traces[1..] {
        assert_eq!(t.leaders.as_ref().unwrap().len(), 1);
        assert!(t.prune.as_ref().unwrap().kept.is_empty());
        assert_eq!(t.calls_made, 1);
    }
    assert_eq!(rec.final_answer.as_deref(), Some("B"));
    assert!(rec.correct);
}

#[test]
fn zero_rounds_is_init_plus_aggregation() {
    let backend = mixed();
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let rec = orch.run_concat(&choice_task(2), &cfg(4, 0, 3)).unwrap();
    assert_eq!(rec.total_calls, 5);
    assert_eq!(rec.round_traces.len(), 1);
}

#[test]
fn single_agent() {
    let backend = mixed();
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let rec = orch.run_concat(&choice_task(0), &cfg(1, 2, 3)).unwrap();
    assert_eq!(rec.initial_states().len(), 1);
    assert_eq!(rec.total_calls, 1 + 1 + 1 + 1);
}

#[test]
fn call_law_leaders_and_provenance() {
    for seed in 0..20 {
        let backend = Recording {
            inner: mixed(),
            log: Mutex::new(Vec::new()),
        };
        let orch = Orchestrator::new(&backend, &PythonSubset);
        let task = choice_task(seed as usize);
        let rec = orch.run_concat(&task, &cfg(5, 2, seed)).unwrap();
        let k_sum: usize = rec.round_traces[1..]
            .iter()
            .map(|t| t.leaders.as_ref().unwrap().len())
            .sum();
        assert_eq!(rec.total_calls, 5 + k_sum + 1);
        let log = backend.log.lock().unwrap();
        assert_eq!(log.len(), rec.total_calls);
        for (t, trace) in rec.round_traces.iter().enumerate().skip(1) {
            let prev = &rec.round_traces[t - 1].states_after;
            let leaders = trace.leaders.as_ref().unwrap();
            let kept = &trace.prune.as_ref().unwrap().kept;
            for (caller, round, peers) in log.iter().filter(|e| e.1 == t) {
                let Caller::Agent(k) = caller else { panic!("aggregator in round {round}") };
                assert!(leaders.contains(*k));
                for (j, text) in peers {
                    assert!(leaders.contains(*j));
                    assert!(kept.contains(*j, *k));
                    assert_eq!(text, &prev[j.0].answer);
                }
            }
            // non-leaders carry over untouched
            for (i, s) in trace.states_after.iter().enumerate() {
                if !leaders.contains(AgentId(i)) {
                    assert_eq!(s, &prev[i]);
                }
            }
        }
    }
}

#[test]
fn debate_and_vanilla_call_patterns() {
    let backend = mixed();
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let task = choice_task(3);
    let debate = orch.run_llm_debate(&task, &cfg(5, 2, 1)).unwrap();
    assert_eq!(debate.total_calls, 16);
    let pair = orch.run_llm_debate(&task, &cfg(2, 1, 1)).unwrap();
    assert!(pair.round_traces[1].calls.iter().all(|c| c.sources.len() == 1));

    let chain = orch.run_vanilla_mas(&task, TopologyKind::Chain, &cfg(3, 2, 1)).unwrap();
    for t in &chain.round_traces[1..] {
        assert!(t.calls.iter().all(|c| c.caller != Caller::Agent(AgentId(0))));
        assert_eq!(t.states_after[0], chain.round_traces[0].states_after[0]);
    }
    let star = orch.run_vanilla_mas(&task, TopologyKind::Star, &cfg(5, 2, 1)).unwrap();
    assert!(star.round_traces[1..].iter().all(|t| t.calls_made == 5));
    let full = orch.run_vanilla_mas(&task, TopologyKind::Full, &cfg(5, 2, 1)).unwrap();
    assert_eq!(full.total_calls, debate.total_calls);

    let concat = orch.run_concat(&task, &cfg(5, 2, 1)).unwrap();
    assert!(concat.total_calls <= debate.total_calls);
}

#[test]
fn cot_and_self_consistency() {
    let backend = mixed();
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let task = choice_task(0);
    let cot = orch.run(Method::Cot, &task, &cfg(5, 2, 0)).unwrap();
    assert_eq!(cot.total_calls, 1);
    assert!(cot.aggregation.is_none());
    let sc = orch.run(Method::ScCot, &task, &cfg(5, 2, 0)).unwrap();
    assert_eq!(sc.total_calls, 5);
    assert_eq!(sc.final_answer, majority_vote(&sc.round_traces[0].states_after));
}

#[test]
fn majority_tie_rules() {
    let s = |a: &str, c: f64| AgentState::new(a, TaskKind::Choice, c, 0);
    let votes = [s("A", 0.5), s("A", 0.5), s("B", 0.1), s("B", 0.1), s("B", 0.1)];
    assert_eq!(majority_vote(&votes).as_deref(), Some("B"));
    let tie = [s("A", 0.9), s("A", 0.9), s("B", 0.6), s("B", 0.6)];
    assert_eq!(majority_vote(&tie).as_deref(), Some("A"));
    let tie = [s("B", 0.6), s("A", 0.6)];
    assert_eq!(majority_vote(&tie).as_deref(), Some("B"));
    assert_eq!(majority_vote(&[s("??", 0.9)]), None);
}

#[test]
fn replay_is_byte_identical() {
    let backend = mixed();
    let orch = Orchestrator::new(&backend, &PythonSubset);
    for method in [Method::Concat, Method::LlmDebate, Method::ScCot] {
        let a = orch.run(method, &choice_task(5), &cfg(5, 2, 7)).unwrap();
        let b = orch.run(method, &choice_task(5), &cfg(5, 2, 7)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

/// Sleeps a varying amount so completion order differs from agent order.
struct Jittery(SimBackend);

impl AgentBackend for Jittery {
    fn generate(&self, call: &AgentCall<'_>) -> Result<GenerationResult, BackendError> {
        if let Caller::Agent(id) = call.caller {
            std::thread::sleep(Duration::from_millis(((7 - id.0 % 7) * 3) as u64));
        }
        self.0.generate(call)
    }

    fn synthetic_latency(&self) -> bool {
        true
    }
}

#[test]
fn merge_order_ignores_completion_order() {
    let serial = cfg(6, 2, 9);
    let parallel = RunConfig {
        max_concurrent_calls: 6,
        ..serial.clone()
    };
    let serial = RunConfig {
        max_concurrent_calls: 1,
        ..serial
    };
    let backend = Jittery(mixed());
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let a = orch.run_concat(&choice_task(4), &serial).unwrap();
    let b = orch.run_concat(&choice_task(4), &parallel).unwrap();
    assert_eq!(a.round_traces, b.round_traces);
    assert_eq!(a.final_answer, b.final_answer);
}

/// Fails selected callers.
struct Failing {
    inner: SimBackend,
    fail_aggregator: bool,
    fail_agent: Option<(usize, usize)>,
}

impl AgentBackend for Failing {
    fn generate(&self, call: &AgentCall<'_>) -> Result<GenerationResult, BackendError> {
        match call.caller {
            Caller::Aggregator if self.fail_aggregator => Err(BackendError::Endpoint {
                status: 500,
                body: "down".into(),
            }),
            Caller::Agent(id) if self.fail_agent == Some((id.0, call.round)) => {
                Err(BackendError::Transport("reset".into()))
            }
            _ => self.inner.generate(call),
        }
    }
}

#[test]
fn aggregation_failure_falls_back_to_majority() {
    let backend = Failing {
        inner: sim(1.0, 0.0),
        fail_aggregator: true,
        fail_agent: None,
    };
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let rec = orch.run_concat(&choice_task(2), &cfg(3, 1, 0)).unwrap();
    let agg = rec.aggregation.as_ref().unwrap();
    assert!(agg.fallback);
    assert!(agg.error.as_ref().unwrap().contains("500"));
    assert_eq!(rec.final_answer.as_deref(), Some("C"));
    assert_eq!(rec.total_calls, 3 + 1 + 1);
}

#[test]
fn agent_failure_keeps_partial_trace() {
    let backend = Failing {
        inner: mixed(),
        fail_aggregator: false,
        fail_agent: Some((0, 0)),
    };
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let err = orch.run_concat(&choice_task(2), &cfg(3, 1, 0)).unwrap_err();
    assert_eq!(err.error.round, 0);
    assert_eq!(err.error.caller, Caller::Agent(AgentId(0)));
    assert_eq!(err.error.task_id, "q2");
    assert!(err.partial.error.is_some());
    assert!(err.partial.round_traces.is_empty());
}

#[test]
fn code_tasks_cluster_and_aggregate() {
    let backend = mixed();
    let orch = Orchestrator::new(&backend, &PythonSubset);
    let mut task = Task::new("c1", "def add(a, b):\n    \"\"\"Return a + b.\"\"\"", TaskKind::Code)
        .with_reference("```python\ndef add(a, b):\n    return a + b\n```");
    task.entry_point = Some("add".into());
    let rec = orch.run_concat(&task, &cfg(5, 2, 2)).unwrap();
    let k_sum: usize = rec.round_traces[1..]
        .iter()
        .map(|t| t.leaders.as_ref().unwrap().len())
        .sum();
    assert_eq!(rec.total_calls, 5 + k_sum + 1);
    assert!(rec.final_answer.as_deref().unwrap().starts_with("def add("));
}
