//! Agent role prompts and the answer-aggregation templates.

use crate::backends::PeerAnswer;
use crate::types::{AgentId, Task, TaskKind};

const CHOICE_ROLES: &str = include_str!("../prompts/roles/choice.txt");
const NUMERIC_ROLES: &str = include_str!("../prompts/roles/numeric.txt");
const CODE_ROLES: &str = include_str!("../prompts/roles/code.txt");

pub const CHOICE_AGGREGATION_SYSTEM: &str = include_str!("../prompts/aggregation/choice.system.txt");
pub const NUMERIC_AGGREGATION_SYSTEM: &str =
    include_str!("../prompts/aggregation/numeric.system.txt");
pub const CODE_AGGREGATION_SYSTEM: &str = include_str!("../prompts/aggregation/code.system.txt");

const CHOICE_AGGREGATION_USER: &str = include_str!("../prompts/aggregation/choice.user.txt");
const NUMERIC_AGGREGATION_USER: &str = include_str!("../prompts/aggregation/numeric.user.txt");
const CODE_AGGREGATION_USER: &str = include_str!("../prompts/aggregation/code.user.txt");

/// A predefined agent persona.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Role {
    pub name: String,
    pub description: String,
}

fn parse_roles(text: &str) -> Vec<Role> {
    text.lines()
        .filter_map(|line| line.split_once(':'))
        .map(|(name, desc)| Role {
            name: name.trim().to_string(),
            description: desc.trim().to_string(),
        })
        .collect()
}

pub fn roles(kind: TaskKind) -> Vec<Role> {
    parse_roles(match kind {
        TaskKind::Choice => CHOICE_ROLES,
        TaskKind::Numeric => NUMERIC_ROLES,
        TaskKind::Code => CODE_ROLES,
    })
}

/// Role for agent `id`, cycling through the kind's roster.
pub fn role_for(kind: TaskKind, id: AgentId) -> Role {
    let all = roles(kind);
    all[id.0 % all.len()].clone()
}

fn format_instruction(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Choice => {
            "Answer the multiple-choice question. Explain briefly, then end your reply with a line of the form: The answer is X, where X is one of A, B, C or D."
        }
        TaskKind::Numeric => {
            "Solve the math problem step by step. The last line of your output contains only the final result without any units, for example: The answer is 140"
        }
        TaskKind::Code => {
            "You will be given a function signature and its docstring. Write your full implementation (restate the function signature) in a single Python code block."
        }
    }
}

pub fn agent_system_prompt(kind: TaskKind, id: AgentId) -> String {
    let role = role_for(kind, id);
    format!("You are a {}. {}\n\n{}", role.name, role.description, format_instruction(kind))
}

fn render_peers(peers: &[PeerAnswer], with_feedback: bool) -> String {
    let mut out = String::new();
    for (i, p) in peers.iter().enumerate() {
        out.push_str(&format!("\n\nAgent {}: {}", i + 1, p.answer.trim()));
        if with_feedback {
            if let Some(fb) = &p.feedback {
                out.push_str(&format!("\nTest result: {}", fb.trim()));
            }
        }
    }
    out
}

/// User prompt for an agent call; peers are empty during initialization.
pub fn agent_user_prompt(task: &Task, peers: &[PeerAnswer]) -> String {
    let mut out = format!("The task is: {}.", task.question.trim_end());
    if !peers.is_empty() {
        out.push_str(" At the same time, the output of other agents is as follows:");
        out.push_str(&render_peers(peers, false));
        out.push_str("\n\nUse these outputs as references, check them critically, and give your own final answer.");
    }
    out
}

pub fn aggregation_system_prompt(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Choice => CHOICE_AGGREGATION_SYSTEM,
        TaskKind::Numeric => NUMERIC_AGGREGATION_SYSTEM,
        TaskKind::Code => CODE_AGGREGATION_SYSTEM,
    }
}

pub fn aggregation_user_template(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Choice => CHOICE_AGGREGATION_USER,
        TaskKind::Numeric => NUMERIC_AGGREGATION_USER,
        TaskKind::Code => CODE_AGGREGATION_USER,
    }
}

/// Fills the aggregation template with the question and every agent's answer.
pub fn aggregation_user_prompt(task: &Task, peers: &[PeerAnswer], few_shot: &str) -> String {
    let template = aggregation_user_template(task.kind);
    let filled = template
        .replace("{few-shot examples}", few_shot.trim())
        .replace("{question}", task.question.trim_end())
        .replace("{agent responses with test results}", &render_peers(peers, true))
        .replace("{agent responses}", &render_peers(peers, false));
    filled.trim_start().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peer(answer: &str) -> PeerAnswer {
        PeerAnswer {
            agent: AgentId(0),
            answer: answer.into(),
            normalized: None,
            confidence: 0.5,
            feedback: None,
        }
    }

    #[test]
    fn rosters_load() {
        for kind in [TaskKind::Choice, TaskKind::Numeric, TaskKind::Code] {
            assert_eq!(roles(kind).len(), 5);
        }
        assert_eq!(role_for(TaskKind::Numeric, AgentId(6)), roles(TaskKind::Numeric)[1]);
    }

    #[test]
    fn aggregation_rendering() {
        let task = Task::new("t", "What is 2+2?", TaskKind::Numeric);
        let p = aggregation_user_prompt(&task, &[peer("The answer is 4"), peer("The answer is 5")], "");
        assert_eq!(
            p,
            "The task is: What is 2+2?. At the same time, the output of other agents is as follows: \n\nAgent 1: The answer is 4\n\nAgent 2: The answer is 5"
        );
        let code = Task::new("c", "def f():", TaskKind::Code);
        let mut fb = peer("```python\ndef f(): pass\n```");
        fb.feedback = Some("passed".into());
        let p = aggregation_user_prompt(&code, &[fb], "");
        assert!(p.contains("outputs and feedbacks"));
        assert!(p.ends_with("Test result: passed"));
    }

    #[test]
    fn agent_prompts() {
        let task = Task::new("t", "Pick one", TaskKind::Choice);
        assert_eq!(agent_user_prompt(&task, &[]), "The task is: Pick one.");
        assert!(agent_user_prompt(&task, &[peer("B")]).contains("Agent 1: B"));
        assert!(agent_system_prompt(TaskKind::Choice, AgentId(0)).starts_with("You are a Knowledgeable Expert."));
    }
}
