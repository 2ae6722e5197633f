//! JSONL benchmark loading.
//!
//! One JSON object per line; blank lines are skipped.
//!
//! * choice: `id`, `question`, `answer` (A-D), optional `choices` list that
//!   is inlined into the question as `A. ...` lines
//! * numeric: `id`, `question`, `answer` (string or number)
//! * code: `id` (or `task_id`), `prompt`, `entry_point`, optional `tests`
//!   (or `test`) and `canonical_solution`

use std::collections::HashMap;
use std::path::Path;

use concat_core::{normalize_answer, Task, TaskKind};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}` (first seen on line {first})")]
    DuplicateId { id: String, line: usize, first: usize },
    #[error("line {line}: schema_version {found}, expected {expected}")]
    Version { line: usize, found: String, expected: u32 },
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
    names.iter().find_map(|n| obj.get(*n)).filter(|v| !v.is_null())
}

fn text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_line(obj: &serde_json::Map<String, Value>, kind: TaskKind) -> Result<Task, String> {
    let require = |names: &[&str]| {
        field(obj, names)
            .and_then(text)
            .ok_or_else(|| format!("missing or non-text field `{}`", names[0]))
    };
    let id = require(&["id", "task_id"])?;
    match kind {
        TaskKind::Choice => {
            let mut question = require(&["question"])?;
            let answer = require(&["answer"])?;
            let letter = answer.trim().to_ascii_uppercase();
            if !matches!(letter.as_str(), "A" | "B" | "C" | "D") {
                return Err(format!("answer `{answer}` is not one of A, B, C, D"));
            }
            if let Some(choices) = field(obj, &["choices", "options"]) {
                let list = choices.as_array().ok_or("`choices` must be a list")?;
                if list.len() > 4 {
                    return Err("at most 4 choices are supported".into());
                }
                for (i, c) in list.iter().enumerate() {
                    let c = text(c).ok_or("choices must be text")?;
                    question.push_str(&format!("\n{}. {}", (b'A' + i as u8) as char, c));
                }
            }
            Ok(Task::new(id, question, kind).with_reference(letter))
        }
        TaskKind::Numeric => {
            let question = require(&["question"])?;
            let answer = require(&["answer"])?;
            normalize_answer(&answer, kind).map_err(|_| format!("answer `{answer}` has no number"))?;
            Ok(Task::new(id, question, kind).with_reference(answer))
        }
        TaskKind::Code => {
            let prompt = require(&["prompt"])?;
            let entry_point = require(&["entry_point"])?;
            let mut task = Task::new(id, prompt.clone(), kind);
            task.entry_point = Some(entry_point);
            task.tests = field(obj, &["tests", "test"]).and_then(text);
            if let Some(solution) = field(obj, &["canonical_solution"]).and_then(text) {
                // benchmark solutions are usually just the body
                let full = if solution.trim_start().starts_with("def ") {
                    solution
                } else {
                    format!("{}{}", prompt, solution)
                };
                task.reference_answer = Some(full.trim().to_string());
            }
            Ok(task)
        }
    }
}

pub fn parse_dataset(text: &str, kind: TaskKind) -> Result<Vec<Task>, SchemaError> {
    let mut tasks = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| SchemaError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or(SchemaError::Line {
            line: line_no,
            message: "expected a JSON object".into(),
        })?;
        let task = parse_line(obj, kind).map_err(|message| SchemaError::Line { line: line_no, message })?;
        if let Some(&first) = seen.get(&task.id) {
            return Err(SchemaError::DuplicateId {
                id: task.id,
                line: line_no,
                first,
            });
        }
        seen.insert(task.id.clone(), line_no);
        tasks.push(task);
    }
    Ok(tasks)
}

pub fn load_dataset(path: &Path, kind: TaskKind) -> Result<Vec<Task>, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|e| SchemaError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_dataset(&text, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_valid_lines() {
        let text = r#"{"id":"a","question":"1+1","answer":"2"}
{"id":"b","question":"2+2","answer":4}

{"id":"c","question":"3+3","answer":"The answer is 6"}"#;
        let tasks = parse_dataset(text, TaskKind::Numeric).unwrap();
        assert_eq!(tasks.len(), 3);
        assert_eq!(tasks[1].reference_answer.as_deref(), Some("4"));
    }

    #[test]
    fn missing_answer_names_the_line() {
        let text = "{\"id\":\"a\",\"question\":\"q\",\"answer\":\"A\"}\n{\"id\":\"b\",\"question\":\"q\"}";
        match parse_dataset(text, TaskKind::Choice) {
            Err(SchemaError::Line { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("answer"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_ids() {
        let text = "{\"id\":\"x\",\"question\":\"q\",\"answer\":\"A\"}\n{\"id\":\"x\",\"question\":\"r\",\"answer\":\"B\"}";
        let err = parse_dataset(text, TaskKind::Choice).unwrap_err();
        assert!(err.to_string().contains("`x`"));
        assert!(matches!(err, SchemaError::DuplicateId { line: 2, first: 1, .. }));
    }

    #[test]
    fn choices_are_inlined() {
        let text = r#"{"id":"m","question":"Pick","choices":["red","blue"],"answer":"b"}"#;
        let t = &parse_dataset(text, TaskKind::Choice).unwrap()[0];
        assert_eq!(t.question, "Pick\nA. red\nB. blue");
        assert_eq!(t.reference_answer.as_deref(), Some("B"));
        assert!(parse_dataset(r#"{"id":"m","question":"Pick","answer":"E"}"#, TaskKind::Choice).is_err());
    }

    #[test]
    fn code_rows() {
        let text = r#"{"task_id":"HumanEval/0","prompt":"def f(x):\n","entry_point":"f","test":"def check(c): pass","canonical_solution":"    return x\n"}"#;
        let t = &parse_dataset(text, TaskKind::Code).unwrap()[0];
        assert_eq!(t.id, "HumanEval/0");
        assert_eq!(t.reference_answer.as_deref(), Some("def f(x):\n    return x"));
        assert_eq!(t.tests.as_deref(), Some("def check(c): pass"));
        assert!(parse_dataset(r#"{"id":"1","prompt":"p"}"#, TaskKind::Code).is_err());
    }

    #[test]
    fn bad_json() {
        assert!(matches!(
            parse_dataset("{oops", TaskKind::Numeric),
            Err(SchemaError::Line { line: 1, .. })
        ));
    }
}
