//! External test runner for code answers.

use std::io::{Read, Seek, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use concat_core::orchestrator::{CodeTester, TestOutcome};
use concat_core::Task;

/// Runs a shell command template against a generated script.
///
/// `{file}` in the template is replaced by the path of a Python file holding
/// the candidate code, the task's tests and a `check(<entry_point>)` call.
#[derive(Debug, Clone)]
pub struct CommandTester {
    pub template: String,
    pub timeout: Duration,
}

impl CommandTester {
    pub fn new(template: impl Into<String>) -> Self {
        CommandTester {
            template: template.into(),
            timeout: Duration::from_secs(30),
        }
    }
}

fn script(task: &Task, code: &str) -> String {
    let mut s = format!("{}\n\n", code.trim_end());
    if let Some(tests) = &task.tests {
        s.push_str(tests.trim_end());
        s.push_str("\n\n");
        if let Some(ep) = &task.entry_point {
            s.push_str(&format!("check({ep})\n"));
        }
    }
    s
}

impl CodeTester for CommandTester {
    fn run(&self, task: &Task, code: &str) -> Result<TestOutcome, String> {
        let mut file = tempfile::Builder::new()
            .suffix(".py")
            .tempfile()
            .map_err(|e| e.to_string())?;
        file.write_all(script(task, code).as_bytes()).map_err(|e| e.to_string())?;
        file.flush().map_err(|e| e.to_string())?;
        let mut log = tempfile::tempfile().map_err(|e| e.to_string())?;
        let cmd = self.template.replace("{file}", &file.path().display().to_string());
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .stdin(Stdio::null())
            .stdout(Stdio::from(log.try_clone().map_err(|e| e.to_string())?))
            .stderr(Stdio::from(log.try_clone().map_err(|e| e.to_string())?))
            .spawn()
            .map_err(|e| format!("cannot start `{cmd}`: {e}"))?;
        let started = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait().map_err(|e| e.to_string())? {
                break Some(status);
            }
            if started.elapsed() > self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            std::thread::sleep(Duration::from_millis(10));
        };
        let mut output = String::new();
        log.rewind().map_err(|e| e.to_string())?;
        log.read_to_string(&mut output).map_err(|e| e.to_string())?;
        let output: String = output.chars().take(2000).collect();
        Ok(match status {
            Some(s) => TestOutcome {
                passed: s.success(),
                output,
            },
            None => TestOutcome {
                passed: false,
                output: format!("timed out after {:?}", self.timeout),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use concat_core::TaskKind;

    #[test]
    fn exit_status_decides() {
        let mut task = Task::new("t", "def f():", TaskKind::Code);
        task.tests = Some("def check(c):\n    assert c() == 1".into());
        task.entry_point = Some("f".into());
        let pass = CommandTester::new("grep -q 'check(f)' {file}");
        assert!(pass.run(&task, "def f():\n    return 1").unwrap().passed);
        let fail = CommandTester::new("echo nope; exit 3");
        let out = fail.run(&task, "x").unwrap();
        assert!(!out.passed);
        assert_eq!(out.output.trim(), "nope");
        let slow = CommandTester {
            template: "sleep 5".into(),
            timeout: Duration::from_millis(100),
        };
        assert!(slow.run(&task, "x").unwrap().output.contains("timed out"));
    }
}
