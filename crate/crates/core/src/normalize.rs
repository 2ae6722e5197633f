//! Extraction of the decision-relevant part of a model response.
//!
//! Exact-match clustering only makes sense on extracted answers, so every
//! response passes through [`normalize_answer`] before it is compared.
//!
//! * choice: a single letter `A`-`D`, preferring explicit "answer is X" or
//!   "(X)" forms and otherwise the last standalone letter.
//! * numeric: the last number on the last line containing "answer is",
//!   falling back to the last number anywhere; commas, units and redundant
//!   zeros are dropped.
//! * code: the contents of the last fenced block, or the whole text when
//!   there are no fences.

use std::sync::LazyLock;

use regex::Regex;

use crate::error::CoreError;
use crate::types::TaskKind;

static CHOICE_ALONE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[\s(\[]*([A-D])[\s)\].:]*$").unwrap());
static CHOICE_STATED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i:answer)\s*(?:(?i:is)\s*)?[:\-]?\s*[(\[]?([A-D])[)\]]?(?:[^A-Za-z0-9]|$)").unwrap()
});
static CHOICE_PAREN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\(([A-D])\)").unwrap());
static CHOICE_BARE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([A-D])\b").unwrap());
static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?").unwrap());
static ANSWER_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)answer\s+is").unwrap());

/// Normalizes a raw model response for `kind`.
pub fn normalize_answer(raw: &str, kind: TaskKind) -> Result<String, CoreError> {
    if raw.trim().is_empty() {
        return Err(CoreError::NoAnswerFound);
    }
    match kind {
        TaskKind::Choice => normalize_choice(raw),
        TaskKind::Numeric => normalize_numeric(raw),
        TaskKind::Code => normalize_code(raw),
    }
}

fn normalize_choice(raw: &str) -> Result<String, CoreError> {
    let last = |re: &Regex| {
        re.captures_iter(raw)
            .last()
            .map(|c| c[1].to_string())
    };
    if let Some(c) = CHOICE_ALONE.captures(raw) {
        return Ok(c[1].to_string());
    }
    last(&CHOICE_STATED)
        .or_else(|| last(&CHOICE_PAREN))
        .or_else(|| last(&CHOICE_BARE))
        .ok_or(CoreError::NoAnswerFound)
}

fn normalize_numeric(raw: &str) -> Result<String, CoreError> {
    let answer_line = raw.lines().rev().find(|line| ANSWER_LINE.is_match(line));
    let from_line = answer_line.and_then(last_number);
    from_line
        .or_else(|| last_number(raw))
        .ok_or(CoreError::NoAnswerFound)
}

fn last_number(text: &str) -> Option<String> {
    let m = NUMBER.find_iter(text).last()?;
    let mut token = m.as_str();
    // "3-5" is a range, not a negative five
    if token.starts_with('-') {
        let preceded_by_word = text[..m.start()]
            .chars()
            .next_back()
            .is_some_and(|c| c.is_alphanumeric());
        if preceded_by_word {
            token = &token[1..];
        }
    }
    Some(canonical_number(token))
}

fn canonical_number(token: &str) -> String {
    let (negative, digits) = match token.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, token),
    };
    let digits: String = digits.chars().filter(|c| *c != ',').collect();
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f.trim_end_matches('0')),
        None => (digits.as_str(), ""),
    };
    let int_part = int_part.trim_start_matches('0');
    let int_part = if int_part.is_empty() { "0" } else { int_part };
    let mut out = String::new();
    if negative && !(int_part == "0" && frac_part.is_empty()) {
        out.push('-');
    }
    out.push_str(int_part);
    if !frac_part.is_empty() {
        out.push('.');
        out.push_str(frac_part);
    }
    out
}

fn normalize_code(raw: &str) -> Result<String, CoreError> {
    let pieces: Vec<&str> = raw.split("```").collect();
    let body = match pieces.len() {
        1 => raw,
        n if n % 2 == 1 => strip_fence_tag(pieces[n - 2]),
        // unterminated final fence: the response was probably truncated
        n => strip_fence_tag(pieces[n - 1]),
    };
    let body = body.trim();
    if body.is_empty() {
        Err(CoreError::NoAnswerFound)
    } else {
        Ok(body.to_string())
    }
}

fn strip_fence_tag(block: &str) -> &str {
    match block.split_once('\n') {
        Some((tag, rest))
            if tag
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '+' | '-' | ' ')) =>
        {
            rest
        }
        _ => block,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(raw: &str, kind: TaskKind) -> Result<String, CoreError> {
        normalize_answer(raw, kind)
    }

    #[test]
    fn numeric_answer_line() {
        assert_eq!(norm("The answer is 140", TaskKind::Numeric).unwrap(), "140");
        assert_eq!(
            norm("…so 1,234 apples. The answer is 1,234", TaskKind::Numeric).unwrap(),
            "1234"
        );
        assert_eq!(
            norm("She has 3 cats.\nThe answer is $18.50 dollars", TaskKind::Numeric).unwrap(),
            "18.5"
        );
        assert_eq!(
            norm("The answer is 7\nwait, 12 + 1 = 13", TaskKind::Numeric).unwrap(),
            "7"
        );
    }

    #[test]
    fn numeric_fallbacks() {
        assert_eq!(norm("total = 12 + 30 = 42", TaskKind::Numeric).unwrap(), "42");
        assert_eq!(norm("#### 72", TaskKind::Numeric).unwrap(), "72");
        assert_eq!(norm("it drops to -5 degrees", TaskKind::Numeric).unwrap(), "-5");
        assert_eq!(norm("pages 3-5", TaskKind::Numeric).unwrap(), "5");
        assert_eq!(norm("The answer is 12.00", TaskKind::Numeric).unwrap(), "12");
        assert_eq!(norm("The answer is 007", TaskKind::Numeric).unwrap(), "7");
        assert_eq!(norm("no digits here", TaskKind::Numeric), Err(CoreError::NoAnswerFound));
    }

    #[test]
    fn choice_forms() {
        assert_eq!(norm("A", TaskKind::Choice).unwrap(), "A");
        assert_eq!(norm(" (c) ", TaskKind::Choice), Err(CoreError::NoAnswerFound));
        assert_eq!(norm("(C)", TaskKind::Choice).unwrap(), "C");
        assert_eq!(
            norm("A is tempting, but the answer is B.", TaskKind::Choice).unwrap(),
            "B"
        );
        assert_eq!(
            norm("Option (A) fails, (D) holds", TaskKind::Choice).unwrap(),
            "D"
        );
        assert_eq!(norm("Answer: C", TaskKind::Choice).unwrap(), "C");
        assert_eq!(norm("none of them", TaskKind::Choice), Err(CoreError::NoAnswerFound));
    }

    #[test]
    fn code_fences() {
        let raw = "Here you go:\n```python\ndef f(x):\n    return x\n```\nDone.";
        assert_eq!(norm(raw, TaskKind::Code).unwrap(), "def f(x):\n    return x");
        let two = "```python\na = 1\n```\n```python\nb = 2\n```";
        assert_eq!(norm(two, TaskKind::Code).unwrap(), "b = 2");
        let truncated = "```python\ndef g():\n    return";
        assert_eq!(norm(truncated, TaskKind::Code).unwrap(), "def g():\n    return");
        assert_eq!(norm("x = 1\n", TaskKind::Code).unwrap(), "x = 1");
        assert_eq!(norm("```python\n```", TaskKind::Code), Err(CoreError::NoAnswerFound));
    }

    #[test]
    fn empty_input_has_no_answer() {
        for kind in [TaskKind::Choice, TaskKind::Numeric, TaskKind::Code] {
            assert_eq!(norm("   ", kind), Err(CoreError::NoAnswerFound));
        }
    }

    #[test]
    fn different_texts_same_answer_compare_equal() {
        let a = norm("Let me see. The answer is 1,000", TaskKind::Numeric).unwrap();
        let b = norm("so it is 1000.0 in total", TaskKind::Numeric).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn idempotent(raw in "[ -~\n]{0,80}", k in 0..3u8) {
            let kind = [TaskKind::Choice, TaskKind::Numeric, TaskKind::Code][k as usize];
            if let Ok(once) = normalize_answer(&raw, kind) {
                prop_assert_eq!(normalize_answer(&once, kind), Ok(once.clone()));
            }
        }

        #[test]
        fn numeric_idempotent_on_number_text(n in -1_000_000i64..1_000_000, frac in 0u32..1000) {
            let raw = format!("The answer is {n}.{frac:03}");
            let once = normalize_answer(&raw, TaskKind::Numeric).unwrap();
            prop_assert_eq!(normalize_answer(&once, TaskKind::Numeric).unwrap(), once);
        }
    }
}
