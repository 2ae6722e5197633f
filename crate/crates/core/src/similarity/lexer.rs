//! Tokenizer for the Python subset, plus the lenient token-class scan used
//! when parsing fails.

use std::collections::BTreeSet;

use crate::error::CoreError;

pub(crate) const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

// longest first
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==",
    "!=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@",
    "&", "|", "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=",
];

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Name(String),
    Number,
    /// `fields` is set for f-strings with at least one replacement field.
    Str { formatted: bool, fields: bool },
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    End,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Tok>, CoreError> {
    let fail = |msg: &str, line: usize| CoreError::ParseFailure(format!("line {line}: {msg}"));
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut indents = vec![0usize];
    let mut depth = 0usize;
    let mut at_line_start = true;
    let mut line = 1usize;
    let mut i = 0usize;

    while i < chars.len() {
        if at_line_start && depth == 0 {
            let mut col = 0usize;
            while i < chars.len() && matches!(chars[i], ' ' | '\t' | '\x0c') {
                col = if chars[i] == '\t' { (col / 8 + 1) * 8 } else { col + 1 };
                i += 1;
            }
            if i >= chars.len() {
                break;
            }
            // blank and comment-only lines do not affect indentation
            if chars[i] == '\n' || chars[i] == '#' || chars[i] == '\r' {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                i += 1;
                line += 1;
                continue;
            }
            let current = *indents.last().unwrap();
            if col > current {
                indents.push(col);
                toks.push(Tok::Indent);
            } else {
                while col < *indents.last().unwrap() {
                    indents.pop();
                    toks.push(Tok::Dedent);
                }
                if col != *indents.last().unwrap() {
                    return Err(fail("inconsistent dedent", line));
                }
            }
            at_line_start = false;
        }

        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
                if depth == 0 {
                    toks.push(Tok::Newline);
                    at_line_start = true;
                }
            }
            ' ' | '\t' | '\r' | '\x0c' => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                i += 2;
                line += 1;
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let is_prefix = word.len() <= 2
                    && word.chars().all(|p| "rRbBuUfF".contains(p))
                    && matches!(chars.get(i), Some('\'') | Some('"'));
                if is_prefix {
                    let formatted = word.contains(['f', 'F']);
                    let start = i;
                    i = scan_string(&chars, i, &mut line)
                        .ok_or_else(|| fail("unterminated string", line))?;
                    let fields = formatted && has_replacement_field(&chars[start..i]);
                    toks.push(Tok::Str { formatted, fields });
                } else {
                    toks.push(Tok::Name(word));
                }
            }
            '\'' | '"' => {
                i = scan_string(&chars, i, &mut line)
                    .ok_or_else(|| fail("unterminated string", line))?;
                toks.push(Tok::Str {
                    formatted: false,
                    fields: false,
                });
            }
            _ if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                i = scan_number(&chars, i);
                toks.push(Tok::Number);
            }
            _ => {
                let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
                let op = OPERATORS
                    .iter()
                    .find(|op| rest.starts_with(**op))
                    .ok_or_else(|| fail(&format!("unexpected character {c:?}"), line))?;
                match *op {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => {
                        depth = depth
                            .checked_sub(1)
                            .ok_or_else(|| fail("unbalanced bracket", line))?
                    }
                    _ => {}
                }
                i += op.len();
                toks.push(Tok::Op(op));
            }
        }
    }
    if depth != 0 {
        return Err(fail("unclosed bracket", line));
    }
    if !matches!(toks.last(), None | Some(Tok::Newline)) {
        toks.push(Tok::Newline);
    }
    for _ in 1..indents.len() {
        toks.push(Tok::Dedent);
    }
    toks.push(Tok::End);
    Ok(toks)
}

fn has_replacement_field(literal: &[char]) -> bool {
    let mut i = 0;
    while i < literal.len() {
        if literal[i] == '{' {
            if literal.get(i + 1) == Some(&'{') {
                i += 2;
                continue;
            }
            return true;
        }
        i += 1;
    }
    false
}

/// Returns the index just past the closing quote.
fn scan_string(chars: &[char], start: usize, line: &mut usize) -> Option<usize> {
    let quote = chars[start];
    let triple = chars.get(start + 1) == Some(&quote) && chars.get(start + 2) == Some(&quote);
    let mut i = if triple { start + 3 } else { start + 1 };
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' {
            if chars.get(i + 1) == Some(&'\n') {
                *line += 1;
            }
            i += 2;
            continue;
        }
        if c == '\n' {
            if !triple {
                return None;
            }
            *line += 1;
        }
        if c == quote {
            if !triple {
                return Some(i + 1);
            }
            if chars.get(i + 1) == Some(&quote) && chars.get(i + 2) == Some(&quote) {
                return Some(i + 3);
            }
        }
        i += 1;
    }
    None
}

fn scan_number(chars: &[char], start: usize) -> usize {
    let mut i = start;
    if chars[i] == '0' && matches!(chars.get(i + 1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B')) {
        i += 2;
        while i < chars.len() && (chars[i].is_ascii_hexdigit() || chars[i] == '_') {
            i += 1;
        }
        return i;
    }
    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_' || chars[i] == '.') {
        i += 1;
    }
    if i < chars.len() && matches!(chars[i], 'e' | 'E') {
        let mut j = i + 1;
        if j < chars.len() && matches!(chars[j], '+' | '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            i = j;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    if i < chars.len() && matches!(chars[i], 'j' | 'J') {
        i += 1;
    }
    i
}

/// Lenient scan that reduces any text to the set of token classes it
/// contains. Never fails on non-empty input with at least one token.
pub fn token_classes(code: &str) -> Result<BTreeSet<String>, CoreError> {
    let chars: Vec<char> = code.chars().collect();
    let mut classes = BTreeSet::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if matches!(chars.get(i), Some('\'' | '"')) && word.len() <= 2 && word.chars().all(|p| "rRbBuUfF".contains(p)) {
                continue; // string prefix, the quote branch picks it up
            }
            let class = if KEYWORDS.contains(&word.as_str()) { "Keyword" } else { "Identifier" };
            classes.insert(class.to_string());
        } else if c.is_ascii_digit() {
            i = scan_number(&chars, i);
            classes.insert("Number".to_string());
        } else if c == '\'' || c == '"' {
            let mut line = 0;
            i = scan_string(&chars, i, &mut line).unwrap_or(chars.len());
            classes.insert("String".to_string());
        } else if "()[]{},:.;".contains(c) {
            i += 1;
            classes.insert("Delimiter".to_string());
        } else if "+-*/%@&|^~<>=!".contains(c) {
            while i < chars.len() && "+-*/%@&|^~<>=!".contains(chars[i]) {
                i += 1;
            }
            classes.insert("Operator".to_string());
        } else {
            i += 1;
        }
    }
    if classes.is_empty() {
        Err(CoreError::ParseFailure("no tokens".into()))
    } else {
        Ok(classes)
    }
}
