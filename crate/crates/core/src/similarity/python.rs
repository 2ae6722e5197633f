//! Recursive-descent parser for the Python subset that generated solutions
//! to function-synthesis tasks are written in.
//!
//! The parser does not build a tree. It records the node type of every
//! construct it recognizes, using CPython's `ast` class names, which is all
//! the Jaccard metric needs. Expression contexts (`Load`, `Store`, `Del`) are
//! not recorded; operator nodes (`Add`, `Eq`, `And`, `Not`, ...) are.
//!
//! Supported statements: expression statements, assignment (plain,
//! augmented, annotated), `def`, `class`, `return`, `if`/`elif`/`else`,
//! `while`, `for`, `try`/`except`/`finally`, `with`, `import`, `from ...
//! import`, `pass`, `break`, `continue`, `assert`, `raise`, `del`, `global`,
//! `nonlocal` and decorators. Supported expressions: the full operator
//! precedence ladder, conditional expressions, `lambda`, calls with keyword
//! and star arguments, attribute access, subscripts and slices, literals,
//! list/tuple/set/dict displays and their comprehensions, generator
//! expressions, `yield`, `await` and the walrus operator. f-strings are
//! recorded as `JoinedStr` (plus `FormattedValue` when they have a
//! replacement field) without descending into the fields themselves.
//! Anything else (`async`, `match`, ...) is a parse failure.

use std::collections::BTreeSet;

use crate::error::CoreError;

use super::lexer::{tokenize, Tok, KEYWORDS};

pub(crate) fn node_types(code: &str) -> Result<BTreeSet<&'static str>, CoreError> {
    if code.trim().is_empty() {
        return Err(CoreError::ParseFailure("empty input".into()));
    }
    let toks = tokenize(code)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        seen: BTreeSet::new(),
    };
    parser.file()?;
    Ok(parser.seen)
}

type PResult<T = ()> = Result<T, CoreError>;

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    seen: BTreeSet<&'static str>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        &self.toks[(self.pos + offset).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Tok {
        let tok = self.peek().clone();
        if self.pos < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        Err(CoreError::ParseFailure(format!(
            "expected {expected}, found {:?} at token {}",
            self.peek(),
            self.pos
        )))
    }

    fn mark(&mut self, node: &'static str) {
        self.seen.insert(node);
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.error(&format!("`{op}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn identifier(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.error("identifier"),
        }
    }

    fn file(&mut self) -> PResult {
        self.mark("Module");
        loop {
            match self.peek() {
                Tok::End => return Ok(()),
                Tok::Newline => {
                    self.pos += 1;
                }
                _ => self.statement()?,
            }
        }
    }

    fn statement(&mut self) -> PResult {
        let Tok::Name(word) = self.peek().clone() else {
            if self.is_op("@") {
                return self.decorated();
            }
            return self.simple_statements();
        };
        match word.as_str() {
            "if" => self.if_statement(),
            "while" => self.while_statement(),
            "for" => self.for_statement(),
            "def" => self.function_def(),
            "class" => self.class_def(),
            "try" => self.try_statement(),
            "with" => self.with_statement(),
            "async" => self.error("supported statement"),
            _ => self.simple_statements(),
        }
    }

    fn block(&mut self) -> PResult {
        self.expect_op(":")?;
        if matches!(self.peek(), Tok::Newline) {
            self.pos += 1;
            if !matches!(self.bump(), Tok::Indent) {
                self.pos -= 1;
                return self.error("indented block");
            }
            while !matches!(self.peek(), Tok::Dedent | Tok::End) {
                if matches!(self.peek(), Tok::Newline) {
                    self.pos += 1;
                    continue;
                }
                self.statement()?;
            }
            if matches!(self.peek(), Tok::Dedent) {
                self.pos += 1;
            }
            Ok(())
        } else {
            self.simple_statements()
        }
    }

    fn decorated(&mut self) -> PResult {
        while self.eat_op("@") {
            self.named_expression()?;
            if !matches!(self.bump(), Tok::Newline) {
                return self.error("newline after decorator");
            }
        }
        if self.is_kw("def") {
            self.function_def()
        } else if self.is_kw("class") {
            self.class_def()
        } else {
            self.error("`def` or `class` after decorator")
        }
    }

    fn if_statement(&mut self) -> PResult {
        // `elif` is a nested If in the tree
        self.bump();
        self.mark("If");
        self.named_expression()?;
        self.block()?;
        while self.eat_kw("elif") {
            self.named_expression()?;
            self.block()?;
        }
        if self.eat_kw("else") {
            self.block()?;
        }
        Ok(())
    }

    fn while_statement(&mut self) -> PResult {
        self.bump();
        self.mark("While");
        self.named_expression()?;
        self.block()?;
        if self.eat_kw("else") {
            self.block()?;
        }
        Ok(())
    }

    fn for_statement(&mut self) -> PResult {
        self.bump();
        self.mark("For");
        self.target_list()?;
        self.expect_kw("in")?;
        self.expression_list(true)?;
        self.block()?;
        if self.eat_kw("else") {
            self.block()?;
        }
        Ok(())
    }

    fn function_def(&mut self) -> PResult {
        self.bump();
        self.mark("FunctionDef");
        self.identifier()?;
        self.expect_op("(")?;
        self.parameters(")", true)?;
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.test()?;
        }
        self.block()
    }

    fn class_def(&mut self) -> PResult {
        self.bump();
        self.mark("ClassDef");
        self.identifier()?;
        if self.eat_op("(") {
            self.call_arguments()?;
        }
        self.block()
    }

    fn try_statement(&mut self) -> PResult {
        self.bump();
        self.mark("Try");
        self.block()?;
        let mut handlers = 0;
        while self.eat_kw("except") {
            handlers += 1;
            self.mark("ExceptHandler");
            if !self.is_op(":") {
                self.test()?;
                if self.eat_kw("as") {
                    self.identifier()?;
                }
            }
            self.block()?;
        }
        if handlers > 0 && self.eat_kw("else") {
            self.block()?;
        }
        if self.eat_kw("finally") {
            self.block()?;
        } else if handlers == 0 {
            return self.error("`except` or `finally`");
        }
        Ok(())
    }

    fn with_statement(&mut self) -> PResult {
        self.bump();
        self.mark("With");
        loop {
            self.mark("withitem");
            self.test()?;
            if self.eat_kw("as") {
                self.target()?;
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.block()
    }

    /// Parameter list for `def` (annotations allowed) or `lambda`.
    fn parameters(&mut self, close: &str, annotations: bool) -> PResult {
        self.mark("arguments");
        while !self.is_op(close) {
            if self.eat_op("/") {
                // positional-only marker
            } else if self.eat_op("**") || self.eat_op("*") {
                if matches!(self.peek(), Tok::Name(_)) {
                    self.parameter(annotations)?;
                }
            } else {
                self.parameter(annotations)?;
                if self.eat_op("=") {
                    self.test()?;
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(())
    }

    fn parameter(&mut self, annotations: bool) -> PResult {
        self.identifier()?;
        self.mark("arg");
        if annotations && self.eat_op(":") {
            self.test()?;
        }
        Ok(())
    }

    fn simple_statements(&mut self) -> PResult {
        loop {
            self.small_statement()?;
            if !self.eat_op(";") {
                break;
            }
            if matches!(self.peek(), Tok::Newline) {
                break;
            }
        }
        match self.bump() {
            Tok::Newline => Ok(()),
            _ => {
                self.pos -= 1;
                self.error("end of statement")
            }
        }
    }

    fn small_statement(&mut self) -> PResult {
        let word = match self.peek() {
            Tok::Name(n) => n.clone(),
            _ => String::new(),
        };
        match word.as_str() {
            "pass" => {
                self.bump();
                self.mark("Pass");
            }
            "break" => {
                self.bump();
                self.mark("Break");
            }
            "continue" => {
                self.bump();
                self.mark("Continue");
            }
            "return" => {
                self.bump();
                self.mark("Return");
                if !self.at_statement_end() {
                    self.expression_list(true)?;
                }
            }
            "global" | "nonlocal" => {
                self.bump();
                self.mark(if word == "global" { "Global" } else { "Nonlocal" });
                self.identifier()?;
                while self.eat_op(",") {
                    self.identifier()?;
                }
            }
            "del" => {
                self.bump();
                self.mark("Delete");
                self.target_list()?;
            }
            "assert" => {
                self.bump();
                self.mark("Assert");
                self.test()?;
                if self.eat_op(",") {
                    self.test()?;
                }
            }
            "raise" => {
                self.bump();
                self.mark("Raise");
                if !self.at_statement_end() {
                    self.test()?;
                    if self.eat_kw("from") {
                        self.test()?;
                    }
                }
            }
            "import" => {
                self.bump();
                self.mark("Import");
                loop {
                    self.dotted_alias()?;
                    if !self.eat_op(",") {
                        break;
                    }
                }
            }
            "from" => {
                self.bump();
                self.mark("ImportFrom");
                while self.eat_op(".") || self.eat_op("...") {}
                if !self.is_kw("import") {
                    self.dotted_name()?;
                }
                self.expect_kw("import")?;
                if self.eat_op("*") {
                    self.mark("alias");
                } else {
                    let paren = self.eat_op("(");
                    loop {
                        self.mark("alias");
                        self.identifier()?;
                        if self.eat_kw("as") {
                            self.identifier()?;
                        }
                        if !self.eat_op(",") || (paren && self.is_op(")")) {
                            break;
                        }
                    }
                    if paren {
                        self.expect_op(")")?;
                    }
                }
            }
            _ => self.expression_statement()?,
        }
        Ok(())
    }

    fn at_statement_end(&self) -> bool {
        matches!(self.peek(), Tok::Newline | Tok::End) || self.is_op(";")
    }

    fn dotted_name(&mut self) -> PResult {
        self.identifier()?;
        while self.eat_op(".") {
            self.identifier()?;
        }
        Ok(())
    }

    fn dotted_alias(&mut self) -> PResult {
        self.mark("alias");
        self.dotted_name()?;
        if self.eat_kw("as") {
            self.identifier()?;
        }
        Ok(())
    }

    fn expression_statement(&mut self) -> PResult {
        if self.is_kw("yield") {
            self.mark("Expr");
            return self.yield_expression();
        }
        self.expression_list(true)?;
        if self.eat_op(":") {
            self.mark("AnnAssign");
            self.test()?;
            if self.eat_op("=") {
                self.assigned_value()?;
            }
            return Ok(());
        }
        if let Tok::Op(op) = self.peek() {
            if let Some(node) = augmented_operator(op) {
                self.bump();
                self.mark("AugAssign");
                self.mark(node);
                return self.assigned_value();
            }
        }
        if self.is_op("=") {
            self.mark("Assign");
            while self.eat_op("=") {
                self.assigned_value()?;
            }
        } else {
            self.mark("Expr");
        }
        Ok(())
    }

    fn assigned_value(&mut self) -> PResult {
        if self.is_kw("yield") {
            self.yield_expression()
        } else {
            self.expression_list(true)
        }
    }

    fn yield_expression(&mut self) -> PResult {
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            self.mark("YieldFrom");
            return self.test();
        }
        self.mark("Yield");
        if !self.at_statement_end() && !self.is_op(")") && !self.is_op("=") {
            self.expression_list(true)?;
        }
        Ok(())
    }

    /// Comma-separated expressions; a trailing or separating comma makes a Tuple.
    fn expression_list(&mut self, allow_star: bool) -> PResult {
        self.list_item(allow_star)?;
        if self.is_op(",") {
            self.mark("Tuple");
            while self.eat_op(",") {
                if self.expression_list_ends() {
                    break;
                }
                self.list_item(allow_star)?;
            }
        }
        Ok(())
    }

    fn expression_list_ends(&self) -> bool {
        self.at_statement_end()
            || matches!(self.peek(), Tok::Op(o) if matches!(*o, "=" | ")" | "]" | "}" | ":"))
            || augmented_operator(match self.peek() {
                Tok::Op(o) => o,
                _ => "",
            })
            .is_some()
    }

    fn list_item(&mut self, allow_star: bool) -> PResult {
        if allow_star && self.eat_op("*") {
            self.mark("Starred");
            self.bit_or()
        } else {
            self.named_expression()
        }
    }

    /// Targets of `for` and `del`: stops before `in`.
    fn target_list(&mut self) -> PResult {
        self.target()?;
        if self.is_op(",") {
            self.mark("Tuple");
            while self.eat_op(",") {
                if self.is_kw("in") || self.at_statement_end() {
                    break;
                }
                self.target()?;
            }
        }
        Ok(())
    }

    fn target(&mut self) -> PResult {
        if self.eat_op("*") {
            self.mark("Starred");
        }
        self.bit_or()
    }

    fn named_expression(&mut self) -> PResult {
        if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op(":=")) {
            self.mark("NamedExpr");
            self.mark("Name");
            self.pos += 2;
            return self.test();
        }
        self.test()
    }

    fn test(&mut self) -> PResult {
        if self.is_kw("lambda") {
            return self.lambda();
        }
        self.or_test()?;
        if self.is_kw("if") {
            // `x if c else y`, but not the `if` of a comprehension
            let save = self.pos;
            self.bump();
            self.or_test()?;
            if self.eat_kw("else") {
                self.mark("IfExp");
                self.test()?;
            } else {
                self.pos = save;
            }
        }
        Ok(())
    }

    fn test_no_conditional(&mut self) -> PResult {
        if self.is_kw("lambda") {
            return self.lambda();
        }
        self.or_test()
    }

    fn lambda(&mut self) -> PResult {
        self.bump();
        self.mark("Lambda");
        self.parameters(":", false)?;
        self.expect_op(":")?;
        self.test()
    }

    fn or_test(&mut self) -> PResult {
        self.and_test()?;
        while self.eat_kw("or") {
            self.mark("BoolOp");
            self.mark("Or");
            self.and_test()?;
        }
        Ok(())
    }

    fn and_test(&mut self) -> PResult {
        self.not_test()?;
        while self.eat_kw("and") {
            self.mark("BoolOp");
            self.mark("And");
            self.not_test()?;
        }
        Ok(())
    }

    fn not_test(&mut self) -> PResult {
        if self.eat_kw("not") {
            self.mark("UnaryOp");
            self.mark("Not");
            return self.not_test();
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult {
        self.bit_or()?;
        loop {
            let op = match self.peek() {
                Tok::Op("<") => "Lt",
                Tok::Op(">") => "Gt",
                Tok::Op("==") => "Eq",
                Tok::Op(">=") => "GtE",
                Tok::Op("<=") => "LtE",
                Tok::Op("!=") => "NotEq",
                Tok::Name(n) if n == "in" => "In",
                Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                    self.pos += 1;
                    "NotIn"
                }
                Tok::Name(n) if n == "is" => {
                    if matches!(self.peek_at(1), Tok::Name(m) if m == "not") {
                        self.pos += 1;
                        "IsNot"
                    } else {
                        "Is"
                    }
                }
                _ => return Ok(()),
            };
            self.pos += 1;
            self.mark("Compare");
            self.mark(op);
            self.bit_or()?;
        }
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, &'static str)],
        next: fn(&mut Self) -> PResult,
    ) -> PResult {
        next(self)?;
        'outer: loop {
            for (tok, node) in ops {
                if self.eat_op(tok) {
                    self.mark("BinOp");
                    self.mark(node);
                    next(self)?;
                    continue 'outer;
                }
            }
            return Ok(());
        }
    }

    fn bit_or(&mut self) -> PResult {
        self.binary_level(&[("|", "BitOr")], Self::bit_xor)
    }

    fn bit_xor(&mut self) -> PResult {
        self.binary_level(&[("^", "BitXor")], Self::bit_and)
    }

    fn bit_and(&mut self) -> PResult {
        self.binary_level(&[("&", "BitAnd")], Self::shift)
    }

    fn shift(&mut self) -> PResult {
        self.binary_level(&[("<<", "LShift"), (">>", "RShift")], Self::arith)
    }

    fn arith(&mut self) -> PResult {
        self.binary_level(&[("+", "Add"), ("-", "Sub")], Self::term)
    }

    fn term(&mut self) -> PResult {
        self.binary_level(
            &[("*", "Mult"), ("/", "Div"), ("//", "FloorDiv"), ("%", "Mod"), ("@", "MatMult")],
            Self::factor,
        )
    }

    fn factor(&mut self) -> PResult {
        let unary = match self.peek() {
            Tok::Op("-") => Some("USub"),
            Tok::Op("+") => Some("UAdd"),
            Tok::Op("~") => Some("Invert"),
            _ => None,
        };
        if let Some(node) = unary {
            self.pos += 1;
            self.mark("UnaryOp");
            self.mark(node);
            return self.factor();
        }
        self.power()
    }

    fn power(&mut self) -> PResult {
        if self.eat_kw("await") {
            self.mark("Await");
        }
        self.atom_with_trailers()?;
        if self.eat_op("**") {
            self.mark("BinOp");
            self.mark("Pow");
            self.factor()?;
        }
        Ok(())
    }

    fn atom_with_trailers(&mut self) -> PResult {
        self.atom()?;
        loop {
            if self.eat_op("(") {
                self.mark("Call");
                self.call_arguments()?;
            } else if self.eat_op("[") {
                self.mark("Subscript");
                self.subscripts()?;
                self.expect_op("]")?;
            } else if self.eat_op(".") {
                self.mark("Attribute");
                self.identifier()?;
            } else {
                return Ok(());
            }
        }
    }

    /// Arguments after an opening parenthesis, including the closing one.
    fn call_arguments(&mut self) -> PResult {
        while !self.is_op(")") {
            if self.eat_op("**") {
                self.mark("keyword");
                self.test()?;
            } else if self.eat_op("*") {
                self.mark("Starred");
                self.test()?;
            } else if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                self.identifier()?;
                self.pos += 1;
                self.mark("keyword");
                self.test()?;
            } else {
                self.named_expression()?;
                if self.is_kw("for") {
                    self.mark("GeneratorExp");
                    self.comprehension_clauses()?;
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")
    }

    fn subscripts(&mut self) -> PResult {
        self.subscript()?;
        if self.is_op(",") {
            self.mark("Tuple");
            while self.eat_op(",") {
                if self.is_op("]") {
                    break;
                }
                self.subscript()?;
            }
        }
        Ok(())
    }

    fn subscript(&mut self) -> PResult {
        let ends = |p: &Self| p.is_op(":") || p.is_op("]") || p.is_op(",");
        if !self.is_op(":") {
            if self.eat_op("*") {
                self.mark("Starred");
            }
            self.named_expression()?;
        }
        if self.eat_op(":") {
            self.mark("Slice");
            if !ends(self) {
                self.test()?;
            }
            if self.eat_op(":") && !ends(self) {
                self.test()?;
            }
        }
        Ok(())
    }

    fn comprehension_clauses(&mut self) -> PResult {
        while self.eat_kw("for") {
            self.mark("comprehension");
            self.target_list()?;
            self.expect_kw("in")?;
            self.or_test()?;
            while self.eat_kw("if") {
                self.test_no_conditional()?;
            }
        }
        Ok(())
    }

    fn atom(&mut self) -> PResult {
        match self.bump() {
            Tok::Name(n) => match n.as_str() {
                "True" | "False" | "None" => {
                    self.mark("Constant");
                    Ok(())
                }
                kw if KEYWORDS.contains(&kw) => {
                    self.pos -= 1;
                    self.error("expression")
                }
                _ => {
                    self.mark("Name");
                    Ok(())
                }
            },
            Tok::Number => {
                self.mark("Constant");
                Ok(())
            }
            Tok::Str { formatted, fields } => {
                let (mut joined, mut any_fields) = (formatted, fields);
                while let Tok::Str { formatted, fields } = self.peek() {
                    joined |= *formatted;
                    any_fields |= *fields;
                    self.pos += 1;
                }
                if joined {
                    self.mark("JoinedStr");
                    if any_fields {
                        self.mark("FormattedValue");
                    }
                } else {
                    self.mark("Constant");
                }
                Ok(())
            }
            Tok::Op("...") => {
                self.mark("Constant");
                Ok(())
            }
            Tok::Op("(") => self.parenthesized(),
            Tok::Op("[") => self.list_display(),
            Tok::Op("{") => self.brace_display(),
            _ => {
                self.pos -= 1;
                self.error("expression")
            }
        }
    }

    fn parenthesized(&mut self) -> PResult {
        if self.eat_op(")") {
            self.mark("Tuple");
            return Ok(());
        }
        if self.is_kw("yield") {
            self.yield_expression()?;
            return self.expect_op(")");
        }
        self.list_item(true)?;
        if self.is_kw("for") {
            self.mark("GeneratorExp");
            self.comprehension_clauses()?;
        } else if self.is_op(",") {
            self.mark("Tuple");
            while self.eat_op(",") {
                if self.is_op(")") {
                    break;
                }
                self.list_item(true)?;
            }
        }
        self.expect_op(")")
    }

    fn list_display(&mut self) -> PResult {
        if self.eat_op("]") {
            self.mark("List");
            return Ok(());
        }
        self.list_item(true)?;
        if self.is_kw("for") {
            self.mark("ListComp");
            self.comprehension_clauses()?;
        } else {
            self.mark("List");
            while self.eat_op(",") {
                if self.is_op("]") {
                    break;
                }
                self.list_item(true)?;
            }
        }
        self.expect_op("]")
    }

    fn brace_display(&mut self) -> PResult {
        if self.eat_op("}") {
            self.mark("Dict");
            return Ok(());
        }
        let first_is_dict = if self.eat_op("**") {
            self.bit_or()?;
            true
        } else {
            self.list_item(true)?;
            if self.eat_op(":") {
                self.test()?;
                true
            } else {
                false
            }
        };
        if self.is_kw("for") {
            self.mark(if first_is_dict { "DictComp" } else { "SetComp" });
            self.comprehension_clauses()?;
            return self.expect_op("}");
        }
        self.mark(if first_is_dict { "Dict" } else { "Set" });
        while self.eat_op(",") {
            if self.is_op("}") {
                break;
            }
            if first_is_dict {
                if self.eat_op("**") {
                    self.bit_or()?;
                } else {
                    self.test()?;
                    self.expect_op(":")?;
                    self.test()?;
                }
            } else {
                self.list_item(true)?;
            }
        }
        self.expect_op("}")
    }
}

fn augmented_operator(op: &str) -> Option<&'static str> {
    Some(match op {
        "+=" => "Add",
        "-=" => "Sub",
        "*=" => "Mult",
        "/=" => "Div",
        "//=" => "FloorDiv",
        "%=" => "Mod",
        "**=" => "Pow",
        "&=" => "BitAnd",
        "|=" => "BitOr",
        "^=" => "BitXor",
        "<<=" => "LShift",
        ">>=" => "RShift",
        "@=" => "MatMult",
        _ => return None,
    })
}
