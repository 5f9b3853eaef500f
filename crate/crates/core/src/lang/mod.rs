//! The restricted imperative language in which rule programs are accepted.
//!
//! The accepted subset is Python-shaped: `def`, assignment (plain, subscript,
//! tuple, `+=`/`-=`/`*=`), `if`/`elif`/`else`, `for`, `while`, `return`,
//! `pass`/`break`/`continue`, literals (int, string, bool, `None`, list,
//! tuple, dict), subscripts and slices, arithmetic, comparisons, boolean
//! operators, conditional expressions, single-clause comprehensions and calls
//! to a fixed set of builtins and methods. See `docs/grammar.md` for the EBNF.

pub mod ast;
pub mod dump;
pub mod extract;
pub mod lexer;
pub mod parser;
pub mod printer;

use std::fmt;

use serde::Serialize;

pub use ast::{Module, NodeId, Span};
pub use extract::extract_code_block;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub module: Option<Module>,
    /// Nonempty whenever `module` is `None`.
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseOutcome {
    pub fn is_ok(&self) -> bool {
        self.module.is_some()
    }
}

pub fn parse(tokens: Vec<lexer::Token>) -> ParseOutcome {
    match parser::Parser::new(tokens).parse_module() {
        Ok(module) => ParseOutcome { module: Some(module), diagnostics: vec![] },
        Err(d) => ParseOutcome { module: None, diagnostics: vec![d] },
    }
}

/// Lex and parse in one step.
pub fn parse_program(source: &str) -> ParseOutcome {
    match lexer::lex(source) {
        Ok(tokens) => parse(tokens),
        Err(d) => ParseOutcome { module: None, diagnostics: vec![d] },
    }
}
