//! Sandboxed tree-walking interpreter for rule programs.
//!
//! Programs run with no I/O, a step budget, a cap on collection and string
//! sizes and a nesting limit, so any input terminates with either a grid or
//! a classified failure.

mod builtins;
mod eval;
mod value;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::ast::{ExprKind, Module, Span, StmtKind};
use crate::model::{Dataset, Grid, InputString, Symbol, SIDE};

pub use builtins::Builtin;
pub use value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecBudget {
    /// Statements and expression evaluations, plus one per element touched
    /// by builtins that walk collections.
    pub max_steps: u64,
    /// Largest list, tuple, dict or string a program may build.
    pub max_collection_size: usize,
    /// Combined nesting of calls and expression evaluation.
    pub max_depth: usize,
}

impl Default for ExecBudget {
    fn default() -> Self {
        ExecBudget { max_steps: 100_000, max_collection_size: 4096, max_depth: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    UndefinedName,
    Type,
    Index,
    Key,
    Value,
    ZeroDivision,
    Overflow,
    StepBudget,
    CollectionLimit,
    Recursion,
    BadReturnShape,
    NoEntryPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind:?} at {}: {message}", span.map(|s| s.to_string()).unwrap_or_else(|| "?".into()))]
pub struct RunFailure {
    pub kind: FailureKind,
    pub message: String,
    pub span: Option<Span>,
}

impl RunFailure {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        RunFailure { kind, message: message.into(), span: None }
    }

    pub(crate) fn at(mut self, span: Span) -> Self {
        self.span.get_or_insert(span);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: Result<Grid, RunFailure>,
    pub steps: u64,
}

/// How the program is invoked on an input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum EntryPoint {
    /// `name(s)`; `generate` when present, otherwise the only top-level
    /// function taking exactly one required argument.
    Function(String),
    /// Top-level code that reads `s` and leaves the grid in `result`.
    Script,
}

pub fn entry_point(m: &Module) -> Option<EntryPoint> {
    let defs: Vec<(&str, usize, usize)> = m
        .body
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::FunctionDef { name, params, .. } => {
                let required = params.iter().filter(|p| p.default.is_none()).count();
                Some((name.as_str(), params.len(), required))
            }
            _ => None,
        })
        .collect();
    if defs.iter().any(|&(n, total, req)| n == "generate" && req <= 1 && total >= 1) {
        return Some(EntryPoint::Function("generate".into()));
    }
    let unary: Vec<&str> = defs.iter().filter(|&&(_, _, req)| req == 1).map(|&(n, _, _)| n).collect();
    if let [only] = unary.as_slice() {
        return Some(EntryPoint::Function((*only).to_string()));
    }
    let assigns_result = m.body.iter().any(|s| match &s.kind {
        StmtKind::Assign { targets, .. } => {
            targets.iter().any(|t| matches!(&t.kind, ExprKind::Name(n) if n == "result"))
        }
        _ => false,
    });
    assigns_result.then_some(EntryPoint::Script)
}

/// Runs the program on one input in a fresh environment.
pub fn run_program(m: &Module, input: &InputString, budget: &ExecBudget) -> RunResult {
    let Some(entry) = entry_point(m) else {
        return RunResult {
            outcome: Err(RunFailure::new(FailureKind::NoEntryPoint, "no generate(s) function or result variable")),
            steps: 0,
        };
    };
    let mut it = eval::Interpreter::new(budget);
    let outcome = it.run(m, &entry, &input.to_string()).and_then(|v| to_grid(&v));
    RunResult { outcome, steps: it.steps() }
}

fn grid_row(v: &Value) -> Option<[Symbol; SIDE]> {
    let chars: Vec<char> = match v {
        Value::Str(s) => s.chars().collect(),
        Value::List(_) | Value::Tuple(_) => {
            let items = match v {
                Value::List(l) => l.borrow().clone(),
                Value::Tuple(t) => t.to_vec(),
                _ => unreachable!(),
            };
            let mut out = Vec::new();
            for i in items {
                match i {
                    Value::Str(s) if s.chars().count() == 1 => out.push(s.chars().next()?),
                    _ => return None,
                }
            }
            out
        }
        _ => return None,
    };
    if chars.len() != SIDE {
        return None;
    }
    let mut row = [Symbol::Dot; SIDE];
    for (slot, c) in row.iter_mut().zip(chars) {
        *slot = Symbol::from_char(c)?;
    }
    Some(row)
}

/// Accepts four row strings, a 4×4 nested list of one-symbol strings, or a
/// single string of four newline-separated rows.
pub fn to_grid(v: &Value) -> Result<Grid, RunFailure> {
    let bad = || RunFailure::new(FailureKind::BadReturnShape, format!("cannot read a 4x4 grid from {}", v.repr()));
    let rows: Vec<Value> = match v {
        Value::List(l) => l.borrow().clone(),
        Value::Tuple(t) => t.to_vec(),
        Value::Str(s) => s.trim().lines().map(|l| Value::str(l.trim())).collect(),
        _ => return Err(bad()),
    };
    if rows.len() != SIDE {
        return Err(bad());
    }
    let mut text = Vec::with_capacity(SIDE);
    for r in &rows {
        let row = grid_row(r).ok_or_else(bad)?;
        text.push(row.iter().map(|s| s.as_char()).collect::<String>());
    }
    Grid::from_rows(&text).map_err(|_| bad())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputOutcome {
    pub input: InputString,
    pub expected: Grid,
    pub result: RunResult,
}

impl InputOutcome {
    pub fn is_correct(&self) -> bool {
        matches!(&self.result.outcome, Ok(g) if *g == self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorReport {
    pub errors: u32,
    pub outcomes: Vec<InputOutcome>,
}

/// Number of dataset samples the program gets wrong. A failure on one input
/// counts as one error and does not affect the others.
pub fn count_errors(m: &Module, dataset: &Dataset, budget: &ExecBudget) -> ErrorReport {
    let outcomes: Vec<InputOutcome> = dataset
        .samples()
        .iter()
        .map(|s| InputOutcome { input: s.input, expected: s.output, result: run_program(m, &s.input, budget) })
        .collect();
    let errors = outcomes.iter().filter(|o| !o.is_correct()).count() as u32;
    ErrorReport { errors, outcomes }
}
