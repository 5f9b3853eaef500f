//! End-to-end scoring of one model response on one dataset.

use serde::Serialize;

use crate::analyzer::{analyze, MappingTable};
use crate::interp::{count_errors, ErrorReport, ExecBudget};
use crate::lang::{extract_code_block, parse_program, Diagnostic};
use crate::metrics::{c_score, l_total};
use crate::model::{Dataset, FailureMode, SAMPLES};

#[derive(Debug, Clone, Serialize)]
pub struct Scored {
    pub extracted_program: Option<String>,
    pub l_plus: u32,
    pub errors: u32,
    pub l_total: u32,
    pub c_score: f64,
    pub failure_mode: FailureMode,
    pub diagnostics: Vec<Diagnostic>,
    pub table: Option<MappingTable>,
    /// Per-input results, for audit.
    pub transcript: Option<ErrorReport>,
}

impl Scored {
    /// A response that yields no runnable program describes nothing: empty
    /// table, every sample wrong.
    pub fn undecodable(mode: FailureMode, program: Option<String>, diagnostics: Vec<Diagnostic>) -> Scored {
        let errors = SAMPLES as u32;
        let l = l_total(0, errors);
        Scored {
            extracted_program: program,
            l_plus: 0,
            errors,
            l_total: l,
            c_score: c_score(l),
            failure_mode: mode,
            diagnostics,
            table: None,
            transcript: None,
        }
    }
}

/// Extract → parse → analyse → execute on all inputs → score.
pub fn score_response(response: &str, dataset: &Dataset, budget: &ExecBudget) -> Scored {
    let Some(program) = extract_code_block(response) else {
        return Scored::undecodable(FailureMode::NoCodeBlock, None, vec![]);
    };
    score_program(program, dataset, budget)
}

pub fn score_program(program: String, dataset: &Dataset, budget: &ExecBudget) -> Scored {
    let parsed = parse_program(&program);
    let Some(module) = parsed.module else {
        return Scored::undecodable(FailureMode::ParseFailure, Some(program), parsed.diagnostics);
    };
    let table = analyze(&module);
    let report = count_errors(&module, dataset, budget);
    let any_failure = report.outcomes.iter().any(|o| o.result.outcome.is_err());
    let l = l_total(table.l_plus, report.errors);
    Scored {
        extracted_program: Some(program),
        l_plus: table.l_plus,
        errors: report.errors,
        l_total: l,
        c_score: c_score(l),
        failure_mode: if any_failure { FailureMode::RuntimeFailure } else { FailureMode::None },
        diagnostics: vec![],
        table: Some(table),
        transcript: Some(report),
    }
}
