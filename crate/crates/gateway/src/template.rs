//! Prompt templates and rendering for the three task kinds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rulegen_core::model::{CompositionalFunction, Dataset, Grid, InputString, Sample, TaskKind};

use crate::describe::describe_rules;

/// Appended to every program-writing prompt. Keeps responses inside the
/// language the interpreter accepts.
pub const SUBSET_GRAMMAR_NOTE: &str = "\
Write the program in plain Python using only this subset:
- a function `generate(s)` that takes the 4-letter input string and returns the grid as a list of 4 strings of 4 characters each (use '*' and '.');
- module-level assignments, helper functions defined with `def`, `if`/`elif`/`else`, `for`, `while`, `return`, `pass`, `break`, `continue`;
- integers, strings, True/False/None, lists, tuples, dicts, list comprehensions, indexing and slicing, arithmetic, comparisons, `and`/`or`/`not`, conditional expressions;
- builtins len, range, enumerate, zip, list, dict, tuple, str, int, min, max, sum, sorted, reversed, any, all, abs, and the usual str/list/dict methods.
No imports, classes, lambdas, exceptions, f-strings or file/network access. Put the whole program in a single ```python code block.";

/// Placeholders a template of each kind must contain.
pub fn required_placeholders(kind: TaskKind) -> &'static [&'static str] {
    match kind {
        TaskKind::RuleGeneration => &["{samples}", "{subset_grammar_note}"],
        TaskKind::ResultGeneration => &["{samples}", "{query_inputs}"],
        TaskKind::RulesProvided => &["{rules_text}", "{subset_grammar_note}"],
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromptError {
    #[error("template {template_id} lacks {placeholder}, required for {kind}")]
    MissingPlaceholder { template_id: String, placeholder: &'static str, kind: TaskKind },
    #[error("template {template_id} is a {actual} template, expected {expected}")]
    WrongKind { template_id: String, expected: TaskKind, actual: TaskKind },
    #[error("query {0} is one of the shown samples")]
    QueryShown(InputString),
    #[error("unknown template {0}")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    pub task_kind: TaskKind,
    pub body: String,
}

impl PromptTemplate {
    pub fn new(
        template_id: impl Into<String>,
        task_kind: TaskKind,
        body: impl Into<String>,
    ) -> Result<PromptTemplate, PromptError> {
        let t = PromptTemplate { template_id: template_id.into(), task_kind, body: body.into() };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        for &p in required_placeholders(self.task_kind) {
            if !self.body.contains(p) {
                return Err(PromptError::MissingPlaceholder {
                    template_id: self.template_id.clone(),
                    placeholder: p,
                    kind: self.task_kind,
                });
            }
        }
        Ok(())
    }

    fn expect_kind(&self, expected: TaskKind) -> Result<(), PromptError> {
        if self.task_kind != expected {
            return Err(PromptError::WrongKind {
                template_id: self.template_id.clone(),
                expected,
                actual: self.task_kind,
            });
        }
        Ok(())
    }
}

const RULE_PLAIN: &str = "\
Below are all input/output pairs of a dataset. Each input is a string of 4 letters and each output is a 4x4 grid.

{samples}

Write a Python program that generates this dataset: for every input above it must return exactly the corresponding grid.

{subset_grammar_note}
";

const RULE_DETAILED: &str = "\
You are given a complete dataset that maps 4-letter strings to 4x4 grids of '*' and '.'. \
The first letter is A or B, the second C or D, the third E or F and the fourth G or H, so the 16 pairs below cover every possible input.

{samples}

Your task is to find the rule that produces these grids and express it as a Python program. \
The program will be run on each of the 16 inputs and its output compared with the grid shown.

{subset_grammar_note}
";

const RULE_STEPWISE: &str = "\
Study the following examples.

{samples}

First think about how each letter of the input influences the grid. \
Then write a Python program that reproduces every example exactly.

{subset_grammar_note}
";

const RESULT_PLAIN: &str = "\
Each input below is a string of 4 letters and each output is a 4x4 grid of '*' and '.'.

{samples}

What is the output for the input {query_inputs}? Answer with the 4 lines of the grid only, inside a ``` code block.
";

const RULES_PLAIN: &str = "\
A dataset maps 4-letter strings to 4x4 grids according to the following rules.

{rules_text}

Write a Python program that implements these rules.

{subset_grammar_note}
";

/// The built-in templates; the first of each kind is its default.
pub fn builtin_templates() -> Vec<PromptTemplate> {
    [
        ("rule_plain", TaskKind::RuleGeneration, RULE_PLAIN),
        ("rule_detailed", TaskKind::RuleGeneration, RULE_DETAILED),
        ("rule_stepwise", TaskKind::RuleGeneration, RULE_STEPWISE),
        ("result_plain", TaskKind::ResultGeneration, RESULT_PLAIN),
        ("rules_plain", TaskKind::RulesProvided, RULES_PLAIN),
    ]
    .into_iter()
    .map(|(id, kind, body)| PromptTemplate::new(id, kind, body).expect("built-in templates are valid"))
    .collect()
}

pub fn builtin_template(id: &str) -> Result<PromptTemplate, PromptError> {
    builtin_templates().into_iter().find(|t| t.template_id == id).ok_or_else(|| PromptError::Unknown(id.into()))
}

pub fn default_template(kind: TaskKind) -> PromptTemplate {
    builtin_templates().into_iter().find(|t| t.task_kind == kind).expect("every kind has a template")
}

/// One demonstration block: the input line, then the grid rows.
pub fn format_sample(s: &Sample) -> String {
    let mut out = format!("Input: {}\nOutput:\n", s.input);
    for row in s.output.rows() {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn format_samples(samples: &[Sample]) -> String {
    samples.iter().map(format_sample).collect::<Vec<_>>().join("\n")
}

fn fill(body: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = body.to_string();
    for (k, v) in pairs {
        out = out.replace(k, v);
    }
    out
}

/// All 16 samples, in the dataset's stored order.
pub fn render_rule_prompt(dataset: &Dataset, template: &PromptTemplate) -> Result<String, PromptError> {
    template.expect_kind(TaskKind::RuleGeneration)?;
    Ok(fill(
        &template.body,
        &[("{samples}", &format_samples(dataset.samples())), ("{subset_grammar_note}", SUBSET_GRAMMAR_NOTE)],
    ))
}

pub fn render_result_prompt(
    shown: &[Sample],
    query: &InputString,
    template: &PromptTemplate,
) -> Result<String, PromptError> {
    template.expect_kind(TaskKind::ResultGeneration)?;
    if shown.iter().any(|s| s.input == *query) {
        return Err(PromptError::QueryShown(*query));
    }
    Ok(fill(&template.body, &[("{samples}", &format_samples(shown)), ("{query_inputs}", &query.to_string())]))
}

pub fn render_rules_provided_prompt(
    f: &CompositionalFunction,
    template: &PromptTemplate,
) -> Result<String, PromptError> {
    template.expect_kind(TaskKind::RulesProvided)?;
    Ok(fill(&template.body, &[("{rules_text}", &describe_rules(f)), ("{subset_grammar_note}", SUBSET_GRAMMAR_NOTE)]))
}

/// Demonstration samples found in a rendered prompt, in order.
pub fn parse_samples(prompt: &str) -> Vec<Sample> {
    let lines: Vec<&str> = prompt.lines().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let parsed = lines[i]
            .strip_prefix("Input: ")
            .and_then(|x| x.trim().parse::<InputString>().ok())
            .filter(|_| lines.get(i + 1).map(|l| l.trim()) == Some("Output:"))
            .and_then(|input| {
                let rows = lines.get(i + 2..i + 6)?;
                Grid::from_rows(rows).ok().map(|output| Sample { input, output })
            });
        match parsed {
            Some(s) => {
                out.push(s);
                i += 6;
            }
            None => i += 1,
        }
    }
    out
}

/// The grid in a result-generation answer: the last run of four consecutive
/// four-symbol lines.
pub fn parse_grid_answer(response: &str) -> Option<Grid> {
    let lines: Vec<&str> = response.lines().map(str::trim).collect();
    let is_row = |l: &str| l.len() == 4 && l.chars().all(|c| c == '*' || c == '.');
    (0..lines.len().saturating_sub(3))
        .rev()
        .find(|&i| lines[i..i + 4].iter().all(|l| is_row(l)))
        .and_then(|i| Grid::from_rows(&lines[i..i + 4]).ok())
}
