//! Offline provider that answers prompts mechanically, for tests and
//! credential-free runs.

use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use rulegen_core::model::{Grid, InputString, Sample, SettingTag};
use rulegen_core::reference::{infer_function, predict, sufficient_program, zero_program};
use rulegen_core::taskgen::build_dataset;

use crate::describe::parse_rules_text;
use crate::provider::{ChatProvider, ChatRequest, ChatResponse, Usage};
use crate::template::parse_samples;
use crate::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockBehavior {
    /// The most compositional program, or the correct grid.
    Sufficient,
    /// A lookup table of all samples, or the first shown grid.
    Zero,
    /// A code block that does not parse.
    Unparseable,
    /// Prose without any code block.
    NoCode,
    /// An empty message body.
    Empty,
    /// Always the same text.
    Fixed { response: String },
    /// Fails transiently `failures` times, then behaves like `then`.
    Flaky { failures: u32, then: Box<MockBehavior> },
}

impl MockBehavior {
    fn name(&self) -> String {
        match self {
            MockBehavior::Sufficient => "sufficient".into(),
            MockBehavior::Zero => "zero".into(),
            MockBehavior::Unparseable => "unparseable".into(),
            MockBehavior::NoCode => "no_code".into(),
            MockBehavior::Empty => "empty".into(),
            MockBehavior::Fixed { .. } => "fixed".into(),
            MockBehavior::Flaky { then, .. } => then.name(),
        }
    }
}

pub struct MockProvider {
    behavior: MockBehavior,
    flaky_left: AtomicU32,
    calls: AtomicUsize,
}

/// What a prompt asks for, recovered from its text.
enum Ask {
    Rules(Vec<Sample>),
    Result(Vec<Sample>, InputString),
    Unknown,
}

fn classify(prompt: &str) -> Ask {
    if let Some(f) = parse_rules_text(prompt, SettingTag::Random) {
        return Ask::Rules(build_dataset(&f, "mock").samples().to_vec());
    }
    let samples = parse_samples(prompt);
    if samples.len() == 16 {
        return Ask::Rules(samples);
    }
    // The query is the last input-like word that is not a demonstration.
    let query = prompt
        .split(|c: char| !c.is_ascii_alphabetic())
        .filter_map(|w| w.parse::<InputString>().ok())
        .rfind(|x| samples.iter().all(|s| s.input != *x));
    match query {
        Some(q) if !samples.is_empty() => Ask::Result(samples, q),
        _ => Ask::Unknown,
    }
}

fn program_block(src: &str) -> String {
    format!("Here is a program that reproduces the dataset.\n\n```python\n{src}```\n")
}

fn grid_block(g: &Grid) -> String {
    format!("```\n{}\n```\n", g.rows().join("\n"))
}

impl MockProvider {
    pub fn new(behavior: MockBehavior) -> MockProvider {
        let flaky = match &behavior {
            MockBehavior::Flaky { failures, .. } => *failures,
            _ => 0,
        };
        MockProvider { behavior, flaky_left: AtomicU32::new(flaky), calls: AtomicUsize::new(0) }
    }

    /// Number of chat calls received, failed ones included.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn answer(behavior: &MockBehavior, prompt: &str) -> String {
        match behavior {
            MockBehavior::Unparseable => "```python\ndef generate(s)\n    return s\n```\n".into(),
            MockBehavior::NoCode => "I could not find a consistent rule for these examples.".into(),
            MockBehavior::Empty => String::new(),
            MockBehavior::Fixed { response } => response.clone(),
            MockBehavior::Flaky { then, .. } => Self::answer(then, prompt),
            MockBehavior::Sufficient | MockBehavior::Zero => {
                let sufficient = *behavior == MockBehavior::Sufficient;
                match classify(prompt) {
                    Ask::Rules(samples) => {
                        let f = infer_function(&samples, SettingTag::Random);
                        match f {
                            Some(f) if sufficient => program_block(&sufficient_program(&f)),
                            _ => program_block(&zero_program(&samples)),
                        }
                    }
                    Ask::Result(shown, q) if sufficient => grid_block(&predict(&shown, &q)),
                    Ask::Result(shown, _) => grid_block(&shown[0].output),
                    Ask::Unknown => "I do not understand the request.".into(),
                }
            }
        }
    }
}

impl ChatProvider for MockProvider {
    fn id(&self) -> String {
        format!("mock:{}", self.behavior.name())
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let took = self.flaky_left.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1));
        if took.is_ok() {
            return Err(GatewayError::Transient("mock: simulated 503".into()));
        }
        let prompt = request.messages.last().map(|m| m.content.as_str()).unwrap_or("");
        let content = Self::answer(&self.behavior, prompt);
        let usage = Usage {
            prompt_tokens: Some(prompt.split_whitespace().count() as u64),
            completion_tokens: Some(content.split_whitespace().count() as u64),
            total_tokens: None,
        };
        Ok(ChatResponse { content, usage: Some(usage) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{DecodingParams, Message};
    use crate::template::{default_template, render_result_prompt, render_rule_prompt, render_rules_provided_prompt};
    use rulegen_core::model::TaskKind;
    use rulegen_core::taskgen::{sample_function, split_for_result_test, SettingSpec};

    fn ask(p: &MockProvider, prompt: String) -> String {
        let req = ChatRequest { model: "m".into(), messages: vec![Message::user(prompt)], decoding: DecodingParams::default() };
        p.chat(&req).unwrap().content
    }

    #[test]
    fn answers_each_task_kind() {
        let f = sample_function(&SettingSpec::new(SettingTag::Block, 2), 5);
        let d = build_dataset(&f, "b");
        let m = MockProvider::new(MockBehavior::Sufficient);
        let rule = ask(&m, render_rule_prompt(&d, &default_template(TaskKind::RuleGeneration)).unwrap());
        assert!(rule.contains(&sufficient_program(&f)));
        let rules = ask(&m, render_rules_provided_prompt(&f, &default_template(TaskKind::RulesProvided)).unwrap());
        assert!(rules.contains("def generate(s):"));
        let split = split_for_result_test(&d, 1);
        let q = split.held_out[2];
        let res = ask(&m, render_result_prompt(&split.shown, &q.input, &default_template(TaskKind::ResultGeneration)).unwrap());
        assert_eq!(crate::template::parse_grid_answer(&res), Some(predict(&split.shown, &q.input)));
    }

    #[test]
    fn flaky_fails_then_recovers() {
        let m = MockProvider::new(MockBehavior::Flaky { failures: 2, then: Box::new(MockBehavior::NoCode) });
        let req = ChatRequest { model: "m".into(), messages: vec![Message::user("x")], decoding: DecodingParams::default() };
        assert!(m.chat(&req).unwrap_err().is_transient());
        assert!(m.chat(&req).unwrap_err().is_transient());
        assert!(m.chat(&req).is_ok());
        assert_eq!(m.calls(), 3);
    }
}
