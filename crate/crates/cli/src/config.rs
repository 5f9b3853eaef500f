//! Run configuration, read from TOML (or the JSON copy stored in a run directory).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rulegen_core::interp::ExecBudget;
use rulegen_core::metrics::Thresholds;
use rulegen_core::model::{SettingTag, TaskKind};
use rulegen_core::taskgen::{SampleOrder, SettingSpec, DEFAULT_SAMPLE_COUNT};
use rulegen_gateway::template::{builtin_template, default_template};
use rulegen_gateway::{ModelConfig, PromptTemplate};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingEntry {
    pub tag: SettingTag,
    /// Defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of sampled functions; defaults to the run-wide `functions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_functions")]
    pub functions: usize,
    pub settings: Vec<SettingEntry>,
    pub models: Vec<ModelConfig>,
    /// Template ids, built-in or from `custom_templates`. Each task kind
    /// uses the listed templates of its kind, or its default if none is listed.
    #[serde(default)]
    pub templates: Vec<String>,
    #[serde(default = "default_kinds")]
    pub task_kinds: Vec<TaskKind>,
    #[serde(default)]
    pub budget: ExecBudget,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Serve every call from the cache; misses are failures.
    #[serde(default)]
    pub offline: bool,
    /// Order of the samples in datasets and prompts. A shuffled order is
    /// reseeded per function (seed + function index).
    #[serde(default)]
    pub sample_order: SampleOrder,
    #[serde(default)]
    pub custom_templates: Vec<PromptTemplate>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/default")
}

fn default_functions() -> usize {
    DEFAULT_SAMPLE_COUNT
}

fn default_kinds() -> Vec<TaskKind> {
    vec![TaskKind::RuleGeneration]
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        let cfg: RunConfig = if is_json {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.settings.is_empty() {
            return bad("no settings configured".into());
        }
        if self.models.is_empty() {
            return bad("no models configured".into());
        }
        if self.task_kinds.is_empty() {
            return bad("no task kinds configured".into());
        }
        let mut ids = BTreeSet::new();
        for m in &self.models {
            if !is_safe_id(&m.id) {
                return bad(format!(
                    "model id {:?} must be nonempty and use only [A-Za-z0-9._-], without \"__\"",
                    m.id
                ));
            }
            if !ids.insert(&m.id) {
                return bad(format!("duplicate model id {}", m.id));
            }
            if m.max_in_flight == 0 {
                return bad(format!("model {}: max_in_flight must be positive", m.id));
            }
        }
        let mut tags = BTreeSet::new();
        for s in &self.settings {
            if !tags.insert(s.tag) {
                return bad(format!("setting {} listed twice", s.tag));
            }
            if s.functions.unwrap_or(self.functions) == 0 {
                return bad(format!("setting {}: need at least one function", s.tag));
            }
        }
        for t in &self.custom_templates {
            if !is_safe_id(&t.template_id) {
                return bad(format!(
                    "template id {:?} is not a safe identifier",
                    t.template_id
                ));
            }
            t.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        for kind in &self.task_kinds {
            self.templates_for(*kind)?;
        }
        if self.budget.max_steps == 0 || self.budget.max_depth == 0 {
            return bad("budget limits must be positive".into());
        }
        Ok(())
    }

    pub fn template(&self, id: &str) -> Result<PromptTemplate, CliError> {
        if let Some(t) = self.custom_templates.iter().find(|t| t.template_id == id) {
            return Ok(t.clone());
        }
        builtin_template(id).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn templates_for(&self, kind: TaskKind) -> Result<Vec<PromptTemplate>, CliError> {
        let mut out = Vec::new();
        for id in &self.templates {
            let t = self.template(id)?;
            if t.task_kind == kind {
                out.push(t);
            }
        }
        if out.is_empty() {
            out.push(default_template(kind));
        }
        Ok(out)
    }

    pub fn setting_specs(&self) -> Vec<SettingSpec> {
        self.settings
            .iter()
            .map(|s| {
                SettingSpec::new(s.tag, s.seed.unwrap_or(self.seed))
                    .with_count(s.functions.unwrap_or(self.functions))
            })
            .collect()
    }

    /// Largest total number of requests allowed in flight at once.
    /// Sample order for the function at `index`.
    pub fn order_for(&self, index: usize) -> SampleOrder {
        match self.sample_order {
            SampleOrder::Lexicographic => SampleOrder::Lexicographic,
            SampleOrder::Shuffled(s) => SampleOrder::Shuffled(s.wrapping_add(index as u64)),
        }
    }

    pub fn total_in_flight(&self) -> usize {
        self.models.iter().map(|m| m.max_in_flight).sum()
    }
}

/// Ids end up in file names and record ids, where `__` separates fields.
fn is_safe_id(id: &str) -> bool {
    !id.is_empty()
        && !id.contains("__")
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}
