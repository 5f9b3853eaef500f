//! Files of a run directory.
//!
//! ```text
//! config.json                  resolved configuration
//! manifest.json                versions, seeds, deviations, cache stats, failures
//! datasets/<setting>/<NN>.jsonl, <NN>.meta.json
//! cache/<xx>/<fingerprint>.json
//! records/<record_id>.json     one EvalRecord per cell
//! traces/<record_id>.json      fingerprints and provider errors per cell
//! reports/summary.csv, summary.txt, groups.txt, failures.txt
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use rulegen_core::model::{EvalRecord, SettingTag, TaskKind};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

pub fn record_id(
    model: &str,
    setting: SettingTag,
    index: usize,
    template: &str,
    kind: TaskKind,
) -> String {
    format!(
        "{model}__{}__{index:02}__{template}__{}",
        setting.name(),
        kind.name()
    )
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> RunDir {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn cache(&self) -> PathBuf {
        self.root.join("cache")
    }

    pub fn dataset(&self, setting: SettingTag, index: usize) -> PathBuf {
        self.root
            .join("datasets")
            .join(setting.name())
            .join(format!("{index:02}.jsonl"))
    }

    pub fn dataset_meta(&self, setting: SettingTag, index: usize) -> PathBuf {
        self.root
            .join("datasets")
            .join(setting.name())
            .join(format!("{index:02}.meta.json"))
    }

    pub fn records(&self) -> PathBuf {
        self.root.join("records")
    }

    pub fn record(&self, id: &str) -> PathBuf {
        self.records().join(format!("{id}.json"))
    }

    pub fn trace(&self, id: &str) -> PathBuf {
        self.root.join("traces").join(format!("{id}.json"))
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    /// All stored records, sorted by id.
    pub fn load_records(&self) -> Result<Vec<EvalRecord>, CliError> {
        let dir = self.records();
        let entries = fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut out: Vec<EvalRecord> = paths
            .iter()
            .map(|p| read_json(p))
            .collect::<Result<_, _>>()?;
        out.sort_by(|a, b| a.record_id.cmp(&b.record_id));
        Ok(out)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    // Write-then-rename so an interrupted run never leaves a torn file.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_ids_are_stable() {
        assert_eq!(
            record_id(
                "gpt",
                SettingTag::RandomIndex,
                3,
                "rule_plain",
                TaskKind::RuleGeneration
            ),
            "gpt__random_index__03__rule_plain__rule_generation"
        );
    }
}
