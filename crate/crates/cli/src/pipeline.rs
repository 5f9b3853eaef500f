//! The run pipeline: datasets → prompts → completions → scoring → records.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use rulegen_core::interp::ExecBudget;
use rulegen_core::metrics::{c_score, l_total, result_accuracy};
use rulegen_core::model::{
    CompositionalFunction, Dataset, EvalRecord, FailureMode, InputString, Sample, SettingTag,
    TaskKind, SAMPLES,
};
use rulegen_core::score::{score_response, Scored};
use rulegen_core::taskgen::{
    build_dataset_ordered, function_ref, sample_function, split_for_result_test, SampleOrder,
    SettingSpec,
};
use rulegen_gateway::template::{
    parse_grid_answer, render_result_prompt, render_rule_prompt, render_rules_provided_prompt,
};
use rulegen_gateway::{
    CacheStats, CompletionRequest, DecodingParams, Gateway, GatewayError, PromptTemplate,
    RateLimiter, TranscriptCache,
};

use crate::config::RunConfig;
use crate::layout::{read_json, record_id, write_json, RunDir};
use crate::report;
use crate::CliError;

/// One (model, setting, function, template, task) cell.
#[derive(Debug, Clone)]
pub struct CellPlan {
    pub model: usize,
    pub spec: SettingSpec,
    pub index: usize,
    pub template: PromptTemplate,
    pub kind: TaskKind,
    pub order: SampleOrder,
    pub record_id: String,
}

/// Everything a cell sends to the model.
#[derive(Debug, Clone)]
pub struct CellPrompts {
    pub function: CompositionalFunction,
    pub dataset: Dataset,
    pub prompts: Vec<String>,
    /// Held-out samples, one per prompt, for result generation.
    pub held_out: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderError {
    pub kind: String,
    pub message: String,
}

/// Per-cell bookkeeping stored next to the record; used by `audit` and
/// the failure report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub record_id: String,
    pub fingerprints: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<InputString>,
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ProviderError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub model: String,
    pub provider: String,
    pub decoding: DecodingParams,
    pub max_in_flight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub rulegen_version: String,
    pub core_version: String,
    pub gateway_version: String,
    pub seed: u64,
    pub settings: Vec<SettingSpec>,
    pub models: Vec<ModelSummary>,
    pub task_kinds: Vec<TaskKind>,
    pub templates: Vec<String>,
    pub budget: ExecBudget,
    pub offline: bool,
    pub deviations: Vec<String>,
    pub cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<CacheStats>,
    /// Records per failure mode.
    pub failure_modes: BTreeMap<String, usize>,
    /// Cells whose provider calls failed.
    pub provider_failures: Vec<String>,
    pub hard_failure: bool,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `offline` flag when set.
    pub offline: Option<bool>,
    /// Worker threads; defaults to the sum of the models' in-flight ceilings.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub records: Vec<EvalRecord>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Protocol deviations stated in the manifest and in report headers.
pub fn deviations(cfg: &RunConfig) -> Vec<String> {
    let mut out = vec![
        "Programs are restricted to a Python subset and every program prompt carries a grammar note; \
         the original protocol accepted unrestricted Python."
            .to_string(),
    ];
    for m in &cfg.models {
        let d = &m.decoding;
        let mut parts = Vec::new();
        if let Some(t) = d.temperature {
            parts.push(format!("temperature={t}"));
        }
        if let Some(p) = d.top_p {
            parts.push(format!("top_p={p}"));
        }
        if let Some(n) = d.max_tokens {
            parts.push(format!("max_tokens={n}"));
        }
        if let Some(s) = d.seed {
            parts.push(format!("seed={s}"));
        }
        let params = if parts.is_empty() {
            "provider defaults".to_string()
        } else {
            parts.join(", ")
        };
        out.push(format!(
            "Decoding for {}: {params}; the original runs did not report decoding parameters.",
            m.id
        ));
        if matches!(m.provider, rulegen_gateway::ProviderConfig::Mock { .. }) {
            out.push(format!(
                "{} is the built-in mock provider, not a language model.",
                m.id
            ));
        }
    }
    out.push("Significance groups are a greedy reconstruction; the original grouping procedure is undocumented.".into());
    if cfg.task_kinds.contains(&TaskKind::ResultGeneration) {
        out.push(
            "Result-generation cells report accuracy only; they carry no program to measure."
                .into(),
        );
    }
    out
}

pub fn plan(cfg: &RunConfig) -> Result<Vec<CellPlan>, CliError> {
    let mut kinds = cfg.task_kinds.clone();
    kinds.sort();
    kinds.dedup();
    let mut cells = Vec::new();
    for (mi, m) in cfg.models.iter().enumerate() {
        for spec in cfg.setting_specs() {
            for index in 0..spec.sample_count {
                for &kind in &kinds {
                    for template in cfg.templates_for(kind)? {
                        let record_id =
                            record_id(&m.id, spec.tag, index, &template.template_id, kind);
                        cells.push(CellPlan {
                            model: mi,
                            spec,
                            index,
                            template,
                            kind,
                            order: cfg.order_for(index),
                            record_id,
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// Seed for the shown/held-out split of one function.
fn split_seed(spec: &SettingSpec, index: usize) -> u64 {
    spec.seed.wrapping_add(index as u64)
}

pub fn prompts_for(cell: &CellPlan) -> Result<CellPrompts, CliError> {
    let function = sample_function(&cell.spec, cell.index);
    let dataset =
        build_dataset_ordered(&function, function_ref(&cell.spec, cell.index), cell.order);
    let t = &cell.template;
    let (prompts, held_out) = match cell.kind {
        TaskKind::RuleGeneration => (vec![render_rule_prompt(&dataset, t)?], vec![]),
        TaskKind::RulesProvided => (vec![render_rules_provided_prompt(&function, t)?], vec![]),
        TaskKind::ResultGeneration => {
            let split = split_for_result_test(&dataset, split_seed(&cell.spec, cell.index));
            let prompts = split
                .held_out
                .iter()
                .map(|q| render_result_prompt(&split.shown, &q.input, t))
                .collect::<Result<Vec<_>, _>>()?;
            (prompts, split.held_out)
        }
    };
    Ok(CellPrompts {
        function,
        dataset,
        prompts,
        held_out,
    })
}

/// Cache key of one prompt of a cell, as the gateway computes it.
pub fn request_fingerprint(cfg: &RunConfig, cell: &CellPlan, prompt: &str) -> String {
    let m = &cfg.models[cell.model];
    let provider = m.build_provider();
    rulegen_gateway::fingerprint(
        &provider.id(),
        m.api_model(),
        &cell.template.template_id,
        &cell.template.body,
        prompt,
        &m.decoding,
    )
}

fn base_record(cfg: &RunConfig, cell: &CellPlan) -> EvalRecord {
    let l = l_total(0, SAMPLES as u32);
    EvalRecord {
        record_id: cell.record_id.clone(),
        model_id: cfg.models[cell.model].id.clone(),
        setting: cell.spec.tag,
        function_index: cell.index,
        prompt_template_id: cell.template.template_id.clone(),
        task_kind: cell.kind,
        raw_response: String::new(),
        extracted_program: None,
        l_plus: 0,
        errors: SAMPLES as u32,
        l_total: l,
        c_score: c_score(l),
        failure_mode: FailureMode::ProviderFailure,
        accuracy: None,
    }
}

fn apply_score(record: &mut EvalRecord, s: Scored) {
    record.extracted_program = s.extracted_program;
    record.l_plus = s.l_plus;
    record.errors = s.errors;
    record.l_total = s.l_total;
    record.c_score = s.c_score;
    record.failure_mode = s.failure_mode;
}

/// Joins the answers of a result-generation cell, one section per query.
fn join_answers(queries: &[Sample], answers: &[String]) -> String {
    let mut out = String::new();
    for (q, a) in queries.iter().zip(answers) {
        out.push_str(&format!("### query {}\n{a}\n", q.input));
    }
    out
}

fn execute(
    cfg: &RunConfig,
    gw: &Gateway,
    cell: &CellPlan,
) -> Result<(EvalRecord, Trace), CliError> {
    let m = &cfg.models[cell.model];
    let p = prompts_for(cell)?;
    let mut record = base_record(cfg, cell);
    let mut trace = Trace {
        record_id: cell.record_id.clone(),
        fingerprints: Vec::new(),
        queries: p.held_out.iter().map(|s| s.input).collect(),
        retries: 0,
        error: None,
    };
    let mut answers = Vec::new();
    for prompt in &p.prompts {
        let req = CompletionRequest {
            model_id: &m.id,
            model: m.api_model(),
            template: &cell.template,
            prompt,
            decoding: &m.decoding,
        };
        trace.fingerprints.push(gw.fingerprint(&req));
        match gw.complete(&req) {
            Ok(c) => {
                trace.retries += c.transcript.retries;
                answers.push(c.transcript.raw_response);
            }
            Err(GatewayError::Cache(msg)) => return Err(CliError::Cache(msg)),
            Err(e) => {
                log::warn!("{}: {e}", cell.record_id);
                trace.error = Some(ProviderError {
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                });
                return Ok((record, trace));
            }
        }
    }
    match cell.kind {
        TaskKind::RuleGeneration | TaskKind::RulesProvided => {
            record.raw_response = answers.pop().expect("one prompt");
            let scored = score_response(&record.raw_response, &p.dataset, &cfg.budget);
            apply_score(&mut record, scored);
            if cell.kind == TaskKind::RulesProvided {
                record.accuracy =
                    Some(100.0 * f64::from(SAMPLES as u32 - record.errors) / SAMPLES as f64);
            }
        }
        TaskKind::ResultGeneration => {
            let predictions: Vec<Result<_, ()>> = answers
                .iter()
                .map(|a| parse_grid_answer(a).ok_or(()))
                .collect();
            let truth: Vec<_> = p.held_out.iter().map(|s| s.output).collect();
            record.raw_response = join_answers(&p.held_out, &answers);
            record.accuracy = Some(result_accuracy(&predictions, &truth));
            record.l_plus = 0;
            record.errors = 0;
            record.l_total = 0;
            record.c_score = c_score(0);
            record.failure_mode = if predictions.iter().any(Result::is_err) {
                FailureMode::ParseFailure
            } else {
                FailureMode::None
            };
        }
    }
    Ok((record, trace))
}

/// Writes the resolved config and every dataset with its generator metadata.
pub fn generate(cfg: &RunConfig, dir: &RunDir) -> Result<usize, CliError> {
    cfg.validate()?;
    write_json(&dir.config(), cfg)?;
    let mut written = 0;
    for spec in cfg.setting_specs() {
        for i in 0..spec.sample_count {
            let f = sample_function(&spec, i);
            let d = build_dataset_ordered(&f, function_ref(&spec, i), cfg.order_for(i));
            crate::layout::write_text(&dir.dataset(spec.tag, i), &d.to_jsonl())?;
            write_json(&dir.dataset_meta(spec.tag, i), &f.to_meta())?;
            written += 1;
        }
    }
    Ok(written)
}

fn model_summaries(cfg: &RunConfig) -> Vec<ModelSummary> {
    cfg.models
        .iter()
        .map(|m| ModelSummary {
            id: m.id.clone(),
            model: m.api_model().to_string(),
            provider: m.build_provider().id(),
            decoding: m.decoding.clone(),
            max_in_flight: m.max_in_flight,
        })
        .collect()
}

fn manifest(cfg: &RunConfig, command: &str, offline: bool, cells: usize, started: u64) -> Manifest {
    Manifest {
        command: command.to_string(),
        rulegen_version: env!("CARGO_PKG_VERSION").to_string(),
        core_version: rulegen_core::VERSION.to_string(),
        gateway_version: rulegen_gateway::VERSION.to_string(),
        seed: cfg.seed,
        settings: cfg.setting_specs(),
        models: model_summaries(cfg),
        task_kinds: cfg.task_kinds.clone(),
        templates: cfg.templates.clone(),
        budget: cfg.budget,
        offline,
        deviations: deviations(cfg),
        cells,
        cache: None,
        failure_modes: BTreeMap::new(),
        provider_failures: Vec::new(),
        hard_failure: false,
        started_unix: started,
        finished_unix: started,
    }
}

/// `gen`: datasets only.
pub fn gen(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let started = now();
    let dir = RunDir::new(&cfg.output_dir);
    let n = generate(cfg, &dir)?;
    let mut m = manifest(cfg, "gen", cfg.offline, 0, started);
    m.finished_unix = now();
    log::info!("wrote {n} datasets under {}", dir.root().display());
    write_json(&dir.manifest(), &m)?;
    Ok(m)
}

/// `run`: every cell of the config, then reports. Cells already in the
/// cache are not re-queried.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    run_as(cfg, opts, "run")
}

/// `score`: re-scores a run directory from its cache without network access.
pub fn score(dir: &RunDir, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let mut cfg = RunConfig::load(&dir.config())?;
    cfg.output_dir = dir.root().to_path_buf();
    let opts = RunOptions {
        offline: Some(true),
        ..opts.clone()
    };
    run_as(&cfg, &opts, "score")
}

fn run_as(cfg: &RunConfig, opts: &RunOptions, command: &str) -> Result<RunOutcome, CliError> {
    let started = now();
    let dir = RunDir::new(&cfg.output_dir);
    generate(cfg, &dir)?;
    let offline = opts.offline.unwrap_or(cfg.offline);
    let cells = plan(cfg)?;

    let cache = Arc::new(TranscriptCache::new(dir.cache()));
    let gateways: Vec<Gateway> = cfg
        .models
        .iter()
        .map(|m| {
            Gateway::new(
                m.build_provider(),
                cache.clone(),
                Arc::new(RateLimiter::new(m.max_in_flight)),
                m.retry_policy(),
            )
            .offline(offline)
        })
        .collect();

    // Workers pull cells in order; the gateways' limiters bound what is in flight.
    let jobs = opts
        .jobs
        .unwrap_or_else(|| cfg.total_in_flight())
        .clamp(1, cells.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<(EvalRecord, Trace), CliError>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = cells.get(i) else { break };
                let r = execute(cfg, &gateways[cell.model], cell);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });

    let mut records = Vec::with_capacity(cells.len());
    let mut m = manifest(cfg, command, offline, cells.len(), started);
    for r in results.into_inner().unwrap() {
        let (record, trace) = r.expect("every cell ran")?;
        write_json(&dir.record(&record.record_id), &record)?;
        write_json(&dir.trace(&record.record_id), &trace)?;
        *m.failure_modes
            .entry(mode_name(record.failure_mode).to_string())
            .or_default() += 1;
        if record.failure_mode == FailureMode::ProviderFailure {
            m.provider_failures.push(record.record_id.clone());
        }
        records.push(record);
    }
    remove_stale(&dir, &records)?;

    report::write_reports(&dir)?;
    m.cache = Some(cache.stats());
    m.hard_failure = !m.provider_failures.is_empty();
    m.finished_unix = now();
    write_json(&dir.manifest(), &m)?;
    Ok(RunOutcome {
        manifest: m,
        records,
    })
}

pub fn mode_name(mode: FailureMode) -> &'static str {
    match mode {
        FailureMode::None => "none",
        FailureMode::NoCodeBlock => "no_code_block",
        FailureMode::ParseFailure => "parse_failure",
        FailureMode::RuntimeFailure => "runtime_failure",
        FailureMode::ProviderFailure => "provider_failure",
    }
}

/// Drops records (and traces) of cells no longer in the config, so reports
/// describe exactly this run.
fn remove_stale(dir: &RunDir, records: &[EvalRecord]) -> Result<(), CliError> {
    let keep: BTreeSet<&str> = records.iter().map(|r| r.record_id.as_str()).collect();
    let records_dir = dir.records();
    let entries = fs::read_dir(&records_dir).map_err(|e| CliError::io(&records_dir, e))?;
    for entry in entries.filter_map(Result::ok) {
        let path = entry.path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if path.extension().is_some_and(|x| x == "json") && !keep.contains(stem) {
            log::info!("removing stale record {stem}");
            fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
            let _ = fs::remove_file(dir.trace(stem));
        }
    }
    Ok(())
}

/// Dataset of a stored record, read back from the run directory.
pub fn load_dataset(dir: &RunDir, setting: SettingTag, index: usize) -> Result<Dataset, CliError> {
    let path = dir.dataset(setting, index);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    Dataset::from_jsonl(&text, format!("{}/{index:02}", setting.name()))
        .map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))
}

pub fn load_trace(dir: &RunDir, id: &str) -> Result<Option<Trace>, CliError> {
    let path = dir.trace(id);
    if !path.exists() {
        return Ok(None);
    }
    read_json(&path).map(Some)
}
