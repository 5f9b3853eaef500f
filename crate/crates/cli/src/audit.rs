//! Human-readable trace of how one record was scored.

use std::fmt::Write;

use rulegen_core::analyzer::{analyze, InputValueToken, UnitKind};
use rulegen_core::interp::{count_errors, entry_point, EntryPoint};
use rulegen_core::lang::ast::StmtKind;
use rulegen_core::lang::parse_program;
use rulegen_core::model::{EvalRecord, TaskKind};
use rulegen_gateway::TranscriptCache;

use crate::config::RunConfig;
use crate::layout::{read_json, RunDir};
use crate::pipeline::{load_dataset, load_trace, mode_name};
use crate::CliError;

fn token(t: &InputValueToken) -> String {
    match t {
        InputValueToken::Literal { letter } => letter.to_string(),
        InputValueToken::Hypothetical { bit } => format!("¬bit{bit}"),
    }
}

fn unit_kind(k: UnitKind) -> &'static str {
    match k {
        UnitKind::Symbols => "symbols",
        UnitKind::Number => "number",
        UnitKind::Coordinate => "coordinate",
        UnitKind::Flag => "flag",
    }
}

fn section(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n== {title} ==");
}

/// Appends the program part of an audit: AST summary, mapping table and
/// per-input execution.
fn program_audit(
    out: &mut String,
    program: &str,
    dir: &RunDir,
    record: &EvalRecord,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    let parsed = parse_program(program);
    let Some(module) = parsed.module else {
        section(out, "parse diagnostics");
        for d in &parsed.diagnostics {
            let _ = writeln!(out, "  {}: {}", d.span, d.message);
        }
        return Ok(());
    };

    section(out, "AST summary");
    let mut stmts = 0;
    module.walk_stmts(&mut |_| stmts += 1);
    let _ = writeln!(out, "  top-level statements: {}", module.body.len());
    let _ = writeln!(out, "  statements in total:  {stmts}");
    for s in &module.body {
        if let StmtKind::FunctionDef { name, params, .. } = &s.kind {
            let names: Vec<&str> = params.iter().map(|p| p.name.as_str()).collect();
            let _ = writeln!(out, "  def {name}({}) at {}", names.join(", "), s.span);
        }
    }
    let entry = match entry_point(&module) {
        Some(EntryPoint::Function(f)) => format!("{f}(s)"),
        Some(EntryPoint::Script) => "top-level script, result in `result`".into(),
        None => "none".into(),
    };
    let _ = writeln!(out, "  entry point: {entry}");

    let table = analyze(&module);
    section(out, &format!("combinations ({})", table.combinations.len()));
    for c in &table.combinations {
        let toks: Vec<String> = c.tokens.iter().map(token).collect();
        let source = serde_json::to_value(c.source)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "  {:<8} {:<10} n={}  {{{}}}",
            c.span.to_string(),
            source,
            c.len(),
            toks.join(", ")
        );
    }
    if table.duplicates > 0 {
        let _ = writeln!(
            out,
            "  ({} duplicate combination(s) not counted)",
            table.duplicates
        );
    }
    section(
        out,
        &format!(
            "output units ({} in {} literals)",
            table.sum_m,
            table.output_units.len()
        ),
    );
    for u in &table.output_units {
        let _ = writeln!(
            out,
            "  {:<8} {:<10} m={}",
            u.span.to_string(),
            unit_kind(u.kind),
            u.count
        );
    }
    section(out, "mapping table");
    let _ = writeln!(out, "  Σn = {}", table.sum_n);
    let _ = writeln!(out, "  Σm = {}", table.sum_m);
    let _ = writeln!(
        out,
        "  L(P⁺) = Σn + Σm = {} + {} = {}",
        table.sum_n, table.sum_m, table.l_plus
    );

    let dataset = load_dataset(dir, record.setting, record.function_index)?;
    let report = count_errors(&module, &dataset, &cfg.budget);
    section(out, "per-input execution");
    for o in &report.outcomes {
        let status = match &o.result.outcome {
            Ok(g) if *g == o.expected => "ok".to_string(),
            Ok(g) => format!("wrong ({} cells differ)", g.diff(&o.expected).len()),
            Err(f) => format!("failed: {f}"),
        };
        let _ = writeln!(out, "  {}  steps={:<6} {status}", o.input, o.result.steps);
    }
    let _ = writeln!(out, "  E(P) = {}", report.errors);
    Ok(())
}

pub fn audit(dir: &RunDir, record_id: &str) -> Result<String, CliError> {
    let path = dir.record(record_id);
    if !path.exists() {
        return Err(CliError::UnknownRecord(record_id.to_string()));
    }
    let record: EvalRecord = read_json(&path)?;
    let cfg = RunConfig::load(&dir.config())?;
    let trace = load_trace(dir, record_id)?;
    let cache = TranscriptCache::new(dir.cache());

    let mut out = String::new();
    let _ = writeln!(out, "record   {}", record.record_id);
    let _ = writeln!(out, "model    {}", record.model_id);
    let _ = writeln!(
        out,
        "setting  {} (function {:02})",
        record.setting, record.function_index
    );
    let _ = writeln!(out, "template {}", record.prompt_template_id);
    let _ = writeln!(out, "task     {}", record.task_kind);

    if let Some(t) = &trace {
        for (i, fp) in t.fingerprints.iter().enumerate() {
            let title = match t.queries.get(i) {
                Some(q) => format!("prompt {} (query {q}, {fp})", i + 1),
                None => format!("prompt ({fp})"),
            };
            section(&mut out, &title);
            match cache.peek(fp).map_err(|e| CliError::Cache(e.to_string()))? {
                Some(tr) => {
                    out.push_str(&tr.prompt);
                    if !tr.prompt.ends_with('\n') {
                        out.push('\n');
                    }
                }
                None => out.push_str("  (not in cache)\n"),
            }
        }
        if let Some(e) = &t.error {
            section(&mut out, "provider failure");
            let _ = writeln!(out, "  {}: {}", e.kind, e.message);
        }
    }

    section(&mut out, "response");
    out.push_str(&record.raw_response);
    if !record.raw_response.ends_with('\n') {
        out.push('\n');
    }

    if record.task_kind != TaskKind::ResultGeneration {
        section(&mut out, "extracted program");
        match &record.extracted_program {
            Some(p) => {
                out.push_str(p);
                if !p.ends_with('\n') {
                    out.push('\n');
                }
                program_audit(&mut out, p, dir, &record, &cfg)?;
            }
            None => out.push_str("  (no code block)\n"),
        }
    }

    section(&mut out, "metrics");
    if record.task_kind != TaskKind::ResultGeneration {
        let _ = writeln!(out, "  L(P⁺) = {}", record.l_plus);
        let _ = writeln!(out, "  E(P)  = {}", record.errors);
        let _ = writeln!(out, "  L(P)  = {}", record.l_total);
        let _ = writeln!(out, "  C(P)  = {:.2}", record.c_score);
    }
    if let Some(a) = record.accuracy {
        let _ = writeln!(out, "  𝒜     = {a:.2}");
    }
    let _ = writeln!(out, "  failure_mode = {}", mode_name(record.failure_mode));
    Ok(out)
}
