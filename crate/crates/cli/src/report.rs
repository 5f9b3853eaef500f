//! Report emitters. Everything here is a single-threaded fold over stored
//! records, so reruns over the same records give identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use rulegen_core::metrics::{
    aggregate, record_c, significance_groups, Characterization, SettingSummary, Thresholds,
};
use rulegen_core::model::{EvalRecord, FailureMode, SettingTag, TaskKind};

use crate::config::RunConfig;
use crate::layout::{write_text, RunDir};
use crate::pipeline::{deviations, load_trace, mode_name, Trace};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reports {
    pub summary_csv: String,
    pub summary_txt: String,
    pub groups_txt: String,
    pub failures_txt: String,
}

type TableKey = (TaskKind, String);

/// Records that describe model behaviour; provider failures are excluded
/// from every aggregate and listed separately.
fn scored(records: &[EvalRecord]) -> impl Iterator<Item = &EvalRecord> {
    records
        .iter()
        .filter(|r| r.failure_mode != FailureMode::ProviderFailure)
}

pub fn summaries(
    records: &[EvalRecord],
    thresholds: &Thresholds,
) -> Result<Vec<SettingSummary>, CliError> {
    let mut cells: BTreeMap<(TaskKind, &str, &str, SettingTag), Vec<EvalRecord>> = BTreeMap::new();
    for r in scored(records) {
        cells
            .entry((r.task_kind, &r.prompt_template_id, &r.model_id, r.setting))
            .or_default()
            .push(r.clone());
    }
    cells
        .values()
        .map(|rs| aggregate(rs, thresholds).map_err(|e| CliError::Corrupt(e.to_string())))
        .collect()
}

fn f2(x: f64) -> String {
    format!("{x:.2}")
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn characterization(c: Characterization) -> &'static str {
    match c {
        Characterization::T1 => "T1",
        Characterization::T2 => "T2",
        Characterization::T3 => "T3",
        Characterization::Mixed => "mixed",
    }
}

pub fn summary_csv(sums: &[SettingSummary]) -> String {
    let mut out = String::from(
        "task_kind,prompt_template_id,model_id,setting,n,l_plus_mean,l_plus_std,errors_mean,errors_std,c_mean,c_std,accuracy_mean,accuracy_std,characterization\n",
    );
    for s in sums {
        let program = s.task_kind != TaskKind::ResultGeneration;
        let num = |x: f64| if program { f4(x) } else { String::new() };
        let opt = |x: Option<f64>| x.map(f4).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.task_kind,
            s.prompt_template_id,
            s.model_id,
            s.setting,
            s.count,
            num(s.mean_l_plus),
            num(s.std_l_plus),
            num(s.mean_errors),
            num(s.std_errors),
            num(s.mean_c),
            num(s.std_c),
            opt(s.accuracy),
            opt(s.std_accuracy),
            if program {
                characterization(s.characterization)
            } else {
                ""
            },
        );
    }
    out
}

fn columns(kind: TaskKind) -> &'static [&'static str] {
    match kind {
        TaskKind::RuleGeneration => &["L(P⁺)", "E(P)", "C(P)", "type"],
        TaskKind::RulesProvided => &["L(P⁺)", "E(P)", "C(P)", "𝒜"],
        TaskKind::ResultGeneration => &["𝒜"],
    }
}

fn values(s: &SettingSummary) -> Vec<String> {
    let acc = s.accuracy.map(f2).unwrap_or_else(|| "-".into());
    match s.task_kind {
        TaskKind::RuleGeneration => vec![
            f2(s.mean_l_plus),
            f2(s.mean_errors),
            f2(s.mean_c),
            characterization(s.characterization).into(),
        ],
        TaskKind::RulesProvided => vec![f2(s.mean_l_plus), f2(s.mean_errors), f2(s.mean_c), acc],
        TaskKind::ResultGeneration => vec![acc],
    }
}

fn width(s: &str) -> usize {
    s.chars().count()
}

fn pad_left(s: &str, w: usize) -> String {
    format!("{}{s}", " ".repeat(w.saturating_sub(width(s))))
}

fn pad_right(s: &str, w: usize) -> String {
    format!("{s}{}", " ".repeat(w.saturating_sub(width(s))))
}

/// Models as rows, one column group per setting.
fn render_table(kind: TaskKind, sums: &[&SettingSummary]) -> String {
    let models: BTreeSet<&str> = sums.iter().map(|s| s.model_id.as_str()).collect();
    let settings: BTreeSet<SettingTag> = sums.iter().map(|s| s.setting).collect();
    let cols = columns(kind);
    let cell = |m: &str, t: SettingTag| {
        sums.iter()
            .find(|s| s.model_id == m && s.setting == t)
            .map(|s| values(s))
            .unwrap_or_else(|| vec!["-".into(); cols.len()])
    };

    let first = models
        .iter()
        .map(|m| width(m))
        .chain([width("model")])
        .max()
        .unwrap();
    // Column widths per setting; the last column absorbs a long label.
    let mut widths: Vec<Vec<usize>> = Vec::new();
    for &t in &settings {
        let mut w: Vec<usize> = cols.iter().map(|c| width(c)).collect();
        for m in &models {
            for (i, v) in cell(m, t).iter().enumerate() {
                w[i] = w[i].max(width(v));
            }
        }
        let total = w.iter().sum::<usize>() + 2 * (w.len() - 1);
        if width(t.label()) > total {
            *w.last_mut().unwrap() += width(t.label()) - total;
        }
        widths.push(w);
    }
    let group_width = |w: &Vec<usize>| w.iter().sum::<usize>() + 2 * (w.len() - 1);

    let mut out = String::new();
    let mut line = pad_right("", first);
    for (t, w) in settings.iter().zip(&widths) {
        line.push_str(" | ");
        line.push_str(&pad_right(t.label(), group_width(w)));
    }
    out.push_str(line.trim_end());
    out.push('\n');
    let mut line = pad_right("model", first);
    for w in &widths {
        line.push_str(" | ");
        let heads: Vec<String> = cols.iter().zip(w).map(|(c, &cw)| pad_left(c, cw)).collect();
        line.push_str(&heads.join("  "));
    }
    out.push_str(&line);
    out.push('\n');
    let mut rule = "-".repeat(first);
    for w in &widths {
        rule.push_str("-+-");
        rule.push_str(&"-".repeat(group_width(w)));
    }
    out.push_str(&rule);
    out.push('\n');
    for m in &models {
        let mut line = pad_right(m, first);
        for (t, w) in settings.iter().zip(&widths) {
            line.push_str(" | ");
            let vals: Vec<String> = cell(m, *t)
                .iter()
                .zip(w)
                .map(|(v, &cw)| pad_left(v, cw))
                .collect();
            line.push_str(&vals.join("  "));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn header(deviations: &[String]) -> String {
    let mut out = String::from("Deviations from the original protocol:\n");
    for d in deviations {
        let _ = writeln!(out, "  - {d}");
    }
    out.push('\n');
    out
}

pub fn summary_txt(sums: &[SettingSummary], deviations: &[String], excluded: usize) -> String {
    let mut out = header(deviations);
    out.push_str("Means over sampled functions; C(P) is computed per record, then averaged.\n");
    if excluded > 0 {
        let _ = writeln!(
            out,
            "{excluded} record(s) excluded after provider failures; see failures.txt."
        );
    }
    let mut tables: BTreeMap<TableKey, Vec<&SettingSummary>> = BTreeMap::new();
    for s in sums {
        tables
            .entry((s.task_kind, s.prompt_template_id.clone()))
            .or_default()
            .push(s);
    }
    for ((kind, template), rows) in &tables {
        let _ = writeln!(out, "\n== {kind} / template {template} ==\n");
        out.push_str(&render_table(*kind, rows));
    }
    out
}

/// Score the groups are formed on: C(P) for program tasks, accuracy otherwise.
fn group_metric(r: &EvalRecord) -> Option<f64> {
    match r.task_kind {
        TaskKind::ResultGeneration => r.accuracy,
        _ => Some(record_c(r)),
    }
}

pub fn groups_txt(records: &[EvalRecord], deviations: &[String]) -> String {
    let mut out = header(deviations);
    out.push_str(
        "Significance groups (reconstruction). Models are ranked by mean score, strongest first; a model \
         joins the current bracket if a two-sided Mann-Whitney U test against every member gives p >= 0.05, \
         otherwise it opens a new bracket. Scores are per-record C(P), or accuracy for result generation.\n",
    );
    let mut by: BTreeMap<(TaskKind, &str, SettingTag), BTreeMap<&str, Vec<(usize, f64)>>> =
        BTreeMap::new();
    for r in scored(records) {
        if let Some(v) = group_metric(r) {
            by.entry((r.task_kind, &r.prompt_template_id, r.setting))
                .or_default()
                .entry(&r.model_id)
                .or_default()
                .push((r.function_index, v));
        }
    }
    let mut last: Option<(TaskKind, &str)> = None;
    for ((kind, template, setting), models) in &by {
        if last != Some((*kind, *template)) {
            let _ = writeln!(out, "\n== {kind} / template {template} ==");
            last = Some((*kind, *template));
        }
        let values: Vec<(String, Vec<f64>)> = models
            .iter()
            .map(|(m, vs)| {
                let mut vs = vs.clone();
                vs.sort_by_key(|&(i, _)| i);
                (m.to_string(), vs.into_iter().map(|(_, v)| v).collect())
            })
            .collect();
        let mean_of = |m: &str| {
            let v = &values.iter().find(|(n, _)| n == m).unwrap().1;
            rulegen_core::metrics::mean(v)
        };
        let brackets: Vec<String> = significance_groups(&values, true)
            .iter()
            .map(|g| {
                let members: Vec<String> = g
                    .iter()
                    .map(|m| format!("{m} ({})", f2(mean_of(m))))
                    .collect();
                format!("[{}]", members.join(", "))
            })
            .collect();
        let _ = writeln!(out, "{:<9} {}", setting.label(), brackets.join(" > "));
    }
    out
}

pub fn failures_txt(records: &[EvalRecord], traces: &BTreeMap<String, Trace>) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(mode_name(r.failure_mode)).or_default() += 1;
    }
    let mut out = String::from("Records per failure mode:\n");
    for (mode, n) in &counts {
        let _ = writeln!(out, "  {mode:<17} {n}");
    }
    let failed: Vec<&EvalRecord> = records
        .iter()
        .filter(|r| r.failure_mode != FailureMode::None)
        .collect();
    if failed.is_empty() {
        return out;
    }
    out.push_str("\nFailed records:\n");
    for r in failed {
        let detail = match traces.get(&r.record_id).and_then(|t| t.error.as_ref()) {
            Some(e) => format!("{}: {}", e.kind, e.message.replace('\n', " ")),
            None => format!("E(P)={}", r.errors),
        };
        let _ = writeln!(
            out,
            "  {}  {}  {detail}",
            r.record_id,
            mode_name(r.failure_mode)
        );
    }
    out
}

pub fn build_reports(
    records: &[EvalRecord],
    traces: &BTreeMap<String, Trace>,
    cfg: &RunConfig,
) -> Result<Reports, CliError> {
    let sums = summaries(records, &cfg.thresholds)?;
    let devs = deviations(cfg);
    let excluded = records.len() - scored(records).count();
    Ok(Reports {
        summary_csv: summary_csv(&sums),
        summary_txt: summary_txt(&sums, &devs, excluded),
        groups_txt: groups_txt(records, &devs),
        failures_txt: failures_txt(records, traces),
    })
}

/// `report`: rebuilds every report from the stored records.
pub fn write_reports(dir: &RunDir) -> Result<Reports, CliError> {
    let cfg = RunConfig::load(&dir.config())?;
    let records = dir.load_records()?;
    let mut traces = BTreeMap::new();
    for r in &records {
        if let Some(t) = load_trace(dir, &r.record_id)? {
            traces.insert(r.record_id.clone(), t);
        }
    }
    let reports = build_reports(&records, &traces, &cfg)?;
    let out = dir.reports();
    write_text(&out.join("summary.csv"), &reports.summary_csv)?;
    write_text(&out.join("summary.txt"), &reports.summary_txt)?;
    write_text(&out.join("groups.txt"), &reports.groups_txt)?;
    write_text(&out.join("failures.txt"), &reports.failures_txt)?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rulegen_core::metrics::{c_score, l_total};

    fn rec(model: &str, setting: SettingTag, i: usize, l_plus: u32, errors: u32) -> EvalRecord {
        let l = l_total(l_plus, errors);
        EvalRecord {
            record_id: format!("{model}__{setting}__{i:02}__rule_plain__rule_generation"),
            model_id: model.into(),
            setting,
            function_index: i,
            prompt_template_id: "rule_plain".into(),
            task_kind: TaskKind::RuleGeneration,
            raw_response: String::new(),
            extracted_program: None,
            l_plus,
            errors,
            l_total: l,
            c_score: c_score(l),
            failure_mode: FailureMode::None,
            accuracy: None,
        }
    }

    #[test]
    fn table_has_one_row_per_model_and_group_per_setting() {
        let rs = vec![
            rec("a", SettingTag::Horizontal, 0, 40, 0),
            rec("a", SettingTag::Random, 0, 320, 0),
            rec("b", SettingTag::Horizontal, 0, 60, 2),
        ];
        let sums = summaries(&rs, &Thresholds::default()).unwrap();
        let txt = summary_txt(&sums, &["x".into()], 0);
        assert!(txt.starts_with("Deviations from the original protocol:\n  - x\n"));
        let lines: Vec<&str> = txt.lines().collect();
        let head = lines.iter().position(|l| l.starts_with("model")).unwrap();
        assert!(lines[head - 1].contains("Horizontal") && lines[head - 1].contains("Random"));
        assert!(
            lines[head + 2].starts_with("a ")
                && lines[head + 2].contains("100.00")
                && lines[head + 2].contains("0.00")
        );
        // Missing cell shown as dashes.
        assert!(lines[head + 3].starts_with("b ") && lines[head + 3].contains('-'));
        // Every table line has the same separators in the same places.
        let bars: Vec<Vec<usize>> = lines[head..head + 4]
            .iter()
            .map(|l| {
                l.char_indices()
                    .filter(|(_, c)| *c == '|' || *c == '+')
                    .map(|(i, _)| l[..i].chars().count())
                    .collect()
            })
            .collect();
        assert!(bars.windows(2).all(|w| w[0] == w[1]), "{txt}");
    }

    #[test]
    fn csv_blanks_program_columns_for_result_generation() {
        let mut r = rec("a", SettingTag::Block, 0, 0, 0);
        r.task_kind = TaskKind::ResultGeneration;
        r.accuracy = Some(62.5);
        let sums = summaries(&[r], &Thresholds::default()).unwrap();
        let csv = summary_csv(&sums);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "result_generation,rule_plain,a,block,1,,,,,,,62.5000,0.0000,"
        );
    }

    #[test]
    fn provider_failures_are_excluded_and_listed() {
        let mut bad = rec("a", SettingTag::Horizontal, 1, 0, 16);
        bad.failure_mode = FailureMode::ProviderFailure;
        let rs = vec![rec("a", SettingTag::Horizontal, 0, 40, 0), bad];
        let sums = summaries(&rs, &Thresholds::default()).unwrap();
        assert_eq!(sums[0].count, 1);
        assert_eq!(sums[0].mean_c, 100.0);
        let f = failures_txt(&rs, &BTreeMap::new());
        assert!(f.contains("provider_failure  1"));
        assert!(f.contains("a__horizontal__01__rule_plain__rule_generation  provider_failure"));
    }

    #[test]
    fn groups_use_bracket_notation() {
        let mut rs = Vec::new();
        for i in 0..10 {
            rs.push(rec("good", SettingTag::Horizontal, i, 40, 0));
            rs.push(rec(
                "same",
                SettingTag::Horizontal,
                i,
                40 + u32::from(i % 5 == 0),
                0,
            ));
            rs.push(rec("bad", SettingTag::Horizontal, i, 300, 10));
        }
        let g = groups_txt(&rs, &[]);
        assert!(g.contains("reconstruction"));
        let line = g.lines().find(|l| l.starts_with("Horizontal")).unwrap();
        assert!(
            line.contains("[good (100.00), same (99.93)] > [bad (0.00)]"),
            "{line}"
        );
    }
}
