//! End-to-end runs against the mock provider and a pre-populated cache.

use std::fs;
use std::path::Path;
use std::process::Command;

use rulegen::pipeline::{plan, prompts_for, request_fingerprint};
use rulegen::{audit, gen, run, score, write_reports, RunConfig, RunDir, RunOptions};
use rulegen_core::model::{FailureMode, TaskKind};
use rulegen_core::reference::sufficient_program;
use rulegen_gateway::template::parse_samples;
use rulegen_gateway::{DecodingParams, Transcript, TranscriptCache};

fn config(dir: &Path, body: &str) -> RunConfig {
    let text = format!(
        "output_dir = {:?}\nseed = 7\n{body}",
        dir.display().to_string()
    );
    RunConfig::from_toml(&text).unwrap()
}

fn mock(behavior: &str) -> String {
    format!("[[models]]\nid = \"mock-{behavior}\"\nretry_base_ms = 0\nprovider = {{ kind = \"mock\", behavior = \"{behavior}\" }}\n")
}

fn reports(dir: &Path) -> Vec<(String, Vec<u8>)> {
    ["summary.csv", "summary.txt", "groups.txt", "failures.txt"]
        .iter()
        .map(|f| {
            (
                f.to_string(),
                fs::read(dir.join("reports").join(f)).unwrap(),
            )
        })
        .collect()
}

fn csv_rows(dir: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(dir.join("reports/summary.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn replay_from_prepopulated_cache_scores_full_compositionality() {
    let tmp = tempfile::tempdir().unwrap();
    // An HTTP model that is never reached: every call must come from the cache.
    let cfg = config(
        tmp.path(),
        r#"
        functions = 2
        offline = true
        [[settings]]
        tag = "horizontal"
        [[models]]
        id = "remote"
        model = "some-model"
        provider = { kind = "http", endpoint = "http://127.0.0.1:9/v1/chat/completions" }
        "#,
    );
    let cache = TranscriptCache::new(RunDir::new(tmp.path()).cache());
    let cells = plan(&cfg).unwrap();
    assert_eq!(cells.len(), 2);
    for cell in &cells {
        let p = prompts_for(cell).unwrap();
        let prompt = &p.prompts[0];
        assert_eq!(parse_samples(prompt).len(), 16);
        cache
            .put(&Transcript {
                request_fingerprint: request_fingerprint(&cfg, cell, prompt),
                model_id: "remote".into(),
                model: "some-model".into(),
                provider: "http:http://127.0.0.1:9/v1/chat/completions".into(),
                template_id: cell.template.template_id.clone(),
                task_kind: TaskKind::RuleGeneration,
                prompt: prompt.clone(),
                raw_response: format!("```python\n{}```", sufficient_program(&p.function)),
                decoding: DecodingParams::default(),
                usage: None,
                timestamp: 0,
                retries: 0,
            })
            .unwrap();
    }

    let out = run(&cfg, &RunOptions::default()).unwrap();
    assert!(!out.manifest.hard_failure);
    let stats = out.manifest.cache.unwrap();
    assert_eq!((stats.hits, stats.misses, stats.writes), (2, 0, 0));
    for r in &out.records {
        assert_eq!(
            (r.l_plus, r.errors, r.c_score),
            (40, 0, 100.0),
            "{}",
            r.record_id
        );
    }
    let rows = csv_rows(tmp.path());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "remote");
    assert_eq!(rows[0][4], "2");
    assert_eq!(rows[0][9], "100.0000");
    assert_eq!(rows[0][13], "T1");
}

#[test]
fn rules_provided_populates_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "functions = 3\ntask_kinds = [\"rules_provided\"]\n[[settings]]\ntag = \"random\"\n{}",
        mock("sufficient")
    );
    let out = run(&config(tmp.path(), &body), &RunOptions::default()).unwrap();
    assert_eq!(out.records.len(), 3);
    assert!(out
        .records
        .iter()
        .all(|r| r.accuracy == Some(100.0) && r.errors == 0));
    let rows = csv_rows(tmp.path());
    assert_eq!(rows[0][0], "rules_provided");
    assert_eq!(rows[0][11], "100.0000");
    let txt = fs::read_to_string(tmp.path().join("reports/summary.txt")).unwrap();
    assert!(txt.contains("𝒜"));
}

#[test]
fn result_generation_scores_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "functions = 2\ntask_kinds = [\"result_generation\"]\n[[settings]]\ntag = \"block\"\n{}{}",
        mock("sufficient"),
        mock("zero")
    );
    let out = run(&config(tmp.path(), &body), &RunOptions::default()).unwrap();
    let good: Vec<_> = out
        .records
        .iter()
        .filter(|r| r.model_id == "mock-sufficient")
        .collect();
    assert!(good
        .iter()
        .all(|r| r.accuracy == Some(100.0) && r.failure_mode == FailureMode::None));
    assert!(good
        .iter()
        .all(|r| r.raw_response.matches("### query").count() == 8));
    // The first shown grid is never the answer: outputs are all distinct.
    let bad: Vec<_> = out
        .records
        .iter()
        .filter(|r| r.model_id == "mock-zero")
        .collect();
    assert!(bad.iter().all(|r| r.accuracy == Some(0.0)));
    // 8 prompts per function and model.
    assert_eq!(out.manifest.cache.unwrap().writes, 2 * 2 * 8);
    let rows = csv_rows(tmp.path());
    assert!(rows.iter().all(|r| r[5].is_empty() && r[9].is_empty()));
}

#[test]
fn rerun_and_rescore_give_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "functions = 5\ntemplates = [\"rule_plain\", \"rule_detailed\"]\ntask_kinds = [\"rule_generation\", \"rules_provided\"]\n\
         [[settings]]\ntag = \"horizontal\"\n[[settings]]\ntag = \"random_index\"\n{}{}{}",
        mock("sufficient"),
        mock("zero"),
        mock("no_code")
    );
    let cfg = config(tmp.path(), &body);
    let first = run(&cfg, &RunOptions::default()).unwrap();
    let before = reports(tmp.path());
    let second = run(
        &cfg,
        &RunOptions {
            jobs: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(reports(tmp.path()), before);
    assert_eq!(first.records, second.records);
    let s = second.manifest.cache.unwrap();
    assert_eq!((s.misses, s.writes), (0, 0));
    assert_eq!(s.hits as usize, second.manifest.cells);

    score(&RunDir::new(tmp.path()), &RunOptions::default()).unwrap();
    assert_eq!(reports(tmp.path()), before);
    write_reports(&RunDir::new(tmp.path())).unwrap();
    assert_eq!(reports(tmp.path()), before);

    let txt = String::from_utf8(before[1].1.clone()).unwrap();
    assert!(txt.starts_with("Deviations from the original protocol:"));
    assert!(txt.contains("Python subset"));
    assert!(txt.contains("Decoding for mock-zero: provider defaults"));
    assert!(txt.contains("== rule_generation / template rule_detailed =="));
    let groups = String::from_utf8(before[2].1.clone()).unwrap();
    assert!(groups.contains("reconstruction"));
    assert!(groups.contains("[mock-sufficient (100.00)] > "));
}

#[test]
fn audit_traces_the_reference_program() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "functions = 1\n[[settings]]\ntag = \"vertical\"\n{}{}",
        mock("sufficient"),
        mock("unparseable")
    );
    run(&config(tmp.path(), &body), &RunOptions::default()).unwrap();
    let dir = RunDir::new(tmp.path());

    let a = audit(
        &dir,
        "mock-sufficient__vertical__00__rule_plain__rule_generation",
    )
    .unwrap();
    assert!(a.contains("Input: ACEG"), "prompt shown");
    assert!(a.contains("== combinations (8) =="));
    assert!(a.contains("== output units (32 in 8 literals) =="));
    let units = a
        .split("== output units")
        .nth(1)
        .unwrap()
        .split("== mapping table")
        .next()
        .unwrap();
    let m: u32 = units
        .lines()
        .filter_map(|l| l.split(" m=").nth(1))
        .map(|n| n.trim().parse::<u32>().unwrap())
        .sum();
    assert_eq!(m, 32);
    assert!(a.contains("L(P⁺) = Σn + Σm = 8 + 32 = 40"));
    assert_eq!(a.matches("steps=").count(), 16);
    assert!(a.contains("E(P) = 0"));
    assert!(a.contains("C(P)  = 100.00"));

    let b = audit(
        &dir,
        "mock-unparseable__vertical__00__rule_plain__rule_generation",
    )
    .unwrap();
    let diag = b
        .split("== parse diagnostics ==")
        .nth(1)
        .expect("diagnostics section");
    // line:col span, then the message.
    let first = diag.lines().find(|l| !l.trim().is_empty()).unwrap().trim();
    let (span, _) = first.split_once(": ").unwrap();
    let (line, col) = span.split_once(':').unwrap();
    assert!(
        line.parse::<u32>().is_ok() && col.parse::<u32>().is_ok(),
        "{first}"
    );
    assert!(b.contains("failure_mode = parse_failure"));

    assert!(matches!(
        audit(&dir, "nope"),
        Err(rulegen::CliError::UnknownRecord(_))
    ));
}

#[test]
fn provider_failures_are_recorded_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "functions = 2\n[[settings]]\ntag = \"horizontal\"\n{}{}",
        mock("sufficient"),
        mock("empty")
    );
    let out = run(&config(tmp.path(), &body), &RunOptions::default()).unwrap();
    assert!(out.manifest.hard_failure);
    assert_eq!(out.manifest.provider_failures.len(), 2);
    assert_eq!(out.manifest.failure_modes["provider_failure"], 2);
    let failures = fs::read_to_string(tmp.path().join("reports/failures.txt")).unwrap();
    assert!(failures.contains("mock-empty__horizontal__00__rule_plain__rule_generation  provider_failure  malformed_response"));
    // The failed model has no aggregate row; the healthy one does.
    let rows = csv_rows(tmp.path());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "mock-sufficient");
    let txt = fs::read_to_string(tmp.path().join("reports/summary.txt")).unwrap();
    assert!(txt.contains("2 record(s) excluded after provider failures"));
}

#[test]
fn offline_miss_is_a_provider_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "functions = 1\n[[settings]]\ntag = \"block\"\n{}",
        mock("sufficient")
    );
    let out = run(
        &config(tmp.path(), &body),
        &RunOptions {
            offline: Some(true),
            jobs: None,
        },
    )
    .unwrap();
    assert!(out.manifest.hard_failure);
    let trace = fs::read_to_string(
        tmp.path()
            .join("traces/mock-sufficient__block__00__rule_plain__rule_generation.json"),
    )
    .unwrap();
    assert!(trace.contains("offline_cache_miss"));
    // Going online fills the cache and clears the failure.
    let out = run(&config(tmp.path(), &body), &RunOptions::default()).unwrap();
    assert!(!out.manifest.hard_failure);
}

#[test]
fn stale_records_are_dropped_when_the_config_shrinks() {
    let tmp = tempfile::tempdir().unwrap();
    let body = |n: usize| {
        format!(
            "functions = {n}\n[[settings]]\ntag = \"horizontal\"\n{}",
            mock("zero")
        )
    };
    run(&config(tmp.path(), &body(3)), &RunOptions::default()).unwrap();
    assert_eq!(RunDir::new(tmp.path()).load_records().unwrap().len(), 3);
    run(&config(tmp.path(), &body(2)), &RunOptions::default()).unwrap();
    assert_eq!(RunDir::new(tmp.path()).load_records().unwrap().len(), 2);
    assert_eq!(csv_rows(tmp.path())[0][4], "2");
}

#[test]
fn gen_writes_datasets_and_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "functions = 2\n[[settings]]\ntag = \"setting_combination\"\nseed = 3\n{}",
        mock("zero")
    );
    let cfg = config(tmp.path(), &body);
    let m = gen(&cfg).unwrap();
    assert_eq!(m.settings[0].seed, 3);
    let dir = RunDir::new(tmp.path());
    for i in 0..2 {
        let d = rulegen::pipeline::load_dataset(
            &dir,
            rulegen_core::model::SettingTag::SettingCombination,
            i,
        )
        .unwrap();
        let meta: rulegen_core::model::FunctionMeta = serde_json::from_str(
            &fs::read_to_string(
                dir.dataset_meta(rulegen_core::model::SettingTag::SettingCombination, i),
            )
            .unwrap(),
        )
        .unwrap();
        let f = rulegen_core::model::CompositionalFunction::from_meta(&meta).unwrap();
        d.check_against(&f).unwrap();
    }
    assert!(!tmp.path().join("records").exists());
    // Same config and seed, same bytes.
    let a = fs::read(dir.dataset(rulegen_core::model::SettingTag::SettingCombination, 1)).unwrap();
    gen(&cfg).unwrap();
    assert_eq!(
        fs::read(dir.dataset(rulegen_core::model::SettingTag::SettingCombination, 1)).unwrap(),
        a
    );
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_rulegen");
    let write = |name: &str, behavior: &str| {
        let p = tmp.path().join(name);
        let out = tmp.path().join(format!("run-{behavior}"));
        fs::write(
            &p,
            format!(
                "output_dir = {:?}\nfunctions = 1\n[[settings]]\ntag = \"horizontal\"\n{}",
                out.display().to_string(),
                mock(behavior)
            ),
        )
        .unwrap();
        (p, out)
    };
    let (good, good_out) = write("good.toml", "sufficient");
    let status = Command::new(exe)
        .args(["run", "--config"])
        .arg(&good)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(String::from_utf8_lossy(&status.stdout).contains("1 cells"));

    let (bad, _) = write("bad.toml", "empty");
    assert!(!Command::new(exe)
        .args(["run", "--config"])
        .arg(&bad)
        .status()
        .unwrap()
        .success());

    // Model-quality failures are not hard failures.
    let (code, _) = write("nocode.toml", "no_code");
    assert!(Command::new(exe)
        .args(["run", "--config"])
        .arg(&code)
        .status()
        .unwrap()
        .success());

    let ok = |args: &[&str]| {
        Command::new(exe)
            .args(args)
            .arg("--run")
            .arg(&good_out)
            .status()
            .unwrap()
            .success()
    };
    assert!(ok(&["score"]));
    assert!(ok(&["report"]));
    assert!(ok(&[
        "audit",
        "mock-sufficient__horizontal__00__rule_plain__rule_generation"
    ]));
    assert!(!ok(&["audit", "missing"]));

    let seeded = tmp.path().join("seeded");
    let st = Command::new(exe)
        .args(["gen", "--seed", "99", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&seeded)
        .status()
        .unwrap();
    assert!(st.success());
    let manifest = fs::read_to_string(seeded.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 99"));
    assert!(!Command::new(exe)
        .args(["run", "--config", "/nonexistent.toml"])
        .status()
        .unwrap()
        .success());
}

#[test]
fn shuffled_sample_order_reaches_datasets_and_prompts() {
    let body = |order: &str| {
        format!(
            "functions = 2\nsample_order = {order}\n[[settings]]\ntag = \"block\"\n{}",
            mock("sufficient")
        )
    };
    let inputs = |dir: &Path, i: usize| -> Vec<String> {
        rulegen::pipeline::load_dataset(&RunDir::new(dir), rulegen_core::model::SettingTag::Block, i)
            .unwrap()
            .samples()
            .iter()
            .map(|s| s.input.to_string())
            .collect()
    };
    let lex = tempfile::tempdir().unwrap();
    let shuf = tempfile::tempdir().unwrap();
    let lex_cfg = config(lex.path(), &body("{ kind = \"lexicographic\" }"));
    let shuf_cfg = config(shuf.path(), &body("{ kind = \"shuffled\", seed = 11 }"));
    run(&lex_cfg, &RunOptions::default()).unwrap();
    let out = run(&shuf_cfg, &RunOptions::default()).unwrap();

    for i in 0..2 {
        let (a, b) = (inputs(lex.path(), i), inputs(shuf.path(), i));
        let mut sorted = b.clone();
        sorted.sort();
        assert_eq!(a, sorted);
        assert_ne!(a, b);
    }
    // Functions 0 and 1 get different permutations.
    assert_ne!(inputs(shuf.path(), 0), inputs(shuf.path(), 1));
    // The rendered prompt follows the stored order.
    let cell = &plan(&shuf_cfg).unwrap()[0];
    let shown: Vec<String> = parse_samples(&prompts_for(cell).unwrap().prompts[0])
        .iter()
        .map(|s| s.input.to_string())
        .collect();
    assert_eq!(shown, inputs(shuf.path(), cell.index));
    assert!(out.records.iter().all(|r| r.c_score == 100.0));
}
