//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Tolerances and time limits are pinned below.
//!
//! The live smoke run is `#[ignore]`d; it needs credentials:
//! RULEGEN_LIVE_ENDPOINT, RULEGEN_LIVE_MODEL and RULEGEN_LIVE_KEY_ENV (the
//! name of the variable holding the key).

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulegen::{run, score, RunConfig, RunDir, RunOptions};
use rulegen_core::analyzer::analyze;
use rulegen_core::fuzz::{mutate, random_program};
use rulegen_core::interp::{count_errors, run_program, ExecBudget};
use rulegen_core::lang::parse_program;
use rulegen_core::metrics::{aggregate, c_score, l_total, mann_whitney_u, Thresholds};
use rulegen_core::model::{
    Cell, EvalRecord, FailureMode, InputString, SettingTag, TaskKind, BITS, CELLS,
};
use rulegen_core::reference::{
    sufficient_program, zero_program, BRANCHING_FRAGMENT, TABLE_FRAGMENT,
};
use rulegen_core::taskgen::{build_dataset, sample_function, SettingSpec};

const CALIBRATION_LIMIT: Duration = Duration::from_secs(10);
const C_100_EXPECTED: f64 = 78.571;
const C_100_TOLERANCE: f64 = 0.001;
const AVERAGING_MIN_GAP: f64 = 0.1;
const MW_TOLERANCE: f64 = 1e-9;
const MW_LIMIT: Duration = Duration::from_secs(60);
const DATAGEN_LIMIT: Duration = Duration::from_secs(30);
const FUZZ_PROGRAMS: usize = 10_000;
const FUZZ_STEP_FACTOR: u64 = 2;
/// Timer noise allowance added to the wall-clock bound of one fuzz run.
const FUZZ_TIMER_SLACK: Duration = Duration::from_millis(20);

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_bound_calibration() -> Outcome {
    let start = Instant::now();
    let budget = ExecBudget::default();
    let mut n = 0;
    for tag in SettingTag::BASE {
        let spec = SettingSpec::new(tag, 20_240);
        for i in 0..30 {
            let f = sample_function(&spec, i);
            let d = build_dataset(&f, "acc");
            for (src, want) in [
                (sufficient_program(&f), 40),
                (zero_program(d.samples()), 320),
            ] {
                let m = parse_program(&src)
                    .module
                    .ok_or(format!("{tag}/{i}: no parse"))?;
                let l = analyze(&m).l_plus;
                check(l == want, format!("{tag}/{i}: L(P⁺)={l}, want {want}"))?;
                let e = count_errors(&m, &d, &budget).errors;
                check(e == 0, format!("{tag}/{i}: E(P)={e}"))?;
                n += 1;
            }
        }
    }
    let t = start.elapsed();
    check(t < CALIBRATION_LIMIT, format!("took {t:?}"))?;
    Ok(format!(
        "{n} programs at 40/320 with E=0 in {:.2}s",
        t.as_secs_f64()
    ))
}

fn c2_mixed_fixture() -> Outcome {
    let mut parts = Vec::new();
    for (name, src) in [("branching", BRANCHING_FRAGMENT), ("table", TABLE_FRAGMENT)] {
        let m = parse_program(src)
            .module
            .ok_or(format!("{name}: no parse"))?;
        let t = analyze(&m);
        check(
            (t.sum_n, t.sum_m, t.l_plus) == (12, 48, 60),
            format!("{name}: Σn={} Σm={} L={}", t.sum_n, t.sum_m, t.l_plus),
        )?;
        parts.push(format!("{name} 12+48=60"));
    }
    Ok(parts.join(", "))
}

fn c3_metric_identities() -> Outcome {
    check(c_score(40) == 100.0, format!("c(40)={}", c_score(40)))?;
    check(c_score(320) == 0.0, format!("c(320)={}", c_score(320)))?;
    let c100 = c_score(100);
    check(
        (c100 - C_100_EXPECTED).abs() <= C_100_TOLERANCE,
        format!("c(100)={c100}"),
    )?;
    check(
        l_total(60, 2) == 100,
        format!("l_total(60,2)={}", l_total(60, 2)),
    )?;
    Ok(format!(
        "c(40)=100, c(320)=0, c(100)={c100:.5}, l_total(60,2)=100"
    ))
}

fn c4_per_sample_averaging() -> Outcome {
    // 2×(40,16) + 8×(43,1) + 19×(43,0) + 1×(56,0)
    let mut shape = vec![(40, 16); 2];
    shape.extend([(43, 1); 8]);
    shape.extend([(43, 0); 19]);
    shape.push((56, 0));
    let records: Vec<EvalRecord> = shape
        .iter()
        .enumerate()
        .map(|(i, &(l_plus, errors))| EvalRecord {
            record_id: format!("m__horizontal__{i:02}__t__rule_generation"),
            model_id: "m".into(),
            setting: SettingTag::Horizontal,
            function_index: i,
            prompt_template_id: "t".into(),
            task_kind: TaskKind::RuleGeneration,
            raw_response: String::new(),
            extracted_program: None,
            l_plus,
            errors,
            l_total: l_total(l_plus, errors),
            c_score: c_score(l_total(l_plus, errors)),
            failure_mode: FailureMode::None,
            accuracy: None,
        })
        .collect();
    let s = aggregate(&records, &Thresholds::default()).map_err(|e| e.to_string())?;
    check(
        (s.mean_l_plus - 43.23).abs() < 0.005,
        format!("mean L⁺ {}", s.mean_l_plus),
    )?;
    check(
        (s.mean_errors - 1.33).abs() < 0.005,
        format!("mean E {}", s.mean_errors),
    )?;
    // Independent evaluation of the normalised score on a real-valued L.
    let c_of = |l: f64| 100.0 * (320.0 - l.clamp(40.0, 320.0)) / 280.0;
    let per_sample = shape
        .iter()
        .map(|&(lp, e)| c_of(f64::from(lp) + 20.0 * f64::from(e)))
        .sum::<f64>()
        / 30.0;
    check(
        (s.mean_c - per_sample).abs() < 1e-9,
        format!("mean C {} vs oracle {per_sample}", s.mean_c),
    )?;
    let of_mean = c_of(s.mean_l_plus + 20.0 * s.mean_errors);
    let gap = (s.mean_c - of_mean).abs();
    check(gap > AVERAGING_MIN_GAP, format!("gap {gap}"))?;
    Ok(format!(
        "mean per-sample C {:.2} vs C(mean L) {of_mean:.2}, gap {gap:.2}",
        s.mean_c
    ))
}

fn pair_u(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x, y)))
        .map(|(x, y)| {
            if x > y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            }
        })
        .sum()
}

/// Two-sided p over every assignment of the pooled values to the groups.
fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let centre = (a.len() * b.len()) as f64 / 2.0;
    let observed = (pair_u(a, b) - centre).abs();
    let (mut hits, mut total) = (0u32, 0u32);
    for mask in 0u32..1 << pooled.len() {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let x: Vec<f64> = (0..pooled.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| pooled[i])
            .collect();
        let y: Vec<f64> = (0..pooled.len())
            .filter(|i| mask >> i & 1 == 0)
            .map(|i| pooled[i])
            .collect();
        total += 1;
        if (pair_u(&x, &y) - centre).abs() >= observed - 1e-9 {
            hits += 1;
        }
    }
    f64::from(hits) / f64::from(total)
}

fn c5_mann_whitney_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut sizes = BTreeSet::new();
    let mut tied = 0;
    for case in 0..200 {
        // Cycle through every size pair, then draw the rest at random.
        let (na, nb) = if case < 36 {
            (case / 6 + 1, case % 6 + 1)
        } else {
            (rng.random_range(1..=6), rng.random_range(1..=6))
        };
        sizes.insert((na, nb));
        let a: Vec<f64> = (0..na)
            .map(|_| f64::from(rng.random_range(0u8..5)))
            .collect();
        let b: Vec<f64> = (0..nb)
            .map(|_| f64::from(rng.random_range(0u8..5)))
            .collect();
        if na + nb
            > a.iter()
                .chain(&b)
                .map(|x| x.to_bits())
                .collect::<BTreeSet<_>>()
                .len()
        {
            tied += 1;
        }
        let got = mann_whitney_u(&a, &b).p;
        let want = permutation_p(&a, &b);
        worst = worst.max((got - want).abs());
        check(
            (got - want).abs() <= MW_TOLERANCE,
            format!("{a:?} vs {b:?}: p {got} vs {want}"),
        )?;
    }
    check(
        sizes.len() == 36,
        format!("only {} size pairs covered", sizes.len()),
    )?;
    let t = start.elapsed();
    check(t < MW_LIMIT, format!("took {t:?}"))?;
    Ok(format!(
        "200 cases ({tied} with ties), all 36 size pairs, max |Δp| {worst:.1e}, {:.2}s",
        t.as_secs_f64()
    ))
}

fn c6_datagen_properties() -> Outcome {
    let start = Instant::now();
    for tag in SettingTag::ALL {
        let spec = SettingSpec::new(tag, 6).with_count(1000);
        for i in 0..1000 {
            let f = sample_function(&spec, i);
            let mut seen = [false; CELLS];
            for bit in 0..BITS {
                let g = f.group(bit);
                check(
                    g.iter().collect::<BTreeSet<_>>().len() == 4,
                    format!("{tag}/{i}: group {bit} not of size 4"),
                )?;
                for c in g {
                    check(!seen[c.index()], format!("{tag}/{i}: cell {c} owned twice"))?;
                    seen[c.index()] = true;
                }
            }
            check(
                seen.iter().all(|&s| s),
                format!("{tag}/{i}: not a partition"),
            )?;
            let outputs: Vec<_> = InputString::all().map(|x| f.apply(&x)).collect();
            check(
                outputs
                    .iter()
                    .map(|g| g.rows())
                    .collect::<BTreeSet<_>>()
                    .len()
                    == 16,
                format!("{tag}/{i}: repeated output"),
            )?;
            for x in InputString::all() {
                for bit in 0..BITS {
                    let changed: BTreeSet<Cell> = f
                        .apply(&x)
                        .diff(&f.apply(&x.with_flipped(bit)))
                        .into_iter()
                        .collect();
                    let group: BTreeSet<Cell> = f.group(bit).iter().copied().collect();
                    check(
                        changed == group,
                        format!("{tag}/{i}: flipping bit {bit} of {x} changes {changed:?}"),
                    )?;
                }
            }
            if tag == SettingTag::RandomIndex {
                let identity = (0..BITS).all(|b| f.group(b).iter().all(|c| c.row as usize == b));
                check(!identity, format!("random_index/{i} is the identity"))?;
            }
        }
    }
    let t = start.elapsed();
    check(t < DATAGEN_LIMIT, format!("took {t:?}"))?;
    Ok(format!("6000 functions in {:.2}s", t.as_secs_f64()))
}

fn c7_sandbox_robustness() -> Outcome {
    let budget = ExecBudget::default();
    // Wall-clock cost of one full step budget, from a program that burns it.
    let burner = parse_program("def generate(s):\n    while True:\n        x = 1\n")
        .module
        .unwrap();
    let mut cal = Vec::new();
    for _ in 0..5 {
        let t = Instant::now();
        let r = run_program(&burner, &"ACEG".parse().unwrap(), &budget);
        cal.push(t.elapsed());
        check(r.outcome.is_err(), "burner finished")?;
    }
    cal.sort();
    let per_budget = cal[2];
    let wall_limit = per_budget * FUZZ_STEP_FACTOR as u32 + FUZZ_TIMER_SLACK;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut ran, mut grids, mut failures, mut rejected) = (0, 0, 0, 0);
    let mut max_steps = 0;
    let mut slowest = Duration::ZERO;
    let inputs: Vec<InputString> = InputString::all().collect();
    for i in 0..FUZZ_PROGRAMS {
        let base = random_program(&mut rng);
        let src = if rng.random_bool(0.5) {
            mutate(&base, &mut rng)
        } else {
            base
        };
        let x = inputs[i % 16];
        let result = catch_unwind(AssertUnwindSafe(|| {
            let parsed = parse_program(&src);
            let m = parsed.module?;
            let t = Instant::now();
            let r = run_program(&m, &x, &budget);
            Some((r, t.elapsed()))
        }));
        match result {
            Err(_) => return Err(format!("harness panicked on program {i}:\n{src}")),
            Ok(None) => rejected += 1,
            Ok(Some((r, t))) => {
                ran += 1;
                max_steps = max_steps.max(r.steps);
                slowest = slowest.max(t);
                check(
                    r.steps <= FUZZ_STEP_FACTOR * budget.max_steps,
                    format!("program {i}: {} steps", r.steps),
                )?;
                check(
                    t <= wall_limit,
                    format!("program {i}: {t:?} > {wall_limit:?}\n{src}"),
                )?;
                // Ok is a Grid by type; Err carries a FailureKind.
                match r.outcome {
                    Ok(_) => grids += 1,
                    Err(_) => failures += 1,
                }
            }
        }
    }
    Ok(format!(
        "{FUZZ_PROGRAMS} programs: {rejected} rejected by the parser, {ran} run ({grids} grids, {failures} classified failures); \
         max steps {max_steps}, slowest {slowest:?} vs limit {wall_limit:?}"
    ))
}

fn c8_decode_failure_policy() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let text = format!(
        "output_dir = {:?}\nfunctions = 2\n[[settings]]\ntag = \"horizontal\"\n\
         [[models]]\nid = \"broken\"\nprovider = {{ kind = \"mock\", behavior = \"unparseable\" }}\n",
        tmp.path().display().to_string()
    );
    let cfg = RunConfig::from_toml(&text).map_err(|e| e.to_string())?;
    run(&cfg, &RunOptions::default()).map_err(|e| e.to_string())?;
    let out = score(&RunDir::new(tmp.path()), &RunOptions::default()).map_err(|e| e.to_string())?;
    check(
        !out.manifest.hard_failure,
        "score hit the network or failed",
    )?;
    check(
        out.manifest.cache.map(|c| c.hits) == Some(2),
        "score not served from cache",
    )?;
    for r in &out.records {
        check(
            (r.l_plus, r.errors, r.l_total, r.c_score) == (0, 16, 320, 0.0)
                && r.failure_mode == FailureMode::ParseFailure,
            format!(
                "{}: ({}, {}, {}, {}) {:?}",
                r.record_id, r.l_plus, r.errors, r.l_total, r.c_score, r.failure_mode
            ),
        )?;
    }
    let csv = std::fs::read_to_string(tmp.path().join("reports/summary.csv"))
        .map_err(|e| e.to_string())?;
    let row: Vec<&str> = csv
        .lines()
        .nth(1)
        .ok_or("no report row")?
        .split(',')
        .collect();
    check(
        row[5] == "0.0000" && row[7] == "16.0000" && row[9] == "0.0000",
        format!("report row {row:?}"),
    )?;
    Ok("2 records at L⁺=0, E=16, L=320, C=0 after `score`".into())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 bound calibration", c1_bound_calibration),
        ("2 mixed fixture", c2_mixed_fixture),
        ("3 metric identities", c3_metric_identities),
        ("4 per-sample averaging", c4_per_sample_averaging),
        ("5 Mann-Whitney oracle", c5_mann_whitney_oracle),
        ("6 datagen properties", c6_datagen_properties),
        ("7 sandbox robustness", c7_sandbox_robustness),
        ("8 decode-failure policy", c8_decode_failure_policy),
    ];
    // Straight to the stdout handle: libtest captures `println!`, and these
    // lines should show in a plain `cargo test` log.
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let line = match catch_unwind(f) {
            Ok(Ok(detail)) => format!("PASS [{name}] {detail}"),
            Ok(Err(why)) => {
                failed.push(name);
                format!("FAIL [{name}] {why}")
            }
            Err(_) => {
                failed.push(name);
                format!("FAIL [{name}] panicked")
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    writeln!(out, "SKIP [9 live smoke] run with --ignored and credentials").unwrap();
    drop(out);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
#[ignore = "needs a live endpoint and credentials"]
fn live_smoke() {
    let var = |k: &str| std::env::var(k).unwrap_or_else(|_| panic!("{k} not set"));
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "output_dir = {:?}\nfunctions = 5\n[[settings]]\ntag = \"horizontal\"\n[[settings]]\ntag = \"random\"\n\
         [[models]]\nid = \"live\"\nmodel = {:?}\nmax_in_flight = 2\n\
         provider = {{ kind = \"http\", endpoint = {:?}, api_key_env = {:?} }}\n",
        tmp.path().display().to_string(),
        var("RULEGEN_LIVE_MODEL"),
        var("RULEGEN_LIVE_ENDPOINT"),
        var("RULEGEN_LIVE_KEY_ENV"),
    );
    let cfg = RunConfig::from_toml(&text).unwrap();
    let out = run(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(out.records.len(), 10);
    for r in &out.records {
        let full = r.failure_mode == FailureMode::None && r.l_total == l_total(r.l_plus, r.errors);
        assert!(
            full || r.failure_mode != FailureMode::None,
            "{}",
            r.record_id
        );
    }
    let txt = std::fs::read_to_string(tmp.path().join("reports/summary.txt")).unwrap();
    assert!(txt.contains("L(P⁺)") && txt.contains("E(P)") && txt.contains("C(P)"));
    let c = |tag: SettingTag| {
        let v: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.setting == tag)
            .map(|r| r.c_score)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    println!(
        "C(Horizontal) = {:.2}, C(Random) = {:.2} (expected Horizontal ≥ Random, not asserted)",
        c(SettingTag::Horizontal),
        c(SettingTag::Random)
    );
}
