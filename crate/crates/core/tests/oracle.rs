//! End-to-end checks against ground truth computed outside the interpreter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulegen_core::interp::{run_program, ExecBudget};
use rulegen_core::lang::parse_program;
use rulegen_core::model::{InputString, SettingTag};
use rulegen_core::par::{map, score_batch, Exec, ScoreJob};
use rulegen_core::reference::{sufficient_program, zero_program};
use rulegen_core::fuzz::{mutate, random_program};
use rulegen_core::taskgen::{build_dataset, sample_function, SettingSpec};

#[test]
fn generated_programs_reproduce_a_thousand_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let budget = ExecBudget::default();
    for _ in 0..1000 {
        let tag = SettingTag::ALL[rng.random_range(0..SettingTag::ALL.len())];
        let f = sample_function(&SettingSpec::new(tag, rng.random()), rng.random_range(0..30));
        let m = parse_program(&sufficient_program(&f)).module.unwrap();
        for x in InputString::all() {
            let got = run_program(&m, &x, &budget).outcome.unwrap();
            assert_eq!(got, f.apply(&x), "{tag} {x}");
        }
    }
}

#[test]
fn lookup_table_reproduces_its_samples() {
    let f = sample_function(&SettingSpec::new(SettingTag::Random, 5), 2);
    let d = build_dataset(&f, "r");
    let m = parse_program(&zero_program(d.samples())).module.unwrap();
    for s in d.samples() {
        assert_eq!(run_program(&m, &s.input, &ExecBudget::default()).outcome.unwrap(), s.output);
    }
}

#[test]
fn parallel_and_sequential_scoring_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let datasets: Vec<_> = (0..8)
        .map(|i| build_dataset(&sample_function(&SettingSpec::new(SettingTag::ALL[i % 6], 3), i), "d"))
        .collect();
    let responses: Vec<String> = (0..200)
        .map(|i| {
            let src = random_program(&mut rng);
            let src = if i % 3 == 0 { mutate(&src, &mut rng) } else { src };
            format!("```python\n{src}```")
        })
        .collect();
    let jobs: Vec<ScoreJob> =
        responses.iter().enumerate().map(|(i, r)| ScoreJob { response: r, dataset: &datasets[i % 8] }).collect();
    let budget = ExecBudget { max_steps: 5_000, ..ExecBudget::default() };
    let key = |s: &rulegen_core::score::Scored| (s.l_plus, s.errors, s.l_total, s.failure_mode);
    let par: Vec<_> = score_batch(Exec::Parallel, &jobs, &budget).iter().map(key).collect();
    let seq: Vec<_> = score_batch(Exec::Sequential, &jobs, &budget).iter().map(key).collect();
    assert_eq!(par, seq);
    let xs: Vec<u32> = (0..500).collect();
    assert_eq!(map(Exec::Parallel, &xs, |x| x * 3), map(Exec::Sequential, &xs, |x| x * 3));
}
