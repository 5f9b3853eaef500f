//! Property tests for the language front end and the analyzer.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rulegen_core::analyzer::{analyze, MappingTable};
use rulegen_core::analyzer::units::sum_output_lengths;
use rulegen_core::fuzz::{mutate, random_program};
use rulegen_core::lang::ast::{Module, Stmt, StmtKind};
use rulegen_core::lang::dump::dump_module;
use rulegen_core::lang::parse_program;
use rulegen_core::lang::printer::print_module;
use rulegen_core::model::SettingTag;
use rulegen_core::reference::{sufficient_program, BRANCHING_FRAGMENT, TABLE_FRAGMENT};
use rulegen_core::taskgen::{sample_function, SettingSpec};

fn program(seed: u64) -> String {
    random_program(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn parse(src: &str) -> Module {
    match parse_program(src).module {
        Some(m) => m,
        None => panic!("does not parse:\n{src}"),
    }
}

fn fixtures() -> Vec<String> {
    let f = sample_function(&SettingSpec::new(SettingTag::Random, 9), 4);
    vec![BRANCHING_FRAGMENT.to_string(), TABLE_FRAGMENT.to_string(), sufficient_program(&f)]
}

/// Everything about a table that must not depend on spelling or layout.
fn shape(t: &MappingTable) -> (u32, u32, Vec<Vec<String>>) {
    let mut combos: Vec<Vec<String>> =
        t.combinations.iter().map(|c| c.tokens.iter().map(|k| format!("{k:?}")).collect()).collect();
    combos.sort();
    (t.sum_n, t.sum_m, combos)
}

/// Applies `f` to every identifier outside string literals.
fn map_identifiers(src: &str, f: impl Fn(&str) -> Option<String>) -> String {
    let mut out = String::new();
    let mut chars = src.chars().peekable();
    let mut quote: Option<char> = None;
    while let Some(c) = chars.next() {
        if let Some(q) = quote {
            out.push(c);
            if c == '\\' {
                if let Some(n) = chars.next() {
                    out.push(n);
                }
            } else if c == q {
                quote = None;
            }
        } else if c == '\'' || c == '"' {
            quote = Some(c);
            out.push(c);
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut word = c.to_string();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_alphanumeric() || n == '_' {
                    word.push(n);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push_str(&f(&word).unwrap_or(word));
        } else {
            out.push(c);
        }
    }
    out
}

/// Applies `f` to the contents of every string literal.
fn map_strings(src: &str, f: impl Fn(char) -> char) -> String {
    let mut out = String::new();
    let mut quote: Option<char> = None;
    for c in src.chars() {
        match quote {
            Some(q) if c == q => {
                quote = None;
                out.push(c);
            }
            Some(_) => out.push(f(c)),
            None => {
                if c == '\'' || c == '"' {
                    quote = Some(c);
                }
                out.push(c);
            }
        }
    }
    out
}

/// Strips every grid symbol from string literals.
fn without_symbols(src: &str) -> String {
    map_strings(src, |c| if c == '*' || c == '.' { 'Z' } else { c })
}

const RENAMES: [(&str, &str); 10] = [
    ("x", "first_value"),
    ("y", "second"),
    ("rows", "grid"),
    ("i", "idx"),
    ("k", "kk"),
    ("t", "tmp"),
    ("h0", "helper_a"),
    ("h1", "helper_b"),
    ("pattern", "pat"),
    ("grid", "board"),
];

fn rename(src: &str) -> String {
    map_identifiers(src, |w| RENAMES.iter().find(|(a, _)| *a == w).map(|(_, b)| b.to_string()))
}

/// Inserts comment lines and trailing comments; comments mention letters and
/// symbols on purpose.
fn add_comments(src: &str, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("# rule for 'ACEG' -> '****'\n");
    for line in src.lines() {
        if rand::Rng::random_bool(&mut rng, 0.3) {
            out.push_str("        # if s[0] == 'A': rows[0] = '*..*'\n");
        }
        out.push_str(line);
        if !line.contains('#') && !line.trim().is_empty() && rand::Rng::random_bool(&mut rng, 0.3) {
            out.push_str("  # B D F H '....'");
        }
        out.push('\n');
    }
    out
}

/// Clones the `n`-th statement (pre-order) right after itself and returns it.
fn duplicate_nth(body: &mut Vec<Stmt>, n: &mut usize) -> Option<Stmt> {
    for i in 0..body.len() {
        if *n == 0 {
            let s = body[i].clone();
            body.insert(i + 1, s.clone());
            return Some(s);
        }
        *n -= 1;
        let found = match &mut body[i].kind {
            StmtKind::FunctionDef { body, .. } | StmtKind::For { body, .. } | StmtKind::While { body, .. } => {
                duplicate_nth(body, n)
            }
            StmtKind::If(chain) => {
                let mut r = None;
                for b in &mut chain.branches {
                    r = r.or_else(|| duplicate_nth(&mut b.body, n));
                }
                if let Some(e) = &mut chain.orelse {
                    r = r.or_else(|| duplicate_nth(&mut e.body, n));
                }
                r
            }
            _ => None,
        };
        if found.is_some() {
            return found;
        }
    }
    None
}

fn count_stmts(m: &Module) -> usize {
    let mut n = 0;
    m.walk_stmts(&mut |_| n += 1);
    n
}

fn check_duplication(src: &str, pick: usize) {
    let m = parse(src);
    let before = analyze(&m);
    let total = count_stmts(&m);
    if total == 0 {
        return;
    }
    let mut dup = m.clone();
    let stmt = duplicate_nth(&mut dup.body, &mut (pick % total)).expect("statement exists");
    let printed = print_module(&dup);
    let after = analyze(&parse(&printed));
    let units = sum_output_lengths(&Module { body: vec![stmt] });
    assert!(after.sum_n <= before.sum_n, "Σn grew {} -> {}:\n{printed}", before.sum_n, after.sum_n);
    assert_eq!(after.sum_m, before.sum_m + units, "Σm off:\n{printed}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let src = program(seed);
        let m = parse(&src);
        let printed = print_module(&m);
        let again = parse(&printed);
        prop_assert_eq!(dump_module(&m, false), dump_module(&again, false));
        prop_assert_eq!(print_module(&again), printed);
    }

    #[test]
    fn front_end_is_total(src in "(?s).{0,300}") {
        let out = parse_program(&src);
        prop_assert!(out.module.is_some() || !out.diagnostics.is_empty());
    }

    #[test]
    fn front_end_is_total_on_mutants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = mutate(&program(seed), &mut rng);
        let out = parse_program(&src);
        prop_assert!(out.module.is_some() || !out.diagnostics.is_empty());
        if let Some(m) = out.module {
            analyze(&m);
        }
    }

    #[test]
    fn renaming_preserves_the_table(seed in any::<u64>()) {
        let src = program(seed);
        let renamed = rename(&src);
        prop_assert_eq!(shape(&analyze(&parse(&src))), shape(&analyze(&parse(&renamed))));
    }

    #[test]
    fn comments_do_not_count(seed in any::<u64>()) {
        let src = program(seed);
        let commented = add_comments(&src, seed);
        prop_assert_eq!(shape(&analyze(&parse(&src))), shape(&analyze(&parse(&commented))));
    }

    #[test]
    fn duplication_is_monotone(seed in any::<u64>(), pick in any::<usize>()) {
        check_duplication(&program(seed), pick);
    }

    #[test]
    fn no_output_means_no_table(seed in any::<u64>()) {
        let t = analyze(&parse(&without_symbols(&program(seed))));
        // Integer dict values still count as output; only check when none do.
        if t.sum_m == 0 {
            prop_assert_eq!(t.sum_n, 0);
            prop_assert!(t.combinations.is_empty());
        }
    }
}

#[test]
fn fixtures_invariant_under_renaming_and_comments() {
    for src in fixtures() {
        let base = shape(&analyze(&parse(&src)));
        assert_eq!(base, shape(&analyze(&parse(&rename(&src)))), "{src}");
        for seed in 0..5 {
            assert_eq!(base, shape(&analyze(&parse(&add_comments(&src, seed)))), "{src}");
        }
    }
}

#[test]
fn fixtures_duplication_is_monotone() {
    for src in fixtures() {
        let total = count_stmts(&parse(&src));
        for pick in 0..total {
            check_duplication(&src, pick);
        }
    }
}

#[test]
fn fixtures_round_trip() {
    for src in fixtures() {
        let m = parse(&src);
        let again = parse(&print_module(&m));
        assert_eq!(dump_module(&m, false), dump_module(&again, false));
        assert_eq!(shape(&analyze(&m)), shape(&analyze(&again)));
    }
}

#[test]
fn symbol_free_programs_are_common() {
    // Guards the conditional check above against being vacuous.
    let n = (0..200u64).filter(|&s| analyze(&parse(&without_symbols(&program(s)))).sum_m == 0).count();
    assert!(n >= 50, "only {n}/200 symbol-free programs");
}
