use rulegen_core::interp::{count_errors, entry_point, run_program, EntryPoint, ExecBudget, FailureKind};
use rulegen_core::lang::parse_program;
use rulegen_core::model::{InputString, SettingTag};
use rulegen_core::reference::{sufficient_program, zero_program, BRANCHING_FRAGMENT, TABLE_FRAGMENT};
use rulegen_core::taskgen::{build_dataset, sample_function, SettingSpec};

fn module(src: &str) -> rulegen_core::lang::Module {
    let out = parse_program(src);
    out.module.unwrap_or_else(|| panic!("parse failed: {:?}", out.diagnostics))
}

fn failure(src: &str) -> FailureKind {
    let m = module(src);
    let r = run_program(&m, &"ACEG".parse().unwrap(), &ExecBudget::default());
    r.outcome.expect_err("expected a failure").kind
}

fn grid_rows(src: &str, input: &str) -> Vec<String> {
    let m = module(src);
    let r = run_program(&m, &input.parse().unwrap(), &ExecBudget::default());
    r.outcome.unwrap_or_else(|e| panic!("{e}")).rows().to_vec()
}

#[test]
fn reference_programs_are_correct_everywhere() {
    for tag in SettingTag::ALL {
        for idx in 0..3 {
            let f = sample_function(&SettingSpec::new(tag, 99), idx);
            let d = build_dataset(&f, "t");
            let good = module(&sufficient_program(&f));
            let memo = module(&zero_program(d.samples()));
            assert_eq!(count_errors(&good, &d, &ExecBudget::default()).errors, 0, "{tag} #{idx}");
            assert_eq!(count_errors(&memo, &d, &ExecBudget::default()).errors, 0, "{tag} #{idx}");
        }
    }
}

#[test]
fn fragments_run() {
    assert_eq!(grid_rows(BRANCHING_FRAGMENT, "ACEG"), ["*..*", "**..", "..**", "*.*."]);
    assert_eq!(grid_rows(TABLE_FRAGMENT, "BDFH"), ["....", ".*..", "..**", ".*.*"]);
}

#[test]
fn return_shapes() {
    let nested = "def generate(s):\n    return [['*' if (r + c) % 2 else '.' for c in range(4)] for r in range(4)]\n";
    assert_eq!(grid_rows(nested, "ACEG"), [".*.*", "*.*.", ".*.*", "*.*."]);
    let text = "def generate(s):\n    return '....\\n****\\n....\\n****'\n";
    assert_eq!(grid_rows(text, "ACEG"), ["....", "****", "....", "****"]);
    assert_eq!(failure("def generate(s):\n    return ['....'] * 3\n"), FailureKind::BadReturnShape);
    assert_eq!(failure("def generate(s):\n    return ['..x.'] * 4\n"), FailureKind::BadReturnShape);
    assert_eq!(failure("def generate(s):\n    return None\n"), FailureKind::BadReturnShape);
}

#[test]
fn entry_point_resolution() {
    assert_eq!(entry_point(&module("def helper(x):\n    return x\ndef generate(s):\n    return s\n")),
        Some(EntryPoint::Function("generate".into())));
    assert_eq!(entry_point(&module("def solve(inp):\n    return inp\n")), Some(EntryPoint::Function("solve".into())));
    assert_eq!(entry_point(&module("def a(x):\n    pass\ndef b(y):\n    pass\n")), None);
    assert_eq!(entry_point(&module("result = ['....'] * 4\n")), Some(EntryPoint::Script));
    let script = "rows = []\nfor ch in s:\n    rows.append('****' if ch in 'ACEG' else '....')\nresult = rows\n";
    assert_eq!(grid_rows(script, "ADEH"), ["****", "....", "****", "...."]);
    assert_eq!(failure("x = 1\n"), FailureKind::NoEntryPoint);
}

#[test]
fn main_guard_is_skipped() {
    let src = "def generate(s):\n    return ['....'] * 4\nif __name__ == '__main__':\n    print(generate('ACEG'))\n    x = undefined_name\n";
    assert_eq!(grid_rows(src, "ACEG"), ["....", "....", "....", "...."]);
}

#[test]
fn classified_failures() {
    assert_eq!(failure("def generate(s):\n    while True:\n        pass\n"), FailureKind::StepBudget);
    assert_eq!(failure("def generate(s):\n    return generate(s)\n"), FailureKind::Recursion);
    assert_eq!(failure("def generate(s):\n    x = [0] * 100000\n    return x\n"), FailureKind::CollectionLimit);
    assert_eq!(failure("def generate(s):\n    x = 'ab'\n    while True:\n        x = x + x\n"), FailureKind::CollectionLimit);
    assert_eq!(failure("def generate(s):\n    return foo\n"), FailureKind::UndefinedName);
    assert_eq!(failure("def generate(s):\n    return s[10]\n"), FailureKind::Index);
    assert_eq!(failure("def generate(s):\n    return {'A': 1}['B']\n"), FailureKind::Key);
    assert_eq!(failure("def generate(s):\n    return 1 // 0\n"), FailureKind::ZeroDivision);
    assert_eq!(failure("def generate(s):\n    return 'a' - 1\n"), FailureKind::Type);
    assert_eq!(failure("def generate(s):\n    x = 1\n    while True:\n        x = x * 1000\n"), FailureKind::Overflow);
}

#[test]
fn budget_is_respected() {
    let m = module("def generate(s):\n    i = 0\n    while True:\n        i += 1\n");
    for max_steps in [10, 100, 1000, 50_000] {
        let budget = ExecBudget { max_steps, ..ExecBudget::default() };
        let r = run_program(&m, &InputString::from_index(0), &budget);
        assert_eq!(r.outcome.unwrap_err().kind, FailureKind::StepBudget);
        assert!(r.steps <= max_steps + 1, "{} > {}", r.steps, max_steps);
    }
}

#[test]
fn runtime_failure_costs_one_error_per_input() {
    let f = sample_function(&SettingSpec::new(SettingTag::Horizontal, 1), 0);
    let d = build_dataset(&f, "t");
    let good = sufficient_program(&f);
    // Inputs starting with B crash; everything else is right.
    let src = good.replace("def generate(s):\n", "def generate(s):\n    if s[0] == 'B':\n        return missing\n");
    let report = count_errors(&module(&src), &d, &ExecBudget::default());
    assert_eq!(report.errors, 8);
    assert_eq!(report.outcomes.len(), 16);
}

#[test]
fn python_semantics_sample() {
    let src = r#"
def generate(s):
    assert_vals = []
    assert_vals.append(-7 // 2 == -4)
    assert_vals.append(-7 % 3 == 2)
    assert_vals.append('ACEG'[::-1] == 'GECA')
    assert_vals.append(sorted([3, 1, 2]) == [1, 2, 3])
    assert_vals.append(dict(zip('AB', [1, 2])) == {'A': 1, 'B': 2})
    assert_vals.append(list(enumerate('xy', 1)) == [(1, 'x'), (2, 'y')])
    assert_vals.append('*'.join(['.', '.']) == '.*.')
    assert_vals.append(max([1, 5, 2]) == 5 and min(4, 3) == 3)
    assert_vals.append(True + True == 2)
    assert_vals.append((1, 2) < (1, 3))
    assert_vals.append('C' in {'C': 1} and 'Z' not in 'ACEG')
    a, b = 1, 2
    a, b = b, a
    assert_vals.append(a == 2 and b == 1)
    rows = ['*' * 4 if ok else '.' * 4 for ok in assert_vals]
    out = [''.join(rows[i][:1] for i in range(k, min(k + 4, len(rows)))) for k in range(0, 12, 4)]
    return out + ['****']
"#;
    assert_eq!(grid_rows(src, "ACEG"), ["****", "****", "****", "****"]);
}
