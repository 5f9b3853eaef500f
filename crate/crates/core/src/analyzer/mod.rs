//! Static estimate of a program's mapping table.
//!
//! The table size is `Σn + Σm`: Σn sums the lengths of the distinct
//! input-value combinations the program distinguishes, Σm the number of
//! output units it spells out literally. Everything here is lexical; loops
//! are not unrolled and nothing is executed.

pub mod combos;
pub mod units;
pub mod values;

use serde::Serialize;
use serde_json::{json, Value};

pub use combos::{dedupe_and_sum_n, enumerate_combinations, Combination, SourceKind};
pub use units::{collect_output_units, sum_output_lengths, OutputUnit, UnitKind};
pub use values::{collect_input_values, Annotations, InputValueToken};

use crate::lang::ast::*;
use crate::lang::dump;

#[derive(Debug, Clone, Serialize)]
pub struct MappingTable {
    /// Distinct combinations, first occurrence kept.
    pub combinations: Vec<Combination>,
    /// How many emitted combinations were exact duplicates.
    pub duplicates: usize,
    pub output_units: Vec<OutputUnit>,
    pub sum_n: u32,
    pub sum_m: u32,
    pub l_plus: u32,
}

pub fn analyze(m: &Module) -> MappingTable {
    analyze_with(m, &collect_input_values(m))
}

pub fn analyze_with(m: &Module, ann: &Annotations) -> MappingTable {
    let all = enumerate_combinations(m, ann);
    let (combinations, sum_n) = dedupe_and_sum_n(&all);
    let output_units = collect_output_units(m);
    let sum_m = output_units.iter().map(|u| u.count).sum();
    MappingTable {
        duplicates: all.len() - combinations.len(),
        combinations,
        output_units,
        sum_n,
        sum_m,
        l_plus: sum_n + sum_m,
    }
}

/// Statements that write to a container or return a value without any
/// literal output units or output-carrying names: the analyser attributes
/// nothing to them, which is worth a look when auditing a score.
pub fn unattributed_outputs(m: &Module, ann: &Annotations) -> Vec<Span> {
    let mut out = Vec::new();
    m.walk_stmts(&mut |s| {
        let candidate = match &s.kind {
            StmtKind::Assign { targets, .. } => targets.iter().any(|t| matches!(t.kind, ExprKind::Subscript { .. })),
            StmtKind::Return(Some(_)) => true,
            _ => false,
        };
        if !candidate {
            return;
        }
        let mut units = Vec::new();
        let mut carries = false;
        for e in s.own_exprs() {
            units::lexical_units(e, &mut units);
            e.walk(&mut |x| carries |= ann.carries_output(x));
        }
        if units.is_empty() && !carries {
            out.push(s.span);
        }
    });
    out
}

/// Full analysis trace: the AST, per-node annotations, both sums and the
/// reasons behind them.
pub fn debug_dump(m: &Module) -> Value {
    let ann = collect_input_values(m);
    let table = analyze_with(m, &ann);
    let mut nodes: Vec<Value> = Vec::new();
    m.walk_stmts(&mut |s| {
        for e in s.own_exprs() {
            e.walk(&mut |x| {
                if let Some(a) = ann.get(x.id) {
                    if !a.own.is_empty() || a.carries_output || a.dict_like {
                        nodes.push(json!({
                            "node": x.id.0,
                            "span": [x.span.line, x.span.col],
                            "source": crate::lang::printer::expr(x),
                            "own": a.own,
                            "carries_output": a.carries_output,
                            "dict_like": a.dict_like,
                        }));
                    }
                }
            });
        }
    });
    let vars: Vec<Value> = ann.variables.iter().map(|(n, t)| json!({"name": n, "tokens": t})).collect();
    let unattributed: Vec<Value> =
        unattributed_outputs(m, &ann).iter().map(|s| json!([s.line, s.col])).collect();
    json!({
        "ast": dump::dump_module(m, true),
        "annotations": nodes,
        "variables": vars,
        "combinations": table.combinations,
        "duplicates": table.duplicates,
        "output_units": table.output_units,
        "unattributed_outputs": unattributed,
        "sum_n": table.sum_n,
        "sum_m": table.sum_m,
        "l_plus": table.l_plus,
    })
}
