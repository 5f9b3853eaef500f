//! Lexical counting of output units (the Σm side of the mapping table).

use serde::Serialize;

use crate::lang::ast::{Expr, ExprKind, Module, NodeId, Span, UnaryOp};
use crate::model::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    /// Grid symbols inside a string literal; counts one per symbol.
    Symbols,
    /// A number on the right side of a dict.
    Number,
    /// An `(int, int)` pair on the right side of a dict.
    Coordinate,
    /// A boolean on the right side of a dict.
    Flag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputUnit {
    pub node: NodeId,
    pub span: Span,
    pub kind: UnitKind,
    pub count: u32,
}

/// Number of grid symbols in a literal made only of symbols and whitespace.
pub fn symbol_count(s: &str) -> u32 {
    let mut n = 0;
    for c in s.chars() {
        if Symbol::from_char(c).is_some() {
            n += 1;
        } else if !c.is_whitespace() {
            return 0;
        }
    }
    n
}

fn is_int(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) => true,
        ExprKind::Unary { op: UnaryOp::Neg, operand } => matches!(operand.kind, ExprKind::Int(_)),
        _ => false,
    }
}

/// Atomic units of a dict's right-hand side, recursing through containers.
pub(crate) fn rhs_units(e: &Expr, out: &mut Vec<OutputUnit>) {
    let unit = |kind, count| OutputUnit { node: e.id, span: e.span, kind, count };
    match &e.kind {
        ExprKind::Str(s) => {
            let n = symbol_count(s);
            if n > 0 {
                out.push(unit(UnitKind::Symbols, n));
            }
        }
        ExprKind::Bool(_) => out.push(unit(UnitKind::Flag, 1)),
        _ if is_int(e) => out.push(unit(UnitKind::Number, 1)),
        ExprKind::Tuple(items) | ExprKind::List(items) if items.len() == 2 && items.iter().all(is_int) => {
            out.push(unit(UnitKind::Coordinate, 1))
        }
        ExprKind::Tuple(items) | ExprKind::List(items) => items.iter().for_each(|i| rhs_units(i, out)),
        ExprKind::Dict(entries) => {
            for d in entries {
                rhs_units(&d.key, out);
                rhs_units(&d.value, out);
            }
        }
        // Computed values inside a table contribute only their literals.
        _ => lexical_units(e, out),
    }
}

/// Symbol literals anywhere under `e`; dict right sides use the richer rule.
pub(crate) fn lexical_units(e: &Expr, out: &mut Vec<OutputUnit>) {
    match &e.kind {
        ExprKind::Str(s) => {
            let n = symbol_count(s);
            if n > 0 {
                out.push(OutputUnit { node: e.id, span: e.span, kind: UnitKind::Symbols, count: n });
            }
        }
        ExprKind::Dict(entries) => {
            for d in entries {
                lexical_units(&d.key, out);
                rhs_units(&d.value, out);
            }
        }
        _ => {
            for c in e.children() {
                lexical_units(c, out);
            }
        }
    }
}

/// Every output unit in the program, each lexical occurrence counted once.
pub fn collect_output_units(m: &Module) -> Vec<OutputUnit> {
    let mut out = Vec::new();
    m.walk_stmts(&mut |s| {
        for e in s.own_exprs() {
            lexical_units(e, &mut out);
        }
    });
    out
}

pub fn sum_output_lengths(m: &Module) -> u32 {
    collect_output_units(m).iter().map(|u| u.count).sum()
}
