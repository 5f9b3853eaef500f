//! Enumeration of input-value combinations (the Σn side of the mapping table).
//!
//! A combination is emitted from three places:
//! * each innermost entry of a dict literal whose value holds output units;
//! * each physical line that involves output values, joined with the
//!   conditional path it sits on;
//! * each conditional path whose own statements involve output values.

use std::collections::BTreeMap;

use serde::Serialize;

use super::units::{lexical_units, symbol_count};
use super::values::{hypothetical, union, with, Alternatives, Annotations, InputValueToken, TokenSet};
use crate::lang::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    DictEntry,
    Line,
    Path,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Combination {
    /// Sorted, without repeats.
    pub tokens: Vec<InputValueToken>,
    pub source: SourceKind,
    pub span: Span,
}

impl Combination {
    fn new(tokens: &TokenSet, source: SourceKind, span: Span) -> Self {
        Combination { tokens: tokens.iter().copied().collect(), source, span }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

struct Enumerator<'a> {
    ann: &'a Annotations,
    out: Vec<Combination>,
}

/// Every combination in source order, duplicates included.
pub fn enumerate_combinations(m: &Module, ann: &Annotations) -> Vec<Combination> {
    let mut e = Enumerator { ann, out: Vec::new() };
    e.block(&m.body, &TokenSet::new());
    e.out
}

/// Drops exact duplicates (same token set); returns the survivors and Σn.
pub fn dedupe_and_sum_n(combos: &[Combination]) -> (Vec<Combination>, u32) {
    let mut seen = std::collections::HashSet::new();
    let mut kept = Vec::new();
    for c in combos {
        if seen.insert(c.tokens.clone()) {
            kept.push(c.clone());
        }
    }
    let n = kept.iter().map(|c| c.tokens.len() as u32).sum();
    (kept, n)
}

impl Enumerator<'_> {
    fn emit(&mut self, tokens: &TokenSet, source: SourceKind, span: Span) {
        if !tokens.is_empty() {
            self.out.push(Combination::new(tokens, source, span));
        }
    }

    fn block(&mut self, body: &[Stmt], path: &TokenSet) {
        for s in body {
            self.stmt(s, path);
        }
    }

    fn stmt(&mut self, s: &Stmt, path: &TokenSet) {
        for e in s.own_exprs() {
            self.dicts(e, path);
        }
        self.lines(s, path);
        match &s.kind {
            StmtKind::FunctionDef { body, .. } => self.block(body, &TokenSet::new()),
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => self.block(body, path),
            StmtKind::If(chain) => {
                let mut tested = TokenSet::new();
                for b in &chain.branches {
                    let own = self.ann.involvement(&b.test);
                    tested.extend(own.iter().copied());
                    let p = with(path, &own);
                    if direct_outputs(self.ann, &b.body) {
                        self.emit(&p, SourceKind::Path, b.span);
                    }
                    self.block(&b.body, &p);
                }
                if let Some(e) = &chain.orelse {
                    let p = with(path, &hypothetical(&tested));
                    if direct_outputs(self.ann, &e.body) {
                        self.emit(&p, SourceKind::Path, e.span);
                    }
                    self.block(&e.body, &p);
                }
            }
            _ => {}
        }
    }

    /// Innermost dict entries; outer keys become context for nested tables.
    fn dicts(&mut self, e: &Expr, path: &TokenSet) {
        if let ExprKind::Dict(entries) = &e.kind {
            self.dict_entries(entries, path);
            return;
        }
        for c in e.children() {
            self.dicts(c, path);
        }
    }

    fn dict_entries(&mut self, entries: &[DictEntry], ctx: &TokenSet) {
        for d in entries {
            let key = with(ctx, &self.ann.involvement(&d.key));
            if let ExprKind::Dict(inner) = &d.value.kind {
                self.dict_entries(inner, &key);
                continue;
            }
            // Tables nested deeper (inside lists or calls) stand on their own.
            for c in d.value.children() {
                self.dicts(c, ctx);
            }
            let mut units = Vec::new();
            super::units::rhs_units(&d.value, &mut units);
            if units.is_empty() && !self.ann.carries_output(&d.value) {
                continue;
            }
            let tokens = with(&key, &self.ann.involvement(&d.value));
            self.emit(&tokens, SourceKind::DictEntry, d.key.span);
        }
    }

    /// Groups the statement's expressions by physical line.
    fn lines(&mut self, s: &Stmt, path: &TokenSet) {
        let mut by_line: BTreeMap<u32, Vec<&Expr>> = BTreeMap::new();
        for e in s.own_exprs() {
            collect_roots(e, None, &mut by_line);
        }
        for (line, roots) in by_line {
            let on_line = |x: &Expr| x.span.line == line && !matches!(x.kind, ExprKind::Dict(_));
            let gated = roots.iter().any(|r| line_outputs(self.ann, r, line));
            if !gated {
                continue;
            }
            let mut alts: Alternatives = vec![TokenSet::new()];
            for r in &roots {
                let ra = self.ann.alternatives_filtered(r, &|c: &Expr| on_line(c));
                let mut next = Vec::new();
                for a in &alts {
                    for b in &ra {
                        next.push(with(a, b));
                    }
                }
                next.sort();
                next.dedup();
                alts = if next.len() > super::values::MAX_ALTERNATIVES { vec![union(&next)] } else { next };
            }
            let span = roots[0].span;
            for a in alts {
                self.emit(&with(path, &a), SourceKind::Line, span);
            }
        }
    }
}

/// Roots are expressions whose parent starts on another line.
fn collect_roots<'a>(e: &'a Expr, parent_line: Option<u32>, out: &mut BTreeMap<u32, Vec<&'a Expr>>) {
    if parent_line != Some(e.span.line) {
        out.entry(e.span.line).or_default().push(e);
    }
    if matches!(e.kind, ExprKind::Dict(_)) {
        return;
    }
    for c in e.children() {
        collect_roots(c, Some(e.span.line), out);
    }
}

/// Output units or output-carrying names on `line`, outside dict literals.
fn line_outputs(ann: &Annotations, e: &Expr, line: u32) -> bool {
    if e.span.line != line {
        return false;
    }
    match &e.kind {
        ExprKind::Dict(_) => false,
        ExprKind::Str(s) => symbol_count(s) > 0,
        ExprKind::Name(_) => ann.carries_output(e),
        _ => e.children().into_iter().any(|c| line_outputs(ann, c, line)),
    }
}

fn expr_outputs(ann: &Annotations, e: &Expr) -> bool {
    let mut units = Vec::new();
    lexical_units(e, &mut units);
    if !units.is_empty() {
        return true;
    }
    let mut carries = false;
    e.walk(&mut |x| carries |= matches!(x.kind, ExprKind::Name(_)) && ann.carries_output(x));
    carries
}

/// Whether the branch's own statements (through loops, but not nested
/// conditionals or definitions) involve output values.
fn direct_outputs(ann: &Annotations, body: &[Stmt]) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::If(_) | StmtKind::FunctionDef { .. } => false,
        StmtKind::For { body, .. } | StmtKind::While { body, .. } => {
            s.own_exprs().into_iter().any(|e| expr_outputs(ann, e)) || direct_outputs(ann, body)
        }
        _ => s.own_exprs().into_iter().any(|e| expr_outputs(ann, e)),
    })
}
