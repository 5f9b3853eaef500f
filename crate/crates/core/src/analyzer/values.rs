//! Propagation of input values (letters) through the program.
//!
//! Every expression node gets an annotation of the input values it
//! contributes *itself* (a letter literal, a variable carrying letters, the
//! return of a local helper). Transitive involvement is recomputed from the
//! tree on demand so that callers can restrict it, e.g. to one source line.
//!
//! Variables are tracked per scope and flow-insensitively: a name carries the
//! union of everything bound to it anywhere in its scope. That keeps the
//! result independent of statement order and of repeated statements.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use super::units::{lexical_units, symbol_count};
use crate::lang::ast::*;
use crate::model::Letter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InputValueToken {
    Literal { letter: char },
    /// Stand-in value of an `else` branch for a bit whose matched conditions
    /// test both letters (so no single complement exists).
    Hypothetical { bit: usize },
}

impl InputValueToken {
    pub fn literal(l: Letter) -> Self {
        InputValueToken::Literal { letter: l.as_char() }
    }

    /// One-based bit this token stands for.
    pub fn bit(&self) -> usize {
        match self {
            InputValueToken::Literal { letter } => Letter::from_char(*letter).unwrap().bit() + 1,
            InputValueToken::Hypothetical { bit } => *bit,
        }
    }
}

pub type TokenSet = BTreeSet<InputValueToken>;

/// Involvement as a list of alternatives; conditional expressions fork.
pub type Alternatives = Vec<TokenSet>;

pub const MAX_ALTERNATIVES: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NodeAnnotation {
    /// Input values this node contributes by itself.
    pub own: TokenSet,
    /// The node refers to a value that carries output units.
    pub carries_output: bool,
    /// The node evaluates to a mapping table (dict).
    pub dict_like: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Annotations {
    pub nodes: HashMap<NodeId, NodeAnnotation>,
    /// Variables holding letters after the whole program, for the debug dump.
    pub variables: Vec<(String, TokenSet)>,
}

impl Annotations {
    pub fn get(&self, id: NodeId) -> Option<&NodeAnnotation> {
        self.nodes.get(&id)
    }

    fn own(&self, e: &Expr) -> TokenSet {
        self.nodes.get(&e.id).map(|a| a.own.clone()).unwrap_or_default()
    }

    pub fn is_dict_like(&self, e: &Expr) -> bool {
        matches!(e.kind, ExprKind::Dict(_)) || self.nodes.get(&e.id).is_some_and(|a| a.dict_like)
    }

    pub fn carries_output(&self, e: &Expr) -> bool {
        self.nodes.get(&e.id).is_some_and(|a| a.carries_output)
    }

    /// Alternatives of `e`, descending only into children accepted by `keep`.
    /// Dict literal interiors never contribute: each entry is its own mapping.
    pub fn alternatives_filtered(&self, e: &Expr, keep: &dyn Fn(&Expr) -> bool) -> Alternatives {
        let own = self.own(e);
        let combine = |children: Vec<&Expr>| -> Alternatives {
            let mut acc: Alternatives = vec![own.clone()];
            for c in children.into_iter().filter(|c| keep(c)) {
                acc = product(&acc, &self.alternatives_filtered(c, keep));
            }
            acc
        };
        match &e.kind {
            ExprKind::Dict(_) => vec![own],
            ExprKind::Subscript { value, index } if self.is_dict_like(value) => combine(vec![index]),
            ExprKind::Method { receiver, method, args } if self.is_dict_like(receiver) && method == "get" => {
                combine(args.iter().collect())
            }
            ExprKind::IfExp { test, body, orelse } => {
                let cond = if keep(test) { union(&self.alternatives_filtered(test, keep)) } else { TokenSet::new() };
                let hyp = hypothetical(&cond);
                let mut out = Vec::new();
                let body_alts = if keep(body) { self.alternatives_filtered(body, keep) } else { vec![TokenSet::new()] };
                let else_alts =
                    if keep(orelse) { self.alternatives_filtered(orelse, keep) } else { vec![TokenSet::new()] };
                for a in body_alts {
                    out.push(with(&with(&own, &a), &cond));
                }
                for a in else_alts {
                    out.push(with(&with(&own, &a), &hyp));
                }
                cap(out)
            }
            _ => combine(e.children()),
        }
    }

    pub fn alternatives(&self, e: &Expr) -> Alternatives {
        self.alternatives_filtered(e, &|_| true)
    }

    pub fn involvement(&self, e: &Expr) -> TokenSet {
        union(&self.alternatives(e))
    }
}

pub(crate) fn with(a: &TokenSet, b: &TokenSet) -> TokenSet {
    a.union(b).copied().collect()
}

pub(crate) fn union(alts: &Alternatives) -> TokenSet {
    alts.iter().flatten().copied().collect()
}

fn cap(mut alts: Alternatives) -> Alternatives {
    alts.sort();
    alts.dedup();
    if alts.len() > MAX_ALTERNATIVES {
        vec![union(&alts)]
    } else {
        alts
    }
}

fn product(a: &Alternatives, b: &Alternatives) -> Alternatives {
    if b.len() == 1 {
        return a.iter().map(|x| with(x, &b[0])).collect();
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(with(x, y));
        }
    }
    cap(out)
}

/// Tokens standing for "none of the tested values": for each bit touched by
/// the conditions, the complement letter when exactly one letter was tested,
/// otherwise an unresolved hypothetical value.
pub fn hypothetical(cond: &TokenSet) -> TokenSet {
    let mut by_bit: HashMap<usize, Vec<InputValueToken>> = HashMap::new();
    for t in cond {
        by_bit.entry(t.bit()).or_default().push(*t);
    }
    by_bit
        .into_iter()
        .map(|(bit, toks)| match toks.as_slice() {
            [InputValueToken::Literal { letter }] => {
                InputValueToken::literal(Letter::from_char(*letter).unwrap().complement())
            }
            _ => InputValueToken::Hypothetical { bit },
        })
        .collect()
}

/// Letters named by a string literal made only of input letters.
pub fn letters_in(s: &str) -> TokenSet {
    if s.is_empty() {
        return TokenSet::new();
    }
    let mut out = TokenSet::new();
    for c in s.chars() {
        match Letter::from_char(c) {
            Some(l) => {
                out.insert(InputValueToken::literal(l));
            }
            None => return TokenSet::new(),
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
struct VarInfo {
    tokens: TokenSet,
    carries_output: bool,
    dict_like: bool,
}

type Env = HashMap<String, VarInfo>;

/// Token sets only grow, so this is far more than convergence needs.
const MAX_PASSES: usize = 64;

struct Collector<'m> {
    ann: Annotations,
    /// Return involvement of program-local helpers.
    helpers: HashMap<String, VarInfo>,
    functions: HashMap<String, &'m Stmt>,
    returns: Vec<VarInfo>,
}

fn merge(into: &mut VarInfo, other: &VarInfo) {
    into.tokens.extend(other.tokens.iter().copied());
    into.carries_output |= other.carries_output;
    into.dict_like |= other.dict_like;
}

fn has_output_literal(e: &Expr) -> bool {
    let mut units = Vec::new();
    lexical_units(e, &mut units);
    !units.is_empty()
}

impl<'m> Collector<'m> {
    fn annotate(&mut self, id: NodeId, a: NodeAnnotation) {
        self.ann.nodes.insert(id, a);
    }

    /// Annotates `e` and its subtree; returns the value summary of `e`.
    fn expr(&mut self, e: &Expr, env: &Env) -> VarInfo {
        let mut own = TokenSet::new();
        let mut carries = false;
        let mut dict_like = false;
        match &e.kind {
            ExprKind::Str(s) => {
                own = letters_in(s);
                carries = symbol_count(s) > 0;
            }
            ExprKind::Name(n) => {
                if let Some(v) = env.get(n) {
                    own = v.tokens.clone();
                    carries = v.carries_output;
                    dict_like = v.dict_like;
                }
            }
            ExprKind::Dict(_) => dict_like = true,
            ExprKind::Call { func, .. } => {
                if let ExprKind::Name(f) = &func.kind {
                    if let Some(h) = self.helpers.get(f) {
                        own = h.tokens.clone();
                        carries = h.carries_output;
                        dict_like = h.dict_like;
                    }
                    dict_like |= f == "dict";
                }
            }
            ExprKind::Method { receiver, method, .. } if method == "copy" => {
                // Propagated below via children; copy keeps the container kind.
                let _ = receiver;
            }
            _ => {}
        }
        // Children first, with comprehension targets bound in a child scope.
        let mut child_info = VarInfo::default();
        if let ExprKind::ListComp { elt, gen } = &e.kind {
            let iter = self.expr(&gen.iter, env);
            let mut inner = env.clone();
            self.bind_target(&gen.target, &VarInfo { dict_like: false, ..iter.clone() }, &mut inner);
            merge(&mut child_info, &iter);
            if let Some(c) = &gen.cond {
                let ci = self.expr(c, &inner);
                merge(&mut child_info, &ci);
            }
            let ei = self.expr(elt, &inner);
            merge(&mut child_info, &ei);
        } else {
            for c in e.children() {
                let ci = self.expr(c, env);
                merge(&mut child_info, &ci);
            }
        }
        if let ExprKind::Method { receiver, method, .. } = &e.kind {
            if method == "copy" {
                dict_like |= self.ann.is_dict_like(receiver);
            }
        }
        if let ExprKind::Subscript { value, .. } = &e.kind {
            // Indexing into a nested table yields a table.
            if let ExprKind::Dict(entries) = &value.kind {
                dict_like |= entries.iter().any(|d| matches!(d.value.kind, ExprKind::Dict(_)));
            }
        }
        self.annotate(e.id, NodeAnnotation { own: own.clone(), carries_output: carries, dict_like });
        let tokens = self.ann.involvement(e);
        VarInfo {
            tokens,
            carries_output: carries || child_info.carries_output || has_output_literal(e),
            dict_like,
        }
    }

    fn bind_target(&mut self, target: &Expr, value: &VarInfo, env: &mut Env) {
        match &target.kind {
            ExprKind::Name(n) => {
                // Weak update: a name holds everything ever bound to it.
                merge(env.entry(n.clone()).or_default(), value);
                self.annotate(target.id, NodeAnnotation::default());
            }
            ExprKind::Tuple(items) | ExprKind::List(items) => {
                for i in items {
                    self.bind_target(i, &VarInfo { dict_like: false, ..value.clone() }, env);
                }
            }
            ExprKind::Subscript { value: base, index } => {
                self.expr(index, env);
                // `x[i] = v` folds v into x.
                let mut root = &**base;
                while let ExprKind::Subscript { value, .. } = &root.kind {
                    root = value;
                }
                if let ExprKind::Name(n) = &root.kind {
                    let entry = env.entry(n.clone()).or_default();
                    entry.tokens.extend(value.tokens.iter().copied());
                    entry.carries_output |= value.carries_output;
                }
                self.expr(base, env);
            }
            _ => {
                self.expr(target, env);
            }
        }
    }

    fn assign_pairwise(&mut self, target: &Expr, value: &Expr, info: &VarInfo, env: &mut Env) {
        match (&target.kind, &value.kind) {
            (ExprKind::Tuple(ts), ExprKind::Tuple(vs)) | (ExprKind::Tuple(ts), ExprKind::List(vs))
                if ts.len() == vs.len() =>
            {
                for (t, v) in ts.iter().zip(vs) {
                    let vi = VarInfo {
                        tokens: self.ann.involvement(v),
                        carries_output: has_output_literal(v) || self.ann.carries_output(v),
                        dict_like: self.ann.is_dict_like(v),
                    };
                    self.assign_pairwise(t, v, &vi, env);
                }
            }
            _ => self.bind_target(target, info, env),
        }
    }

    /// Re-walks a scope until no variable gains anything, so every use sees
    /// every binding regardless of order, loops or repetition.
    fn fixpoint(&mut self, body: &[Stmt], env: &mut Env) {
        for _ in 0..MAX_PASSES {
            let before = env.clone();
            self.returns.clear();
            self.block(body, env);
            if *env == before {
                break;
            }
        }
    }

    fn block(&mut self, body: &[Stmt], env: &mut Env) {
        for s in body {
            self.stmt(s, env);
        }
    }

    fn stmt(&mut self, s: &Stmt, env: &mut Env) {
        match &s.kind {
            StmtKind::FunctionDef { params, returns, .. } => {
                for p in params {
                    if let Some(a) = &p.annotation {
                        self.expr(a, env);
                    }
                    if let Some(d) = &p.default {
                        self.expr(d, env);
                    }
                }
                if let Some(r) = returns {
                    self.expr(r, env);
                }
            }
            StmtKind::Assign { targets, value } => {
                let info = self.expr(value, env);
                for t in targets {
                    self.assign_pairwise(t, value, &info, env);
                }
            }
            StmtKind::AugAssign { target, value, .. } => {
                let info = self.expr(value, env);
                let cur = self.expr(target, env);
                let mut combined = cur;
                merge(&mut combined, &info);
                combined.dict_like = false;
                self.bind_target(target, &combined, env);
            }
            StmtKind::Expr(e) => {
                let info = self.expr(e, env);
                // Mutating methods fold their arguments into the receiver.
                if let ExprKind::Method { receiver, method, .. } = &e.kind {
                    if matches!(method.as_str(), "append" | "extend" | "insert" | "update") {
                        let mut root = &**receiver;
                        while let ExprKind::Subscript { value, .. } = &root.kind {
                            root = value;
                        }
                        if let ExprKind::Name(n) = &root.kind {
                            let entry = env.entry(n.clone()).or_default();
                            entry.tokens.extend(info.tokens.iter().copied());
                            entry.carries_output |= info.carries_output;
                        }
                    }
                }
            }
            StmtKind::Return(v) => {
                if let Some(v) = v {
                    let info = self.expr(v, env);
                    self.returns.push(info);
                }
            }
            StmtKind::If(chain) => {
                for b in &chain.branches {
                    self.expr(&b.test, env);
                    self.block(&b.body, env);
                }
                if let Some(e) = &chain.orelse {
                    self.block(&e.body, env);
                }
            }
            StmtKind::For { target, iter, body } => {
                let info = self.expr(iter, env);
                self.bind_target(target, &VarInfo { dict_like: false, ..info }, env);
                self.block(body, env);
            }
            StmtKind::While { test, body } => {
                self.expr(test, env);
                self.block(body, env);
            }
            StmtKind::Pass | StmtKind::Break | StmtKind::Continue => {}
        }
    }

    /// Analyses a function body in a scope layered over the globals.
    fn function(&mut self, def: &Stmt, globals: &Env) -> VarInfo {
        let StmtKind::FunctionDef { params, body, .. } = &def.kind else { unreachable!() };
        let mut env = globals.clone();
        for p in params {
            env.remove(&p.name);
        }
        let saved = std::mem::take(&mut self.returns);
        self.fixpoint(body, &mut env);
        let returns = std::mem::replace(&mut self.returns, saved);
        let mut out = VarInfo::default();
        for r in &returns {
            merge(&mut out, r);
        }
        // Nested helpers see the enclosing scope.
        for s in body {
            if let StmtKind::FunctionDef { .. } = s.kind {
                self.function(s, &env);
            }
        }
        out
    }
}

fn collect_defs<'m>(stmts: &'m [Stmt], out: &mut HashMap<String, &'m Stmt>) {
    for s in stmts {
        if let StmtKind::FunctionDef { name, body, .. } = &s.kind {
            out.insert(name.clone(), s);
            collect_defs(body, out);
        }
    }
}

/// Annotates every expression with the input values it involves.
pub fn collect_input_values(m: &Module) -> Annotations {
    let mut functions = HashMap::new();
    collect_defs(&m.body, &mut functions);
    let mut c = Collector { ann: Annotations::default(), helpers: HashMap::new(), functions, returns: Vec::new() };

    // Globals first, since function bodies read them at call time.
    let mut globals = Env::new();
    c.fixpoint(&m.body, &mut globals);

    // Helper return summaries: one level of inlining, so compute each helper
    // once against the globals with no helper knowledge, then once more.
    let names: Vec<String> = {
        let mut v: Vec<String> = c.functions.keys().cloned().collect();
        v.sort();
        v
    };
    for _ in 0..2 {
        let mut summaries = HashMap::new();
        for n in &names {
            let def = c.functions[n];
            summaries.insert(n.clone(), c.function(def, &globals));
        }
        c.helpers = summaries;
    }
    // Final pass with helper summaries in place.
    let mut globals2 = Env::new();
    c.fixpoint(&m.body, &mut globals2);
    // Nested definitions are reached through their enclosing function, in
    // its scope, so each body is annotated exactly once per pass.
    for s in &m.body {
        if let StmtKind::FunctionDef { .. } = s.kind {
            c.function(s, &globals2);
        }
    }

    let mut vars: Vec<(String, TokenSet)> =
        globals2.into_iter().filter(|(_, v)| !v.tokens.is_empty()).map(|(k, v)| (k, v.tokens)).collect();
    vars.sort();
    c.ann.variables = vars;
    c.ann
}

/// Names of helper functions that are called as such; used by the dump.
pub fn local_helpers(m: &Module) -> HashSet<String> {
    let mut defs = HashMap::new();
    collect_defs(&m.body, &mut defs);
    defs.into_keys().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn lit(c: char) -> InputValueToken {
        InputValueToken::Literal { letter: c }
    }

    fn find_name<'a>(m: &'a Module, name: &str, nth: usize) -> &'a Expr {
        let mut found = Vec::new();
        m.walk_stmts(&mut |s| {
            for e in s.own_exprs() {
                e.walk(&mut |x| {
                    if matches!(&x.kind, ExprKind::Name(n) if n == name) {
                        found.push(x);
                    }
                });
            }
        });
        found[nth]
    }

    #[test]
    fn assignment_propagates_letters() {
        let m = parse_program("a = 'A'\nb = a\nc = b\n").module.unwrap();
        let ann = collect_input_values(&m);
        let b_use = find_name(&m, "b", 1);
        assert_eq!(ann.involvement(b_use), [lit('A')].into_iter().collect());
        assert!(ann.variables.iter().any(|(n, t)| n == "c" && t.contains(&lit('A'))));
    }

    #[test]
    fn input_subscript_carries_nothing() {
        let m = parse_program("def generate(s):\n    x = s[0]\n    return x\n").module.unwrap();
        let ann = collect_input_values(&m);
        let StmtKind::FunctionDef { body, .. } = &m.body[0].kind else { panic!() };
        let StmtKind::Assign { value, .. } = &body[0].kind else { panic!() };
        assert!(ann.involvement(value).is_empty());
    }

    #[test]
    fn dict_lookup_uses_only_the_key_expression() {
        let src = "table = {'AC': '....', 'AD': '****'}\ndef generate(s):\n    key = s[0] + s[1]\n    return table[key]\n";
        let m = parse_program(src).module.unwrap();
        let ann = collect_input_values(&m);
        let StmtKind::FunctionDef { body, .. } = &m.body[1].kind else { panic!() };
        let StmtKind::Return(Some(ret)) = &body[1].kind else { panic!() };
        assert!(ann.involvement(ret).is_empty());
        assert!(ann.carries_output(find_name(&m, "table", 1)));
    }

    #[test]
    fn conditional_expression_forks() {
        let m = parse_program("r = '****' if s[0] == 'B' else '....'\n").module.unwrap();
        let ann = collect_input_values(&m);
        let StmtKind::Assign { value, .. } = &m.body[0].kind else { panic!() };
        let alts = ann.alternatives(value);
        assert_eq!(alts.len(), 2);
        assert!(alts.contains(&[lit('B')].into_iter().collect()));
        assert!(alts.contains(&[lit('A')].into_iter().collect()));
    }

    #[test]
    fn hypothetical_resolves_single_letter() {
        let set: TokenSet = [lit('C')].into_iter().collect();
        assert_eq!(hypothetical(&set), [lit('D')].into_iter().collect());
        let both: TokenSet = [lit('C'), lit('D'), lit('E')].into_iter().collect();
        assert_eq!(hypothetical(&both), [InputValueToken::Hypothetical { bit: 2 }, lit('F')].into_iter().collect());
    }

    #[test]
    fn helper_returns_are_inlined_once() {
        let src = "def pick():\n    return 'G'\ndef generate(s):\n    x = pick()\n    return x\n";
        let m = parse_program(src).module.unwrap();
        let ann = collect_input_values(&m);
        let x = find_name(&m, "x", 1);
        assert_eq!(ann.involvement(x), [lit('G')].into_iter().collect());
    }

    #[test]
    fn letters_in_requires_pure_letter_literal() {
        assert_eq!(letters_in("ACEG").len(), 4);
        assert!(letters_in("Row A").is_empty());
        assert!(letters_in("").is_empty());
        assert!(letters_in("IJ").is_empty());
    }
}
