//! JSON tree dump of an AST: `{"kind", "span", "children", ...attributes}`.

use serde_json::{json, Map, Value};

use super::ast::*;

pub fn dump_module(m: &Module, with_spans: bool) -> Value {
    json!({
        "kind": "module",
        "children": m.body.iter().map(|s| stmt(s, with_spans)).collect::<Vec<_>>(),
    })
}

fn node(kind: &str, span: Span, with_spans: bool, children: Vec<Value>, attrs: &[(&str, Value)]) -> Value {
    let mut map = Map::new();
    map.insert("kind".into(), Value::String(kind.into()));
    if with_spans {
        map.insert("span".into(), json!([span.line, span.col]));
    }
    for (k, v) in attrs {
        map.insert((*k).into(), v.clone());
    }
    map.insert("children".into(), Value::Array(children));
    Value::Object(map)
}

fn block(kind: &str, span: Span, body: &[Stmt], w: bool, mut head: Vec<Value>) -> Value {
    head.extend(body.iter().map(|s| stmt(s, w)));
    node(kind, span, w, head, &[])
}

fn stmt(s: &Stmt, w: bool) -> Value {
    match &s.kind {
        StmtKind::FunctionDef { name, params, returns, body } => {
            let ps: Vec<Value> = params
                .iter()
                .map(|p| {
                    let mut ch = Vec::new();
                    if let Some(a) = &p.annotation {
                        ch.push(node("annotation", a.span, w, vec![expr(a, w)], &[]));
                    }
                    if let Some(d) = &p.default {
                        ch.push(node("default", d.span, w, vec![expr(d, w)], &[]));
                    }
                    node("param", s.span, w, ch, &[("name", json!(p.name))])
                })
                .collect();
            let mut children = ps;
            if let Some(r) = returns {
                children.push(node("returns", r.span, w, vec![expr(r, w)], &[]));
            }
            children.extend(body.iter().map(|b| stmt(b, w)));
            node("def", s.span, w, children, &[("name", json!(name))])
        }
        StmtKind::Assign { targets, value } => {
            let mut ch: Vec<Value> = targets.iter().map(|t| expr(t, w)).collect();
            ch.push(expr(value, w));
            node("assign", s.span, w, ch, &[])
        }
        StmtKind::AugAssign { target, op, value } => {
            node("aug_assign", s.span, w, vec![expr(target, w), expr(value, w)], &[("op", json!(op.symbol()))])
        }
        StmtKind::If(chain) => {
            let mut ch: Vec<Value> = chain
                .branches
                .iter()
                .enumerate()
                .map(|(i, b)| block(if i == 0 { "if" } else { "elif" }, b.span, &b.body, w, vec![expr(&b.test, w)]))
                .collect();
            if let Some(e) = &chain.orelse {
                ch.push(block("else", e.span, &e.body, w, vec![]));
            }
            node("if_chain", s.span, w, ch, &[])
        }
        StmtKind::For { target, iter, body } => block("for", s.span, body, w, vec![expr(target, w), expr(iter, w)]),
        StmtKind::While { test, body } => block("while", s.span, body, w, vec![expr(test, w)]),
        StmtKind::Return(v) => node("return", s.span, w, v.iter().map(|e| expr(e, w)).collect(), &[]),
        StmtKind::Expr(e) => node("expr_stmt", s.span, w, vec![expr(e, w)], &[]),
        StmtKind::Pass => node("pass", s.span, w, vec![], &[]),
        StmtKind::Break => node("break", s.span, w, vec![], &[]),
        StmtKind::Continue => node("continue", s.span, w, vec![], &[]),
    }
}

fn opt(e: &Option<Box<Expr>>, w: bool) -> Value {
    e.as_ref().map(|e| expr(e, w)).unwrap_or(Value::Null)
}

pub fn expr(e: &Expr, w: bool) -> Value {
    let kids = |v: &[Expr]| v.iter().map(|x| expr(x, w)).collect::<Vec<_>>();
    match &e.kind {
        ExprKind::Name(n) => node("name", e.span, w, vec![], &[("value", json!(n))]),
        ExprKind::Int(i) => node("int", e.span, w, vec![], &[("value", json!(i))]),
        ExprKind::Str(s) => node("str", e.span, w, vec![], &[("value", json!(s))]),
        ExprKind::Bool(b) => node("bool", e.span, w, vec![], &[("value", json!(b))]),
        ExprKind::NoneLit => node("none", e.span, w, vec![], &[]),
        ExprKind::List(items) => node("list", e.span, w, kids(items), &[]),
        ExprKind::Tuple(items) => node("tuple", e.span, w, kids(items), &[]),
        ExprKind::Dict(entries) => {
            let ch = entries
                .iter()
                .map(|d| node("entry", d.key.span, w, vec![expr(&d.key, w), expr(&d.value, w)], &[]))
                .collect();
            node("dict", e.span, w, ch, &[])
        }
        ExprKind::Subscript { value, index } => node("subscript", e.span, w, vec![expr(value, w), expr(index, w)], &[]),
        ExprKind::Slice { lower, upper, step } => {
            node("slice", e.span, w, vec![opt(lower, w), opt(upper, w), opt(step, w)], &[])
        }
        ExprKind::Call { func, args, kwargs } => {
            let mut ch = vec![expr(func, w)];
            ch.extend(kids(args));
            ch.extend(kwargs.iter().map(|(k, v)| node("kwarg", v.span, w, vec![expr(v, w)], &[("name", json!(k))])));
            node("call", e.span, w, ch, &[])
        }
        ExprKind::Method { receiver, method, args } => {
            let mut ch = vec![expr(receiver, w)];
            ch.extend(kids(args));
            node("method", e.span, w, ch, &[("name", json!(method))])
        }
        ExprKind::BinOp { op, left, right } => {
            node("binop", e.span, w, vec![expr(left, w), expr(right, w)], &[("op", json!(op.symbol()))])
        }
        ExprKind::Unary { op, operand } => {
            let o = if *op == UnaryOp::Neg { "-" } else { "not" };
            node("unary", e.span, w, vec![expr(operand, w)], &[("op", json!(o))])
        }
        ExprKind::BoolOp { op, left, right } => {
            let o = if *op == BoolOp::And { "and" } else { "or" };
            node("boolop", e.span, w, vec![expr(left, w), expr(right, w)], &[("op", json!(o))])
        }
        ExprKind::Compare { left, rest } => {
            let mut ch = vec![expr(left, w)];
            ch.extend(rest.iter().map(|(_, r)| expr(r, w)));
            let ops: Vec<&str> = rest.iter().map(|(o, _)| o.symbol()).collect();
            node("compare", e.span, w, ch, &[("ops", json!(ops))])
        }
        ExprKind::IfExp { test, body, orelse } => {
            node("ifexp", e.span, w, vec![expr(body, w), expr(test, w), expr(orelse, w)], &[])
        }
        ExprKind::ListComp { elt, gen } => {
            let mut ch = vec![expr(elt, w), expr(&gen.target, w), expr(&gen.iter, w)];
            if let Some(c) = &gen.cond {
                ch.push(expr(c, w));
            }
            node("listcomp", e.span, w, ch, &[])
        }
    }
}
