//! Canonical source rendering of an AST. Compound sub-expressions are always
//! parenthesised, so re-parsing the output reproduces the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_module(m: &Module) -> String {
    let mut out = String::new();
    for s in &m.body {
        print_stmt(&mut out, s, 0);
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, body: &[Stmt], level: usize) {
    if body.is_empty() {
        indent(out, level);
        out.push_str("pass\n");
    }
    for s in body {
        print_stmt(out, s, level);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::FunctionDef { name, params, returns, body } => {
            let ps: Vec<String> = params
                .iter()
                .map(|p| {
                    let mut t = p.name.clone();
                    if let Some(a) = &p.annotation {
                        let _ = write!(t, ": {}", expr(a));
                    }
                    if let Some(d) = &p.default {
                        let _ = write!(t, " = {}", expr(d));
                    }
                    t
                })
                .collect();
            let _ = write!(out, "def {name}({})", ps.join(", "));
            if let Some(r) = returns {
                let _ = write!(out, " -> {}", expr(r));
            }
            out.push_str(":\n");
            print_block(out, body, level + 1);
        }
        StmtKind::Assign { targets, value } => {
            for t in targets {
                let _ = write!(out, "{} = ", target(t));
            }
            let _ = writeln!(out, "{}", expr(value));
        }
        StmtKind::AugAssign { target: t, op, value } => {
            let _ = writeln!(out, "{} {}= {}", target(t), op.symbol(), expr(value));
        }
        StmtKind::If(chain) => {
            for (i, b) in chain.branches.iter().enumerate() {
                if i > 0 {
                    indent(out, level);
                }
                let kw = if i == 0 { "if" } else { "elif" };
                let _ = writeln!(out, "{kw} {}:", expr(&b.test));
                print_block(out, &b.body, level + 1);
            }
            if let Some(e) = &chain.orelse {
                indent(out, level);
                out.push_str("else:\n");
                print_block(out, &e.body, level + 1);
            }
        }
        StmtKind::For { target: t, iter, body } => {
            let _ = writeln!(out, "for {} in {}:", target(t), expr(iter));
            print_block(out, body, level + 1);
        }
        StmtKind::While { test, body } => {
            let _ = writeln!(out, "while {}:", expr(test));
            print_block(out, body, level + 1);
        }
        StmtKind::Return(None) => out.push_str("return\n"),
        StmtKind::Return(Some(v)) => {
            let _ = writeln!(out, "return {}", expr(v));
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{}", expr(e));
        }
        StmtKind::Pass => out.push_str("pass\n"),
        StmtKind::Break => out.push_str("break\n"),
        StmtKind::Continue => out.push_str("continue\n"),
    }
}

/// Assignment targets: tuples print without brackets so they stay targets.
fn target(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Tuple(items) if !items.is_empty() => {
            let parts: Vec<String> = items.iter().map(expr).collect();
            if parts.len() == 1 {
                format!("{},", parts[0])
            } else {
                parts.join(", ")
            }
        }
        _ => expr(e),
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn seq(items: &[Expr]) -> String {
    items.iter().map(expr).collect::<Vec<_>>().join(", ")
}

fn comp(elt: &Expr, gen: &Comprehension) -> String {
    let mut s = format!("{} for {} in {}", expr(elt), target(&gen.target), expr(&gen.iter));
    if let Some(c) = &gen.cond {
        let _ = write!(s, " if {}", expr(c));
    }
    s
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Name(n) => n.clone(),
        ExprKind::Int(i) if *i < 0 => format!("(-{})", i.unsigned_abs()),
        ExprKind::Int(i) => i.to_string(),
        ExprKind::Str(s) => quote(s),
        ExprKind::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        ExprKind::NoneLit => "None".to_string(),
        ExprKind::List(items) => format!("[{}]", seq(items)),
        ExprKind::Tuple(items) if items.len() == 1 => format!("({},)", expr(&items[0])),
        ExprKind::Tuple(items) => format!("({})", seq(items)),
        ExprKind::Dict(entries) => {
            let parts: Vec<String> = entries.iter().map(|d| format!("{}: {}", expr(&d.key), expr(&d.value))).collect();
            format!("{{{}}}", parts.join(", "))
        }
        ExprKind::Subscript { value, index } => format!("{}[{}]", expr(value), expr(index)),
        ExprKind::Slice { lower, upper, step } => {
            let f = |x: &Option<Box<Expr>>| x.as_ref().map(|e| expr(e)).unwrap_or_default();
            match step {
                Some(_) => format!("{}:{}:{}", f(lower), f(upper), f(step)),
                None => format!("{}:{}", f(lower), f(upper)),
            }
        }
        ExprKind::Call { func, args, kwargs } => {
            let mut parts: Vec<String> = args.iter().map(call_arg).collect();
            parts.extend(kwargs.iter().map(|(k, v)| format!("{k}={}", expr(v))));
            format!("{}({})", expr(func), parts.join(", "))
        }
        ExprKind::Method { receiver, method, args } => {
            let parts: Vec<String> = args.iter().map(call_arg).collect();
            format!("{}.{method}({})", expr(receiver), parts.join(", "))
        }
        ExprKind::BinOp { op, left, right } => format!("({} {} {})", expr(left), op.symbol(), expr(right)),
        ExprKind::Unary { op: UnaryOp::Neg, operand } => format!("(-{})", expr(operand)),
        ExprKind::Unary { op: UnaryOp::Not, operand } => format!("(not {})", expr(operand)),
        ExprKind::BoolOp { op, left, right } => {
            let kw = if *op == BoolOp::And { "and" } else { "or" };
            format!("({} {kw} {})", expr(left), expr(right))
        }
        ExprKind::Compare { left, rest } => {
            let mut s = format!("({}", expr(left));
            for (op, r) in rest {
                let _ = write!(s, " {} {}", op.symbol(), expr(r));
            }
            s.push(')');
            s
        }
        ExprKind::IfExp { test, body, orelse } => format!("({} if {} else {})", expr(body), expr(test), expr(orelse)),
        ExprKind::ListComp { elt, gen } => format!("[{}]", comp(elt, gen)),
    }
}

fn call_arg(e: &Expr) -> String {
    expr(e)
}
