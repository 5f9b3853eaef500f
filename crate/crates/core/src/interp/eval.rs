use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use indexmap::IndexMap;

use super::builtins::{self, Builtin};
use super::value::{compare, equal, Frame, Function, Value};
use super::{EntryPoint, ExecBudget, FailureKind, RunFailure};
use crate::lang::ast::*;

type R<T> = Result<T, RunFailure>;

pub(super) fn fail<T>(kind: FailureKind, msg: impl Into<String>) -> R<T> {
    Err(RunFailure::new(kind, msg))
}

enum Flow<'m> {
    Normal,
    Break,
    Continue,
    Return(Value<'m>),
}

pub(super) struct Interpreter<'m> {
    budget: ExecBudget,
    steps: u64,
    depth: usize,
    /// Innermost scope last; the first is the module globals.
    scopes: Vec<Frame<'m>>,
    /// Frames holding function values; cleared on drop to break the cycles
    /// between a function and the scope that defines it.
    def_frames: Vec<Frame<'m>>,
}

impl Drop for Interpreter<'_> {
    fn drop(&mut self) {
        for f in self.def_frames.drain(..) {
            f.borrow_mut().clear();
        }
    }
}

fn frame<'m>() -> Frame<'m> {
    Rc::new(RefCell::new(HashMap::new()))
}

impl<'m> Interpreter<'m> {
    pub fn new(budget: &ExecBudget) -> Self {
        Interpreter { budget: *budget, steps: 0, depth: 0, scopes: vec![frame()], def_frames: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn run(&mut self, m: &'m Module, entry: &EntryPoint, input: &str) -> R<Value<'m>> {
        self.store("__name__", Value::str("rulegen"));
        if *entry == EntryPoint::Script {
            self.store("s", Value::str(input));
        }
        match self.block(&m.body)? {
            Flow::Normal => {}
            _ => return fail(FailureKind::Type, "control flow statement outside a function or loop"),
        }
        match entry {
            EntryPoint::Function(name) => {
                let f = self.lookup(name)?;
                self.call(&f, vec![Value::str(input)], vec![])
            }
            EntryPoint::Script => self.lookup("result"),
        }
    }

    pub(super) fn tick(&mut self, n: u64) -> R<()> {
        if self.steps + n > self.budget.max_steps {
            // Bulk work that would overrun is refused rather than done.
            self.steps = self.steps.max(self.budget.max_steps);
            if n == 1 {
                self.steps += 1;
            }
            return fail(FailureKind::StepBudget, format!("step budget of {} exhausted", self.budget.max_steps));
        }
        self.steps += n;
        Ok(())
    }

    pub(super) fn check_len(&self, n: usize) -> R<()> {
        if n > self.budget.max_collection_size {
            return fail(
                FailureKind::CollectionLimit,
                format!("collection of {n} elements exceeds the limit of {}", self.budget.max_collection_size),
            );
        }
        Ok(())
    }

    fn enter(&mut self) -> R<()> {
        self.depth += 1;
        if self.depth > self.budget.max_depth {
            self.depth -= 1;
            return fail(FailureKind::Recursion, "maximum nesting depth exceeded");
        }
        Ok(())
    }

    fn store(&mut self, name: &str, v: Value<'m>) {
        self.scopes.last().unwrap().borrow_mut().insert(name.to_string(), v);
    }

    fn lookup(&self, name: &str) -> R<Value<'m>> {
        for scope in self.scopes.iter().rev() {
            if let Some(v) = scope.borrow().get(name) {
                return Ok(v.clone());
            }
        }
        match Builtin::from_name(name) {
            Some(b) => Ok(Value::Builtin(b)),
            None => fail(FailureKind::UndefinedName, format!("name '{name}' is not defined")),
        }
    }

    fn block(&mut self, body: &'m [Stmt]) -> R<Flow<'m>> {
        for s in body {
            match self.stmt(s).map_err(|e| e.at(s.span))? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &'m Stmt) -> R<Flow<'m>> {
        self.tick(1)?;
        match &s.kind {
            StmtKind::FunctionDef { name, params, body, .. } => {
                let mut defaults = Vec::with_capacity(params.len());
                for p in params {
                    defaults.push(match &p.default {
                        Some(d) => Some(self.expr(d)?),
                        None => None,
                    });
                }
                let f = Function { name: name.clone(), params, defaults, body, scopes: self.scopes.clone() };
                self.store(name, Value::Function(Rc::new(f)));
                self.def_frames.push(self.scopes.last().unwrap().clone());
            }
            StmtKind::Assign { targets, value } => {
                let v = self.expr(value)?;
                for t in targets {
                    self.assign(t, v.clone())?;
                }
            }
            StmtKind::AugAssign { target, op, value } => {
                let rhs = self.expr(value)?;
                match &target.kind {
                    ExprKind::Subscript { value: base, index } => {
                        let container = self.expr(base)?;
                        let idx = self.expr(index)?;
                        let cur = self.get_item(&container, &idx)?;
                        let new = self.augmented(*op, cur, rhs)?;
                        self.set_item(&container, idx, new)?;
                    }
                    _ => {
                        let cur = self.expr(target)?;
                        let new = self.augmented(*op, cur, rhs)?;
                        self.assign(target, new)?;
                    }
                }
            }
            StmtKind::If(chain) => {
                for b in &chain.branches {
                    if self.expr(&b.test)?.truthy() {
                        return self.block(&b.body);
                    }
                }
                if let Some(e) = &chain.orelse {
                    return self.block(&e.body);
                }
            }
            StmtKind::For { target, iter, body } => {
                let it = self.expr(iter)?;
                for item in self.iterate(&it)? {
                    self.tick(1)?;
                    self.assign(target, item)?;
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::While { test, body } => loop {
                self.tick(1)?;
                if !self.expr(test)?.truthy() {
                    break;
                }
                match self.block(body)? {
                    Flow::Break => break,
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    Flow::Normal | Flow::Continue => {}
                }
            },
            StmtKind::Return(v) => {
                let v = match v {
                    Some(e) => self.expr(e)?,
                    None => Value::None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::Pass => {}
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
        }
        Ok(Flow::Normal)
    }

    /// `x op= y`: lists extend in place, everything else rebinds.
    fn augmented(&mut self, op: BinOp, cur: Value<'m>, rhs: Value<'m>) -> R<Value<'m>> {
        if let (BinOp::Add, Value::List(l)) = (op, &cur) {
            let items = self.iterate(&rhs)?;
            self.check_len(l.borrow().len() + items.len())?;
            self.tick(items.len() as u64)?;
            l.borrow_mut().extend(items);
            return Ok(cur);
        }
        self.binop(op, cur, rhs)
    }

    fn assign(&mut self, target: &'m Expr, v: Value<'m>) -> R<()> {
        match &target.kind {
            ExprKind::Name(n) => {
                self.store(n, v);
                Ok(())
            }
            ExprKind::Tuple(ts) | ExprKind::List(ts) => {
                let items = self.iterate(&v)?;
                if items.len() != ts.len() {
                    return fail(
                        FailureKind::Value,
                        format!("cannot unpack {} values into {} targets", items.len(), ts.len()),
                    );
                }
                for (t, item) in ts.iter().zip(items) {
                    self.assign(t, item)?;
                }
                Ok(())
            }
            ExprKind::Subscript { value, index } => {
                let container = self.expr(value)?;
                let idx = self.expr(index)?;
                self.set_item(&container, idx, v)
            }
            _ => fail(FailureKind::Type, "invalid assignment target"),
        }
    }

    /// Elements produced by iterating over `v`.
    pub(super) fn iterate(&mut self, v: &Value<'m>) -> R<Vec<Value<'m>>> {
        Ok(match v {
            Value::List(l) => l.borrow().clone(),
            Value::Tuple(t) => t.to_vec(),
            Value::Str(s) => s.chars().map(|c| Value::str(c.to_string())).collect(),
            Value::Dict(d) => d.borrow().keys().map(|k| k.to_value()).collect(),
            other => return fail(FailureKind::Type, format!("'{}' object is not iterable", other.type_name())),
        })
    }

    fn index(len: usize, idx: &Value) -> R<usize> {
        let Some(i) = idx.as_int() else {
            return fail(FailureKind::Type, format!("indices must be integers, not {}", idx.type_name()));
        };
        let j = if i < 0 { i + len as i64 } else { i };
        if j < 0 || j >= len as i64 {
            return fail(FailureKind::Index, format!("index {i} out of range for length {len}"));
        }
        Ok(j as usize)
    }

    pub(super) fn get_item(&mut self, container: &Value<'m>, idx: &Value<'m>) -> R<Value<'m>> {
        match container {
            Value::List(l) => {
                let l = l.borrow();
                Ok(l[Self::index(l.len(), idx)?].clone())
            }
            Value::Tuple(t) => Ok(t[Self::index(t.len(), idx)?].clone()),
            Value::Str(s) => {
                let chars: Vec<char> = s.chars().collect();
                Ok(Value::str(chars[Self::index(chars.len(), idx)?].to_string()))
            }
            Value::Dict(d) => {
                let Some(k) = idx.key() else {
                    return fail(FailureKind::Type, format!("unhashable type: '{}'", idx.type_name()));
                };
                match d.borrow().get(&k) {
                    Some(v) => Ok(v.clone()),
                    None => fail(FailureKind::Key, format!("key {} not found", idx.repr())),
                }
            }
            other => fail(FailureKind::Type, format!("'{}' object is not subscriptable", other.type_name())),
        }
    }

    fn set_item(&mut self, container: &Value<'m>, idx: Value<'m>, v: Value<'m>) -> R<()> {
        match container {
            Value::List(l) => {
                let mut l = l.borrow_mut();
                let i = Self::index(l.len(), &idx)?;
                l[i] = v;
                Ok(())
            }
            Value::Dict(d) => {
                let Some(k) = idx.key() else {
                    return fail(FailureKind::Type, format!("unhashable type: '{}'", idx.type_name()));
                };
                let len = d.borrow().len();
                if !d.borrow().contains_key(&k) {
                    self.check_len(len + 1)?;
                }
                d.borrow_mut().insert(k, v);
                Ok(())
            }
            other => fail(FailureKind::Type, format!("'{}' object does not support item assignment", other.type_name())),
        }
    }

    fn slice(&mut self, container: &Value<'m>, lower: Option<i64>, upper: Option<i64>, step: Option<i64>) -> R<Value<'m>> {
        let step = step.unwrap_or(1);
        if step == 0 {
            return fail(FailureKind::Value, "slice step cannot be zero");
        }
        let pick = |len: usize| -> Vec<usize> {
            let len = len as i64;
            let clamp = |x: i64, lo: i64, hi: i64| x.clamp(lo, hi);
            let norm = |x: i64| if x < 0 { x + len } else { x };
            let mut out = Vec::new();
            if step > 0 {
                let start = clamp(lower.map(norm).unwrap_or(0), 0, len);
                let stop = clamp(upper.map(norm).unwrap_or(len), 0, len);
                let mut i = start;
                while i < stop {
                    out.push(i as usize);
                    i += step;
                }
            } else {
                let start = clamp(lower.map(norm).unwrap_or(len - 1), -1, len - 1);
                let stop = clamp(upper.map(norm).unwrap_or(-1), -1, len - 1);
                let mut i = start;
                while i > stop {
                    out.push(i as usize);
                    i += step;
                }
            }
            out
        };
        match container {
            Value::List(l) => {
                let l = l.borrow();
                let idx = pick(l.len());
                self.tick(idx.len() as u64)?;
                Ok(Value::list(idx.into_iter().map(|i| l[i].clone()).collect()))
            }
            Value::Tuple(t) => {
                let idx = pick(t.len());
                self.tick(idx.len() as u64)?;
                Ok(Value::tuple(idx.into_iter().map(|i| t[i].clone()).collect()))
            }
            Value::Str(s) => {
                let chars: Vec<char> = s.chars().collect();
                let idx = pick(chars.len());
                self.tick(idx.len() as u64)?;
                Ok(Value::str(idx.into_iter().map(|i| chars[i]).collect::<String>()))
            }
            other => fail(FailureKind::Type, format!("'{}' object cannot be sliced", other.type_name())),
        }
    }

    fn opt_int(&mut self, e: &'m Option<Box<Expr>>) -> R<Option<i64>> {
        match e {
            None => Ok(None),
            Some(e) => match self.expr(e)? {
                Value::None => Ok(None),
                v => match v.as_int() {
                    Some(i) => Ok(Some(i)),
                    None => fail(FailureKind::Type, "slice indices must be integers"),
                },
            },
        }
    }

    pub(super) fn expr(&mut self, e: &'m Expr) -> R<Value<'m>> {
        self.tick(1)?;
        self.enter()?;
        // Deeply nested programs recurse here; grow the stack instead of
        // relying on whatever the calling thread was given.
        let r = stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.expr_inner(e)).map_err(|f| f.at(e.span));
        self.depth -= 1;
        r
    }

    fn expr_inner(&mut self, e: &'m Expr) -> R<Value<'m>> {
        Ok(match &e.kind {
            ExprKind::Name(n) => self.lookup(n)?,
            ExprKind::Int(i) => Value::Int(*i),
            ExprKind::Str(s) => Value::str(s.as_str()),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::NoneLit => Value::None,
            ExprKind::List(items) | ExprKind::Tuple(items) => {
                let mut out = Vec::with_capacity(items.len());
                for i in items {
                    out.push(self.expr(i)?);
                }
                self.check_len(out.len())?;
                if matches!(e.kind, ExprKind::List(_)) {
                    Value::list(out)
                } else {
                    Value::tuple(out)
                }
            }
            ExprKind::Dict(entries) => {
                let mut map = IndexMap::new();
                for d in entries {
                    let k = self.expr(&d.key)?;
                    let v = self.expr(&d.value)?;
                    let Some(k) = k.key() else {
                        return fail(FailureKind::Type, format!("unhashable type: '{}'", k.type_name()));
                    };
                    map.insert(k, v);
                }
                self.check_len(map.len())?;
                Value::Dict(Rc::new(RefCell::new(map)))
            }
            ExprKind::Subscript { value, index } => {
                let container = self.expr(value)?;
                if let ExprKind::Slice { lower, upper, step } = &index.kind {
                    let (l, u, s) = (self.opt_int(lower)?, self.opt_int(upper)?, self.opt_int(step)?);
                    return self.slice(&container, l, u, s);
                }
                let idx = self.expr(index)?;
                self.get_item(&container, &idx)?
            }
            ExprKind::Slice { .. } => return fail(FailureKind::Type, "slice outside of a subscript"),
            ExprKind::Call { func, args, kwargs } => {
                let f = self.expr(func)?;
                let mut a = Vec::with_capacity(args.len());
                for x in args {
                    a.push(self.expr(x)?);
                }
                let mut kw = Vec::with_capacity(kwargs.len());
                for (k, x) in kwargs {
                    kw.push((k.as_str(), self.expr(x)?));
                }
                self.call(&f, a, kw)?
            }
            ExprKind::Method { receiver, method, args } => {
                let r = self.expr(receiver)?;
                let mut a = Vec::with_capacity(args.len());
                for x in args {
                    a.push(self.expr(x)?);
                }
                builtins::call_method(self, &r, method, a)?
            }
            ExprKind::BinOp { op, left, right } => {
                let l = self.expr(left)?;
                let r = self.expr(right)?;
                self.binop(*op, l, r)?
            }
            ExprKind::Unary { op: UnaryOp::Not, operand } => Value::Bool(!self.expr(operand)?.truthy()),
            ExprKind::Unary { op: UnaryOp::Neg, operand } => {
                let v = self.expr(operand)?;
                match v.as_int() {
                    Some(i) => Value::Int(i.checked_neg().ok_or_else(overflow)?),
                    None => return fail(FailureKind::Type, format!("bad operand type for unary -: '{}'", v.type_name())),
                }
            }
            ExprKind::BoolOp { op, left, right } => {
                let l = self.expr(left)?;
                match (op, l.truthy()) {
                    (BoolOp::And, false) | (BoolOp::Or, true) => l,
                    _ => self.expr(right)?,
                }
            }
            ExprKind::Compare { left, rest } => {
                let mut l = self.expr(left)?;
                for (op, r) in rest {
                    let r = self.expr(r)?;
                    if !self.compare(*op, &l, &r)? {
                        return Ok(Value::Bool(false));
                    }
                    l = r;
                }
                Value::Bool(true)
            }
            ExprKind::IfExp { test, body, orelse } => {
                if self.expr(test)?.truthy() {
                    self.expr(body)?
                } else {
                    self.expr(orelse)?
                }
            }
            ExprKind::ListComp { elt, gen } => {
                let it = self.expr(&gen.iter)?;
                let items = self.iterate(&it)?;
                // Comprehension variables live in their own scope.
                self.scopes.push(frame());
                let r = self.comprehension(elt, gen, items);
                self.scopes.pop();
                Value::list(r?)
            }
        })
    }

    fn comprehension(&mut self, elt: &'m Expr, gen: &'m Comprehension, items: Vec<Value<'m>>) -> R<Vec<Value<'m>>> {
        let mut out = Vec::new();
        for item in items {
            self.tick(1)?;
            self.assign(&gen.target, item)?;
            if let Some(c) = &gen.cond {
                if !self.expr(c)?.truthy() {
                    continue;
                }
            }
            out.push(self.expr(elt)?);
            self.check_len(out.len())?;
        }
        Ok(out)
    }

    fn compare(&mut self, op: CmpOp, l: &Value<'m>, r: &Value<'m>) -> R<bool> {
        use std::cmp::Ordering::*;
        let ord = |l: &Value<'m>, r: &Value<'m>| {
            compare(l, r).ok_or_else(|| {
                RunFailure::new(
                    FailureKind::Type,
                    format!("'{}' not supported between '{}' and '{}'", op.symbol(), l.type_name(), r.type_name()),
                )
            })
        };
        Ok(match op {
            CmpOp::Eq => equal(l, r),
            CmpOp::NotEq => !equal(l, r),
            CmpOp::Lt => ord(l, r)? == Less,
            CmpOp::LtE => ord(l, r)? != Greater,
            CmpOp::Gt => ord(l, r)? == Greater,
            CmpOp::GtE => ord(l, r)? != Less,
            CmpOp::In => self.contains(r, l)?,
            CmpOp::NotIn => !self.contains(r, l)?,
            CmpOp::Is => identical(l, r),
            CmpOp::IsNot => !identical(l, r),
        })
    }

    pub(super) fn contains(&mut self, container: &Value<'m>, item: &Value<'m>) -> R<bool> {
        match container {
            Value::Str(s) => match item {
                Value::Str(sub) => Ok(s.contains(&**sub)),
                other => fail(FailureKind::Type, format!("'in <string>' requires string, not {}", other.type_name())),
            },
            Value::List(_) | Value::Tuple(_) => {
                let items = self.iterate(container)?;
                self.tick(items.len() as u64)?;
                Ok(items.iter().any(|x| equal(x, item)))
            }
            Value::Dict(d) => match item.key() {
                Some(k) => Ok(d.borrow().contains_key(&k)),
                None => fail(FailureKind::Type, format!("unhashable type: '{}'", item.type_name())),
            },
            other => fail(FailureKind::Type, format!("argument of type '{}' is not iterable", other.type_name())),
        }
    }

    fn repeat(&mut self, items: &[Value<'m>], n: i64) -> R<Vec<Value<'m>>> {
        let n = n.max(0) as usize;
        let total = items.len().saturating_mul(n);
        self.check_len(total)?;
        self.tick(total as u64)?;
        Ok(items.iter().cloned().cycle().take(total).collect())
    }

    pub(super) fn binop(&mut self, op: BinOp, l: Value<'m>, r: Value<'m>) -> R<Value<'m>> {
        let type_err = |l: &Value, r: &Value| {
            fail(
                FailureKind::Type,
                format!("unsupported operand types for {}: '{}' and '{}'", op.symbol(), l.type_name(), r.type_name()),
            )
        };
        if let (Some(a), Some(b)) = (l.as_int(), r.as_int()) {
            return Ok(Value::Int(match op {
                BinOp::Add => a.checked_add(b).ok_or_else(overflow)?,
                BinOp::Sub => a.checked_sub(b).ok_or_else(overflow)?,
                BinOp::Mul => a.checked_mul(b).ok_or_else(overflow)?,
                BinOp::Div | BinOp::FloorDiv | BinOp::Mod if b == 0 => {
                    return fail(FailureKind::ZeroDivision, "division by zero")
                }
                BinOp::Div => {
                    if a.checked_rem(b).ok_or_else(overflow)? != 0 {
                        return fail(FailureKind::Type, "true division with a fractional result is not supported");
                    }
                    a.checked_div(b).ok_or_else(overflow)?
                }
                BinOp::FloorDiv => {
                    let q = a.checked_div(b).ok_or_else(overflow)?;
                    if a % b != 0 && ((a < 0) != (b < 0)) {
                        q - 1
                    } else {
                        q
                    }
                }
                BinOp::Mod => {
                    let m = a.checked_rem(b).ok_or_else(overflow)?;
                    if m != 0 && ((m < 0) != (b < 0)) {
                        m + b
                    } else {
                        m
                    }
                }
            }));
        }
        match (op, &l, &r) {
            (BinOp::Add, Value::Str(a), Value::Str(b)) => {
                self.check_len(a.chars().count() + b.chars().count())?;
                Ok(Value::str(format!("{a}{b}")))
            }
            (BinOp::Add, Value::List(a), Value::List(b)) => {
                let mut v = a.borrow().clone();
                v.extend(b.borrow().iter().cloned());
                self.check_len(v.len())?;
                self.tick(v.len() as u64)?;
                Ok(Value::list(v))
            }
            (BinOp::Add, Value::Tuple(a), Value::Tuple(b)) => {
                let mut v = a.to_vec();
                v.extend(b.iter().cloned());
                self.check_len(v.len())?;
                self.tick(v.len() as u64)?;
                Ok(Value::tuple(v))
            }
            (BinOp::Mul, Value::Str(s), n) | (BinOp::Mul, n, Value::Str(s)) if n.as_int().is_some() => {
                let n = n.as_int().unwrap().max(0) as usize;
                let total = s.chars().count().saturating_mul(n);
                self.check_len(total)?;
                self.tick(n as u64)?;
                Ok(Value::str(s.repeat(n)))
            }
            (BinOp::Mul, Value::List(items), n) | (BinOp::Mul, n, Value::List(items)) if n.as_int().is_some() => {
                let items = items.borrow().clone();
                Ok(Value::list(self.repeat(&items, n.as_int().unwrap())?))
            }
            (BinOp::Mul, Value::Tuple(items), n) | (BinOp::Mul, n, Value::Tuple(items)) if n.as_int().is_some() => {
                let items = items.to_vec();
                Ok(Value::tuple(self.repeat(&items, n.as_int().unwrap())?))
            }
            _ => type_err(&l, &r),
        }
    }

    pub(super) fn call(&mut self, f: &Value<'m>, args: Vec<Value<'m>>, kwargs: Vec<(&str, Value<'m>)>) -> R<Value<'m>> {
        match f {
            Value::Builtin(b) => builtins::call(self, *b, args, kwargs),
            Value::Function(func) => {
                self.enter()?;
                let r = stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.call_function(func, args, kwargs));
                self.depth -= 1;
                r
            }
            other => fail(FailureKind::Type, format!("'{}' object is not callable", other.type_name())),
        }
    }

    fn call_function(&mut self, f: &Rc<Function<'m>>, args: Vec<Value<'m>>, kwargs: Vec<(&str, Value<'m>)>) -> R<Value<'m>> {
        if args.len() > f.params.len() {
            return fail(
                FailureKind::Type,
                format!("{}() takes {} arguments but {} were given", f.name, f.params.len(), args.len()),
            );
        }
        let mut slots: Vec<Option<Value<'m>>> = vec![None; f.params.len()];
        for (slot, a) in slots.iter_mut().zip(args) {
            *slot = Some(a);
        }
        for (k, v) in kwargs {
            match f.params.iter().position(|p| p.name == k) {
                Some(i) if slots[i].is_none() => slots[i] = Some(v),
                Some(_) => return fail(FailureKind::Type, format!("{}() got multiple values for '{k}'", f.name)),
                None => return fail(FailureKind::Type, format!("{}() got an unexpected argument '{k}'", f.name)),
            }
        }
        let locals = frame();
        for ((p, slot), default) in f.params.iter().zip(slots).zip(&f.defaults) {
            let v = match slot.or_else(|| default.clone()) {
                Some(v) => v,
                None => return fail(FailureKind::Type, format!("{}() missing argument '{}'", f.name, p.name)),
            };
            locals.borrow_mut().insert(p.name.clone(), v);
        }
        let mut scopes = f.scopes.clone();
        scopes.push(locals);
        let saved = std::mem::replace(&mut self.scopes, scopes);
        let r = self.block(f.body);
        self.scopes = saved;
        Ok(match r? {
            Flow::Return(v) => v,
            _ => Value::None,
        })
    }
}

pub(super) fn overflow() -> RunFailure {
    RunFailure::new(FailureKind::Overflow, "integer overflow")
}

fn identical<'m>(a: &Value<'m>, b: &Value<'m>) -> bool {
    match (a, b) {
        (Value::List(x), Value::List(y)) => Rc::ptr_eq(x, y),
        (Value::Dict(x), Value::Dict(y)) => Rc::ptr_eq(x, y),
        (Value::Tuple(x), Value::Tuple(y)) => Rc::ptr_eq(x, y),
        (Value::Function(x), Value::Function(y)) => Rc::ptr_eq(x, y),
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Bool(_), _) | (_, Value::Bool(_)) => false,
        _ => equal(a, b),
    }
}
