use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt::Write;
use std::rc::Rc;

use indexmap::IndexMap;

use crate::lang::ast::{Param, Stmt};

use super::builtins::Builtin;

pub type Frame<'m> = Rc<RefCell<std::collections::HashMap<String, Value<'m>>>>;

#[derive(Debug)]
pub struct Function<'m> {
    pub name: String,
    pub params: &'m [Param],
    pub defaults: Vec<Option<Value<'m>>>,
    pub body: &'m [Stmt],
    /// Scopes visible where the function was defined, outermost first.
    pub scopes: Vec<Frame<'m>>,
}

#[derive(Debug, Clone)]
pub enum Value<'m> {
    None,
    Bool(bool),
    Int(i64),
    Str(Rc<str>),
    List(Rc<RefCell<Vec<Value<'m>>>>),
    Tuple(Rc<Vec<Value<'m>>>),
    Dict(Rc<RefCell<IndexMap<Key, Value<'m>>>>),
    Function(Rc<Function<'m>>),
    Builtin(Builtin),
}

/// Hashable projection of a value, used for dict keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Key {
    None,
    Int(i64),
    Str(Rc<str>),
    Tuple(Vec<Key>),
}

impl Key {
    pub fn to_value<'m>(&self) -> Value<'m> {
        match self {
            Key::None => Value::None,
            Key::Int(i) => Value::Int(*i),
            Key::Str(s) => Value::Str(s.clone()),
            Key::Tuple(items) => Value::Tuple(Rc::new(items.iter().map(Key::to_value).collect())),
        }
    }
}

impl<'m> Value<'m> {
    pub fn str(s: impl Into<Rc<str>>) -> Self {
        Value::Str(s.into())
    }

    pub fn list(items: Vec<Value<'m>>) -> Self {
        Value::List(Rc::new(RefCell::new(items)))
    }

    pub fn tuple(items: Vec<Value<'m>>) -> Self {
        Value::Tuple(Rc::new(items))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Tuple(_) => "tuple",
            Value::Dict(_) => "dict",
            Value::Function(_) | Value::Builtin(_) => "function",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::Str(s) => !s.is_empty(),
            Value::List(l) => !l.borrow().is_empty(),
            Value::Tuple(t) => !t.is_empty(),
            Value::Dict(d) => !d.borrow().is_empty(),
            Value::Function(_) | Value::Builtin(_) => true,
        }
    }

    /// Integer view; booleans count as 0/1.
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Bool(b) => Some(*b as i64),
            _ => None,
        }
    }

    pub fn key(&self) -> Option<Key> {
        Some(match self {
            Value::None => Key::None,
            Value::Bool(b) => Key::Int(*b as i64),
            Value::Int(i) => Key::Int(*i),
            Value::Str(s) => Key::Str(s.clone()),
            Value::Tuple(items) => Key::Tuple(items.iter().map(Value::key).collect::<Option<_>>()?),
            _ => return None,
        })
    }

    pub fn repr(&self) -> String {
        let mut out = String::new();
        self.write_repr(&mut out, 0);
        out
    }

    /// `str(x)`: strings print bare, everything else as its repr.
    pub fn display(&self) -> String {
        match self {
            Value::Str(s) => s.to_string(),
            _ => self.repr(),
        }
    }

    fn write_repr(&self, out: &mut String, depth: usize) {
        if depth > 32 {
            out.push_str("...");
            return;
        }
        let seq = |out: &mut String, items: &[Value], open: &str, close: &str| {
            out.push_str(open);
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                v.write_repr(out, depth + 1);
            }
            if items.len() == 1 && open == "(" {
                out.push(',');
            }
            out.push_str(close);
        };
        match self {
            Value::None => out.push_str("None"),
            Value::Bool(true) => out.push_str("True"),
            Value::Bool(false) => out.push_str("False"),
            Value::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Value::Str(s) => out.push_str(&crate::lang::printer::quote(s)),
            Value::List(l) => seq(out, &l.borrow(), "[", "]"),
            Value::Tuple(t) => seq(out, t, "(", ")"),
            Value::Dict(d) => {
                out.push('{');
                for (i, (k, v)) in d.borrow().iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    k.to_value().write_repr(out, depth + 1);
                    out.push_str(": ");
                    v.write_repr(out, depth + 1);
                }
                out.push('}');
            }
            Value::Function(f) => {
                let _ = write!(out, "<function {}>", f.name);
            }
            Value::Builtin(b) => {
                let _ = write!(out, "<built-in function {}>", b.name());
            }
        }
    }
}

/// Structural equality with numeric coercion of booleans.
pub fn equal<'m>(a: &Value<'m>, b: &Value<'m>) -> bool {
    equal_depth(a, b, 0)
}

fn equal_depth<'m>(a: &Value<'m>, b: &Value<'m>, depth: usize) -> bool {
    if depth > 64 {
        return false;
    }
    let seq = |x: &[Value<'m>], y: &[Value<'m>]| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| equal_depth(p, q, depth + 1));
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::List(x), Value::List(y)) => Rc::ptr_eq(x, y) || seq(&x.borrow(), &y.borrow()),
        (Value::Tuple(x), Value::Tuple(y)) => seq(x, y),
        (Value::Dict(x), Value::Dict(y)) => {
            if Rc::ptr_eq(x, y) {
                return true;
            }
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| equal_depth(v, w, depth + 1)))
        }
        (Value::Function(x), Value::Function(y)) => Rc::ptr_eq(x, y),
        (Value::Builtin(x), Value::Builtin(y)) => x == y,
        _ => match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

/// Ordering for `<` and friends; `None` when the operands are unordered.
pub fn compare<'m>(a: &Value<'m>, b: &Value<'m>) -> Option<Ordering> {
    match (a, b) {
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        (Value::List(x), Value::List(y)) => compare_seq(&x.borrow(), &y.borrow()),
        (Value::Tuple(x), Value::Tuple(y)) => compare_seq(x, y),
        _ => Some(a.as_int()?.cmp(&b.as_int()?)),
    }
}

fn compare_seq<'m>(x: &[Value<'m>], y: &[Value<'m>]) -> Option<Ordering> {
    for (p, q) in x.iter().zip(y) {
        if !equal(p, q) {
            return compare(p, q);
        }
    }
    Some(x.len().cmp(&y.len()))
}
