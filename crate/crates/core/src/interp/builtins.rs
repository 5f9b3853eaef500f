use std::cell::RefCell;
use std::rc::Rc;

use indexmap::IndexMap;

use super::eval::{fail, overflow, Interpreter};
use super::value::{compare, equal, Value};
use super::{FailureKind, RunFailure};

type R<T> = Result<T, RunFailure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Range,
    Len,
    List,
    Str,
    Int,
    Bool,
    Tuple,
    Dict,
    Enumerate,
    Zip,
    Print,
    Sum,
    Min,
    Max,
    Abs,
    Sorted,
    Reversed,
    Any,
    All,
}

const NAMES: [(&str, Builtin); 19] = [
    ("range", Builtin::Range),
    ("len", Builtin::Len),
    ("list", Builtin::List),
    ("str", Builtin::Str),
    ("int", Builtin::Int),
    ("bool", Builtin::Bool),
    ("tuple", Builtin::Tuple),
    ("dict", Builtin::Dict),
    ("enumerate", Builtin::Enumerate),
    ("zip", Builtin::Zip),
    ("print", Builtin::Print),
    ("sum", Builtin::Sum),
    ("min", Builtin::Min),
    ("max", Builtin::Max),
    ("abs", Builtin::Abs),
    ("sorted", Builtin::Sorted),
    ("reversed", Builtin::Reversed),
    ("any", Builtin::Any),
    ("all", Builtin::All),
];

impl Builtin {
    pub fn from_name(name: &str) -> Option<Builtin> {
        NAMES.iter().find(|(n, _)| *n == name).map(|(_, b)| *b)
    }

    pub fn name(self) -> &'static str {
        NAMES.iter().find(|(_, b)| *b == self).map(|(n, _)| *n).unwrap()
    }
}

fn arity(name: &str, args: &[Value], min: usize, max: usize) -> R<()> {
    if args.len() < min || args.len() > max {
        return fail(FailureKind::Type, format!("{name}() takes {min} to {max} arguments, got {}", args.len()));
    }
    Ok(())
}

fn int_arg(name: &str, v: &Value) -> R<i64> {
    v.as_int().ok_or_else(|| RunFailure::new(FailureKind::Type, format!("{name}() expects an integer, got {}", v.type_name())))
}

fn no_kwargs(name: &str, kwargs: &[(&str, Value)]) -> R<()> {
    match kwargs.first() {
        Some((k, _)) => fail(FailureKind::Type, format!("{name}() got an unexpected keyword argument '{k}'")),
        None => Ok(()),
    }
}

fn dict_value<'m>(map: IndexMap<super::value::Key, Value<'m>>) -> Value<'m> {
    Value::Dict(Rc::new(RefCell::new(map)))
}

/// Smallest or largest element, by `compare`.
fn extreme<'m>(it: &mut Interpreter<'m>, name: &str, args: Vec<Value<'m>>, want_max: bool) -> R<Value<'m>> {
    let items = if args.len() == 1 { it.iterate(&args[0])? } else { args };
    it.tick(items.len() as u64)?;
    let mut best: Option<Value<'m>> = None;
    for x in items {
        best = Some(match best {
            None => x,
            Some(b) => {
                let ord = compare(&x, &b).ok_or_else(|| {
                    RunFailure::new(FailureKind::Type, format!("{name}() cannot compare {} and {}", x.type_name(), b.type_name()))
                })?;
                if (want_max && ord.is_gt()) || (!want_max && ord.is_lt()) {
                    x
                } else {
                    b
                }
            }
        });
    }
    best.ok_or_else(|| RunFailure::new(FailureKind::Value, format!("{name}() of an empty sequence")))
}

pub(super) fn call<'m>(
    it: &mut Interpreter<'m>,
    b: Builtin,
    args: Vec<Value<'m>>,
    kwargs: Vec<(&str, Value<'m>)>,
) -> R<Value<'m>> {
    let name = b.name();
    if !matches!(b, Builtin::Print | Builtin::Enumerate | Builtin::Sorted | Builtin::Dict) {
        no_kwargs(name, &kwargs)?;
    }
    match b {
        Builtin::Print => Ok(Value::None),
        Builtin::Range => {
            arity(name, &args, 1, 3)?;
            let ints: Vec<i64> = args.iter().map(|a| int_arg(name, a)).collect::<R<_>>()?;
            let (start, stop, step) = match ints.as_slice() {
                [stop] => (0, *stop, 1),
                [start, stop] => (*start, *stop, 1),
                [start, stop, step] => (*start, *stop, *step),
                _ => unreachable!(),
            };
            if step == 0 {
                return fail(FailureKind::Value, "range() step must not be zero");
            }
            let span = if step > 0 { stop.saturating_sub(start) } else { start.saturating_sub(stop) };
            let count = if span <= 0 { 0 } else { (span - 1) / step.saturating_abs() + 1 };
            it.check_len(count as usize)?;
            it.tick(count as u64)?;
            Ok(Value::list((0..count).map(|i| Value::Int(start + i * step)).collect()))
        }
        Builtin::Len => {
            arity(name, &args, 1, 1)?;
            Ok(Value::Int(match &args[0] {
                Value::Str(s) => s.chars().count(),
                Value::List(l) => l.borrow().len(),
                Value::Tuple(t) => t.len(),
                Value::Dict(d) => d.borrow().len(),
                other => return fail(FailureKind::Type, format!("object of type '{}' has no len()", other.type_name())),
            } as i64))
        }
        Builtin::List | Builtin::Tuple => {
            arity(name, &args, 0, 1)?;
            let items = match args.first() {
                Some(a) => it.iterate(a)?,
                None => vec![],
            };
            it.tick(items.len() as u64)?;
            Ok(if b == Builtin::List { Value::list(items) } else { Value::tuple(items) })
        }
        Builtin::Str => {
            arity(name, &args, 0, 1)?;
            let s = args.first().map(|a| a.display()).unwrap_or_default();
            it.check_len(s.chars().count())?;
            Ok(Value::str(s))
        }
        Builtin::Int => {
            arity(name, &args, 0, 1)?;
            match args.first() {
                None => Ok(Value::Int(0)),
                Some(Value::Str(s)) => s
                    .trim()
                    .parse::<i64>()
                    .map(Value::Int)
                    .map_err(|_| RunFailure::new(FailureKind::Value, format!("invalid literal for int(): {}", Value::Str(s.clone()).repr()))),
                Some(v) => Ok(Value::Int(int_arg(name, v)?)),
            }
        }
        Builtin::Bool => {
            arity(name, &args, 0, 1)?;
            Ok(Value::Bool(args.first().is_some_and(|a| a.truthy())))
        }
        Builtin::Dict => {
            arity(name, &args, 0, 1)?;
            let mut map = IndexMap::new();
            match args.first() {
                Some(Value::Dict(d)) => map = d.borrow().clone(),
                Some(other) => {
                    for pair in it.iterate(other)? {
                        let kv = it.iterate(&pair)?;
                        let [k, v] = <[Value; 2]>::try_from(kv)
                            .map_err(|_| RunFailure::new(FailureKind::Value, "dict() needs key/value pairs"))?;
                        let key = k.key().ok_or_else(|| RunFailure::new(FailureKind::Type, "unhashable dict key"))?;
                        map.insert(key, v);
                    }
                }
                None => {}
            }
            for (k, v) in kwargs {
                map.insert(super::value::Key::Str(k.into()), v);
            }
            it.check_len(map.len())?;
            it.tick(map.len() as u64)?;
            Ok(dict_value(map))
        }
        Builtin::Enumerate => {
            arity(name, &args, 1, 2)?;
            let mut start = args.get(1).map(|a| int_arg(name, a)).transpose()?.unwrap_or(0);
            for (k, v) in kwargs {
                if k != "start" {
                    return fail(FailureKind::Type, format!("enumerate() got an unexpected keyword argument '{k}'"));
                }
                start = int_arg(name, &v)?;
            }
            let items = it.iterate(&args[0])?;
            it.tick(items.len() as u64)?;
            let mut out = Vec::with_capacity(items.len());
            for (i, x) in items.into_iter().enumerate() {
                let idx = start.checked_add(i as i64).ok_or_else(overflow)?;
                out.push(Value::tuple(vec![Value::Int(idx), x]));
            }
            Ok(Value::list(out))
        }
        Builtin::Zip => {
            let mut lists = Vec::with_capacity(args.len());
            for a in &args {
                lists.push(it.iterate(a)?);
            }
            let n = lists.iter().map(Vec::len).min().unwrap_or(0);
            it.tick((n * lists.len().max(1)) as u64)?;
            Ok(Value::list((0..n).map(|i| Value::tuple(lists.iter().map(|l| l[i].clone()).collect())).collect()))
        }
        Builtin::Sum => {
            arity(name, &args, 1, 2)?;
            let items = it.iterate(&args[0])?;
            it.tick(items.len() as u64)?;
            let mut acc = args.get(1).cloned().unwrap_or(Value::Int(0));
            for x in items {
                acc = it.binop(crate::lang::ast::BinOp::Add, acc, x)?;
            }
            Ok(acc)
        }
        Builtin::Min | Builtin::Max => {
            if args.is_empty() {
                return fail(FailureKind::Type, format!("{name}() expected at least 1 argument"));
            }
            extreme(it, name, args, b == Builtin::Max)
        }
        Builtin::Abs => {
            arity(name, &args, 1, 1)?;
            Ok(Value::Int(int_arg(name, &args[0])?.checked_abs().ok_or_else(overflow)?))
        }
        Builtin::Sorted => {
            arity(name, &args, 1, 1)?;
            let mut items = it.iterate(&args[0])?;
            let mut reverse = false;
            let mut key = None;
            for (k, v) in kwargs {
                match k {
                    "reverse" => reverse = v.truthy(),
                    "key" => key = Some(v),
                    _ => return fail(FailureKind::Type, format!("sorted() got an unexpected keyword argument '{k}'")),
                }
            }
            let n = items.len() as u64;
            it.tick(n * (64 - n.leading_zeros() as u64).max(1))?;
            let keys: Vec<Value> = match &key {
                Some(f) => items.iter().map(|x| it.call(f, vec![x.clone()], vec![])).collect::<R<_>>()?,
                None => items.clone(),
            };
            let mut order: Vec<usize> = (0..items.len()).collect();
            let mut bad = false;
            order.sort_by(|&a, &b| {
                compare(&keys[a], &keys[b]).unwrap_or_else(|| {
                    bad = true;
                    std::cmp::Ordering::Equal
                })
            });
            if bad {
                return fail(FailureKind::Type, "sorted() cannot compare the elements");
            }
            if reverse {
                order.reverse();
            }
            let mut slots: Vec<Option<Value>> = items.drain(..).map(Some).collect();
            Ok(Value::list(order.into_iter().map(|i| slots[i].take().unwrap()).collect()))
        }
        Builtin::Reversed => {
            arity(name, &args, 1, 1)?;
            let mut items = it.iterate(&args[0])?;
            it.tick(items.len() as u64)?;
            items.reverse();
            Ok(Value::list(items))
        }
        Builtin::Any | Builtin::All => {
            arity(name, &args, 1, 1)?;
            let items = it.iterate(&args[0])?;
            it.tick(items.len() as u64)?;
            Ok(Value::Bool(if b == Builtin::Any {
                items.iter().any(Value::truthy)
            } else {
                items.iter().all(Value::truthy)
            }))
        }
    }
}

fn str_arg<'a>(method: &str, v: &'a Value) -> R<&'a str> {
    match v {
        Value::Str(s) => Ok(s),
        other => fail(FailureKind::Type, format!("{method}() expects a string, got {}", other.type_name())),
    }
}

pub(super) fn call_method<'m>(it: &mut Interpreter<'m>, recv: &Value<'m>, method: &str, args: Vec<Value<'m>>) -> R<Value<'m>> {
    let unknown = || {
        fail(FailureKind::Type, format!("'{}' object has no supported method '{method}'", recv.type_name()))
    };
    match recv {
        Value::Str(s) => match method {
            "join" => {
                arity(method, &args, 1, 1)?;
                let items = it.iterate(&args[0])?;
                it.tick(items.len() as u64)?;
                let parts: Vec<&str> = items.iter().map(|x| str_arg(method, x)).collect::<R<_>>()?;
                let total = parts.iter().map(|p| p.chars().count()).sum::<usize>()
                    + s.chars().count() * parts.len().saturating_sub(1);
                it.check_len(total)?;
                Ok(Value::str(parts.join(s)))
            }
            "replace" => {
                arity(method, &args, 2, 2)?;
                let (old, new) = (str_arg(method, &args[0])?, str_arg(method, &args[1])?);
                let hits = if old.is_empty() { s.chars().count() + 1 } else { s.matches(old).count() };
                let total = s.chars().count() - hits * old.chars().count() + hits * new.chars().count();
                it.check_len(total)?;
                it.tick(s.len() as u64 / 16 + 1)?;
                Ok(Value::str(s.replace(old, new)))
            }
            "upper" => Ok(Value::str(s.to_uppercase())),
            "lower" => Ok(Value::str(s.to_lowercase())),
            "strip" => Ok(Value::str(s.trim())),
            "split" => {
                arity(method, &args, 0, 1)?;
                let parts: Vec<Value> = match args.first() {
                    None | Some(Value::None) => s.split_whitespace().map(Value::str).collect(),
                    Some(sep) => {
                        let sep = str_arg(method, sep)?;
                        if sep.is_empty() {
                            return fail(FailureKind::Value, "empty separator");
                        }
                        s.split(sep).map(Value::str).collect()
                    }
                };
                it.check_len(parts.len())?;
                it.tick(parts.len() as u64)?;
                Ok(Value::list(parts))
            }
            "startswith" | "endswith" => {
                arity(method, &args, 1, 1)?;
                let p = str_arg(method, &args[0])?;
                Ok(Value::Bool(if method == "startswith" { s.starts_with(p) } else { s.ends_with(p) }))
            }
            "count" => {
                arity(method, &args, 1, 1)?;
                let p = str_arg(method, &args[0])?;
                let n = if p.is_empty() { s.chars().count() + 1 } else { s.matches(p).count() };
                Ok(Value::Int(n as i64))
            }
            "index" | "find" => {
                arity(method, &args, 1, 1)?;
                let p = str_arg(method, &args[0])?;
                match s.find(p) {
                    Some(byte) => Ok(Value::Int(s[..byte].chars().count() as i64)),
                    None if method == "find" => Ok(Value::Int(-1)),
                    None => fail(FailureKind::Value, "substring not found"),
                }
            }
            _ => unknown(),
        },
        Value::List(l) => match method {
            "append" => {
                arity(method, &args, 1, 1)?;
                it.check_len(l.borrow().len() + 1)?;
                l.borrow_mut().push(args.into_iter().next().unwrap());
                Ok(Value::None)
            }
            "extend" => {
                arity(method, &args, 1, 1)?;
                let items = it.iterate(&args[0])?;
                it.check_len(l.borrow().len() + items.len())?;
                it.tick(items.len() as u64)?;
                l.borrow_mut().extend(items);
                Ok(Value::None)
            }
            "insert" => {
                arity(method, &args, 2, 2)?;
                let len = l.borrow().len();
                it.check_len(len + 1)?;
                let i = int_arg(method, &args[0])?;
                let i = if i < 0 { (i + len as i64).max(0) } else { i.min(len as i64) } as usize;
                l.borrow_mut().insert(i, args[1].clone());
                Ok(Value::None)
            }
            "pop" => {
                arity(method, &args, 0, 1)?;
                let len = l.borrow().len();
                if len == 0 {
                    return fail(FailureKind::Index, "pop from empty list");
                }
                let i = match args.first() {
                    Some(a) => int_arg(method, a)?,
                    None => -1,
                };
                let j = if i < 0 { i + len as i64 } else { i };
                if j < 0 || j >= len as i64 {
                    return fail(FailureKind::Index, "pop index out of range");
                }
                Ok(l.borrow_mut().remove(j as usize))
            }
            "index" | "count" | "remove" => {
                arity(method, &args, 1, 1)?;
                let items = l.borrow().clone();
                it.tick(items.len() as u64)?;
                let pos = items.iter().position(|x| equal(x, &args[0]));
                match method {
                    "count" => Ok(Value::Int(items.iter().filter(|x| equal(x, &args[0])).count() as i64)),
                    _ => match pos {
                        Some(p) if method == "index" => Ok(Value::Int(p as i64)),
                        Some(p) => {
                            l.borrow_mut().remove(p);
                            Ok(Value::None)
                        }
                        None => fail(FailureKind::Value, format!("{} is not in list", args[0].repr())),
                    },
                }
            }
            "copy" => {
                it.tick(l.borrow().len() as u64)?;
                Ok(Value::list(l.borrow().clone()))
            }
            "reverse" => {
                l.borrow_mut().reverse();
                Ok(Value::None)
            }
            _ => unknown(),
        },
        Value::Dict(d) => {
            let key_of = |v: &Value| {
                v.key().ok_or_else(|| RunFailure::new(FailureKind::Type, format!("unhashable type: '{}'", v.type_name())))
            };
            match method {
                "get" => {
                    arity(method, &args, 1, 2)?;
                    let k = key_of(&args[0])?;
                    Ok(d.borrow().get(&k).cloned().unwrap_or_else(|| args.get(1).cloned().unwrap_or(Value::None)))
                }
                "keys" | "values" | "items" => {
                    let map = d.borrow();
                    it.tick(map.len() as u64)?;
                    Ok(Value::list(match method {
                        "keys" => map.keys().map(|k| k.to_value()).collect(),
                        "values" => map.values().cloned().collect(),
                        _ => map.iter().map(|(k, v)| Value::tuple(vec![k.to_value(), v.clone()])).collect(),
                    }))
                }
                "copy" => {
                    it.tick(d.borrow().len() as u64)?;
                    Ok(dict_value(d.borrow().clone()))
                }
                "update" => {
                    arity(method, &args, 1, 1)?;
                    let Value::Dict(other) = &args[0] else {
                        return fail(FailureKind::Type, "update() expects a dict");
                    };
                    let other = other.borrow().clone();
                    it.tick(other.len() as u64)?;
                    let mut map = d.borrow_mut();
                    map.extend(other);
                    it.check_len(map.len())?;
                    Ok(Value::None)
                }
                "pop" => {
                    arity(method, &args, 1, 2)?;
                    let k = key_of(&args[0])?;
                    let removed = d.borrow_mut().shift_remove(&k);
                    match (removed, args.get(1)) {
                        (Some(v), _) => Ok(v),
                        (None, Some(default)) => Ok(default.clone()),
                        (None, None) => fail(FailureKind::Key, format!("key {} not found", args[0].repr())),
                    }
                }
                "setdefault" => {
                    arity(method, &args, 1, 2)?;
                    let k = key_of(&args[0])?;
                    let default = args.get(1).cloned().unwrap_or(Value::None);
                    let len = d.borrow().len();
                    if !d.borrow().contains_key(&k) {
                        it.check_len(len + 1)?;
                    }
                    Ok(d.borrow_mut().entry(k).or_insert(default).clone())
                }
                _ => unknown(),
            }
        }
        _ => unknown(),
    }
}
