//! Operator algebra and value helpers shared by both evaluators.

use std::cmp::Ordering;

use super::EvalError;
use crate::context::{Context, ContextSet, DimensionName, Tag};
use crate::lang::builtins::{self, OpClass};
use crate::lang::geer::Geer;
use crate::lang::value::Value;

/// The evaluation point a program starts from: every declared dimension at
/// tag 0, overridden by `ctx`.
pub fn initial_point(geer: &Geer, ctx: &Context) -> Result<Context, EvalError> {
    for d in ctx.dims() {
        if !geer.is_dimension(d.as_str()) {
            return Err(EvalError::UnboundDimension(format!("`{d}` is not a declared dimension")));
        }
    }
    let base = Context::from_pairs(geer.dimensions().into_iter().map(|d| (d, Tag::Int(0))));
    Ok(base.override_with(ctx))
}

pub fn as_dim(v: Value) -> Result<DimensionName, EvalError> {
    match v {
        Value::DimRef(d) => Ok(d),
        other => Err(EvalError::NonDimensionAt(format!("{other} ({})", other.kind_name()))),
    }
}

pub fn as_tag(v: Value) -> Result<Tag, EvalError> {
    v.to_tag().ok_or_else(|| EvalError::TypeError(format!("{v} ({}) cannot be used as a tag", v.kind_name())))
}

pub fn as_bool(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::NotABoolean(format!("{other} ({})", other.kind_name()))),
    }
}

pub fn as_ctx(v: Value) -> Result<Context, EvalError> {
    match v {
        Value::Ctx(c) => Ok(c),
        other => Err(EvalError::TypeError(format!("expected a context, found {other} ({})", other.kind_name()))),
    }
}

fn as_set(v: Value) -> Result<ContextSet, EvalError> {
    match v {
        Value::CtxSet(s) => Ok(s),
        other => Err(EvalError::TypeError(format!("expected a context set, found {other} ({})", other.kind_name()))),
    }
}

/// Element of a tuple stream at integer tag `i`: element `i` (0-based)
/// while in range, `eod` past the end, the first element before 0.
pub fn tuple_index(tag: &Tag, len: usize) -> Result<Option<usize>, EvalError> {
    let i = tag
        .as_int()
        .ok_or_else(|| EvalError::TypeError(format!("tuple stream indexed by non-integer tag {tag}")))?;
    Ok(match i {
        i if i < 0 => Some(0),
        i if (i as u128) < len as u128 => Some(i as usize),
        _ => None,
    })
}

pub fn op_class(name: &str) -> Option<OpClass> {
    builtins::lookup(name).map(|o| o.class)
}

fn type_error(op: &str, args: &[Value]) -> EvalError {
    let kinds: Vec<String> = args.iter().map(|a| format!("{a} ({})", a.kind_name())).collect();
    EvalError::TypeError(format!("operator `{op}` cannot be applied to {}", kinds.join(", ")))
}

fn numeric(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(f) => Some(*f),
        _ => None,
    }
}

fn overflow(op: &str) -> EvalError {
    EvalError::TypeError(format!("integer overflow in `{op}`"))
}

fn arith(op: &str, a: &Value, b: &Value) -> Result<Value, EvalError> {
    if matches!(a, Value::Eod) || matches!(b, Value::Eod) {
        return Err(EvalError::EodArith(format!("`{op}` applied to {a} and {b}")));
    }
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                "+" => x.checked_add(*y),
                "-" => x.checked_sub(*y),
                "*" => x.checked_mul(*y),
                "/" | "%" if *y == 0 => return Err(EvalError::DivisionByZero),
                "/" => x.checked_div(*y),
                _ => x.checked_rem(*y),
            };
            r.map(Value::Int).ok_or_else(|| overflow(op))
        }
        (Value::Str(x), Value::Str(y)) if op == "+" => Ok(Value::Str(format!("{x}{y}"))),
        _ => match (numeric(a), numeric(b)) {
            (Some(x), Some(y)) => Ok(Value::Float(match op {
                "+" => x + y,
                "-" => x - y,
                "*" => x * y,
                "/" => x / y,
                _ => x % y,
            })),
            _ => Err(type_error(op, &[a.clone(), b.clone()])),
        },
    }
}

/// `==` compares numbers by value across int and float, everything else
/// structurally.
fn equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(_), Value::Float(_)) | (Value::Float(_), Value::Int(_)) => numeric(a) == numeric(b),
        _ => a == b,
    }
}

fn compare(op: &str, a: &Value, b: &Value) -> Result<Value, EvalError> {
    if matches!(a, Value::Eod) || matches!(b, Value::Eod) {
        return Err(EvalError::EodArith(format!("`{op}` applied to {a} and {b}")));
    }
    let ord = match (a, b) {
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(y)),
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        _ => match (numeric(a), numeric(b)) {
            (Some(x), Some(y)) => x.partial_cmp(&y),
            _ => return Err(type_error(op, &[a.clone(), b.clone()])),
        },
    };
    let Some(ord) = ord else { return Ok(Value::Bool(false)) };
    Ok(Value::Bool(match op {
        "<" => ord == Ordering::Less,
        "<=" => ord != Ordering::Greater,
        ">" => ord == Ordering::Greater,
        _ => ord != Ordering::Less,
    }))
}

/// Applies a built-in operator to evaluated arguments.
pub fn apply_op(name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
    let info = builtins::lookup(name).ok_or_else(|| EvalError::UnresolvedIdentifier(name.to_string()))?;
    if !info.arity.accepts(args.len()) {
        let expected = match info.arity {
            builtins::Arity::Exactly(n) => n.to_string(),
            builtins::Arity::AtLeast(n) => format!("at least {n}"),
        };
        return Err(EvalError::ArityMismatch { name: name.to_string(), expected, found: args.len() });
    }
    match (name, args.as_slice()) {
        ("+" | "-" | "*" | "/" | "%", [a, b]) => arith(name, a, b),
        ("==", [a, b]) => Ok(Value::Bool(equal(a, b))),
        ("!=", [a, b]) => Ok(Value::Bool(!equal(a, b))),
        ("<" | "<=" | ">" | ">=", [a, b]) => compare(name, a, b),
        ("&&" | "||", [Value::Bool(a), Value::Bool(b)]) => {
            Ok(Value::Bool(if name == "&&" { *a && *b } else { *a || *b }))
        }
        ("!", [Value::Bool(a)]) => Ok(Value::Bool(!a)),
        ("neg", [Value::Int(i)]) => i.checked_neg().map(Value::Int).ok_or_else(|| overflow("neg")),
        ("neg", [Value::Float(f)]) => Ok(Value::Float(-f)),
        ("neg", [Value::Eod]) => Err(EvalError::EodArith("negation of eod".into())),
        ("iseod", [v]) => Ok(Value::Bool(matches!(v, Value::Eod))),
        ("merge", _) => {
            let mut it = args.into_iter();
            let a = as_ctx(it.next().unwrap())?;
            let b = as_ctx(it.next().unwrap())?;
            Ok(Value::Ctx(a.merge(&b)?))
        }
        ("override", _) => {
            let mut it = args.into_iter();
            let a = as_ctx(it.next().unwrap())?;
            let b = as_ctx(it.next().unwrap())?;
            Ok(Value::Ctx(a.override_with(&b)))
        }
        ("project" | "hide", _) => {
            let mut it = args.into_iter();
            let c = as_ctx(it.next().unwrap())?;
            let dims = it.map(as_dim).collect::<Result<Vec<_>, _>>()?;
            Ok(Value::Ctx(if name == "project" { c.project(&dims) } else { c.hide(&dims) }))
        }
        ("union" | "intersect" | "difference", _) => {
            let mut it = args.into_iter();
            let a = as_set(it.next().unwrap())?;
            let b = as_set(it.next().unwrap())?;
            Ok(Value::CtxSet(match name {
                "union" => a.union(&b),
                "intersect" => a.intersect(&b),
                _ => a.difference(&b),
            }))
        }
        _ => Err(type_error(name, &args)),
    }
}
