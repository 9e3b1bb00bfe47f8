//! Native procedures callable from programs (`procedure name/k;`).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::EvalError;
use crate::lang::value::Value;

pub type NativeFn = Arc<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>;

#[derive(Clone)]
pub struct Procedure {
    pub arity: usize,
    pub func: NativeFn,
}

impl fmt::Debug for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Procedure").field("arity", &self.arity).finish_non_exhaustive()
    }
}

/// Where procedural demands are sent. Locally this is a registry; inside a
/// generator tier it forwards the demand to a worker.
pub trait ProcedureHost {
    fn call_procedure(&self, name: &str, args: &[Value]) -> Result<Value, EvalError>;
}

#[derive(Debug, Clone, Default)]
pub struct ProcedureRegistry {
    procs: BTreeMap<String, Procedure>,
}

impl ProcedureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// A registry preloaded with [`standard_procedures`].
    pub fn standard() -> Self {
        let mut reg = Self::new();
        for (name, p) in standard_procedures() {
            reg.procs.insert(name.to_string(), p);
        }
        reg
    }

    pub fn register<F>(&mut self, name: &str, arity: usize, f: F) -> Result<(), EvalError>
    where
        F: Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    {
        self.register_procedure(name, Procedure { arity, func: Arc::new(f) })
    }

    pub fn register_procedure(&mut self, name: &str, p: Procedure) -> Result<(), EvalError> {
        if self.procs.contains_key(name) {
            return Err(EvalError::DuplicateProcedure(name.to_string()));
        }
        self.procs.insert(name.to_string(), p);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Procedure> {
        self.procs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.procs.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.procs.keys().map(String::as_str)
    }

    pub fn call(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        let p = self.procs.get(name).ok_or_else(|| EvalError::UnknownProcedure(name.to_string()))?;
        invoke(name, p, args)
    }
}

/// Runs a procedure after checking its arity.
pub fn invoke(name: &str, p: &Procedure, args: &[Value]) -> Result<Value, EvalError> {
    if args.len() != p.arity {
        return Err(EvalError::ArityMismatch { name: name.to_string(), expected: p.arity.to_string(), found: args.len() });
    }
    (p.func)(args).map_err(|message| EvalError::ProcedureFailed { name: name.to_string(), message })
}

impl ProcedureHost for ProcedureRegistry {
    fn call_procedure(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        self.call(name, args)
    }
}

fn num(v: &Value) -> Result<f64, String> {
    match v {
        Value::Int(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        other => Err(format!("expected a number, found {other}")),
    }
}

fn int(v: &Value) -> Result<i64, String> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(format!("expected an integer, found {other}")),
    }
}

fn proc<F>(arity: usize, f: F) -> Procedure
where
    F: Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
{
    Procedure { arity, func: Arc::new(f) }
}

/// The procedure catalog every node can load on demand.
pub fn standard_procedures() -> Vec<(&'static str, Procedure)> {
    vec![
        ("hypot", proc(2, |a| Ok(Value::Float(num(&a[0])?.hypot(num(&a[1])?))))),
        ("sqrt", proc(1, |a| Ok(Value::Float(num(&a[0])?.sqrt())))),
        (
            "square",
            proc(1, |a| match &a[0] {
                Value::Int(i) => i.checked_mul(*i).map(Value::Int).ok_or_else(|| "overflow".to_string()),
                other => Ok(Value::Float(num(other)?.powi(2))),
            }),
        ),
        (
            "abs",
            proc(1, |a| match &a[0] {
                Value::Int(i) => i.checked_abs().map(Value::Int).ok_or_else(|| "overflow".to_string()),
                other => Ok(Value::Float(num(other)?.abs())),
            }),
        ),
        (
            "max",
            proc(2, |a| Ok(if num(&a[0])? >= num(&a[1])? { a[0].clone() } else { a[1].clone() })),
        ),
        (
            "min",
            proc(2, |a| Ok(if num(&a[0])? <= num(&a[1])? { a[0].clone() } else { a[1].clone() })),
        ),
        (
            "collatz",
            proc(1, |a| {
                let mut n = int(&a[0])?;
                if n < 1 {
                    return Err("collatz needs a positive integer".into());
                }
                let mut steps = 0i64;
                while n != 1 {
                    n = if n % 2 == 0 { n / 2 } else { n.checked_mul(3).and_then(|m| m.checked_add(1)).ok_or("overflow")? };
                    steps += 1;
                }
                Ok(Value::Int(steps))
            }),
        ),
        (
            "concat",
            proc(2, |a| match (&a[0], &a[1]) {
                (Value::Str(x), Value::Str(y)) => Ok(Value::Str(format!("{x}{y}"))),
                (x, y) => Ok(Value::Str(format!("{x}{y}"))),
            }),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypot_identity() {
        let reg = ProcedureRegistry::standard();
        assert_eq!(reg.call("hypot", &[Value::Int(3), Value::Int(4)]), Ok(Value::Float(5.0)));
    }

    #[test]
    fn duplicate_registration() {
        let mut reg = ProcedureRegistry::new();
        reg.register("hypot", 2, |_| Ok(Value::Int(0))).unwrap();
        assert_eq!(
            reg.register("hypot", 2, |_| Ok(Value::Int(0))),
            Err(EvalError::DuplicateProcedure("hypot".into()))
        );
    }

    #[test]
    fn arity_and_unknown() {
        let reg = ProcedureRegistry::standard();
        assert!(matches!(reg.call("hypot", &[Value::Int(3)]), Err(EvalError::ArityMismatch { .. })));
        assert_eq!(reg.call("nope", &[]), Err(EvalError::UnknownProcedure("nope".into())));
        assert_eq!(reg.call("collatz", &[Value::Int(6)]), Ok(Value::Int(8)));
    }
}
