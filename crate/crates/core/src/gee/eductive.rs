//! Demand-driven evaluation with a warehouse.
//!
//! Every reference to a variable issues a demand keyed by the variable and
//! the current point restricted to the variable's rank. A demand already in
//! the warehouse is a hit; otherwise the evaluator claims the key, computes
//! it and stores the result. Works on lowered programs only.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeSet, HashSet};
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use super::ops::{apply_op, as_bool, as_ctx, as_dim, as_tag, initial_point, tuple_index};
use super::procedures::ProcedureHost;
use super::trace::{DemandTrace, TraceEvent};
use super::warehouse::{demand_key_of, Claim, DemandKey, Warehouse, ROOT_SUBJECT};
use super::EvalError;
use crate::context::{box_contexts, Context, ContextSet, DimensionName, TagDomain};
use crate::lang::ast::{Decl, Expr};
use crate::lang::builtins;
use crate::lang::geer::{EntryKind, Geer};
use crate::lang::value::Value;

pub const DEFAULT_MAX_DEPTH: usize = 4_000;

static NEXT_OWNER: AtomicU64 = AtomicU64::new(1);

/// A store shared with other nodes, consulted on a local miss.
pub trait RemoteStore {
    fn fetch(&self, key: &DemandKey) -> Result<Option<Value>, EvalError>;
    fn store(&self, key: &DemandKey, value: &Value) -> Result<(), EvalError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub demands: u64,
    pub remote_hits: u64,
    pub procedure_calls: u64,
}

#[derive(Clone)]
struct Arg<'g> {
    expr: &'g Expr,
    env: Env<'g>,
}

type Env<'g> = Option<Rc<Vec<(&'g str, Arg<'g>)>>>;

pub struct Eductive<'g> {
    geer: &'g Geer,
    warehouse: &'g Warehouse,
    host: &'g dyn ProcedureHost,
    remote: Option<&'g dyn RemoteStore>,
    dims: BTreeSet<DimensionName>,
    owner: u64,
    path: RefCell<HashSet<DemandKey>>,
    trace: RefCell<DemandTrace>,
    stats: Cell<EngineStats>,
    depth: Cell<usize>,
    max_depth: usize,
}

impl<'g> Eductive<'g> {
    pub fn new(geer: &'g Geer, warehouse: &'g Warehouse, host: &'g dyn ProcedureHost) -> Self {
        Eductive {
            geer,
            warehouse,
            host,
            remote: None,
            dims: geer.dimensions(),
            owner: NEXT_OWNER.fetch_add(1, Ordering::Relaxed),
            path: RefCell::new(HashSet::new()),
            trace: RefCell::new(DemandTrace::new()),
            stats: Cell::new(EngineStats::default()),
            depth: Cell::new(0),
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn with_remote(mut self, remote: &'g dyn RemoteStore) -> Self {
        self.remote = Some(remote);
        self
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn stats(&self) -> EngineStats {
        self.stats.get()
    }

    pub fn trace(&self) -> DemandTrace {
        self.trace.borrow().clone()
    }

    fn bump(&self, f: impl FnOnce(&mut EngineStats)) {
        let mut s = self.stats.get();
        f(&mut s);
        self.stats.set(s);
    }

    /// Demands `subject` (a variable or [`ROOT_SUBJECT`]) at `ctx`, where
    /// declared dimensions missing from `ctx` default to 0.
    pub fn demand(&self, subject: &str, ctx: &Context) -> Result<Value, EvalError> {
        let point = initial_point(self.geer, ctx)?;
        self.demand_at(subject, &point)
    }

    /// Demands `subject` at exactly `point`.
    pub fn demand_at(&self, subject: &str, point: &Context) -> Result<Value, EvalError> {
        let geer = self.geer;
        let body = if subject == ROOT_SUBJECT {
            geer.root()
        } else {
            match geer.entry(subject) {
                Some(e) if e.kind == EntryKind::Const => {
                    return match &e.ast {
                        Some(Expr::Literal(v)) => Ok(v.clone()),
                        _ => Err(EvalError::TypeError(format!("constant `{subject}` has no literal value"))),
                    }
                }
                Some(e) if e.kind == EntryKind::Var => e.ast.as_ref().expect("var entries carry an AST"),
                _ => return Err(EvalError::UnresolvedIdentifier(subject.to_string())),
            }
        };
        let key = demand_key_of(geer, subject, point)?;
        self.trace.borrow_mut().record(&key, TraceEvent::Issued);
        self.bump(|s| s.demands += 1);
        if self.path.borrow().contains(&key) {
            return Err(EvalError::CyclicDemand(key.to_string()));
        }
        match self.warehouse.claim(&key, self.owner) {
            Claim::Computed(v) => {
                self.trace.borrow_mut().record(&key, TraceEvent::Hit);
                Ok(v)
            }
            Claim::Cyclic => Err(EvalError::CyclicDemand(key.to_string())),
            Claim::Claimed => {
                let result = self.compute(&key, body, point);
                match &result {
                    Ok(v) => self.warehouse.complete(&key, v.clone()),
                    Err(_) => self.warehouse.abandon(&key),
                }
                result
            }
        }
    }

    #[inline(never)]
    fn compute(&self, key: &DemandKey, body: &'g Expr, point: &Context) -> Result<Value, EvalError> {
        if let Some(remote) = self.remote {
            if let Some(v) = remote.fetch(key)? {
                self.bump(|s| s.remote_hits += 1);
                self.trace.borrow_mut().record(key, TraceEvent::Hit);
                return Ok(v);
            }
        }
        self.path.borrow_mut().insert(key.clone());
        let result = self.ev(body, point, &None);
        self.path.borrow_mut().remove(key);
        let v = result?;
        if let Some(remote) = self.remote {
            remote.store(key, &v)?;
        }
        self.trace.borrow_mut().record(key, TraceEvent::Computed);
        Ok(v)
    }

    fn ev(&self, e: &'g Expr, p: &Context, env: &Env<'g>) -> Result<Value, EvalError> {
        let d = self.depth.get() + 1;
        if d > self.max_depth {
            return Err(EvalError::DepthExceeded(self.max_depth));
        }
        self.depth.set(d);
        let r = self.ev_inner(e, p, env);
        self.depth.set(d - 1);
        r
    }

    fn ev_inner(&self, e: &'g Expr, p: &Context, env: &Env<'g>) -> Result<Value, EvalError> {
        match e {
            Expr::Literal(v) => Ok(v.clone()),
            Expr::IdRef { name, .. } => {
                if let Some(bindings) = env {
                    if let Some((_, a)) = bindings.iter().find(|(n, _)| *n == name.as_str()) {
                        return self.ev(a.expr, p, &a.env);
                    }
                }
                match self.geer.entry(name) {
                    Some(entry) => match entry.kind {
                        EntryKind::Const | EntryKind::Var => self.demand_at(name, p),
                        EntryKind::Dim => Ok(Value::DimRef(DimensionName::new(name.as_str())?)),
                        EntryKind::Func | EntryKind::Proc => Ok(Value::FunRef(name.clone())),
                        EntryKind::Op => Ok(Value::OpRef(name.clone())),
                    },
                    None if builtins::is_named(name) => Ok(Value::OpRef(name.clone())),
                    None => Err(EvalError::UnresolvedIdentifier(name.clone())),
                }
            }
            Expr::OpApply(f, args) | Expr::FunCall(f, args) => {
                let callee = self.ev(f, p, env)?;
                self.call(callee, args, p, env)
            }
            Expr::If(..) | Expr::TagQuery(_) | Expr::HashNullary | Expr::At3(..) | Expr::AtCtx(..) | Expr::Where(..) => {
                self.intensional(e, p, env)
            }
            _ => self.lucx(e, p, env),
        }
    }

    #[inline(never)]
    fn intensional(&self, e: &'g Expr, p: &Context, env: &Env<'g>) -> Result<Value, EvalError> {
        match e {
            Expr::If(c, t, f) => {
                if as_bool(self.ev(c, p, env)?)? {
                    self.ev(t, p, env)
                } else {
                    self.ev(f, p, env)
                }
            }
            Expr::TagQuery(d) => {
                let d = as_dim(self.ev(d, p, env)?)?;
                Ok(p.lookup(&d)?.clone().into())
            }
            Expr::HashNullary => Ok(Value::Ctx(p.project(&self.dims))),
            Expr::At3(body, d, v) => {
                let d = as_dim(self.ev(d, p, env)?)?;
                let tag = as_tag(self.ev(v, p, env)?)?;
                self.ev(body, &p.clone().with(d, tag), env)
            }
            Expr::AtCtx(body, c) => match self.ev(c, p, env)? {
                Value::Ctx(c) => self.ev(body, &p.override_with(&c), env),
                Value::CtxSet(s) => {
                    let mut out = BTreeSet::new();
                    for c in s.iter() {
                        out.insert(self.ev(body, &p.override_with(c), env)?);
                    }
                    Ok(Value::ValueSet(out))
                }
                other => Err(EvalError::TypeError(format!(
                    "`@` expects a context or context set, found {other} ({})",
                    other.kind_name()
                ))),
            },
            Expr::Where(body, decls) => {
                let mut inner = p.clone();
                for d in decls {
                    if let Decl::Dim { name, .. } = d {
                        inner = inner.with(DimensionName::new(name.as_str())?, 0);
                    }
                }
                self.ev(body, &inner, env)
            }
            _ => unreachable!("not an intensional form"),
        }
    }

    #[inline(never)]
    fn lucx(&self, e: &'g Expr, p: &Context, env: &Env<'g>) -> Result<Value, EvalError> {
        match e {
            Expr::CtxBuild(pairs) => {
                let mut c = Context::new();
                for (d, t) in pairs {
                    let d = as_dim(self.ev(d, p, env)?)?;
                    let t = as_tag(self.ev(t, p, env)?)?;
                    c = c.with(d, t);
                }
                Ok(Value::Ctx(c))
            }
            Expr::BoxExpr(dims, pred) => {
                let mut domains = Vec::with_capacity(dims.len());
                for bd in dims {
                    let d = as_dim(self.ev(&bd.dim, p, env)?)?;
                    let values = bd
                        .domain
                        .clone()
                        .ok_or_else(|| EvalError::TypeError(format!("Box dimension `{d}` has no domain")))?;
                    domains.push(TagDomain::new(d, values)?);
                }
                let set = box_contexts(&domains, |c| as_bool(self.ev(pred, &p.override_with(c), env)?))?;
                Ok(Value::CtxSet(set))
            }
            Expr::SetExpr(es) => {
                let mut set = ContextSet::new();
                for x in es {
                    set.insert(as_ctx(self.ev(x, p, env)?)?);
                }
                Ok(Value::CtxSet(set))
            }
            Expr::TupleStream(es, d) => {
                let d = as_dim(self.ev(d, p, env)?)?;
                match tuple_index(p.lookup(&d)?, es.len())? {
                    Some(i) => self.ev(&es[i], p, env),
                    None => Ok(Value::Eod),
                }
            }
            Expr::Select(c, s) => {
                let c = as_ctx(self.ev(c, p, env)?)?;
                self.ev(s, &p.override_with(&c), env)
            }
            Expr::Dot(c, d) => {
                let c = as_ctx(self.ev(c, p, env)?)?;
                let d = as_dim(self.ev(d, p, env)?)?;
                Ok(c.dot(&d)?.into())
            }
            Expr::Navigate { op, .. } => Err(EvalError::TypeError(format!(
                "`{}` must be lowered before eductive evaluation",
                op.keyword()
            ))),
            _ => unreachable!("not a context form"),
        }
    }

    #[inline(never)]
    fn call(&self, callee: Value, args: &'g [Expr], p: &Context, env: &Env<'g>) -> Result<Value, EvalError> {
        match callee {
            Value::OpRef(op) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.ev(a, p, env)?);
                }
                apply_op(&op, vals)
            }
            Value::FunRef(name) => {
                let entry = self.geer.entry(&name).ok_or_else(|| EvalError::UnresolvedIdentifier(name.clone()))?;
                match entry.kind {
                    EntryKind::Func => {
                        if args.len() != entry.params.len() {
                            return Err(EvalError::ArityMismatch {
                                name,
                                expected: entry.params.len().to_string(),
                                found: args.len(),
                            });
                        }
                        let bindings = entry
                            .params
                            .iter()
                            .zip(args)
                            .map(|(param, a)| (param.as_str(), Arg { expr: a, env: env.clone() }))
                            .collect();
                        let body = entry.ast.as_ref().expect("func entries carry an AST");
                        self.ev(body, p, &Some(Rc::new(bindings)))
                    }
                    EntryKind::Proc => {
                        if args.len() != entry.arity {
                            return Err(EvalError::ArityMismatch {
                                name,
                                expected: entry.arity.to_string(),
                                found: args.len(),
                            });
                        }
                        let mut vals = Vec::with_capacity(args.len());
                        for a in args {
                            vals.push(self.ev(a, p, env)?);
                        }
                        self.bump(|s| s.procedure_calls += 1);
                        self.host.call_procedure(&name, &vals)
                    }
                    _ => Err(EvalError::TypeError(format!("`{name}` is not callable"))),
                }
            }
            other => Err(EvalError::TypeError(format!("{other} ({}) is not callable", other.kind_name()))),
        }
    }
}

/// Demands `subject` at `ctx` and returns its value with the demand trace.
pub fn eval_eductive(
    geer: &Geer,
    subject: &str,
    ctx: &Context,
    warehouse: &Warehouse,
    host: &dyn ProcedureHost,
) -> Result<(Value, DemandTrace), EvalError> {
    let engine = Eductive::new(geer, warehouse, host);
    let v = engine.demand(subject, ctx)?;
    Ok((v, engine.trace()))
}
