//! Reference big-step interpreter.
//!
//! Evaluates directly over the dictionary with no memoization. It accepts
//! both lowered programs and surface programs that still contain the
//! navigation operators, and records which semantic rule each step used.

use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

use super::ops::{self, apply_op, as_bool, as_ctx, as_dim, as_tag, initial_point, tuple_index};
use super::procedures::ProcedureHost;
use super::EvalError;
use crate::context::{box_contexts, Context, ContextSet, DimensionName, Tag, TagDomain};
use crate::lang::ast::{Decl, Expr, NavOp};
use crate::lang::builtins::{self, OpClass};
use crate::lang::geer::{EntryKind, Geer};
use crate::lang::value::Value;

/// The rules of the operational semantics, GIPL first, then Lucx.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    ECid,
    EOpid,
    EDid,
    EFid,
    EVid,
    ECT,
    ECF,
    ETag,
    EAt,
    EW,
    QDim,
    QId,
    QQ,
    EOp,
    EFct,
    EHash,
    EDot,
    ETuple,
    ESelect,
    EAtC,
    EAtS,
    CContext,
    CBox,
    CSet,
    COp,
    CSop,
}

impl Rule {
    pub const GIPL: [Rule; 15] = [
        Rule::ECid,
        Rule::EOpid,
        Rule::EDid,
        Rule::EFid,
        Rule::EVid,
        Rule::ECT,
        Rule::ECF,
        Rule::ETag,
        Rule::EAt,
        Rule::EW,
        Rule::QDim,
        Rule::QId,
        Rule::QQ,
        Rule::EOp,
        Rule::EFct,
    ];

    pub const LUCX: [Rule; 11] = [
        Rule::EHash,
        Rule::EDot,
        Rule::ETuple,
        Rule::ESelect,
        Rule::EAtC,
        Rule::EAtS,
        Rule::CContext,
        Rule::CBox,
        Rule::CSet,
        Rule::COp,
        Rule::CSop,
    ];

    pub fn all() -> impl Iterator<Item = Rule> {
        Rule::GIPL.into_iter().chain(Rule::LUCX)
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::ECid => "E_cid",
            Rule::EOpid => "E_opid",
            Rule::EDid => "E_did",
            Rule::EFid => "E_fid",
            Rule::EVid => "E_vid",
            Rule::ECT => "E_cT",
            Rule::ECF => "E_cF",
            Rule::ETag => "E_tag",
            Rule::EAt => "E_at",
            Rule::EW => "E_w",
            Rule::QDim => "Q_dim",
            Rule::QId => "Q_id",
            Rule::QQ => "QQ",
            Rule::EOp => "E_op",
            Rule::EFct => "E_fct",
            Rule::EHash => "E_#",
            Rule::EDot => "E_.",
            Rule::ETuple => "E_tuple",
            Rule::ESelect => "E_select",
            Rule::EAtC => "E_at(c)",
            Rule::EAtS => "E_at(s)",
            Rule::CContext => "C_context",
            Rule::CBox => "C_box",
            Rule::CSet => "C_set",
            Rule::COp => "C_op",
            Rule::CSop => "C_sop",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_MAX_DEPTH: usize = 4_000;

/// Upper bound on the tags scanned by `wvr`/`asa` before giving up.
const MAX_SCAN: i64 = 100_000;

#[derive(Clone)]
struct Thunk<'g> {
    expr: &'g Expr,
    frame: Frame<'g>,
}

/// Actual parameters of the function call being evaluated, if any.
type Frame<'g> = Option<Rc<Vec<(&'g str, Thunk<'g>)>>>;

pub struct Naive<'g> {
    geer: &'g Geer,
    host: &'g dyn ProcedureHost,
    dims: BTreeSet<DimensionName>,
    coverage: RefCell<BTreeSet<Rule>>,
    depth: Cell<usize>,
    max_depth: usize,
}

struct DepthGuard<'a>(&'a Cell<usize>);

impl Drop for DepthGuard<'_> {
    fn drop(&mut self) {
        self.0.set(self.0.get() - 1);
    }
}

impl<'g> Naive<'g> {
    pub fn new(geer: &'g Geer, host: &'g dyn ProcedureHost) -> Self {
        Naive {
            geer,
            host,
            dims: geer.dimensions(),
            coverage: RefCell::new(BTreeSet::new()),
            depth: Cell::new(0),
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    /// Rules used so far.
    pub fn coverage(&self) -> BTreeSet<Rule> {
        self.coverage.borrow().clone()
    }

    fn hit(&self, rule: Rule) {
        self.coverage.borrow_mut().insert(rule);
    }

    /// Evaluates the program's root at `ctx` (declared dimensions not in
    /// `ctx` start at 0).
    pub fn run(&self, ctx: &Context) -> Result<Value, EvalError> {
        let entries = self.geer.entries();
        let mut declared = 0;
        for e in entries.values() {
            match e.kind {
                EntryKind::Dim => self.hit(Rule::QDim),
                EntryKind::Var | EntryKind::Const | EntryKind::Func => self.hit(Rule::QId),
                _ => {}
            }
            declared += 1;
        }
        if declared > 1 {
            self.hit(Rule::QQ);
        }
        if declared > 0 {
            self.hit(Rule::EW);
        }
        let point = initial_point(self.geer, ctx)?;
        self.eval_at(self.geer.root(), &point)
    }

    /// Evaluates `e` at exactly `point`, outside any function call.
    pub fn eval_at(&self, e: &'g Expr, point: &Context) -> Result<Value, EvalError> {
        self.ev(e, point, &None)
    }

    fn enter(&self) -> Result<DepthGuard<'_>, EvalError> {
        let d = self.depth.get() + 1;
        if d > self.max_depth {
            return Err(EvalError::DepthExceeded(self.max_depth));
        }
        self.depth.set(d);
        Ok(DepthGuard(&self.depth))
    }

    fn ev(&self, e: &'g Expr, p: &Context, frame: &Frame<'g>) -> Result<Value, EvalError> {
        let _guard = self.enter()?;
        match e {
            Expr::Literal(v) => {
                self.hit(Rule::ECid);
                Ok(v.clone())
            }
            Expr::IdRef { name, .. } => self.identifier(name, p, frame),
            Expr::OpApply(f, args) | Expr::FunCall(f, args) => self.application(f, args, p, frame),
            Expr::Navigate { op, dim, args } => self.navigate(*op, dim, args, p, frame),
            Expr::If(..) | Expr::TagQuery(_) | Expr::HashNullary | Expr::At3(..) | Expr::AtCtx(..) | Expr::Where(..) => {
                self.intensional(e, p, frame)
            }
            _ => self.lucx(e, p, frame),
        }
    }

    #[inline(never)]
    fn application(&self, f: &'g Expr, args: &'g [Expr], p: &Context, frame: &Frame<'g>) -> Result<Value, EvalError> {
        let callee = match f {
            Expr::Literal(Value::OpRef(op)) => {
                self.hit(Rule::EOpid);
                Value::OpRef(op.clone())
            }
            other => self.ev(other, p, frame)?,
        };
        self.apply(callee, args, p, frame)
    }

    #[inline(never)]
    fn intensional(&self, e: &'g Expr, p: &Context, frame: &Frame<'g>) -> Result<Value, EvalError> {
        match e {
            Expr::If(c, t, f) => {
                if as_bool(self.ev(c, p, frame)?)? {
                    self.hit(Rule::ECT);
                    self.ev(t, p, frame)
                } else {
                    self.hit(Rule::ECF);
                    self.ev(f, p, frame)
                }
            }
            Expr::TagQuery(d) => {
                let d = as_dim(self.ev(d, p, frame)?)?;
                self.hit(Rule::ETag);
                Ok(p.lookup(&d)?.clone().into())
            }
            Expr::HashNullary => {
                self.hit(Rule::EHash);
                Ok(Value::Ctx(p.project(&self.dims)))
            }
            Expr::At3(body, d, v) => {
                let d = as_dim(self.ev(d, p, frame)?)?;
                let tag = as_tag(self.ev(v, p, frame)?)?;
                self.hit(Rule::EAt);
                self.ev(body, &p.clone().with(d, tag), frame)
            }
            Expr::AtCtx(body, c) => match self.ev(c, p, frame)? {
                Value::Ctx(c) => {
                    self.hit(Rule::EAtC);
                    self.ev(body, &p.override_with(&c), frame)
                }
                Value::CtxSet(s) => {
                    self.hit(Rule::EAtS);
                    let mut out = BTreeSet::new();
                    for c in s.iter() {
                        out.insert(self.ev(body, &p.override_with(c), frame)?);
                    }
                    Ok(Value::ValueSet(out))
                }
                other => Err(EvalError::TypeError(format!(
                    "`@` expects a context or context set, found {other} ({})",
                    other.kind_name()
                ))),
            },
            Expr::Where(body, decls) => {
                self.hit(Rule::EW);
                let mut inner = p.clone();
                let mut n = 0;
                for d in decls {
                    if let Decl::Dim { name, .. } = d {
                        self.hit(Rule::QDim);
                        inner = inner.with(DimensionName::new(name.clone())?, 0);
                        n += 1;
                    }
                }
                if n > 1 {
                    self.hit(Rule::QQ);
                }
                self.ev(body, &inner, frame)
            }
            _ => unreachable!("not an intensional form"),
        }
    }

    #[inline(never)]
    fn lucx(&self, e: &'g Expr, p: &Context, frame: &Frame<'g>) -> Result<Value, EvalError> {
        match e {
            Expr::CtxBuild(pairs) => {
                let mut c = Context::new();
                for (d, t) in pairs {
                    let d = as_dim(self.ev(d, p, frame)?)?;
                    let t = as_tag(self.ev(t, p, frame)?)?;
                    c = c.with(d, t);
                }
                self.hit(Rule::CContext);
                Ok(Value::Ctx(c))
            }
            Expr::BoxExpr(dims, pred) => {
                let mut domains = Vec::with_capacity(dims.len());
                for bd in dims {
                    let d = as_dim(self.ev(&bd.dim, p, frame)?)?;
                    let values = bd
                        .domain
                        .clone()
                        .ok_or_else(|| EvalError::TypeError(format!("Box dimension `{d}` has no domain")))?;
                    domains.push(TagDomain::new(d, values)?);
                }
                self.hit(Rule::CBox);
                let set = box_contexts(&domains, |c| as_bool(self.ev(pred, &p.override_with(c), frame)?))?;
                Ok(Value::CtxSet(set))
            }
            Expr::SetExpr(es) => {
                let mut set = ContextSet::new();
                for x in es {
                    set.insert(as_ctx(self.ev(x, p, frame)?)?);
                }
                self.hit(Rule::CSet);
                Ok(Value::CtxSet(set))
            }
            Expr::TupleStream(es, d) => {
                let d = as_dim(self.ev(d, p, frame)?)?;
                self.hit(Rule::ETuple);
                match tuple_index(p.lookup(&d)?, es.len())? {
                    Some(i) => self.ev(&es[i], p, frame),
                    None => Ok(Value::Eod),
                }
            }
            Expr::Select(c, s) => {
                let c = as_ctx(self.ev(c, p, frame)?)?;
                self.hit(Rule::ESelect);
                self.ev(s, &p.override_with(&c), frame)
            }
            Expr::Dot(c, d) => {
                let c = as_ctx(self.ev(c, p, frame)?)?;
                let d = as_dim(self.ev(d, p, frame)?)?;
                self.hit(Rule::EDot);
                Ok(c.dot(&d)?.into())
            }
            _ => unreachable!("not a context form"),
        }
    }

    #[inline(never)]
    fn identifier(&self, name: &'g str, p: &Context, frame: &Frame<'g>) -> Result<Value, EvalError> {
        if let Some(f) = frame {
            if let Some((_, thunk)) = f.iter().find(|(n, _)| *n == name) {
                return self.ev(thunk.expr, p, &thunk.frame);
            }
        }
        match self.geer.entry(name) {
            Some(entry) => match entry.kind {
                EntryKind::Const => {
                    self.hit(Rule::ECid);
                    match &entry.ast {
                        Some(Expr::Literal(v)) => Ok(v.clone()),
                        _ => Err(EvalError::TypeError(format!("constant `{name}` has no literal value"))),
                    }
                }
                EntryKind::Var => {
                    self.hit(Rule::EVid);
                    let ast = entry.ast.as_ref().expect("var entries carry an AST");
                    self.ev(ast, p, &None)
                }
                EntryKind::Dim => {
                    self.hit(Rule::EDid);
                    Ok(Value::DimRef(DimensionName::new(name)?))
                }
                EntryKind::Func | EntryKind::Proc => {
                    self.hit(Rule::EFid);
                    Ok(Value::FunRef(name.to_string()))
                }
                EntryKind::Op => {
                    self.hit(Rule::EOpid);
                    Ok(Value::OpRef(name.to_string()))
                }
            },
            None if builtins::is_named(name) => {
                self.hit(Rule::EOpid);
                Ok(Value::OpRef(name.to_string()))
            }
            None => Err(EvalError::UnresolvedIdentifier(name.to_string())),
        }
    }

    #[inline(never)]
    fn apply(&self, callee: Value, args: &'g [Expr], p: &Context, frame: &Frame<'g>) -> Result<Value, EvalError> {
        match callee {
            Value::OpRef(op) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.ev(a, p, frame)?);
                }
                self.hit(match ops::op_class(&op) {
                    Some(OpClass::Context) => Rule::COp,
                    Some(OpClass::Set) => Rule::CSop,
                    _ => Rule::EOp,
                });
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
                        self.hit(Rule::EFct);
                        let bindings = entry
                            .params
                            .iter()
                            .zip(args)
                            .map(|(param, a)| (param.as_str(), Thunk { expr: a, frame: frame.clone() }))
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
                            vals.push(self.ev(a, p, frame)?);
                        }
                        self.host.call_procedure(&name, &vals)
                    }
                    _ => Err(EvalError::TypeError(format!("`{name}` is not callable"))),
                }
            }
            other => Err(EvalError::TypeError(format!("{other} ({}) is not callable", other.kind_name()))),
        }
    }

    #[inline(never)]
    fn navigate(
        &self,
        op: NavOp,
        dim: &str,
        args: &'g [Expr],
        p: &Context,
        frame: &Frame<'g>,
    ) -> Result<Value, EvalError> {
        let d = DimensionName::new(dim)?;
        let cur = match p.lookup(&d)? {
            Tag::Int(i) => *i,
            other => return Err(EvalError::TypeError(format!("`{}.{dim}` at non-integer tag {other}", op.keyword()))),
        };
        let at = |i: i64| p.clone().with(d.clone(), i);
        let holds = |y: &'g Expr, i: i64| -> Result<bool, EvalError> { as_bool(self.ev(y, &at(i), frame)?) };
        match op {
            NavOp::First => self.ev(&args[0], &at(0), frame),
            NavOp::Next => self.ev(&args[0], &at(cur + 1), frame),
            NavOp::Prev => self.ev(&args[0], &at(cur - 1), frame),
            NavOp::Fby => {
                if cur <= 0 {
                    self.ev(&args[0], p, frame)
                } else {
                    self.ev(&args[1], &at(cur - 1), frame)
                }
            }
            NavOp::Wvr | NavOp::Asa => {
                let wanted = if op == NavOp::Asa { 0 } else { cur.max(0) };
                let mut seen = 0;
                for j in 0..MAX_SCAN {
                    if holds(&args[1], j)? {
                        if seen >= wanted {
                            return self.ev(&args[0], &at(j), frame);
                        }
                        seen += 1;
                    }
                }
                Err(EvalError::DepthExceeded(MAX_SCAN as usize))
            }
            NavOp::Upon => {
                let mut n = 0;
                for j in 0..cur.max(0) {
                    if holds(&args[1], j)? {
                        n += 1;
                    }
                }
                self.ev(&args[0], &at(n), frame)
            }
        }
    }
}

/// Evaluates a program's root at `ctx`.
pub fn eval_naive(geer: &Geer, ctx: &Context, host: &dyn ProcedureHost) -> Result<Value, EvalError> {
    Naive::new(geer, host).run(ctx)
}
