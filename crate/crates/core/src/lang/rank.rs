//! Syntactic rank (free-dimension) analysis.
//!
//! The rank of an expression over-approximates the set of dimensions whose
//! tag in the evaluation point can influence its value. Whenever the
//! dimension cannot be determined syntactically (dimension-valued
//! parameters, `#`, calls through function values) the rank is every
//! declared dimension.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::context::DimensionName;
use crate::lang::ast::{Decl, Expr};
use crate::lang::builtins;
use crate::lang::geer::{EntryKind, Geer, GeerEntry};
use crate::lang::value::Value;

pub type Rank = BTreeSet<DimensionName>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unresolved identifier `{0}`")]
pub struct UnresolvedIdentifier(pub String);

struct RankCtx<'a> {
    entries: &'a BTreeMap<String, GeerEntry>,
    ranks: &'a BTreeMap<String, Rank>,
    all: &'a Rank,
}

impl RankCtx<'_> {
    fn dim_of(&self, e: &Expr, params: &[String]) -> Option<DimensionName> {
        match e {
            Expr::IdRef { name, .. } if !params.contains(name) => match self.entries.get(name) {
                Some(entry) if entry.kind == EntryKind::Dim => DimensionName::new(name.clone()).ok(),
                _ => None,
            },
            _ => None,
        }
    }

    fn callee_rank(&self, f: &Expr, params: &[String]) -> Result<Rank, UnresolvedIdentifier> {
        match f {
            Expr::Literal(Value::OpRef(_)) => Ok(Rank::new()),
            Expr::IdRef { name, .. } if !params.contains(name) => {
                if builtins::is_named(name) && !self.entries.contains_key(name) {
                    return Ok(Rank::new());
                }
                match self.entries.get(name).map(|e| e.kind) {
                    Some(EntryKind::Func) => Ok(self.ranks.get(name).cloned().unwrap_or_default()),
                    Some(EntryKind::Proc) | Some(EntryKind::Op) => Ok(Rank::new()),
                    Some(_) => Ok(self.all.clone()),
                    None => Err(UnresolvedIdentifier(name.clone())),
                }
            }
            _ => Ok(self.all.clone()),
        }
    }

    fn dims(&self, e: &Expr, params: &[String]) -> Result<Rank, UnresolvedIdentifier> {
        let union = |parts: &[&Expr]| -> Result<Rank, UnresolvedIdentifier> {
            let mut r = Rank::new();
            for p in parts {
                r.extend(self.dims(p, params)?);
            }
            Ok(r)
        };
        let nav_dim = |d: &Expr| -> Rank {
            match self.dim_of(d, params) {
                Some(dim) => Rank::from([dim]),
                None => self.all.clone(),
            }
        };
        Ok(match e {
            Expr::HashNullary => self.all.clone(),
            Expr::Literal(_) => Rank::new(),
            Expr::IdRef { name, .. } => {
                if params.contains(name) {
                    Rank::new()
                } else if let Some(entry) = self.entries.get(name) {
                    match entry.kind {
                        EntryKind::Var | EntryKind::Const => self.ranks.get(name).cloned().unwrap_or_default(),
                        _ => Rank::new(),
                    }
                } else if builtins::is_named(name) {
                    Rank::new()
                } else {
                    return Err(UnresolvedIdentifier(name.clone()));
                }
            }
            Expr::OpApply(f, args) | Expr::FunCall(f, args) => {
                let mut r = self.callee_rank(f, params)?;
                if !matches!(**f, Expr::Literal(_) | Expr::IdRef { .. }) {
                    r.extend(self.dims(f, params)?);
                }
                for a in args {
                    r.extend(self.dims(a, params)?);
                }
                r
            }
            Expr::If(a, b, c) => union(&[a, b, c])?,
            Expr::TagQuery(d) => {
                let mut r = nav_dim(d);
                r.extend(self.dims(d, params)?);
                r
            }
            Expr::At3(body, d, v) => {
                let mut r = union(&[body, d, v])?;
                r.extend(nav_dim(d));
                r
            }
            Expr::AtCtx(a, b) | Expr::Select(a, b) | Expr::Dot(a, b) => union(&[a, b])?,
            Expr::Where(body, decls) => {
                let mut r = self.dims(body, params)?;
                for d in decls {
                    match d {
                        Decl::Dim { name, .. } => {
                            r.remove(name.as_str());
                        }
                        // unhoisted declarations: their references are
                        // accounted for where the body mentions them
                        Decl::Var { .. } | Decl::Fun { .. } | Decl::Proc { .. } => {}
                    }
                }
                r
            }
            Expr::CtxBuild(pairs) => {
                let mut r = Rank::new();
                for (d, t) in pairs {
                    r.extend(self.dims(d, params)?);
                    r.extend(self.dims(t, params)?);
                }
                r
            }
            Expr::BoxExpr(dims, pred) => {
                let mut r = self.dims(pred, params)?;
                for bd in dims {
                    r.extend(self.dims(&bd.dim, params)?);
                }
                r
            }
            Expr::SetExpr(es) => {
                let mut r = Rank::new();
                for x in es {
                    r.extend(self.dims(x, params)?);
                }
                r
            }
            Expr::TupleStream(es, d) => {
                let mut r = nav_dim(d);
                for x in es {
                    r.extend(self.dims(x, params)?);
                }
                r
            }
            Expr::Navigate { dim, args, .. } => {
                let mut r = match self.entries.get(dim) {
                    Some(e) if e.kind == EntryKind::Dim => {
                        Rank::from([DimensionName::new(dim.clone()).map_err(|_| UnresolvedIdentifier(dim.clone()))?])
                    }
                    _ => return Err(UnresolvedIdentifier(dim.clone())),
                };
                for a in args {
                    r.extend(self.dims(a, params)?);
                }
                r
            }
        })
    }
}

fn all_dims(entries: &BTreeMap<String, GeerEntry>) -> Rank {
    entries
        .iter()
        .filter(|(_, e)| e.kind == EntryKind::Dim)
        .filter_map(|(n, _)| DimensionName::new(n.clone()).ok())
        .collect()
}

/// Computes the rank of every var/const/func entry as a least fixed point
/// over the (possibly mutually recursive) definitions.
pub fn compute_ranks(entries: &BTreeMap<String, GeerEntry>) -> Result<BTreeMap<String, Rank>, UnresolvedIdentifier> {
    let all = all_dims(entries);
    let mut ranks: BTreeMap<String, Rank> = entries
        .iter()
        .filter(|(_, e)| e.ast.is_some())
        .map(|(n, _)| (n.clone(), Rank::new()))
        .collect();
    loop {
        let mut changed = false;
        for (name, entry) in entries {
            let Some(ast) = &entry.ast else { continue };
            let ctx = RankCtx { entries, ranks: &ranks, all: &all };
            let r = ctx.dims(ast, &entry.params)?;
            if ranks.get(name) != Some(&r) {
                // monotone: ranks only grow
                let cur = ranks.entry(name.clone()).or_default();
                let before = cur.len();
                cur.extend(r);
                changed |= cur.len() != before;
            }
        }
        if !changed {
            return Ok(ranks);
        }
    }
}

/// Free dimensions of `e` under the ranks recorded in `geer`.
pub fn free_dims(e: &Expr, geer: &Geer) -> Result<Rank, UnresolvedIdentifier> {
    let ranks: BTreeMap<String, Rank> =
        geer.entries().iter().map(|(n, entry)| (n.clone(), entry.rank.clone())).collect();
    let all = geer.dimensions();
    RankCtx { entries: geer.entries(), ranks: &ranks, all: &all }.dims(e, &[])
}

/// Free dimensions of `e`, where `params` are bound function parameters.
pub fn free_dims_with_params(e: &Expr, params: &[String], entries: &BTreeMap<String, GeerEntry>, ranks: &BTreeMap<String, Rank>) -> Result<Rank, UnresolvedIdentifier> {
    let all = all_dims(entries);
    RankCtx { entries, ranks, all: &all }.dims(e, params)
}
