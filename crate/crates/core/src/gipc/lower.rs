//! Lowering of the indexical navigation operators into core `@`/`#` forms.
//!
//! ```text
//! first.d E      =>  E @ d 0
//! next.d E       =>  E @ d (#d + 1)
//! prev.d E       =>  E @ d (#d - 1)
//! E1 fby.d E2    =>  if #d <= 0 then E1 else (E2 @ d (#d - 1))
//! X wvr.d Y      =>  X @ d wvr$d(Y, #d, 0)
//! X asa.d Y      =>  X @ d wvr$d(Y, 0, 0)
//! X upon.d Y     =>  X @ d upon$d(Y, #d, 0)
//! ```
//!
//! `wvr$d(Y, i, j)` is the position of the i-th (from 0) tag at or after
//! `j` where `Y` holds; `upon$d(Y, i, n)` is `n` plus the number of tags
//! below `i` where `Y` holds. Both are generated once per dimension.

use std::collections::{BTreeMap, BTreeSet};

use crate::lang::ast::{Expr, NavOp};
use crate::lang::geer::GeerEntry;

pub fn wvr_helper(dim: &str) -> String {
    format!("wvr${dim}")
}

pub fn upon_helper(dim: &str) -> String {
    format!("upon${dim}")
}

fn call(f: String, args: Vec<Expr>) -> Expr {
    Expr::FunCall(Box::new(Expr::id(f)), args)
}

fn minus(a: Expr, b: i64) -> Expr {
    Expr::binary("-", a, Expr::int(b))
}

fn plus(a: Expr, b: i64) -> Expr {
    Expr::binary("+", a, Expr::int(b))
}

fn rewrite(op: NavOp, dim: &str, mut args: Vec<Expr>) -> Expr {
    let tag = || Expr::tag_of(dim);
    match op {
        NavOp::First => Expr::at(args.remove(0), dim, Expr::int(0)),
        NavOp::Next => Expr::at(args.remove(0), dim, plus(tag(), 1)),
        NavOp::Prev => Expr::at(args.remove(0), dim, minus(tag(), 1)),
        NavOp::Fby => {
            let rhs = args.remove(1);
            let lhs = args.remove(0);
            Expr::if_then_else(
                Expr::binary("<=", tag(), Expr::int(0)),
                lhs,
                Expr::at(rhs, dim, minus(tag(), 1)),
            )
        }
        NavOp::Wvr | NavOp::Asa | NavOp::Upon => {
            let y = args.remove(1);
            let x = args.remove(0);
            let pos = match op {
                NavOp::Wvr => call(wvr_helper(dim), vec![y, tag(), Expr::int(0)]),
                NavOp::Asa => call(wvr_helper(dim), vec![y, Expr::int(0), Expr::int(0)]),
                _ => call(upon_helper(dim), vec![y, tag(), Expr::int(0)]),
            };
            Expr::at(x, dim, pos)
        }
    }
}

/// Rewrites every navigation operator in `e`. Core forms are left
/// untouched, so `lower(lower(e)) == lower(e)`.
pub fn lower(e: &Expr) -> Expr {
    map_children(e, &lower, |e| match e {
        Expr::Navigate { op, dim, args } => rewrite(op, &dim, args),
        other => other,
    })
}

/// Rebuilds `e` with `f` applied to each child, then `post` to the node.
fn map_children(e: &Expr, f: &dyn Fn(&Expr) -> Expr, post: impl FnOnce(Expr) -> Expr) -> Expr {
    let b = |x: &Expr| Box::new(f(x));
    let rebuilt = match e {
        Expr::Literal(_) | Expr::IdRef { .. } | Expr::HashNullary => e.clone(),
        Expr::OpApply(g, args) => Expr::OpApply(b(g), args.iter().map(f).collect()),
        Expr::FunCall(g, args) => Expr::FunCall(b(g), args.iter().map(f).collect()),
        Expr::If(x, y, z) => Expr::If(b(x), b(y), b(z)),
        Expr::TagQuery(x) => Expr::TagQuery(b(x)),
        Expr::At3(x, y, z) => Expr::At3(b(x), b(y), b(z)),
        Expr::AtCtx(x, y) => Expr::AtCtx(b(x), b(y)),
        Expr::Select(x, y) => Expr::Select(b(x), b(y)),
        Expr::Dot(x, y) => Expr::Dot(b(x), b(y)),
        Expr::Where(body, decls) => Expr::Where(b(body), decls.clone()),
        Expr::CtxBuild(pairs) => Expr::CtxBuild(pairs.iter().map(|(d, t)| (f(d), f(t))).collect()),
        Expr::BoxExpr(dims, pred) => Expr::BoxExpr(
            dims.iter().map(|bd| crate::lang::ast::BoxDim { dim: f(&bd.dim), domain: bd.domain.clone() }).collect(),
            b(pred),
        ),
        Expr::SetExpr(es) => Expr::SetExpr(es.iter().map(f).collect()),
        Expr::TupleStream(es, d) => Expr::TupleStream(es.iter().map(f).collect(), b(d)),
        Expr::Navigate { op, dim, args } => Expr::Navigate { op: *op, dim: dim.clone(), args: args.iter().map(f).collect() },
    };
    post(rebuilt)
}

fn helpers_needed(e: &Expr, wvr: &mut BTreeSet<String>, upon: &mut BTreeSet<String>) {
    e.walk(&mut |n| {
        if let Expr::Navigate { op, dim, .. } = n {
            match op {
                NavOp::Wvr | NavOp::Asa => {
                    wvr.insert(dim.clone());
                }
                NavOp::Upon => {
                    upon.insert(dim.clone());
                }
                _ => {}
            }
        }
    });
}

fn wvr_definition(dim: &str) -> GeerEntry {
    let (y, i, j) = (|| Expr::id("Y"), || Expr::id("i"), || Expr::id("j"));
    let recur = |i: Expr, j: Expr| call(wvr_helper(dim), vec![y(), i, j]);
    let body = Expr::if_then_else(
        Expr::at(y(), dim, j()),
        Expr::if_then_else(Expr::binary("<=", i(), Expr::int(0)), j(), recur(minus(i(), 1), plus(j(), 1))),
        recur(i(), plus(j(), 1)),
    );
    GeerEntry::func(vec!["Y".into(), "i".into(), "j".into()], body)
}

fn upon_definition(dim: &str) -> GeerEntry {
    let (y, i, n) = (|| Expr::id("Y"), || Expr::id("i"), || Expr::id("n"));
    let step = Expr::if_then_else(Expr::at(y(), dim, minus(i(), 1)), plus(n(), 1), n());
    let body = Expr::if_then_else(
        Expr::binary("<=", i(), Expr::int(0)),
        n(),
        call(upon_helper(dim), vec![y(), minus(i(), 1), step]),
    );
    GeerEntry::func(vec!["Y".into(), "i".into(), "n".into()], body)
}

/// Lowers every definition and the root, adding the helper functions the
/// rewrites refer to.
pub fn lower_program(mut entries: BTreeMap<String, GeerEntry>, root: &Expr) -> (BTreeMap<String, GeerEntry>, Expr) {
    let (mut wvr, mut upon) = (BTreeSet::new(), BTreeSet::new());
    helpers_needed(root, &mut wvr, &mut upon);
    for entry in entries.values_mut() {
        if let Some(ast) = &mut entry.ast {
            helpers_needed(ast, &mut wvr, &mut upon);
            *ast = lower(ast);
        }
    }
    for d in wvr {
        entries.insert(wvr_helper(&d), wvr_definition(&d));
    }
    for d in upon {
        entries.insert(upon_helper(&d), upon_definition(&d));
    }
    (entries, lower(root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gipc::{lexer::tokenize, parser::parse_expr};

    fn src(s: &str) -> Expr {
        parse_expr(&tokenize(s).unwrap()).unwrap()
    }

    #[test]
    fn first_becomes_at_zero() {
        assert_eq!(lower(&src("first.t X")), Expr::at(Expr::id("X"), "t", Expr::int(0)));
    }

    #[test]
    fn fby_lowering() {
        assert_eq!(
            lower(&src("0 fby.t (N + 1)")),
            src("if #t <= 0 then 0 else ((N + 1) @ t (#t - 1))")
        );
    }

    #[test]
    fn literal_is_unchanged() {
        assert_eq!(lower(&Expr::int(42)), Expr::int(42));
    }

    #[test]
    fn idempotent_on_nested_forms() {
        let e = src("next.t (X wvr.t (Y upon.s Z)) + prev.s (1 fby.t first.t W)");
        let once = lower(&e);
        assert!(!once.contains_navigation());
        assert_eq!(lower(&once), once);
    }
}
