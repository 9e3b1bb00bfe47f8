//! Declaration analysis.
//!
//! Builds the dictionary D from the declarations of a parsed program:
//! dimensions, variables, functions and procedures. Declarations of nested
//! `where` blocks are hoisted into the global dictionary under mangled
//! names (`x'3` for `x` declared in the third nested block, in source
//! order); the nested `Where` node keeps only its dimension declarations,
//! which reset those dimensions to 0 on entry.

use std::collections::{BTreeMap, HashMap};

use super::parser::ParsedProgram;
use super::{CompileError, Phase};
use crate::context::Tag;
use crate::lang::ast::{BoxDim, Decl, Expr, Pos};
use crate::lang::builtins;
use crate::lang::geer::{EntryKind, GeerEntry};

/// The checked program: the global dictionary and the root expression,
/// with every identifier renamed to the entry it resolves to.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub entries: BTreeMap<String, GeerEntry>,
    pub root: Expr,
}

type Scope = HashMap<String, String>;

struct Analyzer {
    entries: BTreeMap<String, GeerEntry>,
    domains: HashMap<String, Vec<Tag>>,
    errors: Vec<CompileError>,
    blocks: usize,
}

fn error(pos: Pos, message: impl Into<String>) -> CompileError {
    CompileError { phase: Phase::Analyze, message: message.into(), line: pos.line, column: pos.column }
}

/// What is visible while resolving an expression.
struct Env<'a> {
    scopes: &'a [Scope],
    params: &'a [String],
    /// Parameters of an enclosing function that are out of reach from a
    /// nested declaration.
    hidden: &'a [String],
}

pub fn analyze(program: ParsedProgram) -> Result<Analysis, Vec<CompileError>> {
    let mut a = Analyzer { entries: BTreeMap::new(), domains: HashMap::new(), errors: Vec::new(), blocks: 0 };
    let global = a.declare_block(&program.decls, None);
    let scopes = vec![global];
    a.define_block(&program.decls, &scopes, &[]);
    let env = Env { scopes: &scopes, params: &[], hidden: &[] };
    let root = a.resolve(&program.root, &env);
    if a.errors.is_empty() {
        Ok(Analysis { entries: a.entries, root })
    } else {
        Err(a.errors)
    }
}

impl Analyzer {
    fn entry_name(name: &str, block: Option<usize>) -> String {
        match block {
            Some(k) => format!("{name}'{k}"),
            None => name.to_string(),
        }
    }

    fn declare_dim(&mut self, name: &str, domain: Option<&Vec<Tag>>, pos: Pos) {
        match self.entries.get(name).map(|e| e.kind) {
            None => {
                self.entries.insert(name.to_string(), GeerEntry::dim());
            }
            Some(EntryKind::Dim) => {}
            Some(_) => {
                self.errors.push(error(pos, format!("duplicate declaration of `{name}`")));
                return;
            }
        }
        if let Some(dom) = domain {
            self.domains.insert(name.to_string(), dom.clone());
        }
    }

    /// Registers the names of one declaration block (rules Q_dim / Q_id /
    /// QQ). Bodies are resolved afterwards so that definitions may refer to
    /// each other in any order.
    fn declare_block(&mut self, decls: &[Decl], block: Option<usize>) -> Scope {
        let mut scope = Scope::new();
        for d in decls {
            let name = d.name();
            if name.contains(['\'', '$']) {
                self.errors.push(error(d.pos(), format!("`{name}` is reserved for generated names")));
                continue;
            }
            if scope.contains_key(name) || builtins::lookup(name).is_some() {
                self.errors.push(error(d.pos(), format!("duplicate declaration of `{name}`")));
                continue;
            }
            match d {
                Decl::Dim { domain, pos, .. } => {
                    self.declare_dim(name, domain.as_ref(), *pos);
                    scope.insert(name.to_string(), name.to_string());
                }
                Decl::Proc { arity, pos, .. } => {
                    if block.is_none() || !self.entries.contains_key(name) {
                        if self.entries.contains_key(name) {
                            self.errors.push(error(*pos, format!("duplicate declaration of `{name}`")));
                            continue;
                        }
                        self.entries.insert(name.to_string(), GeerEntry::proc(*arity));
                    }
                    scope.insert(name.to_string(), name.to_string());
                }
                Decl::Var { .. } | Decl::Fun { .. } => {
                    let entry = Self::entry_name(name, block);
                    if block.is_none() && self.entries.contains_key(&entry) {
                        self.errors.push(error(d.pos(), format!("duplicate declaration of `{name}`")));
                        continue;
                    }
                    scope.insert(name.to_string(), entry);
                }
            }
        }
        scope
    }

    fn define_block(&mut self, decls: &[Decl], scopes: &[Scope], hidden: &[String]) {
        let scope = scopes.last().expect("block scope");
        for d in decls {
            match d {
                Decl::Var { name, expr, .. } => {
                    let Some(entry) = scope.get(name).cloned() else { continue };
                    if self.entries.contains_key(&entry) {
                        continue;
                    }
                    let env = Env { scopes, params: &[], hidden };
                    let body = self.resolve(expr, &env);
                    self.entries.insert(entry, GeerEntry::var(body));
                }
                Decl::Fun { name, params, expr, pos } => {
                    let Some(entry) = scope.get(name).cloned() else { continue };
                    if self.entries.contains_key(&entry) {
                        continue;
                    }
                    for (i, p) in params.iter().enumerate() {
                        if params[..i].contains(p) {
                            self.errors.push(error(*pos, format!("duplicate parameter `{p}` in `{name}`")));
                        }
                    }
                    let env = Env { scopes, params, hidden: &[] };
                    let body = self.resolve(expr, &env);
                    self.entries.insert(entry, GeerEntry::func(params.clone(), body));
                }
                Decl::Dim { .. } | Decl::Proc { .. } => {}
            }
        }
    }

    fn lookup(&self, name: &str, env: &Env) -> Option<String> {
        env.scopes.iter().rev().find_map(|s| s.get(name).cloned())
    }

    fn is_dim_entry(&self, name: &str) -> bool {
        self.entries.get(name).is_some_and(|e| e.kind == EntryKind::Dim)
    }

    fn resolve_id(&mut self, name: &str, pos: Pos, env: &Env) -> Expr {
        if env.params.iter().any(|p| p == name) {
            return Expr::IdRef { name: name.to_string(), pos };
        }
        if let Some(entry) = self.lookup(name, env) {
            return Expr::IdRef { name: entry, pos };
        }
        if builtins::is_named(name) {
            return Expr::IdRef { name: name.to_string(), pos };
        }
        if env.hidden.iter().any(|p| p == name) {
            self.errors.push(error(
                pos,
                format!("unresolved identifier `{name}`: function parameters are not visible inside nested declarations"),
            ));
        } else {
            self.errors.push(error(pos, format!("unresolved identifier `{name}`")));
        }
        Expr::IdRef { name: name.to_string(), pos }
    }

    fn resolve(&mut self, e: &Expr, env: &Env) -> Expr {
        let mut r = |x: &Expr| self.resolve(x, env);
        match e {
            Expr::Literal(_) | Expr::HashNullary => e.clone(),
            Expr::IdRef { name, pos } => self.resolve_id(name, *pos, env),
            Expr::OpApply(f, args) => Expr::OpApply(Box::new(r(f)), args.iter().map(&mut r).collect()),
            Expr::FunCall(f, args) => Expr::FunCall(Box::new(r(f)), args.iter().map(&mut r).collect()),
            Expr::If(a, b, c) => Expr::If(Box::new(r(a)), Box::new(r(b)), Box::new(r(c))),
            Expr::TagQuery(x) => Expr::TagQuery(Box::new(r(x))),
            Expr::At3(a, b, c) => Expr::At3(Box::new(r(a)), Box::new(r(b)), Box::new(r(c))),
            Expr::AtCtx(a, b) => Expr::AtCtx(Box::new(r(a)), Box::new(r(b))),
            Expr::Select(a, b) => Expr::Select(Box::new(r(a)), Box::new(r(b))),
            Expr::Dot(a, b) => Expr::Dot(Box::new(r(a)), Box::new(r(b))),
            Expr::CtxBuild(pairs) => Expr::CtxBuild(pairs.iter().map(|(d, t)| (r(d), r(t))).collect()),
            Expr::SetExpr(es) => Expr::SetExpr(es.iter().map(&mut r).collect()),
            Expr::BoxExpr(dims, pred) => {
                let mut out = Vec::with_capacity(dims.len());
                for bd in dims {
                    let dim = self.resolve(&bd.dim, env);
                    let domain = match &bd.domain {
                        Some(d) => Some(d.clone()),
                        None => match dim.as_id().and_then(|n| self.domains.get(n)) {
                            Some(d) => Some(d.clone()),
                            None => {
                                let pos = match &bd.dim {
                                    Expr::IdRef { pos, .. } => *pos,
                                    _ => Pos::default(),
                                };
                                self.errors.push(error(
                                    pos,
                                    format!("Box dimension `{}` has no finite domain (use `in lo..hi`)", bd.dim),
                                ));
                                None
                            }
                        },
                    };
                    out.push(BoxDim { dim, domain });
                }
                let pred = self.resolve(pred, env);
                Expr::BoxExpr(out, Box::new(pred))
            }
            Expr::TupleStream(es, d) => {
                let elems = es.iter().map(|x| self.resolve(x, env)).collect();
                let dim = match &**d {
                    // auto-declared at the use site when not yet a dimension
                    Expr::IdRef { name, pos }
                        if !env.params.contains(name) && self.lookup(name, env).is_none() =>
                    {
                        self.declare_dim(name, None, *pos);
                        Expr::IdRef { name: name.clone(), pos: *pos }
                    }
                    other => self.resolve(other, env),
                };
                Expr::TupleStream(elems, Box::new(dim))
            }
            Expr::Navigate { op, dim, args } => {
                let resolved = self.lookup(dim, env).filter(|n| self.is_dim_entry(n));
                if resolved.is_none() || env.params.contains(dim) {
                    let pos = args.first().and_then(first_pos).unwrap_or_default();
                    self.errors.push(error(pos, format!("`{}.{dim}`: `{dim}` is not a declared dimension", op.keyword())));
                }
                Expr::Navigate { op: *op, dim: dim.clone(), args: args.iter().map(|x| self.resolve(x, env)).collect() }
            }
            Expr::Where(body, decls) => {
                self.blocks += 1;
                let k = self.blocks;
                let scope = self.declare_block(decls, Some(k));
                let mut scopes = env.scopes.to_vec();
                scopes.push(scope);
                let mut hidden: Vec<String> = env.hidden.to_vec();
                hidden.extend(env.params.iter().cloned());
                self.define_block(decls, &scopes, &hidden);
                let inner = Env { scopes: &scopes, params: env.params, hidden: env.hidden };
                let body = self.resolve(body, &inner);
                let dims: Vec<Decl> = decls.iter().filter(|d| matches!(d, Decl::Dim { .. })).cloned().collect();
                if dims.is_empty() {
                    body
                } else {
                    Expr::Where(Box::new(body), dims)
                }
            }
        }
    }
}

fn first_pos(e: &Expr) -> Option<Pos> {
    let mut found = None;
    e.walk(&mut |n| {
        if found.is_none() {
            if let Expr::IdRef { pos, .. } = n {
                found = Some(*pos);
            }
        }
    });
    found
}
