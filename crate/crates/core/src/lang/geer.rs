//! GEER: the compiled, language-independent dictionary of a program.
//!
//! File format (UTF-8, one record per line):
//!
//! ```text
//! GEER/1
//! (root <expr>)
//! (entry "<name>" <kind> <arity> ("<param>" …) ("<dim>" …) <expr-or-nil>)   sorted by name
//! (proc "<name>" <arity>)                                                sorted by name
//! hash <sha256 hex of every preceding byte>
//! ```
//!
//! The trailing hash is the program id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::context::DimensionName;
use crate::lang::ast::Expr;
use crate::lang::builtins;
use crate::lang::sexp::{expr_from_sexp, expr_to_sexp, Sexp};

pub const FORMAT_HEADER: &str = "GEER/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeerError {
    #[error("malformed GEER: {0}")]
    MalformedGeer(String),
    #[error("unsupported GEER version `{0}`")]
    VersionMismatch(String),
    #[error("GEER hash mismatch: recorded {recorded}, computed {computed}")]
    HashMismatch { recorded: String, computed: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryKind {
    Const,
    Op,
    Dim,
    Func,
    Var,
    Proc,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Const => "const",
            EntryKind::Op => "op",
            EntryKind::Dim => "dim",
            EntryKind::Func => "func",
            EntryKind::Var => "var",
            EntryKind::Proc => "proc",
        }
    }

    fn parse(s: &str) -> Option<EntryKind> {
        Some(match s {
            "const" => EntryKind::Const,
            "op" => EntryKind::Op,
            "dim" => EntryKind::Dim,
            "func" => EntryKind::Func,
            "var" => EntryKind::Var,
            "proc" => EntryKind::Proc,
            _ => return None,
        })
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeerEntry {
    pub kind: EntryKind,
    pub arity: usize,
    pub params: Vec<String>,
    pub ast: Option<Expr>,
    pub rank: BTreeSet<DimensionName>,
}

impl GeerEntry {
    pub fn dim() -> Self {
        GeerEntry { kind: EntryKind::Dim, arity: 0, params: vec![], ast: None, rank: BTreeSet::new() }
    }

    pub fn var(ast: Expr) -> Self {
        let kind = if matches!(ast, Expr::Literal(_)) { EntryKind::Const } else { EntryKind::Var };
        GeerEntry { kind, arity: 0, params: vec![], ast: Some(ast), rank: BTreeSet::new() }
    }

    pub fn func(params: Vec<String>, ast: Expr) -> Self {
        GeerEntry { kind: EntryKind::Func, arity: params.len(), params, ast: Some(ast), rank: BTreeSet::new() }
    }

    pub fn proc(arity: usize) -> Self {
        GeerEntry { kind: EntryKind::Proc, arity, params: vec![], ast: None, rank: BTreeSet::new() }
    }

    fn check_shape(&self, name: &str) -> Result<(), String> {
        let ok = match self.kind {
            EntryKind::Const => matches!(self.ast, Some(Expr::Literal(_))) && self.params.is_empty(),
            EntryKind::Dim | EntryKind::Op => self.ast.is_none() && self.params.is_empty(),
            EntryKind::Proc => self.ast.is_none() && self.params.is_empty(),
            EntryKind::Var => self.ast.is_some() && self.params.is_empty() && self.arity == 0,
            EntryKind::Func => self.ast.is_some() && self.params.len() == self.arity,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("entry `{name}` has an invalid shape for kind {}", self.kind))
        }
    }
}

/// A compiled program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geer {
    program_id: String,
    entries: BTreeMap<String, GeerEntry>,
    root: Expr,
    procs: BTreeMap<String, usize>,
}

impl Geer {
    /// Builds a GEER and computes its program id. Procedure entries are
    /// mirrored into the procedure table.
    pub fn new(entries: BTreeMap<String, GeerEntry>, root: Expr) -> Self {
        let procs = entries
            .iter()
            .filter(|(_, e)| e.kind == EntryKind::Proc)
            .map(|(n, e)| (n.clone(), e.arity))
            .collect();
        let mut g = Geer { program_id: String::new(), entries, root, procs };
        g.program_id = hash_hex(g.body_text().as_bytes());
        g
    }

    pub fn program_id(&self) -> &str {
        &self.program_id
    }

    pub fn entries(&self) -> &BTreeMap<String, GeerEntry> {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&GeerEntry> {
        self.entries.get(name)
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn procedures(&self) -> &BTreeMap<String, usize> {
        &self.procs
    }

    /// Every declared dimension.
    pub fn dimensions(&self) -> BTreeSet<DimensionName> {
        self.entries
            .iter()
            .filter(|(_, e)| e.kind == EntryKind::Dim)
            .filter_map(|(n, _)| DimensionName::new(n.clone()).ok())
            .collect()
    }

    pub fn is_dimension(&self, name: &str) -> bool {
        self.entries.get(name).is_some_and(|e| e.kind == EntryKind::Dim)
    }

    fn body_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_HEADER);
        out.push('\n');
        out.push_str(&Sexp::List(vec![Sexp::Atom("root".into()), expr_to_sexp(&self.root)]).to_text());
        out.push('\n');
        for (name, e) in &self.entries {
            let line = Sexp::List(vec![
                Sexp::Atom("entry".into()),
                Sexp::Str(name.clone()),
                Sexp::Atom(e.kind.as_str().into()),
                Sexp::Atom(e.arity.to_string()),
                Sexp::List(e.params.iter().map(|p| Sexp::Str(p.clone())).collect()),
                Sexp::List(e.rank.iter().map(|d| Sexp::Str(d.to_string())).collect()),
                e.ast.as_ref().map(expr_to_sexp).unwrap_or(Sexp::Atom("nil".into())),
            ]);
            out.push_str(&line.to_text());
            out.push('\n');
        }
        for (name, arity) in &self.procs {
            out.push_str(
                &Sexp::List(vec![Sexp::Atom("proc".into()), Sexp::Str(name.clone()), Sexp::Atom(arity.to_string())])
                    .to_text(),
            );
            out.push('\n');
        }
        out
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut body = self.body_text();
        body.push_str("hash ");
        body.push_str(&self.program_id);
        body.push('\n');
        body.into_bytes()
    }

    pub fn parse(bytes: &[u8]) -> Result<Geer, GeerError> {
        let malformed = |m: String| GeerError::MalformedGeer(m);
        let text = std::str::from_utf8(bytes).map_err(|e| malformed(e.to_string()))?;
        let header = text.lines().next().ok_or_else(|| malformed("empty input".into()))?;
        if header != FORMAT_HEADER {
            return if let Some(v) = header.strip_prefix("GEER/") {
                Err(GeerError::VersionMismatch(v.to_string()))
            } else {
                Err(malformed("missing GEER header".into()))
            };
        }
        if !text.ends_with('\n') {
            return Err(malformed("truncated input".into()));
        }
        let body_end = text[..text.len() - 1]
            .rfind('\n')
            .map(|i| i + 1)
            .ok_or_else(|| malformed("truncated input".into()))?;
        let (body, trailer) = text.split_at(body_end);
        let recorded = trailer
            .trim_end_matches('\n')
            .strip_prefix("hash ")
            .ok_or_else(|| malformed("missing hash trailer".into()))?
            .to_string();

        let mut root = None;
        let mut entries = BTreeMap::new();
        let mut procs = BTreeMap::new();
        for (lineno, line) in body.lines().enumerate().skip(1) {
            let at = |m: String| malformed(format!("line {}: {m}", lineno + 1));
            let sexp = Sexp::parse(line).map_err(at)?;
            let items = sexp.as_list().map_err(at)?;
            match items.first().map(Sexp::as_atom) {
                Some(Ok("root")) if items.len() == 2 => {
                    root = Some(expr_from_sexp(&items[1]).map_err(at)?);
                }
                Some(Ok("entry")) if items.len() == 7 => {
                    let name = items[1].as_str().map_err(at)?.to_string();
                    let kind = EntryKind::parse(items[2].as_atom().map_err(at)?)
                        .ok_or_else(|| at("unknown entry kind".into()))?;
                    let arity = items[3].as_atom().map_err(at)?.parse().map_err(|_| at("bad arity".into()))?;
                    let params = items[4]
                        .as_list()
                        .map_err(at)?
                        .iter()
                        .map(|p| p.as_str().map(str::to_string))
                        .collect::<Result<_, _>>()
                        .map_err(at)?;
                    let rank = items[5]
                        .as_list()
                        .map_err(at)?
                        .iter()
                        .map(|d| {
                            d.as_str()
                                .and_then(|s| DimensionName::new(s).map_err(|e| e.to_string()))
                        })
                        .collect::<Result<_, _>>()
                        .map_err(at)?;
                    let ast = match &items[6] {
                        Sexp::Atom(a) if a == "nil" => None,
                        other => Some(expr_from_sexp(other).map_err(at)?),
                    };
                    let entry = GeerEntry { kind, arity, params, ast, rank };
                    entry.check_shape(&name).map_err(at)?;
                    if entries.insert(name.clone(), entry).is_some() {
                        return Err(at(format!("duplicate entry `{name}`")));
                    }
                }
                Some(Ok("proc")) if items.len() == 3 => {
                    let name = items[1].as_str().map_err(at)?.to_string();
                    let arity = items[2].as_atom().map_err(at)?.parse().map_err(|_| at("bad arity".into()))?;
                    procs.insert(name, arity);
                }
                _ => return Err(at("unrecognized record".into())),
            }
        }
        let root = root.ok_or_else(|| malformed("missing root".into()))?;
        let computed = hash_hex(body.as_bytes());
        if computed != recorded {
            return Err(GeerError::HashMismatch { recorded, computed });
        }
        let g = Geer { program_id: computed, entries, root, procs };
        g.check_references().map_err(malformed)?;
        if g.body_text() != body {
            return Err(malformed("records are not in canonical form".into()));
        }
        Ok(g)
    }

    /// Every identifier in every stored AST resolves to an entry, a built-in
    /// operator, or a parameter of the enclosing function.
    pub fn check_references(&self) -> Result<(), String> {
        let check = |e: &Expr, params: &[String], owner: &str| -> Result<(), String> {
            let mut missing = None;
            e.walk(&mut |node| {
                if let Expr::IdRef { name, .. } = node {
                    if missing.is_none()
                        && !params.contains(name)
                        && !self.entries.contains_key(name)
                        && !builtins::is_named(name)
                    {
                        missing = Some(name.clone());
                    }
                }
            });
            match missing {
                Some(n) => Err(format!("unresolved identifier `{n}` in {owner}")),
                None => Ok(()),
            }
        };
        check(&self.root, &[], "root")?;
        for (name, e) in &self.entries {
            if let Some(ast) = &e.ast {
                check(ast, &e.params, name)?;
            }
        }
        for (name, arity) in &self.procs {
            match self.entries.get(name) {
                Some(e) if e.kind == EntryKind::Proc && e.arity == *arity => {}
                _ => return Err(format!("procedure table entry `{name}` has no matching entry")),
            }
        }
        Ok(())
    }
}

fn hash_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
