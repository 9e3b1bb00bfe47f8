use std::fmt;
use std::hash::{Hash, Hasher};

use crate::context::Tag;
use crate::lang::value::Value;

/// Source position (1-based). Ignored by equality and hashing so that ASTs
/// compare structurally regardless of where they were parsed from.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl Hash for Pos {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Indexical navigation operators. They only exist in surface programs;
/// lowering rewrites them into `@`/`#` forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NavOp {
    First,
    Next,
    Prev,
    Fby,
    Wvr,
    Asa,
    Upon,
}

impl NavOp {
    pub fn keyword(self) -> &'static str {
        match self {
            NavOp::First => "first",
            NavOp::Next => "next",
            NavOp::Prev => "prev",
            NavOp::Fby => "fby",
            NavOp::Wvr => "wvr",
            NavOp::Asa => "asa",
            NavOp::Upon => "upon",
        }
    }

    pub fn from_keyword(s: &str) -> Option<NavOp> {
        Some(match s {
            "first" => NavOp::First,
            "next" => NavOp::Next,
            "prev" => NavOp::Prev,
            "fby" => NavOp::Fby,
            "wvr" => NavOp::Wvr,
            "asa" => NavOp::Asa,
            "upon" => NavOp::Upon,
            _ => return None,
        })
    }

    pub fn is_binary(self) -> bool {
        matches!(self, NavOp::Fby | NavOp::Wvr | NavOp::Asa | NavOp::Upon)
    }
}

/// One dimension of a `Box`: the dimension expression and, when given at
/// the box site or on the declaration, its finite tag domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoxDim {
    pub dim: Expr,
    pub domain: Option<Vec<Tag>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Literal(Value),
    IdRef { name: String, pos: Pos },
    OpApply(Box<Expr>, Vec<Expr>),
    FunCall(Box<Expr>, Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `#E`
    TagQuery(Box<Expr>),
    /// bare `#`
    HashNullary,
    /// `E @ E' E''`
    At3(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `E @ C`, where C is a context or a context set
    AtCtx(Box<Expr>, Box<Expr>),
    Where(Box<Expr>, Vec<Decl>),
    CtxBuild(Vec<(Expr, Expr)>),
    BoxExpr(Vec<BoxDim>, Box<Expr>),
    SetExpr(Vec<Expr>),
    /// `<E1,…,En> d`
    TupleStream(Vec<Expr>, Box<Expr>),
    Select(Box<Expr>, Box<Expr>),
    /// `C.d`
    Dot(Box<Expr>, Box<Expr>),
    Navigate { op: NavOp, dim: String, args: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Decl {
    Dim { name: String, domain: Option<Vec<Tag>>, pos: Pos },
    Var { name: String, expr: Expr, pos: Pos },
    Fun { name: String, params: Vec<String>, expr: Expr, pos: Pos },
    Proc { name: String, arity: usize, pos: Pos },
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Dim { name, .. } | Decl::Var { name, .. } | Decl::Fun { name, .. } | Decl::Proc { name, .. } => name,
        }
    }

    pub fn pos(&self) -> Pos {
        match self {
            Decl::Dim { pos, .. } | Decl::Var { pos, .. } | Decl::Fun { pos, .. } | Decl::Proc { pos, .. } => *pos,
        }
    }
}

impl Expr {
    pub fn id(name: impl Into<String>) -> Expr {
        Expr::IdRef { name: name.into(), pos: Pos::default() }
    }

    pub fn int(i: i64) -> Expr {
        Expr::Literal(Value::Int(i))
    }

    pub fn op(sym: &str, args: Vec<Expr>) -> Expr {
        Expr::OpApply(Box::new(Expr::Literal(Value::OpRef(sym.to_string()))), args)
    }

    pub fn binary(sym: &str, lhs: Expr, rhs: Expr) -> Expr {
        Expr::op(sym, vec![lhs, rhs])
    }

    pub fn tag_of(dim: &str) -> Expr {
        Expr::TagQuery(Box::new(Expr::id(dim)))
    }

    pub fn at(body: Expr, dim: &str, tag: Expr) -> Expr {
        Expr::At3(Box::new(body), Box::new(Expr::id(dim)), Box::new(tag))
    }

    pub fn if_then_else(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn as_id(&self) -> Option<&str> {
        match self {
            Expr::IdRef { name, .. } => Some(name),
            _ => None,
        }
    }

    /// Direct children, in evaluation order. Declarations of a `where` are
    /// included (variable and function bodies).
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Literal(_) | Expr::IdRef { .. } | Expr::HashNullary => vec![],
            Expr::OpApply(f, args) | Expr::FunCall(f, args) => {
                std::iter::once(&**f).chain(args.iter()).collect()
            }
            Expr::If(a, b, c) | Expr::At3(a, b, c) => vec![a, b, c],
            Expr::TagQuery(e) => vec![e],
            Expr::AtCtx(a, b) | Expr::Select(a, b) | Expr::Dot(a, b) => vec![a, b],
            Expr::Where(body, decls) => {
                let mut v = vec![&**body];
                for d in decls {
                    match d {
                        Decl::Var { expr, .. } | Decl::Fun { expr, .. } => v.push(expr),
                        _ => {}
                    }
                }
                v
            }
            Expr::CtxBuild(pairs) => pairs.iter().flat_map(|(d, t)| [d, t]).collect(),
            Expr::BoxExpr(dims, pred) => dims.iter().map(|d| &d.dim).chain(std::iter::once(&**pred)).collect(),
            Expr::SetExpr(es) => es.iter().collect(),
            Expr::TupleStream(es, d) => es.iter().chain(std::iter::once(&**d)).collect(),
            Expr::Navigate { args, .. } => args.iter().collect(),
        }
    }

    /// Pre-order walk over the expression tree.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn contains_navigation(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Navigate { .. }));
        found
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

fn write_domain(f: &mut fmt::Formatter<'_>, dom: &[Tag]) -> fmt::Result {
    f.write_str("{")?;
    write_list(f, dom)?;
    f.write_str("}")
}

/// Prints source syntax that parses back to the same tree. Binary
/// operators are fully parenthesized.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(v) => write!(f, "{}", v.source_form()),
            Expr::IdRef { name, .. } => f.write_str(name),
            Expr::OpApply(op, args) => match (&**op, args.as_slice()) {
                (Expr::Literal(Value::OpRef(sym)), [a]) if sym == "neg" => write!(f, "(-{a})"),
                (Expr::Literal(Value::OpRef(sym)), [a]) if sym == "!" => write!(f, "(!{a})"),
                (Expr::Literal(Value::OpRef(sym)), [a, b]) if super::builtins::is_infix(sym) => {
                    write!(f, "({a} {sym} {b})")
                }
                (Expr::Literal(Value::OpRef(sym)), _) => {
                    write!(f, "{sym}(")?;
                    write_list(f, args)?;
                    f.write_str(")")
                }
                (op, _) => {
                    write!(f, "({op})(")?;
                    write_list(f, args)?;
                    f.write_str(")")
                }
            },
            Expr::FunCall(callee, args) => {
                match &**callee {
                    Expr::IdRef { name, .. } => f.write_str(name)?,
                    other => write!(f, "({other})")?,
                }
                f.write_str("(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
            Expr::If(c, t, e) => write!(f, "(if {c} then {t} else {e})"),
            Expr::TagQuery(e) => write!(f, "#({e})"),
            Expr::HashNullary => f.write_str("(#)"),
            Expr::At3(e, d, v) => write!(f, "(({e}) @ ({d}) ({v}))"),
            Expr::AtCtx(e, c) => write!(f, "(({e}) @ ({c}))"),
            Expr::Where(body, decls) => {
                write!(f, "({body} where ")?;
                for d in decls {
                    write!(f, "{d} ")?;
                }
                f.write_str("end)")
            }
            Expr::CtxBuild(pairs) => {
                f.write_str("[")?;
                for (i, (d, t)) in pairs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{d}: {t}")?;
                }
                f.write_str("]")
            }
            Expr::BoxExpr(dims, pred) => {
                f.write_str("Box[")?;
                for (i, bd) in dims.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", bd.dim)?;
                    if let Some(dom) = &bd.domain {
                        f.write_str(" in ")?;
                        write_domain(f, dom)?;
                    }
                }
                write!(f, " | {pred}]")
            }
            Expr::SetExpr(es) => {
                f.write_str("{")?;
                write_list(f, es)?;
                f.write_str("}")
            }
            Expr::TupleStream(es, d) => {
                f.write_str("<")?;
                write_list(f, es)?;
                write!(f, "> {d}")
            }
            Expr::Select(c, s) => write!(f, "select({c}, {s})"),
            Expr::Dot(c, d) => write!(f, "({c}).{d}"),
            Expr::Navigate { op, dim, args } => match args.as_slice() {
                [a] => write!(f, "({}.{dim} {a})", op.keyword()),
                [a, b] => write!(f, "({a} {}.{dim} {b})", op.keyword()),
                _ => Err(fmt::Error),
            },
        }
    }
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decl::Dim { name, domain, .. } => {
                write!(f, "dimension {name}")?;
                if let Some(dom) = domain {
                    f.write_str(" in ")?;
                    write_domain(f, dom)?;
                }
                f.write_str(";")
            }
            Decl::Var { name, expr, .. } => write!(f, "{name} = {expr};"),
            Decl::Fun { name, params, expr, .. } => {
                write!(f, "{name}(")?;
                write_list(f, params)?;
                write!(f, ") = {expr};")
            }
            Decl::Proc { name, arity, .. } => write!(f, "procedure {name}/{arity};"),
        }
    }
}
