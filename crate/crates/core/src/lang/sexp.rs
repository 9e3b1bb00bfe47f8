//! S-expression encoding of expression trees, used inside GEER files.

use crate::context::{quote_str, Tag};
use crate::lang::ast::{BoxDim, Decl, Expr, NavOp, Pos};
use crate::lang::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    fn atom(s: impl Into<String>) -> Sexp {
        Sexp::Atom(s.into())
    }

    fn str(s: impl Into<String>) -> Sexp {
        Sexp::Str(s.into())
    }

    pub fn write(&self, out: &mut String) {
        match self {
            Sexp::Atom(a) => out.push_str(a),
            Sexp::Str(s) => quote_str(s, out),
            Sexp::List(items) => {
                out.push('(');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    item.write(out);
                }
                out.push(')');
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }

    pub fn parse(src: &str) -> Result<Sexp, String> {
        let mut p = SexpParser { chars: src.char_indices().peekable(), src };
        let s = p.sexp()?;
        p.skip_ws();
        match p.chars.peek() {
            None => Ok(s),
            Some((i, _)) => Err(format!("trailing input at {i}")),
        }
    }

    pub fn as_atom(&self) -> Result<&str, String> {
        match self {
            Sexp::Atom(a) => Ok(a),
            other => Err(format!("expected atom, found {}", other.to_text())),
        }
    }

    pub fn as_str(&self) -> Result<&str, String> {
        match self {
            Sexp::Str(s) => Ok(s),
            other => Err(format!("expected string, found {}", other.to_text())),
        }
    }

    pub fn as_list(&self) -> Result<&[Sexp], String> {
        match self {
            Sexp::List(items) => Ok(items),
            other => Err(format!("expected list, found {}", other.to_text())),
        }
    }
}

struct SexpParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
}

impl SexpParser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.peek().is_some_and(|(_, c)| c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn sexp(&mut self) -> Result<Sexp, String> {
        self.skip_ws();
        match self.chars.peek().copied() {
            None => Err("unexpected end of input".into()),
            Some((_, '(')) => {
                self.chars.next();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        Some((_, ')')) => {
                            self.chars.next();
                            return Ok(Sexp::List(items));
                        }
                        None => return Err("unterminated list".into()),
                        _ => items.push(self.sexp()?),
                    }
                }
            }
            Some((_, '"')) => {
                self.chars.next();
                let mut s = String::new();
                loop {
                    match self.chars.next() {
                        None => return Err("unterminated string".into()),
                        Some((_, '"')) => return Ok(Sexp::Str(s)),
                        Some((_, '\\')) => match self.chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 't')) => s.push('\t'),
                            Some((_, 'r')) => s.push('\r'),
                            Some((_, c @ ('"' | '\\'))) => s.push(c),
                            _ => return Err("bad escape".into()),
                        },
                        Some((_, c)) => s.push(c),
                    }
                }
            }
            Some((start, ')')) => Err(format!("unexpected `)` at {start}")),
            Some((start, _)) => {
                let mut end = self.src.len();
                while let Some(&(i, c)) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        end = i;
                        break;
                    }
                    self.chars.next();
                }
                Ok(Sexp::Atom(self.src[start..end].to_string()))
            }
        }
    }
}

fn list(items: Vec<Sexp>) -> Sexp {
    Sexp::List(items)
}

fn tagged(head: &str, rest: impl IntoIterator<Item = Sexp>) -> Sexp {
    list(std::iter::once(Sexp::atom(head)).chain(rest).collect())
}

fn domain_to_sexp(dom: &[Tag]) -> Sexp {
    tagged("dom", dom.iter().map(|t| Sexp::str(t.to_string())))
}

pub fn expr_to_sexp(e: &Expr) -> Sexp {
    let sub = |e: &Expr| expr_to_sexp(e);
    match e {
        Expr::Literal(v) => tagged("lit", [Sexp::str(v.to_string())]),
        Expr::IdRef { name, .. } => tagged("id", [Sexp::str(name.clone())]),
        Expr::OpApply(f, args) => tagged("op", std::iter::once(sub(f)).chain(args.iter().map(sub))),
        Expr::FunCall(f, args) => tagged("call", std::iter::once(sub(f)).chain(args.iter().map(sub))),
        Expr::If(c, t, f) => tagged("if", [sub(c), sub(t), sub(f)]),
        Expr::TagQuery(e) => tagged("tag", [sub(e)]),
        Expr::HashNullary => tagged("hash", []),
        Expr::At3(e, d, v) => tagged("at", [sub(e), sub(d), sub(v)]),
        Expr::AtCtx(e, c) => tagged("atc", [sub(e), sub(c)]),
        Expr::Where(body, decls) => tagged("where", std::iter::once(sub(body)).chain(decls.iter().map(decl_to_sexp))),
        Expr::CtxBuild(pairs) => tagged("ctx", pairs.iter().map(|(d, t)| list(vec![sub(d), sub(t)]))),
        Expr::BoxExpr(dims, pred) => {
            let dims = dims.iter().map(|bd| {
                let mut items = vec![Sexp::atom("bd"), sub(&bd.dim)];
                if let Some(dom) = &bd.domain {
                    items.push(domain_to_sexp(dom));
                }
                list(items)
            });
            tagged("box", [list(dims.collect()), sub(pred)])
        }
        Expr::SetExpr(es) => tagged("set", es.iter().map(sub)),
        Expr::TupleStream(es, d) => tagged("tuple", std::iter::once(sub(d)).chain(es.iter().map(sub))),
        Expr::Select(c, s) => tagged("select", [sub(c), sub(s)]),
        Expr::Dot(c, d) => tagged("dot", [sub(c), sub(d)]),
        Expr::Navigate { op, dim, args } => tagged(
            "nav",
            [Sexp::atom(op.keyword()), Sexp::str(dim.clone())].into_iter().chain(args.iter().map(sub)),
        ),
    }
}

pub fn decl_to_sexp(d: &Decl) -> Sexp {
    match d {
        Decl::Dim { name, domain, .. } => {
            let mut items = vec![Sexp::atom("dim"), Sexp::str(name.clone())];
            if let Some(dom) = domain {
                items.push(domain_to_sexp(dom));
            }
            list(items)
        }
        Decl::Var { name, expr, .. } => tagged("var", [Sexp::str(name.clone()), expr_to_sexp(expr)]),
        Decl::Fun { name, params, expr, .. } => tagged(
            "fun",
            [
                Sexp::str(name.clone()),
                list(params.iter().map(|p| Sexp::str(p.clone())).collect()),
                expr_to_sexp(expr),
            ],
        ),
        Decl::Proc { name, arity, .. } => tagged("proc", [Sexp::str(name.clone()), Sexp::atom(arity.to_string())]),
    }
}

fn head(s: &Sexp) -> Result<(&str, &[Sexp]), String> {
    let items = s.as_list()?;
    let (h, rest) = items.split_first().ok_or("empty list")?;
    Ok((h.as_atom()?, rest))
}

fn arity_err(h: &str) -> String {
    format!("wrong number of operands for `{h}`")
}

fn domain_from_sexp(s: &Sexp) -> Result<Vec<Tag>, String> {
    let (h, rest) = head(s)?;
    if h != "dom" {
        return Err(format!("expected dom, found {h}"));
    }
    rest.iter()
        .map(|t| {
            let text = t.as_str()?;
            match text.parse::<Value>().map_err(|e| e.to_string())?.to_tag() {
                Some(tag) => Ok(tag),
                None => Err(format!("`{text}` is not a tag")),
            }
        })
        .collect()
}

pub fn expr_from_sexp(s: &Sexp) -> Result<Expr, String> {
    let (h, rest) = head(s)?;
    let sub = |i: usize| rest.get(i).ok_or_else(|| arity_err(h)).and_then(expr_from_sexp).map(Box::new);
    let exact = |n: usize| if rest.len() == n { Ok(()) } else { Err(arity_err(h)) };
    Ok(match h {
        "lit" => {
            exact(1)?;
            Expr::Literal(rest[0].as_str()?.parse::<Value>().map_err(|e| e.to_string())?)
        }
        "id" => {
            exact(1)?;
            Expr::IdRef { name: rest[0].as_str()?.to_string(), pos: Pos::default() }
        }
        "op" | "call" => {
            let f = sub(0)?;
            let args = rest[1..].iter().map(expr_from_sexp).collect::<Result<_, _>>()?;
            if h == "op" { Expr::OpApply(f, args) } else { Expr::FunCall(f, args) }
        }
        "if" => {
            exact(3)?;
            Expr::If(sub(0)?, sub(1)?, sub(2)?)
        }
        "tag" => {
            exact(1)?;
            Expr::TagQuery(sub(0)?)
        }
        "hash" => {
            exact(0)?;
            Expr::HashNullary
        }
        "at" => {
            exact(3)?;
            Expr::At3(sub(0)?, sub(1)?, sub(2)?)
        }
        "atc" => {
            exact(2)?;
            Expr::AtCtx(sub(0)?, sub(1)?)
        }
        "where" => {
            let body = sub(0)?;
            let decls = rest[1..].iter().map(decl_from_sexp).collect::<Result<_, _>>()?;
            Expr::Where(body, decls)
        }
        "ctx" => Expr::CtxBuild(
            rest.iter()
                .map(|pair| match pair.as_list()? {
                    [d, t] => Ok((expr_from_sexp(d)?, expr_from_sexp(t)?)),
                    _ => Err(arity_err("ctx")),
                })
                .collect::<Result<_, String>>()?,
        ),
        "box" => {
            exact(2)?;
            let dims = rest[0]
                .as_list()?
                .iter()
                .map(|bd| {
                    let (h, items) = head(bd)?;
                    if h != "bd" || items.is_empty() || items.len() > 2 {
                        return Err(arity_err("bd"));
                    }
                    Ok(BoxDim {
                        dim: expr_from_sexp(&items[0])?,
                        domain: items.get(1).map(domain_from_sexp).transpose()?,
                    })
                })
                .collect::<Result<_, String>>()?;
            Expr::BoxExpr(dims, sub(1)?)
        }
        "set" => Expr::SetExpr(rest.iter().map(expr_from_sexp).collect::<Result<_, _>>()?),
        "tuple" => {
            let d = sub(0)?;
            Expr::TupleStream(rest[1..].iter().map(expr_from_sexp).collect::<Result<_, _>>()?, d)
        }
        "select" => {
            exact(2)?;
            Expr::Select(sub(0)?, sub(1)?)
        }
        "dot" => {
            exact(2)?;
            Expr::Dot(sub(0)?, sub(1)?)
        }
        "nav" => {
            if rest.len() < 3 {
                return Err(arity_err(h));
            }
            let op = NavOp::from_keyword(rest[0].as_atom()?).ok_or("unknown navigation operator")?;
            let dim = rest[1].as_str()?.to_string();
            let args: Vec<Expr> = rest[2..].iter().map(expr_from_sexp).collect::<Result<_, _>>()?;
            if args.len() != if op.is_binary() { 2 } else { 1 } {
                return Err(arity_err(h));
            }
            Expr::Navigate { op, dim, args }
        }
        other => return Err(format!("unknown node `{other}`")),
    })
}

pub fn decl_from_sexp(s: &Sexp) -> Result<Decl, String> {
    let (h, rest) = head(s)?;
    let pos = Pos::default();
    let name = || rest.first().ok_or_else(|| arity_err(h)).and_then(|n| n.as_str().map(str::to_string));
    Ok(match (h, rest.len()) {
        ("dim", 1 | 2) => Decl::Dim { name: name()?, domain: rest.get(1).map(domain_from_sexp).transpose()?, pos },
        ("var", 2) => Decl::Var { name: name()?, expr: expr_from_sexp(&rest[1])?, pos },
        ("fun", 3) => Decl::Fun {
            name: name()?,
            params: rest[1]
                .as_list()?
                .iter()
                .map(|p| p.as_str().map(str::to_string))
                .collect::<Result<_, _>>()?,
            expr: expr_from_sexp(&rest[2])?,
            pos,
        },
        ("proc", 2) => Decl::Proc {
            name: name()?,
            arity: rest[1].as_atom()?.parse().map_err(|_| "bad arity".to_string())?,
            pos,
        },
        _ => return Err(arity_err(h)),
    })
}

/// Compact single-line rendering, handy for debugging and golden tests.
pub fn expr_text(e: &Expr) -> String {
    expr_to_sexp(e).to_text()
}
