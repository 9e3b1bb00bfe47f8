//! Recursive-descent parser.
//!
//! Precedence, lowest first:
//!
//! | level        | forms                                       | assoc |
//! |--------------|---------------------------------------------|-------|
//! | where        | `E where Q end`                             |       |
//! | navigation   | `fby.d` `wvr.d` `asa.d` `upon.d`            | right |
//! | or / and     | `\|\|`, `&&`                                | left  |
//! | comparison   | `== != < <= > >=`                           | left  |
//! | additive     | `+ -`                                       | left  |
//! | mult.        | `* / %`                                     | left  |
//! | unary        | `- !`, `first.d` `next.d` `prev.d`          |       |
//! | postfix      | `@`, `.d`, call                             | left  |
//! | primary      | literals, ids, `#E`, `#`, `[..]`, `{..}`, `Box[..]`, `<..> d`, `select(..)`, `if` |

use super::lexer::{Token, TokenKind};
use super::{CompileError, Phase};
use crate::context::Tag;
use crate::lang::ast::{BoxDim, Decl, Expr, NavOp};
use crate::lang::value::Value;

/// A parsed program: `root where decls end`, or a bare expression with no
/// declarations.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProgram {
    pub root: Expr,
    pub decls: Vec<Decl>,
}

impl ParsedProgram {
    pub fn into_expr(self) -> Expr {
        if self.decls.is_empty() {
            self.root
        } else {
            Expr::Where(Box::new(self.root), self.decls)
        }
    }
}

pub fn parse(tokens: &[Token]) -> Result<ParsedProgram, CompileError> {
    let mut p = Parser { tokens, pos: 0 };
    if p.peek().kind == TokenKind::Eof {
        return Err(p.error_here("expected an expression, found end of input (empty program)"));
    }
    let body = p.nav_expr()?;
    let decls = if p.peek().is_kw("where") {
        p.advance();
        p.decls()?
    } else {
        Vec::new()
    };
    p.expect_eof()?;
    Ok(ParsedProgram { root: body, decls })
}

/// Parses a single expression (used by the REPL).
pub fn parse_expr(tokens: &[Token]) -> Result<Expr, CompileError> {
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses a sequence of `;`-terminated declarations (used by the REPL).
pub fn parse_decls(tokens: &[Token]) -> Result<Vec<Decl>, CompileError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut decls = Vec::new();
    while p.peek().kind != TokenKind::Eof {
        decls.extend(p.decl()?);
        p.expect_sym(";")?;
    }
    Ok(decls)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &'t Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> &'t Token {
        let t = self.peek();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, tok: &Token, message: impl Into<String>) -> CompileError {
        CompileError { phase: Phase::Parse, message: message.into(), line: tok.line, column: tok.column }
    }

    fn error_here(&self, message: impl Into<String>) -> CompileError {
        self.error_at(self.peek(), message)
    }

    fn expected(&self, what: &str) -> CompileError {
        self.error_here(format!("expected {what}, found {}", self.peek()))
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.peek().is_sym(sym) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<&'t Token, CompileError> {
        if self.peek().is_sym(sym) {
            Ok(self.advance())
        } else {
            Err(self.expected(&format!("`{sym}`")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<&'t Token, CompileError> {
        if self.peek().is_kw(kw) {
            Ok(self.advance())
        } else {
            Err(self.expected(&format!("`{kw}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<&'t Token, CompileError> {
        if self.peek().kind == TokenKind::Identifier {
            Ok(self.advance())
        } else {
            Err(self.expected("an identifier"))
        }
    }

    fn expect_eof(&self) -> Result<(), CompileError> {
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else {
            Err(self.expected("end of input"))
        }
    }

    /// Full expression, including a trailing `where … end`.
    fn expr(&mut self) -> Result<Expr, CompileError> {
        let body = self.nav_expr()?;
        if self.peek().is_kw("where") {
            self.advance();
            let decls = self.decls()?;
            Ok(Expr::Where(Box::new(body), decls))
        } else {
            Ok(body)
        }
    }

    /// Declarations up to and including `end`.
    fn decls(&mut self) -> Result<Vec<Decl>, CompileError> {
        let mut decls = Vec::new();
        while !self.peek().is_kw("end") {
            if self.peek().kind == TokenKind::Eof {
                return Err(self.expected("`end`"));
            }
            decls.extend(self.decl()?);
            self.expect_sym(";")?;
        }
        self.advance();
        Ok(decls)
    }

    fn decl(&mut self) -> Result<Vec<Decl>, CompileError> {
        let start = self.peek();
        if start.is_kw("dimension") {
            self.advance();
            let mut out = Vec::new();
            loop {
                let name = self.expect_ident()?;
                let domain = if self.peek().is_kw("in") {
                    self.advance();
                    Some(self.domain()?)
                } else {
                    None
                };
                out.push(Decl::Dim { name: name.lexeme.clone(), domain, pos: name.pos() });
                if !self.eat_sym(",") {
                    return Ok(out);
                }
            }
        }
        if start.is_kw("procedure") {
            self.advance();
            let name = self.expect_ident()?;
            self.expect_sym("/")?;
            let arity = self.peek();
            if arity.kind != TokenKind::Int {
                return Err(self.expected("procedure arity"));
            }
            self.advance();
            let arity = arity.lexeme.parse().map_err(|_| self.error_at(arity, "bad arity"))?;
            return Ok(vec![Decl::Proc { name: name.lexeme.clone(), arity, pos: name.pos() }]);
        }
        let name = self.expect_ident()?;
        if self.eat_sym("(") {
            let mut params = Vec::new();
            if !self.eat_sym(")") {
                loop {
                    params.push(self.expect_ident()?.lexeme.clone());
                    if self.eat_sym(")") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
            }
            self.expect_sym("=")?;
            let expr = self.expr()?;
            return Ok(vec![Decl::Fun { name: name.lexeme.clone(), params, expr, pos: name.pos() }]);
        }
        if !self.peek().is_sym("=") {
            return Err(self.expected("`=` or `(` after declared name"));
        }
        self.advance();
        let expr = self.expr()?;
        Ok(vec![Decl::Var { name: name.lexeme.clone(), expr, pos: name.pos() }])
    }

    fn signed_literal(&mut self) -> Result<Tag, CompileError> {
        let neg = self.eat_sym("-");
        let tok = self.advance();
        let tag = match tok.kind {
            TokenKind::Int => Tag::Int(tok.lexeme.parse().map_err(|_| self.error_at(tok, "bad integer"))?),
            TokenKind::Float => Tag::Float(tok.lexeme.parse().map_err(|_| self.error_at(tok, "bad float"))?),
            TokenKind::Str if !neg => Tag::Str(tok.lexeme.clone()),
            TokenKind::Keyword if !neg && tok.lexeme == "true" => Tag::Bool(true),
            TokenKind::Keyword if !neg && tok.lexeme == "false" => Tag::Bool(false),
            _ => return Err(self.error_at(tok, format!("expected a literal tag, found {tok}"))),
        };
        Ok(match (neg, tag) {
            (true, Tag::Int(i)) => Tag::Int(-i),
            (true, Tag::Float(f)) => Tag::Float(-f),
            (_, t) => t,
        })
    }

    /// `lo..hi` (inclusive) or `{lit, …}`.
    fn domain(&mut self) -> Result<Vec<Tag>, CompileError> {
        if self.eat_sym("{") {
            let mut values = Vec::new();
            loop {
                values.push(self.signed_literal()?);
                if self.eat_sym("}") {
                    return Ok(values);
                }
                self.expect_sym(",")?;
            }
        }
        let start = self.peek();
        let lo = self.signed_literal()?;
        self.expect_sym("..")?;
        let hi = self.signed_literal()?;
        match (lo, hi) {
            (Tag::Int(lo), Tag::Int(hi)) if lo <= hi && hi - lo < 1_000_000 => Ok((lo..=hi).map(Tag::Int).collect()),
            _ => Err(self.error_at(start, "range domain must be `lo..hi` with integers lo <= hi")),
        }
    }

    fn nav_expr(&mut self) -> Result<Expr, CompileError> {
        let lhs = self.binary(0)?;
        let tok = self.peek();
        if tok.kind == TokenKind::Keyword {
            if let Some(op) = NavOp::from_keyword(&tok.lexeme).filter(|op| op.is_binary()) {
                self.advance();
                let dim = self.nav_dim()?;
                let rhs = self.nav_expr()?;
                return Ok(Expr::Navigate { op, dim, args: vec![lhs, rhs] });
            }
        }
        Ok(lhs)
    }

    fn nav_dim(&mut self) -> Result<String, CompileError> {
        self.expect_sym(".")?;
        Ok(self.expect_ident()?.lexeme.clone())
    }

    fn binary(&mut self, level: usize) -> Result<Expr, CompileError> {
        const LEVELS: &[&[&str]] = &[
            &["||"],
            &["&&"],
            &["==", "!=", "<", "<=", ">", ">="],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let tok = self.peek();
            match LEVELS[level].iter().find(|op| tok.is(TokenKind::Operator, op)) {
                Some(op) => {
                    self.advance();
                    let rhs = self.binary(level + 1)?;
                    lhs = Expr::binary(op, lhs, rhs);
                }
                None => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, CompileError> {
        let tok = self.peek();
        if tok.is_sym("-") {
            self.advance();
            return Ok(match self.unary()? {
                Expr::Literal(Value::Int(i)) => Expr::Literal(Value::Int(i.wrapping_neg())),
                Expr::Literal(Value::Float(f)) => Expr::Literal(Value::Float(-f)),
                e => Expr::op("neg", vec![e]),
            });
        }
        if tok.is_sym("!") {
            self.advance();
            return Ok(Expr::op("!", vec![self.unary()?]));
        }
        if tok.kind == TokenKind::Keyword {
            if let Some(op) = NavOp::from_keyword(&tok.lexeme).filter(|op| !op.is_binary()) {
                self.advance();
                let dim = self.nav_dim()?;
                let arg = self.unary()?;
                return Ok(Expr::Navigate { op, dim, args: vec![arg] });
            }
        }
        self.postfix()
    }

    fn starts_tag_operand(&self) -> bool {
        let t = self.peek();
        match t.kind {
            TokenKind::Int | TokenKind::Float | TokenKind::Str | TokenKind::Identifier => true,
            TokenKind::Keyword => {
                matches!(t.lexeme.as_str(), "true" | "false" | "eod" | "if" | "first" | "next" | "prev" | "select")
            }
            TokenKind::Punctuation => t.lexeme == "(",
            TokenKind::Operator => t.lexeme == "#",
            TokenKind::Eof => false,
        }
    }

    fn postfix(&mut self) -> Result<Expr, CompileError> {
        let mut e = self.primary()?;
        loop {
            let tok = self.peek();
            if tok.is_sym("@") {
                self.advance();
                let next = self.peek();
                if next.is_sym("[") || next.is_sym("{") || next.is_kw("Box") {
                    let ctx = self.primary()?;
                    e = Expr::AtCtx(Box::new(e), Box::new(ctx));
                    continue;
                }
                let first = self.primary()?;
                if self.starts_tag_operand() {
                    let tag = self.unary()?;
                    e = Expr::At3(Box::new(e), Box::new(first), Box::new(tag));
                } else {
                    e = Expr::AtCtx(Box::new(e), Box::new(first));
                }
            } else if tok.is_sym(".") && self.peek_at(1).kind == TokenKind::Identifier {
                self.advance();
                let d = self.advance();
                e = Expr::Dot(Box::new(e), Box::new(Expr::IdRef { name: d.lexeme.clone(), pos: d.pos() }));
            } else if tok.is_sym("(") {
                self.advance();
                let args = self.args(")")?;
                e = Expr::FunCall(Box::new(e), args);
            } else {
                return Ok(e);
            }
        }
    }

    /// Comma-separated expressions up to the closing delimiter.
    fn args(&mut self, close: &str) -> Result<Vec<Expr>, CompileError> {
        let mut args = Vec::new();
        if self.eat_sym(close) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_sym(close) {
                return Ok(args);
            }
            self.expect_sym(",")?;
        }
    }

    fn primary(&mut self) -> Result<Expr, CompileError> {
        let tok = self.peek();
        match tok.kind {
            TokenKind::Int => {
                self.advance();
                let i = tok.lexeme.parse().map_err(|_| self.error_at(tok, "bad integer"))?;
                Ok(Expr::Literal(Value::Int(i)))
            }
            TokenKind::Float => {
                self.advance();
                let f = tok.lexeme.parse().map_err(|_| self.error_at(tok, "bad float"))?;
                Ok(Expr::Literal(Value::Float(f)))
            }
            TokenKind::Str => {
                self.advance();
                Ok(Expr::Literal(Value::Str(tok.lexeme.clone())))
            }
            TokenKind::Identifier => {
                self.advance();
                Ok(Expr::IdRef { name: tok.lexeme.clone(), pos: tok.pos() })
            }
            TokenKind::Keyword => match tok.lexeme.as_str() {
                "true" | "false" => {
                    self.advance();
                    Ok(Expr::Literal(Value::Bool(tok.lexeme == "true")))
                }
                "eod" => {
                    self.advance();
                    Ok(Expr::Literal(Value::Eod))
                }
                "if" => {
                    self.advance();
                    let c = self.nav_expr()?;
                    self.expect_kw("then")?;
                    let t = self.nav_expr()?;
                    self.expect_kw("else")?;
                    let e = self.nav_expr()?;
                    Ok(Expr::if_then_else(c, t, e))
                }
                "select" => {
                    self.advance();
                    self.expect_sym("(")?;
                    let c = self.expr()?;
                    self.expect_sym(",")?;
                    let s = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(Expr::Select(Box::new(c), Box::new(s)))
                }
                "Box" => self.box_expr(),
                _ => Err(self.expected("an expression")),
            },
            TokenKind::Operator if tok.lexeme == "#" => {
                self.advance();
                let next = self.peek();
                if next.kind == TokenKind::Identifier || next.is_sym("(") {
                    let operand = self.primary()?;
                    Ok(Expr::TagQuery(Box::new(operand)))
                } else {
                    Ok(Expr::HashNullary)
                }
            }
            TokenKind::Operator if tok.lexeme == "<" => {
                self.advance();
                let mut elems = Vec::new();
                loop {
                    // comparison level excluded so `>` closes the tuple
                    elems.push(self.binary(3)?);
                    if self.eat_sym(">") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
                let d = self.expect_ident()?;
                Ok(Expr::TupleStream(elems, Box::new(Expr::IdRef { name: d.lexeme.clone(), pos: d.pos() })))
            }
            TokenKind::Punctuation => match tok.lexeme.as_str() {
                "(" => {
                    self.advance();
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(e)
                }
                "[" => {
                    self.advance();
                    let mut pairs = Vec::new();
                    if !self.eat_sym("]") {
                        loop {
                            let d = self.dim_operand()?;
                            self.expect_sym(":")?;
                            let t = self.nav_expr()?;
                            pairs.push((d, t));
                            if self.eat_sym("]") {
                                break;
                            }
                            self.expect_sym(",")?;
                        }
                    }
                    Ok(Expr::CtxBuild(pairs))
                }
                "{" => {
                    self.advance();
                    Ok(Expr::SetExpr(self.args("}")?))
                }
                _ => Err(self.expected("an expression")),
            },
            _ => Err(self.expected("an expression")),
        }
    }

    fn dim_operand(&mut self) -> Result<Expr, CompileError> {
        let tok = self.peek();
        if tok.kind == TokenKind::Identifier {
            self.advance();
            Ok(Expr::IdRef { name: tok.lexeme.clone(), pos: tok.pos() })
        } else if tok.is_sym("(") {
            self.primary()
        } else {
            Err(self.expected("a dimension"))
        }
    }

    fn box_expr(&mut self) -> Result<Expr, CompileError> {
        self.advance();
        self.expect_sym("[")?;
        let mut dims = Vec::new();
        loop {
            let dim = self.dim_operand()?;
            let domain = if self.peek().is_kw("in") {
                self.advance();
                Some(self.domain()?)
            } else {
                None
            };
            dims.push(BoxDim { dim, domain });
            if self.eat_sym("|") {
                break;
            }
            self.expect_sym(",")?;
        }
        let pred = self.expr()?;
        self.expect_sym("]")?;
        Ok(Expr::BoxExpr(dims, Box::new(pred)))
    }
}
