//! The compiler: source text to GEER.

pub mod analyze;
pub mod lexer;
pub mod lower;
pub mod parser;

use std::fmt;

use thiserror::Error;

use crate::lang::geer::Geer;
use crate::lang::rank::compute_ranks;

pub use analyze::{analyze, Analysis};
pub use lexer::{tokenize, Token, TokenKind};
pub use lower::{lower, lower_program};
pub use parser::{parse, parse_decls, parse_expr, ParsedProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Lex,
    Parse,
    Analyze,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Lex => "lex",
            Phase::Parse => "parse",
            Phase::Analyze => "analyze",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {phase} error: {message}")]
pub struct CompileError {
    pub phase: Phase,
    pub message: String,
    pub line: u32,
    pub column: u32,
}

/// Compiles a program: tokenize, parse, analyze, lower, rank, emit.
pub fn compile(source: &str) -> Result<Geer, Vec<CompileError>> {
    build(source, true)
}

/// Like [`compile`] but keeps the surface navigation operators
/// (`fby`, `first`, `wvr`, …) instead of lowering them.
pub fn compile_surface(source: &str) -> Result<Geer, Vec<CompileError>> {
    build(source, false)
}

fn build(source: &str, lowered: bool) -> Result<Geer, Vec<CompileError>> {
    let tokens = tokenize(source).map_err(|e| vec![e])?;
    let parsed = parse(&tokens).map_err(|e| vec![e])?;
    let analysis = analyze(parsed)?;
    let (mut entries, root) = if lowered {
        lower_program(analysis.entries, &analysis.root)
    } else {
        (analysis.entries, analysis.root)
    };
    let ranks = compute_ranks(&entries).map_err(|e| {
        vec![CompileError { phase: Phase::Analyze, message: e.to_string(), line: 1, column: 1 }]
    })?;
    for (name, rank) in ranks {
        if let Some(entry) = entries.get_mut(&name) {
            entry.rank = rank;
        }
    }
    let geer = Geer::new(entries, root);
    if let Err(message) = geer.check_references() {
        return Err(vec![CompileError { phase: Phase::Analyze, message, line: 1, column: 1 }]);
    }
    Ok(geer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::Expr;
    use crate::lang::geer::EntryKind;

    #[test]
    fn raining_program_entries() {
        let g = compile(
            "raining where dimension day; raining = <false,false,true,true,true,false,false,false,true> day; end",
        )
        .unwrap();
        let kinds: Vec<(&str, EntryKind)> = g.entries().iter().map(|(n, e)| (n.as_str(), e.kind)).collect();
        assert_eq!(kinds, [("day", EntryKind::Dim), ("raining", EntryKind::Var)]);
        assert_eq!(g.entry("raining").unwrap().rank.iter().map(|d| d.as_str()).collect::<Vec<_>>(), ["day"]);
    }

    #[test]
    fn empty_program_is_a_parse_error() {
        let errs = compile("").unwrap_err();
        assert_eq!(errs[0].phase, Phase::Parse);
    }

    #[test]
    fn box_root_keeps_inline_domain() {
        let g = compile("Box[d in 0..2 | #d < 2] where dimension d; end").unwrap();
        match g.root() {
            Expr::BoxExpr(dims, _) => assert_eq!(dims[0].domain.as_ref().map(Vec::len), Some(3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn naturals_rank() {
        let g = compile("N where dimension t, s; N = 0 fby.t (N + 1); end").unwrap();
        let rank: Vec<&str> = g.entry("N").unwrap().rank.iter().map(|d| d.as_str()).collect();
        assert_eq!(rank, ["t"]);
    }

    #[test]
    fn error_display_has_position() {
        let errs = compile("x where x = q; end").unwrap_err();
        let text = errs[0].to_string();
        assert!(text.starts_with("1:13: analyze error"), "{text}");
    }
}
