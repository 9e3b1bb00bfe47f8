//! The interactive session. Lines ending in `;` add declarations; `:ctx`
//! replaces the evaluation context; any other line is an expression
//! evaluated against everything declared so far.

use std::io::{BufRead, IsTerminal, Write};

use iplc_core::gee::{eval_eductive, ProcedureRegistry, Warehouse, ROOT_SUBJECT};
use iplc_core::{compile, CompileError, Context};

use crate::program::Failure;

pub struct Session {
    decls: Vec<String>,
    ctx: Context,
    registry: ProcedureRegistry,
}

impl Session {
    pub fn new() -> Self {
        Session { decls: Vec::new(), ctx: Context::new(), registry: ProcedureRegistry::standard() }
    }

    fn program(&self, expr: &str) -> String {
        if self.decls.is_empty() {
            expr.to_string()
        } else {
            format!("{expr}\nwhere\n{}\nend", self.decls.join("\n"))
        }
    }

    /// Handles one line; `None` ends the session.
    pub fn line(&mut self, line: &str) -> Option<Result<String, String>> {
        let line = line.trim();
        if line == ":quit" || line == ":q" {
            return None;
        }
        if let Some(rest) = line.strip_prefix(":ctx") {
            let rest = rest.trim();
            if rest.is_empty() {
                return Some(Ok(self.ctx.to_string()));
            }
            return Some(match rest.parse::<Context>() {
                Ok(c) => {
                    self.ctx = c;
                    Ok(self.ctx.to_string())
                }
                Err(e) => Err(format!("bad context: {e}")),
            });
        }
        if line.is_empty() {
            return Some(Ok(String::new()));
        }
        if line.starts_with(':') {
            return Some(Err(format!("unknown command `{line}` (try :ctx or :quit)")));
        }
        Some(if line.ends_with(';') { self.declare(line) } else { self.eval(line) })
    }

    fn declare(&mut self, line: &str) -> Result<String, String> {
        self.decls.push(line.to_string());
        match compile(&self.program("0")) {
            Ok(_) => Ok(String::new()),
            Err(errs) => {
                self.decls.pop();
                Err(errors(&errs))
            }
        }
    }

    fn eval(&self, expr: &str) -> Result<String, String> {
        let geer = compile(&self.program(expr)).map_err(|errs| errors(&errs))?;
        match eval_eductive(&geer, ROOT_SUBJECT, &self.ctx, &Warehouse::new(), &self.registry) {
            Ok((v, _)) => Ok(v.to_string()),
            Err(e) => Err(format!("{}: {e}", e.name())),
        }
    }
}

fn errors(errs: &[CompileError]) -> String {
    errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
}

pub fn run(input: impl BufRead, mut out: impl Write) -> Result<(), Failure> {
    let interactive = std::io::stdin().is_terminal();
    let io = |e: std::io::Error| Failure::Io(e.to_string());
    let mut session = Session::new();
    let mut lines = input.lines();
    loop {
        if interactive {
            write!(out, "> ").map_err(io)?;
            out.flush().map_err(io)?;
        }
        let Some(line) = lines.next() else { return Ok(()) };
        match session.line(&line.map_err(io)?) {
            None => return Ok(()),
            Some(Ok(text)) if text.is_empty() => {}
            Some(Ok(text)) => writeln!(out, "{text}").map_err(io)?,
            Some(Err(msg)) => {
                out.flush().map_err(io)?;
                eprintln!("error: {msg}");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(lines: &[&str]) -> Vec<Result<String, String>> {
        let mut s = Session::new();
        lines.iter().filter_map(|l| s.line(l)).collect()
    }

    #[test]
    fn declared_dimension_starts_at_zero() {
        assert_eq!(feed(&["dimension t;", "#t"])[1], Ok("0".into()));
    }

    #[test]
    fn ctx_overrides_the_point() {
        assert_eq!(feed(&["dimension t;", ":ctx [t:4]", "#t"])[2], Ok("4".into()));
    }

    #[test]
    fn parse_errors_leave_the_session_alive() {
        let out = feed(&["1 +", "X = 2;", "X * 3"]);
        assert!(out[0].is_err());
        assert_eq!(out[2], Ok("6".into()));
    }

    #[test]
    fn bad_declarations_are_not_kept() {
        let out = feed(&["X = ;", "1 + 1"]);
        assert!(out[0].is_err());
        assert_eq!(out[1], Ok("2".into()));
    }

    #[test]
    fn quit_ends_the_session() {
        let mut s = Session::new();
        assert!(s.line(":quit").is_none());
    }
}
