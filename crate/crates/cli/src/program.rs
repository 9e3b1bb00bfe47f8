//! Program loading, context parsing and the exit-code mapping.

use std::fmt;
use std::path::Path;

use iplc_core::corpus;
use iplc_core::lang::geer::FORMAT_HEADER;
use iplc_core::{CompileError, Context, EvalError, Geer};
use iplc_tiers::TierError;

#[derive(Debug)]
pub enum Failure {
    Io(String),
    Usage(String),
    Eval(String),
    Distributed(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Eval(_) => 3,
            Failure::Distributed(_) => 4,
        }
    }

    pub fn compile(origin: &Path, errs: &[CompileError]) -> Failure {
        let lines: Vec<String> = errs.iter().map(|e| format!("{}:{e}", origin.display())).collect();
        Failure::Usage(lines.join("\n"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) | Failure::Usage(m) | Failure::Eval(m) | Failure::Distributed(m) => f.write_str(m),
        }
    }
}

/// Evaluation errors keep their own exit code; everything else that goes
/// wrong in a cluster is a runtime failure.
pub fn tier_failure(e: TierError) -> Failure {
    match e {
        TierError::Eval(ev) => eval_failure(&ev),
        other => Failure::Distributed(format!("{}: {other}", other.name())),
    }
}

/// Remote error kinds that report the cluster's state rather than the program's.
const RUNTIME_KINDS: &[&str] = &["Unavailable", "ProgramUnavailable", "StoreUnavailable", "Timeout", "Unreachable"];

pub fn eval_failure(e: &EvalError) -> Failure {
    match e {
        EvalError::Remote { kind, .. } if RUNTIME_KINDS.contains(&kind.as_str()) => Failure::Distributed(e.to_string()),
        EvalError::Remote { .. } => Failure::Eval(e.to_string()),
        _ => Failure::Eval(format!("{}: {e}", e.name())),
    }
}

pub fn parse_ctx(text: &str) -> Result<Context, Failure> {
    text.parse().map_err(|e| Failure::Usage(format!("bad context `{text}`: {e}")))
}

/// Reads a `.geer` file or compiles a source file.
pub fn load(path: &Path) -> Result<Geer, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(FORMAT_HEADER.as_bytes()) {
        return Geer::parse(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())));
    }
    let source = String::from_utf8(bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    iplc_core::compile(&source).map_err(|errs| Failure::compile(path, &errs))
}

/// Loads a corpus program by name, or a file when no program has that name.
pub fn load_named(name: &str) -> Result<Geer, Failure> {
    match corpus::find(name) {
        Some(p) => iplc_core::compile(p.source).map_err(|errs| Failure::compile(Path::new(name), &errs)),
        None => load(Path::new(name)),
    }
}

/// `IPLC_DEADLINE_MS`, when set, replaces the re-issue deadline.
pub fn deadline_override() -> Option<u64> {
    std::env::var("IPLC_DEADLINE_MS").ok().and_then(|v| v.trim().parse().ok())
}
