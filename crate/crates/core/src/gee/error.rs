use thiserror::Error;

use crate::context::ContextError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound dimension: {0}")]
    UnboundDimension(String),
    #[error("condition evaluated to {0}, not a boolean")]
    NotABoolean(String),
    #[error("`{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch { name: String, expected: String, found: usize },
    #[error("type error: {0}")]
    TypeError(String),
    #[error("not a dimension: {0}")]
    NonDimensionAt(String),
    #[error("arithmetic on eod: {0}")]
    EodArith(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cyclic demand for {0}")]
    CyclicDemand(String),
    #[error("unresolved identifier `{0}`")]
    UnresolvedIdentifier(String),
    #[error("procedure `{0}` is already registered")]
    DuplicateProcedure(String),
    #[error("unknown procedure `{0}`")]
    UnknownProcedure(String),
    #[error("procedure `{name}` failed: {message}")]
    ProcedureFailed { name: String, message: String },
    #[error("evaluation exceeded the depth limit of {0}")]
    DepthExceeded(usize),
    #[error("{0}")]
    Context(ContextError),
    /// A failure reported by a remote tier that has no local counterpart.
    #[error("{kind}: {message}")]
    Remote { kind: String, message: String },
}

impl EvalError {
    /// The error's name, as printed by the command line and carried on the
    /// wire.
    pub fn name(&self) -> &str {
        match self {
            EvalError::UnboundDimension(_) => "UnboundDimension",
            EvalError::NotABoolean(_) => "NotABoolean",
            EvalError::ArityMismatch { .. } => "ArityMismatch",
            EvalError::TypeError(_) => "TypeError",
            EvalError::NonDimensionAt(_) => "NonDimensionAt",
            EvalError::EodArith(_) => "EodArith",
            EvalError::DivisionByZero => "DivisionByZero",
            EvalError::CyclicDemand(_) => "CyclicDemand",
            EvalError::UnresolvedIdentifier(_) => "UnresolvedIdentifier",
            EvalError::DuplicateProcedure(_) => "DuplicateProcedure",
            EvalError::UnknownProcedure(_) => "UnknownProcedure",
            EvalError::ProcedureFailed { .. } => "ProcedureFailed",
            EvalError::DepthExceeded(_) => "DepthExceeded",
            EvalError::Context(ContextError::ConflictingTags { .. }) => "ConflictingTags",
            EvalError::Context(ContextError::InvalidBox(_)) => "InvalidBox",
            EvalError::Context(_) => "ContextError",
            EvalError::Remote { kind, .. } => kind,
        }
    }

    /// Rebuilds an error from its name and display text, as received from
    /// another tier. Only errors whose payload is the bare message are
    /// reconstructed exactly; everything else becomes [`EvalError::Remote`].
    pub fn from_wire(kind: &str, message: &str) -> EvalError {
        let strip = |prefix: &str| message.strip_prefix(prefix).unwrap_or(message).to_string();
        match kind {
            "UnknownProcedure" => EvalError::UnknownProcedure(
                strip("unknown procedure `").trim_end_matches('`').to_string(),
            ),
            "UnresolvedIdentifier" => EvalError::UnresolvedIdentifier(
                strip("unresolved identifier `").trim_end_matches('`').to_string(),
            ),
            "DivisionByZero" => EvalError::DivisionByZero,
            "TypeError" => EvalError::TypeError(strip("type error: ")),
            "CyclicDemand" => EvalError::CyclicDemand(strip("cyclic demand for ")),
            _ => EvalError::Remote { kind: kind.to_string(), message: message.to_string() },
        }
    }
}

impl From<ContextError> for EvalError {
    fn from(e: ContextError) -> Self {
        match e {
            ContextError::UnboundDimension(d) => EvalError::UnboundDimension(d.to_string()),
            ContextError::MixedTagKinds(a, b) => {
                EvalError::TypeError(format!("cannot compare tags {a} and {b} of different kinds"))
            }
            other => EvalError::Context(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_round_trip_for_simple_errors() {
        for e in [
            EvalError::UnknownProcedure("hypot".into()),
            EvalError::DivisionByZero,
            EvalError::TypeError("bad".into()),
            EvalError::UnresolvedIdentifier("x".into()),
        ] {
            assert_eq!(EvalError::from_wire(e.name(), &e.to_string()), e);
        }
        let other = EvalError::from_wire("Timeout", "no answer");
        assert_eq!(other.name(), "Timeout");
    }
}
