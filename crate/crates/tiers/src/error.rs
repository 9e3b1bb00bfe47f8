use iplc_core::EvalError;
use thiserror::Error;

use crate::message::{Address, WireError};
use crate::net::NetError;
use crate::port::CallError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TierError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("no reply from {0}")]
    Timeout(Address),
    #[error("{0}")]
    Remote(WireError),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{0}")]
    Eval(EvalError),
    #[error("unexpected reply: {0}")]
    Protocol(String),
    #[error("{0}")]
    Config(String),
}

impl TierError {
    /// The error's name as shown to users and carried on the wire.
    pub fn name(&self) -> &str {
        match self {
            TierError::Net(NetError::Unreachable(_)) => "Unreachable",
            TierError::Net(NetError::Bind(..)) => "BindFailed",
            TierError::Timeout(_) => "Timeout",
            TierError::Remote(w) => &w.kind,
            TierError::NotFound(_) => "NotFound",
            TierError::Eval(e) => e.name(),
            TierError::Protocol(_) => "ProtocolError",
            TierError::Config(_) => "ConfigError",
        }
    }
}

impl From<CallError> for TierError {
    fn from(e: CallError) -> Self {
        match e {
            CallError::Net(n) => TierError::Net(n),
            CallError::Timeout(a, _) => TierError::Timeout(a),
        }
    }
}

impl From<WireError> for TierError {
    fn from(w: WireError) -> Self {
        TierError::Remote(w)
    }
}
