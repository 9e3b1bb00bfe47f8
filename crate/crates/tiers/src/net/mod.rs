//! Transports. Every bound address has a sink that receives decoded
//! envelopes; sends fail fast when the destination is known to be down.

mod sim;
mod tcp;

use std::sync::Arc;

use thiserror::Error;

pub use sim::{SimNetwork, SIM_DEADLINE_TICKS};
pub use tcp::{TcpNetwork, TCP_DEADLINE_MS};

use crate::message::{Address, Envelope};

pub type Sink = Arc<dyn Fn(Envelope) + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("{0} is unreachable")]
    Unreachable(Address),
    #[error("cannot bind {0}: {1}")]
    Bind(String, String),
}

pub trait Network: Send + Sync + 'static {
    /// Binds a new endpoint. `hint` is an id on the simulated transport
    /// and a `host:port` (port 0 for any) on TCP.
    fn bind(&self, hint: &str, sink: Sink) -> Result<Address, NetError>;
    fn unbind(&self, addr: &Address);
    fn send(&self, to: &Address, env: &Envelope) -> Result<(), NetError>;
    /// The transport clock: simulated ticks or wall-clock milliseconds.
    fn now(&self) -> u64;
    /// How long, on the transport clock, an assignment may stay unanswered.
    fn deadline(&self) -> u64;
}
