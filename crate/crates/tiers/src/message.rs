//! Messages exchanged between tiers, nodes and clients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A tier or node address: `host:port` on TCP, `sim:<id>` in process.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(pub String);

impl Address {
    pub fn sim(id: &str) -> Self {
        Address(format!("sim:{id}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Address {
    fn from(s: &str) -> Self {
        Address(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TierKind {
    Dgt,
    Dst,
    Dwt,
    Gim,
}

impl TierKind {
    pub const ALL: [TierKind; 4] = [TierKind::Gim, TierKind::Dgt, TierKind::Dst, TierKind::Dwt];

    pub fn as_str(self) -> &'static str {
        match self {
            TierKind::Dgt => "DGT",
            TierKind::Dst => "DST",
            TierKind::Dwt => "DWT",
            TierKind::Gim => "GIM",
        }
    }
}

impl fmt::Display for TierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TierKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown tier kind `{s}` (expected dgt, dst, dwt or gim)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandKind {
    Intensional,
    Procedural,
    System,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    /// A demand key in `programId:subject:[ctx]` form.
    Intensional { key: String },
    /// A procedure call; arguments are canonical value text.
    Procedural { name: String, args: Vec<String> },
    System { command: SystemCommand },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub id: String,
    pub program_id: String,
    pub payload: Payload,
    pub reply_to: Address,
}

impl Demand {
    pub fn kind(&self) -> DemandKind {
        match self.payload {
            Payload::Intensional { .. } => DemandKind::Intensional,
            Payload::Procedural { .. } => DemandKind::Procedural,
            Payload::System { .. } => DemandKind::System,
        }
    }

    /// The store key under which the demand's result is kept.
    pub fn store_key(&self) -> String {
        match &self.payload {
            Payload::Intensional { key } => key.clone(),
            Payload::Procedural { name, args } => procedural_key(name, args),
            Payload::System { .. } => format!("sys:{}", self.id),
        }
    }
}

pub fn procedural_key(name: &str, args: &[String]) -> String {
    format!("proc:{name}({})", args.join(", "))
}

pub fn geer_key(program_id: &str) -> String {
    format!("geer:{program_id}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum SystemCommand {
    RegisterNode { node_id: String, address: Address, propagated: bool },
    SpawnTier { node_id: String, kind: TierKind, store: Option<Address> },
    AddGeer { geer: String },
    RequestGeer { program_id: String },
    AddProcedure { name: String },
    Heartbeat,
    Status,
    Shutdown,
}

/// Tier membership, pushed to stores whenever it changes and to managers
/// to tell them their peers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    #[serde(default)]
    pub managers: Vec<Address>,
    pub stores: Vec<Address>,
    pub generators: Vec<Address>,
    pub workers: Vec<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireError {
    pub kind: String,
    pub message: String,
}

impl WireError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        WireError { kind: kind.to_string(), message: message.into() }
    }
}

impl fmt::Display for WireError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Value(String),
    Error(WireError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Demand(Demand),
    Result { demand_id: String, outcome: Outcome },
    Sys { command: SystemCommand },
    StorePut { key: String, value: String },
    StoreGet { key: String, fanout: bool },
    StoreHit { key: String, value: String },
    StoreMiss { key: String },
    PeerAnnounce(Membership),
    Ack { detail: String },
    Err(WireError),
}

impl Message {
    pub fn kind(&self) -> MsgKind {
        match self {
            Message::Demand(_) => MsgKind::Demand,
            Message::Result { .. } => MsgKind::Result,
            Message::Sys { .. } => MsgKind::Sys,
            Message::StorePut { .. } => MsgKind::StorePut,
            Message::StoreGet { .. } => MsgKind::StoreGet,
            Message::StoreHit { .. } => MsgKind::StoreHit,
            Message::StoreMiss { .. } => MsgKind::StoreMiss,
            Message::PeerAnnounce(_) => MsgKind::PeerAnnounce,
            Message::Ack { .. } => MsgKind::Ack,
            Message::Err(_) => MsgKind::Err,
        }
    }

    pub fn ack(detail: impl Into<String>) -> Self {
        Message::Ack { detail: detail.into() }
    }

    pub fn err(kind: &str, message: impl Into<String>) -> Self {
        Message::Err(WireError::new(kind, message))
    }

    pub fn sys(command: SystemCommand) -> Self {
        Message::Sys { command }
    }
}

/// The frame header naming the message kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgKind {
    Demand,
    Result,
    Sys,
    StorePut,
    StoreGet,
    StoreHit,
    StoreMiss,
    PeerAnnounce,
    Ack,
    Err,
}

impl MsgKind {
    pub const ALL: [MsgKind; 10] = [
        MsgKind::Demand,
        MsgKind::Result,
        MsgKind::Sys,
        MsgKind::StorePut,
        MsgKind::StoreGet,
        MsgKind::StoreHit,
        MsgKind::StoreMiss,
        MsgKind::PeerAnnounce,
        MsgKind::Ack,
        MsgKind::Err,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MsgKind::Demand => "DEMAND",
            MsgKind::Result => "RESULT",
            MsgKind::Sys => "SYS",
            MsgKind::StorePut => "STORE_PUT",
            MsgKind::StoreGet => "STORE_GET",
            MsgKind::StoreHit => "STORE_HIT",
            MsgKind::StoreMiss => "STORE_MISS",
            MsgKind::PeerAnnounce => "PEER_ANNOUNCE",
            MsgKind::Ack => "ACK",
            MsgKind::Err => "ERR",
        }
    }

    pub fn parse(s: &str) -> Option<MsgKind> {
        MsgKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// A message with its routing header. `corr` numbers requests per sender;
/// replies carry the request's number in `re`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub from: Address,
    pub corr: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<u64>,
    pub msg: Message,
}
