//! A blocking client endpoint for talking to tiers and nodes.

use std::sync::Arc;
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver};
use iplc_core::gee::ops::initial_point;
use iplc_core::gee::{demand_key_of, DemandKey, ROOT_SUBJECT};
use iplc_core::{Context, EvalError, Geer, Value};

use crate::error::TierError;
use crate::message::{Address, Demand, Envelope, Message, Outcome, Payload, SystemCommand, TierKind};
use crate::net::Network;
use crate::port::Port;

pub struct Client {
    port: Arc<Port>,
    timeout: Duration,
    _inbox: Receiver<Envelope>,
}

impl Drop for Client {
    fn drop(&mut self) {
        self.port.close();
    }
}

fn unexpected(m: &Message) -> TierError {
    TierError::Protocol(format!("unexpected {}", m.kind().as_str()))
}

impl Client {
    pub fn connect(net: Arc<dyn Network>, hint: &str, timeout: Duration) -> Result<Client, TierError> {
        let (tx, rx) = unbounded();
        let port = Port::bind(net, hint, tx)?;
        Ok(Client { port, timeout, _inbox: rx })
    }

    pub fn address(&self) -> &Address {
        self.port.address()
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    /// Sends a request and waits for its reply; ERR replies become errors.
    pub fn call(&self, to: &Address, msg: Message) -> Result<Message, TierError> {
        match self.port.call(to, msg, self.timeout)? {
            Message::Err(w) => Err(TierError::Remote(w)),
            m => Ok(m),
        }
    }

    fn ack(&self, to: &Address, msg: Message) -> Result<String, TierError> {
        match self.call(to, msg)? {
            Message::Ack { detail } => Ok(detail),
            m => Err(unexpected(&m)),
        }
    }

    pub fn heartbeat(&self, to: &Address) -> Result<String, TierError> {
        self.ack(to, Message::sys(SystemCommand::Heartbeat))
    }

    pub fn status(&self, to: &Address) -> Result<serde_json::Value, TierError> {
        let text = self.ack(to, Message::sys(SystemCommand::Status))?;
        serde_json::from_str(&text).map_err(|e| TierError::Protocol(e.to_string()))
    }

    pub fn shutdown(&self, to: &Address) -> Result<(), TierError> {
        self.ack(to, Message::sys(SystemCommand::Shutdown)).map(drop)
    }

    pub fn register_node(&self, gim: &Address, node_id: &str, address: &Address) -> Result<String, TierError> {
        let cmd = SystemCommand::RegisterNode { node_id: node_id.to_string(), address: address.clone(), propagated: false };
        self.ack(gim, Message::sys(cmd))
    }

    pub fn spawn_tier(&self, gim: &Address, node_id: &str, kind: TierKind) -> Result<Address, TierError> {
        let cmd = SystemCommand::SpawnTier { node_id: node_id.to_string(), kind, store: None };
        self.ack(gim, Message::sys(cmd)).map(Address)
    }

    pub fn announce_managers(&self, gim: &Address, managers: &[Address]) -> Result<(), TierError> {
        let m = crate::message::Membership { managers: managers.to_vec(), ..Default::default() };
        self.ack(gim, Message::PeerAnnounce(m)).map(drop)
    }

    /// Stores a program with a store tier; returns its program id.
    pub fn add_geer(&self, dst: &Address, geer: &Geer) -> Result<String, TierError> {
        let text = String::from_utf8(geer.serialize()).expect("GEER text is UTF-8");
        self.ack(dst, Message::sys(SystemCommand::AddGeer { geer: text }))
    }

    pub fn put(&self, dst: &Address, key: &str, value: &str) -> Result<(), TierError> {
        self.ack(dst, Message::StorePut { key: key.to_string(), value: value.to_string() }).map(drop)
    }

    pub fn get(&self, dst: &Address, key: &str) -> Result<String, TierError> {
        match self.call(dst, Message::StoreGet { key: key.to_string(), fanout: true })? {
            Message::StoreHit { value, .. } => Ok(value),
            Message::StoreMiss { key } => Err(TierError::NotFound(key)),
            m => Err(unexpected(&m)),
        }
    }

    fn demand(&self, dst: &Address, program_id: &str, payload: Payload) -> Result<Value, TierError> {
        let d = Demand {
            id: format!("{}#{}", self.address(), self.port.fresh_id()),
            program_id: program_id.to_string(),
            payload,
            reply_to: self.address().clone(),
        };
        match self.call(dst, Message::Demand(d))? {
            Message::Result { outcome: Outcome::Value(v), .. } => {
                v.parse().map_err(|e| TierError::Protocol(format!("bad value `{v}`: {e}")))
            }
            Message::Result { outcome: Outcome::Error(w), .. } => Err(TierError::Eval(EvalError::from_wire(&w.kind, &w.message))),
            m => Err(unexpected(&m)),
        }
    }

    /// Demands `key` through a store tier.
    pub fn demand_key(&self, dst: &Address, key: &DemandKey) -> Result<Value, TierError> {
        self.demand(dst, &key.program_id, Payload::Intensional { key: key.to_string() })
    }

    /// Evaluates `geer`'s root at `ctx`; the program must already be stored.
    pub fn execute(&self, dst: &Address, geer: &Geer, ctx: &Context) -> Result<Value, TierError> {
        let point = initial_point(geer, ctx).map_err(TierError::Eval)?;
        let key = demand_key_of(geer, ROOT_SUBJECT, &point).map_err(TierError::Eval)?;
        self.demand_key(dst, &key)
    }

    pub fn procedure(&self, dst: &Address, name: &str, args: &[Value]) -> Result<Value, TierError> {
        let payload = Payload::Procedural { name: name.to_string(), args: args.iter().map(Value::to_string).collect() };
        self.demand(dst, "", payload)
    }
}
