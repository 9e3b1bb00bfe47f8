//! Instance manager: registers nodes, asks them to spawn tiers, and keeps
//! every store told who the stores, generators and workers are.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::message::{Address, Envelope, Membership, Message, SystemCommand, TierKind};
use crate::port::Port;
use crate::tier::{Flow, Tier, Wiring};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub address: Address,
    pub tiers: Vec<(TierKind, Address)>,
}

pub struct Gim {
    port: Arc<Port>,
    nodes: BTreeMap<String, NodeInfo>,
    peers: Vec<Address>,
    next_store: usize,
    call_timeout: Duration,
}

impl Gim {
    pub fn new(wiring: Wiring<()>, call_timeout: Duration) -> Self {
        Gim { port: wiring.port, nodes: BTreeMap::new(), peers: Vec::new(), next_store: 0, call_timeout }
    }

    fn all(&self, kind: TierKind) -> Vec<Address> {
        self.nodes.values().flat_map(|n| n.tiers.iter()).filter(|(k, _)| *k == kind).map(|(_, a)| a.clone()).collect()
    }

    pub fn membership(&self) -> Membership {
        Membership {
            managers: Vec::new(),
            stores: self.all(TierKind::Dst),
            generators: self.all(TierKind::Dgt), workers: self.all(TierKind::Dwt),
        }
    }

    fn announce(&self) {
        let m = self.membership();
        for store in &m.stores {
            if let Err(e) = self.port.call(store, Message::PeerAnnounce(m.clone()), self.call_timeout) {
                log::warn!("gim: announce to {store} failed: {e}");
            }
        }
    }

    fn register(&mut self, node_id: &str, address: &Address, propagated: bool) -> Message {
        if self.nodes.contains_key(node_id) {
            return Message::err("DuplicateNode", format!("node {node_id} is already registered"));
        }
        if !propagated {
            match self.port.call(address, Message::sys(SystemCommand::Heartbeat), self.call_timeout) {
                Ok(Message::Ack { .. }) => {}
                Ok(other) => return Message::err("Unreachable", format!("{address} answered {}", other.kind().as_str())),
                Err(e) => return Message::err("Unreachable", e.to_string()),
            }
        }
        self.nodes.insert(node_id.to_string(), NodeInfo { address: address.clone(), tiers: Vec::new() });
        if !propagated {
            for peer in &self.peers {
                let msg = Message::sys(SystemCommand::RegisterNode {
                    node_id: node_id.to_string(),
                    address: address.clone(),
                    propagated: true,
                });
                if let Err(e) = self.port.call(peer, msg, self.call_timeout) {
                    log::warn!("gim: peer {peer} not informed: {e}");
                }
            }
        }
        Message::ack(node_id)
    }

    fn spawn(&mut self, node_id: &str, kind: TierKind, store: Option<Address>) -> Message {
        let Some(node) = self.nodes.get(node_id) else {
            return Message::err("UnknownNode", format!("no node {node_id}"));
        };
        let store = match (kind, store) {
            (TierKind::Dgt, None) => {
                let stores = self.all(TierKind::Dst);
                if stores.is_empty() {
                    return Message::err("SpawnFailed", "a generator needs a store; spawn a DST first");
                }
                self.next_store += 1;
                Some(stores[(self.next_store - 1) % stores.len()].clone())
            }
            (_, s) => s,
        };
        let request = Message::sys(SystemCommand::SpawnTier { node_id: node_id.to_string(), kind, store });
        let address = match self.port.call(&node.address, request, self.call_timeout) {
            Ok(Message::Ack { detail }) => Address(detail),
            Ok(Message::Err(w)) => return Message::Err(w),
            Ok(other) => return Message::err("SpawnFailed", format!("node answered {}", other.kind().as_str())),
            Err(e) => return Message::err("SpawnFailed", e.to_string()),
        };
        self.nodes.get_mut(node_id).expect("checked above").tiers.push((kind, address.clone()));
        if kind != TierKind::Gim {
            self.announce();
        }
        Message::ack(address.0)
    }
}

impl Tier for Gim {
    type Local = ();

    fn name(&self) -> &'static str {
        "GIM"
    }

    fn handle(&mut self, env: Envelope) -> Flow {
        let reply = match &env.msg {
            Message::Sys { command: SystemCommand::RegisterNode { node_id, address, propagated } } => {
                self.register(node_id, address, *propagated)
            }
            Message::Sys { command: SystemCommand::SpawnTier { node_id, kind, store } } => {
                self.spawn(node_id, *kind, store.clone())
            }
            Message::PeerAnnounce(m) => {
                self.peers = m.managers.iter().filter(|a| *a != self.port.address()).cloned().collect();
                Message::ack("")
            }
            other => Message::err("Unsupported", format!("a manager does not handle {}", other.kind().as_str())),
        };
        let _ = self.port.reply(&env, reply);
        Flow::Continue
    }

    fn status(&self) -> serde_json::Value {
        let m = self.membership();
        json!({
            "nodes": self.nodes,
            "peers": self.peers,
            "stores": m.stores.len(),
            "generators": m.generators.len(),
            "workers": m.workers.len(),
        })
    }
}
