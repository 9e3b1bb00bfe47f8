//! Demand store tier: a single-assignment result store shared with its
//! peers by fan-out lookup, and the dispatcher that hands demands to
//! generators and workers and re-issues them when a deadline passes.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use crossbeam_channel::Sender;
use iplc_core::Geer;
use serde_json::json;

use crate::message::{
    geer_key, Address, Demand, DemandKind, Envelope, Membership, Message, Outcome, SystemCommand, WireError,
};
use crate::net::NetError;
use crate::port::{CallError, Port};
use crate::store::{Put, Store};
use crate::tier::{Flow, Tier, Wiring};

#[derive(Debug)]
pub enum AfterLookup {
    Store,
    Demand(Demand),
    Geer(String),
}

#[derive(Debug)]
pub struct Lookup {
    request: Envelope,
    key: String,
    found: Option<String>,
    then: AfterLookup,
}

#[derive(Debug, Clone)]
struct Assignment {
    demand: Demand,
    origin: Address,
    origin_corr: u64,
    assignee: Address,
    deadline: u64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Counters {
    puts: u64,
    conflicts: u64,
    gets: u64,
    hits: u64,
    peer_hits: u64,
    misses: u64,
    dispatched: u64,
    redispatched: u64,
    completed: u64,
    unreachable: u64,
}

pub struct Dst {
    port: Arc<Port>,
    local: Sender<Lookup>,
    store: Store,
    peers: Vec<Address>,
    generators: Vec<Address>,
    workers: Vec<Address>,
    next_generator: usize,
    next_worker: usize,
    pending: BTreeMap<String, Assignment>,
    call_timeout: Duration,
    n: Counters,
}

impl Dst {
    pub fn new(wiring: Wiring<Lookup>, store: Store, call_timeout: Duration) -> Self {
        Dst {
            port: wiring.port,
            local: wiring.local,
            store,
            peers: Vec::new(),
            generators: Vec::new(),
            workers: Vec::new(),
            next_generator: 0,
            next_worker: 0,
            pending: BTreeMap::new(),
            call_timeout,
            n: Counters::default(),
        }
    }

    fn reply(&self, to: &Envelope, msg: Message) {
        if let Err(e) = self.port.reply(to, msg) {
            log::warn!("dst {}: reply lost: {e}", self.port.address());
        }
    }

    fn put(&mut self, key: &str, value: &str) -> Result<(), WireError> {
        match self.store.put(key, value) {
            Ok(Put::Inserted) => {
                self.n.puts += 1;
                Ok(())
            }
            Ok(Put::Unchanged) => Ok(()),
            Ok(Put::Conflict { existing }) => {
                self.n.conflicts += 1;
                Err(WireError::new("ConflictingResult", format!("{key} holds {existing}, refusing {value}")))
            }
            Err(e) => Err(WireError::new("StoreUnavailable", e.to_string())),
        }
    }

    /// Looks `key` up locally, then on every peer once from a helper
    /// thread; the answer comes back as a local event.
    fn lookup(&mut self, request: Envelope, key: String, then: AfterLookup) {
        self.n.gets += 1;
        if let Some(v) = self.store.get(&key) {
            self.n.hits += 1;
            let found = Some(v.clone());
            self.finish(Lookup { request, key, found, then });
            return;
        }
        let fanout = !matches!(&request.msg, Message::StoreGet { fanout: false, .. });
        if !fanout || self.peers.is_empty() {
            self.finish(Lookup { request, key, found: None, then });
            return;
        }
        let (port, peers, local, timeout) = (self.port.clone(), self.peers.clone(), self.local.clone(), self.call_timeout);
        thread::spawn(move || {
            let mut found = None;
            for peer in &peers {
                match port.call(peer, Message::StoreGet { key: key.clone(), fanout: false }, timeout) {
                    Ok(Message::StoreHit { value, .. }) => {
                        found = Some(value);
                        break;
                    }
                    Ok(_) | Err(CallError::Net(_)) | Err(CallError::Timeout(..)) => {}
                }
            }
            let _ = local.send(Lookup { request, key, found, then });
        });
    }

    fn finish(&mut self, done: Lookup) {
        let Lookup { request, key, found, then } = done;
        if let Some(v) = &found {
            if self.store.get(&key).is_none() {
                self.n.peer_hits += 1;
                let _ = self.put(&key, v);
            }
        } else {
            self.n.misses += 1;
        }
        match (then, found) {
            (AfterLookup::Store, Some(value)) => self.reply(&request, Message::StoreHit { key, value }),
            (AfterLookup::Store, None) => self.reply(&request, Message::StoreMiss { key }),
            (AfterLookup::Demand(d), Some(value)) => {
                self.reply(&request, Message::Result { demand_id: d.id, outcome: Outcome::Value(value) })
            }
            (AfterLookup::Demand(d), None) => self.dispatch(d, request.from.clone(), request.corr),
            (AfterLookup::Geer(_), Some(text)) => self.reply(&request, Message::ack(text)),
            (AfterLookup::Geer(pid), None) => {
                self.reply(&request, Message::err("ProgramUnavailable", format!("no store holds program {pid}")))
            }
        }
    }

    fn pick(&mut self, demand: &Demand, avoid: Option<&Address>) -> Option<Address> {
        let generator = demand.kind() == DemandKind::Intensional;
        loop {
            let (list, next) = if generator {
                (&mut self.generators, &mut self.next_generator)
            } else {
                (&mut self.workers, &mut self.next_worker)
            };
            if list.is_empty() {
                return None;
            }
            let mut i = *next % list.len();
            if list.len() > 1 && Some(&list[i]) == avoid {
                i = (i + 1) % list.len();
            }
            *next = i + 1;
            let target = list[i].clone();
            match self.port.send(&target, Message::Demand(demand.clone())) {
                Ok(_) => return Some(target),
                Err(NetError::Unreachable(_)) | Err(NetError::Bind(..)) => {
                    self.n.unreachable += 1;
                    log::warn!("dst {}: {target} unreachable, dropping it", self.port.address());
                    let list = if generator { &mut self.generators } else { &mut self.workers };
                    list.retain(|a| a != &target);
                }
            }
        }
    }

    fn dispatch(&mut self, mut demand: Demand, origin: Address, origin_corr: u64) {
        demand.reply_to = self.port.address().clone();
        match self.pick(&demand, None) {
            Some(assignee) => {
                self.n.dispatched += 1;
                let deadline = self.port.now() + self.port.network().deadline().max(1);
                self.pending.insert(demand.id.clone(), Assignment { demand, origin, origin_corr, assignee, deadline });
            }
            None => {
                let what = if demand.kind() == DemandKind::Intensional { "generator" } else { "worker" };
                let msg = Message::Result {
                    demand_id: demand.id,
                    outcome: Outcome::Error(WireError::new("Unavailable", format!("no live {what}"))),
                };
                let _ = self.port.reply_to(&origin, origin_corr, msg);
            }
        }
    }

    /// Re-dispatches every assignment whose deadline has passed and returns
    /// how many were sent again.
    pub fn reissue_expired(&mut self, now: u64) -> usize {
        let expired: Vec<String> =
            self.pending.iter().filter(|(_, a)| a.deadline <= now).map(|(id, _)| id.clone()).collect();
        let mut count = 0;
        for id in expired {
            let Some(a) = self.pending.remove(&id) else { continue };
            match self.pick(&a.demand, Some(&a.assignee)) {
                Some(assignee) => {
                    count += 1;
                    self.n.redispatched += 1;
                    let deadline = now + self.port.network().deadline().max(1);
                    self.pending.insert(id, Assignment { assignee, deadline, ..a });
                }
                None => {
                    let msg = Message::Result {
                        demand_id: id,
                        outcome: Outcome::Error(WireError::new(
                            "Unavailable",
                            "assignment expired and no live replacement",
                        )),
                    };
                    let _ = self.port.reply_to(&a.origin, a.origin_corr, msg);
                }
            }
        }
        count
    }

    fn on_result(&mut self, demand_id: String, outcome: Outcome) {
        let Some(a) = self.pending.remove(&demand_id) else { return };
        self.n.completed += 1;
        let outcome = match outcome {
            Outcome::Value(v) => match self.put(&a.demand.store_key(), &v) {
                Ok(()) => Outcome::Value(v),
                Err(w) => Outcome::Error(w),
            },
            err => err,
        };
        let _ = self.port.reply_to(&a.origin, a.origin_corr, Message::Result { demand_id, outcome });
    }

    fn system(&mut self, env: &Envelope, command: &SystemCommand) -> Flow {
        match command {
            SystemCommand::AddGeer { geer } => match Geer::parse(geer.as_bytes()) {
                Ok(g) => {
                    let pid = g.program_id().to_string();
                    match self.put(&geer_key(&pid), geer) {
                        Ok(()) => self.reply(env, Message::ack(pid)),
                        Err(w) => self.reply(env, Message::Err(w)),
                    }
                }
                Err(e) => self.reply(env, Message::err("MalformedGeer", e.to_string())),
            },
            SystemCommand::RequestGeer { program_id } => {
                self.lookup(env.clone(), geer_key(program_id), AfterLookup::Geer(program_id.clone()))
            }
            other => self.reply(env, Message::err("Unsupported", format!("a store does not handle {other:?}"))),
        }
        Flow::Continue
    }
}

impl Tier for Dst {
    type Local = Lookup;

    fn name(&self) -> &'static str {
        "DST"
    }

    fn handle(&mut self, env: Envelope) -> Flow {
        match &env.msg {
            Message::StorePut { key, value } => {
                let reply = match self.put(key, value) {
                    Ok(()) => Message::ack(""),
                    Err(w) => Message::Err(w),
                };
                self.reply(&env, reply);
            }
            Message::StoreGet { key, .. } => {
                let key = key.clone();
                self.lookup(env, key, AfterLookup::Store);
            }
            Message::Demand(d) if d.kind() != DemandKind::System => {
                let (d, key) = (d.clone(), d.store_key());
                self.lookup(env, key, AfterLookup::Demand(d));
            }
            Message::Result { demand_id, outcome } => self.on_result(demand_id.clone(), outcome.clone()),
            Message::PeerAnnounce(Membership { stores, generators, workers, .. }) => {
                self.peers = stores.iter().filter(|a| *a != self.port.address()).cloned().collect();
                self.generators = generators.clone();
                self.workers = workers.clone();
                self.reply(&env, Message::ack(""));
            }
            Message::Sys { command } => {
                let command = command.clone();
                return self.system(&env, &command);
            }
            other => {
                let m = Message::err("Unsupported", format!("a store does not handle {}", other.kind().as_str()));
                self.reply(&env, m);
            }
        }
        Flow::Continue
    }

    fn local(&mut self, done: Lookup) -> Flow {
        self.finish(done);
        Flow::Continue
    }

    fn tick(&mut self, now: u64) {
        self.reissue_expired(now);
    }

    fn status(&self) -> serde_json::Value {
        let n = self.n;
        json!({
            "stored": self.store.len(),
            "puts": n.puts,
            "conflicts": n.conflicts,
            "gets": n.gets,
            "hits": n.hits,
            "peer_hits": n.peer_hits,
            "misses": n.misses,
            "dispatched": n.dispatched,
            "redispatched": n.redispatched,
            "completed": n.completed,
            "pending": self.pending.len(),
            "unreachable": n.unreachable,
            "peers": self.peers.len(),
            "generators": self.generators.len(),
            "workers": self.workers.len(),
        })
    }
}
