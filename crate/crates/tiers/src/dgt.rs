//! Demand generator tier: runs the eductive engine for intensional demands,
//! with its warehouse backed by a store tier and procedure calls sent there
//! as procedural demands.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use iplc_core::gee::{DemandKey, Eductive, ProcedureHost, RemoteStore, Warehouse};
use iplc_core::{EvalError, Geer, Value};
use serde_json::json;

use crate::message::{Address, Demand, Envelope, Message, Outcome, Payload, SystemCommand, WireError};
use crate::port::Port;
use crate::tier::{CrashSwitch, Flow, Tier, Wiring};

pub const JOB_STACK: usize = 256 << 20;

#[derive(Debug, Default)]
struct Counters {
    demands: AtomicU64,
    geer_requests: AtomicU64,
    procedural: AtomicU64,
    fetches: AtomicU64,
    remote_hits: AtomicU64,
    stores: AtomicU64,
    failures: AtomicU64,
}

struct Shared {
    port: Arc<Port>,
    store: Address,
    geers: Mutex<HashMap<String, Arc<Geer>>>,
    warehouses: Mutex<HashMap<String, Arc<Warehouse>>>,
    call_timeout: Duration,
    n: Counters,
}

pub struct Dgt {
    shared: Arc<Shared>,
    crash: Option<Arc<CrashSwitch>>,
}

impl Dgt {
    pub fn new(wiring: Wiring<()>, store: Address, call_timeout: Duration, crash: Option<Arc<CrashSwitch>>) -> Self {
        let shared = Arc::new(Shared {
            port: wiring.port,
            store,
            geers: Mutex::new(HashMap::new()),
            warehouses: Mutex::new(HashMap::new()),
            call_timeout,
            n: Counters::default(),
        });
        Dgt { shared, crash }
    }
}

fn remote_error(what: &str, e: impl std::fmt::Display) -> EvalError {
    EvalError::Remote { kind: "StoreUnavailable".into(), message: format!("{what}: {e}") }
}

impl Shared {
    fn geer(&self, program_id: &str) -> Result<Arc<Geer>, EvalError> {
        if let Some(g) = self.geers.lock().unwrap().get(program_id) {
            return Ok(g.clone());
        }
        self.n.geer_requests.fetch_add(1, Ordering::Relaxed);
        let request = Message::sys(SystemCommand::RequestGeer { program_id: program_id.to_string() });
        let unavailable = |m: String| EvalError::Remote { kind: "ProgramUnavailable".into(), message: m };
        let text = match self.port.call(&self.store, request, self.call_timeout) {
            Ok(Message::Ack { detail }) => detail,
            Ok(Message::Err(w)) => return Err(unavailable(w.message)),
            Ok(other) => return Err(unavailable(format!("unexpected {}", other.kind().as_str()))),
            Err(e) => return Err(unavailable(e.to_string())),
        };
        let g = Geer::parse(text.as_bytes()).map_err(|e| unavailable(e.to_string()))?;
        if g.program_id() != program_id {
            return Err(unavailable(format!("store returned program {}", g.program_id())));
        }
        let g = Arc::new(g);
        self.geers.lock().unwrap().insert(program_id.to_string(), g.clone());
        Ok(g)
    }

    fn warehouse(&self, program_id: &str) -> Arc<Warehouse> {
        self.warehouses.lock().unwrap().entry(program_id.to_string()).or_insert_with(|| Arc::new(Warehouse::new())).clone()
    }

    fn execute(&self, key: &str) -> Result<Value, EvalError> {
        let key: DemandKey = key.parse()?;
        let geer = self.geer(&key.program_id)?;
        let wh = self.warehouse(&key.program_id);
        let host = Procedures { shared: self, program_id: &key.program_id };
        let engine = Eductive::new(&geer, &wh, &host).with_remote(self);
        engine.demand(&key.subject, &key.context)
    }
}

impl RemoteStore for Shared {
    fn fetch(&self, key: &DemandKey) -> Result<Option<Value>, EvalError> {
        self.n.fetches.fetch_add(1, Ordering::Relaxed);
        let msg = Message::StoreGet { key: key.to_string(), fanout: true };
        match self.port.call(&self.store, msg, self.call_timeout) {
            Ok(Message::StoreHit { value, .. }) => {
                self.n.remote_hits.fetch_add(1, Ordering::Relaxed);
                value.parse().map(Some).map_err(|e| remote_error("bad stored value", e))
            }
            Ok(Message::StoreMiss { .. }) => Ok(None),
            Ok(Message::Err(w)) => Err(EvalError::Remote { kind: w.kind, message: w.message }),
            Ok(other) => Err(remote_error("fetch", format!("unexpected {}", other.kind().as_str()))),
            Err(e) => Err(remote_error("fetch", e)),
        }
    }

    fn store(&self, key: &DemandKey, value: &Value) -> Result<(), EvalError> {
        self.n.stores.fetch_add(1, Ordering::Relaxed);
        let msg = Message::StorePut { key: key.to_string(), value: value.to_string() };
        match self.port.call(&self.store, msg, self.call_timeout) {
            Ok(Message::Ack { .. }) => Ok(()),
            Ok(Message::Err(w)) => Err(EvalError::Remote { kind: w.kind, message: w.message }),
            Ok(other) => Err(remote_error("store", format!("unexpected {}", other.kind().as_str()))),
            Err(e) => Err(remote_error("store", e)),
        }
    }
}

struct Procedures<'a> {
    shared: &'a Shared,
    program_id: &'a str,
}

impl ProcedureHost for Procedures<'_> {
    fn call_procedure(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        let s = self.shared;
        s.n.procedural.fetch_add(1, Ordering::Relaxed);
        let demand = Demand {
            id: format!("{}#{}", s.port.address(), s.port.fresh_id()),
            program_id: self.program_id.to_string(),
            payload: Payload::Procedural { name: name.to_string(), args: args.iter().map(Value::to_string).collect() },
            reply_to: s.port.address().clone(),
        };
        match s.port.call(&s.store, Message::Demand(demand), s.call_timeout) {
            Ok(Message::Result { outcome: Outcome::Value(v), .. }) => {
                v.parse().map_err(|e| remote_error("bad procedure result", e))
            }
            Ok(Message::Result { outcome: Outcome::Error(w), .. }) | Ok(Message::Err(w)) => {
                Err(EvalError::from_wire(&w.kind, &w.message))
            }
            Ok(other) => Err(remote_error("procedure", format!("unexpected {}", other.kind().as_str()))),
            Err(e) => Err(EvalError::Remote { kind: "Timeout".into(), message: e.to_string() }),
        }
    }
}

pub fn outcome_of(r: Result<Value, EvalError>) -> Outcome {
    match r {
        Ok(v) => Outcome::Value(v.to_string()),
        Err(EvalError::Remote { kind, message }) => Outcome::Error(WireError::new(&kind, message)),
        Err(e) => Outcome::Error(WireError::new(e.name(), e.to_string())),
    }
}

impl Tier for Dgt {
    type Local = ();

    fn name(&self) -> &'static str {
        "DGT"
    }

    fn handle(&mut self, env: Envelope) -> Flow {
        let demand = match &env.msg {
            Message::Demand(d @ Demand { payload: Payload::Intensional { .. }, .. }) => d.clone(),
            other => {
                let m = Message::err("Unsupported", format!("a generator does not handle {}", other.kind().as_str()));
                let _ = self.shared.port.reply(&env, m);
                return Flow::Continue;
            }
        };
        if let Some(c) = &self.crash {
            if c.on_accept(true) {
                return Flow::Crash;
            }
        }
        self.shared.n.demands.fetch_add(1, Ordering::Relaxed);
        let shared = self.shared.clone();
        let spawned = thread::Builder::new().stack_size(JOB_STACK).spawn(move || {
            let Payload::Intensional { key } = &demand.payload else { return };
            let result = shared.execute(key);
            if result.is_err() {
                shared.n.failures.fetch_add(1, Ordering::Relaxed);
            }
            let msg = Message::Result { demand_id: demand.id.clone(), outcome: outcome_of(result) };
            let _ = shared.port.reply_to(&demand.reply_to, env.corr, msg);
        });
        if let Err(e) = spawned {
            log::warn!("dgt: cannot start job: {e}");
        }
        Flow::Continue
    }

    fn status(&self) -> serde_json::Value {
        let n = &self.shared.n;
        let g = |a: &AtomicU64| a.load(Ordering::Relaxed);
        json!({
            "demands": g(&n.demands),
            "geer_requests": g(&n.geer_requests),
            "procedural": g(&n.procedural),
            "fetches": g(&n.fetches),
            "remote_hits": g(&n.remote_hits),
            "stores": g(&n.stores),
            "failures": g(&n.failures),
            "programs": self.shared.geers.lock().unwrap().len(),
            "store": self.shared.store,
        })
    }
}
