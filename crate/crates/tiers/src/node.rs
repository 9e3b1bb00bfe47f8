//! Node controller: hosts a factory for every tier kind, spawns instances
//! on request and serves the procedure catalog to its workers.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use iplc_core::gee::ProcedureRegistry;
use serde_json::json;

use crate::dgt::Dgt;
use crate::dst::Dst;
use crate::dwt::Dwt;
use crate::gim::Gim;
use crate::message::{Address, Envelope, Message, SystemCommand, TierKind};
use crate::net::{NetError, Network};
use crate::port::Port;
use crate::store::{FsyncPolicy, Store};
use crate::tier::{spawn_tier, CrashSwitch, Flow, Tier, TierHandle, Wiring};

pub const DEFAULT_CALL_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Clone)]
pub struct TierSettings {
    pub call_timeout: Duration,
    pub catalog: Arc<ProcedureRegistry>,
    /// Store tiers keep their log in this directory, named after the
    /// instance.
    pub log_dir: Option<PathBuf>,
    pub fsync: FsyncPolicy,
    /// Instances of this kind share the switch; the first one spawned is
    /// the victim.
    pub fault: Option<(TierKind, Arc<CrashSwitch>)>,
}

impl Default for TierSettings {
    fn default() -> Self {
        TierSettings {
            call_timeout: DEFAULT_CALL_TIMEOUT,
            catalog: Arc::new(ProcedureRegistry::standard()),
            log_dir: None,
            fsync: FsyncPolicy::Never,
            fault: None,
        }
    }
}

pub type Hosted = Arc<Mutex<Vec<(TierKind, TierHandle)>>>;

fn hint_for(net_addr: &Address, name: &str) -> String {
    match net_addr.as_str().strip_prefix("sim:") {
        Some(_) => name.to_string(),
        None => {
            let host = net_addr.as_str().rsplit_once(':').map_or("127.0.0.1", |(h, _)| h);
            format!("{host}:0")
        }
    }
}

/// Spawns one tier instance. `host` is the hosting node's address, used to
/// derive the instance's own address and as the workers' catalog provider.
pub fn spawn_kind(
    net: Arc<dyn Network>,
    host: &Address,
    name: &str,
    kind: TierKind,
    store: Option<Address>,
    settings: &TierSettings,
) -> Result<TierHandle, String> {
    let hint = hint_for(host, name);
    let timeout = settings.call_timeout;
    let crash = settings.fault.as_ref().filter(|(k, _)| *k == kind).map(|(_, s)| s.clone());
    let bind_err = |e: NetError| e.to_string();
    match kind {
        TierKind::Dst => {
            let store = match &settings.log_dir {
                Some(dir) => {
                    let file = dir.join(format!("{}.log", name.replace(['/', ':'], "-")));
                    Store::open(&file, settings.fsync).map_err(|e| format!("{}: {e}", file.display()))?
                }
                None => Store::in_memory(),
            };
            spawn_tier(net, &hint, |w| Dst::new(w, store, timeout)).map_err(bind_err)
        }
        TierKind::Dgt => {
            let store = store.ok_or("a generator needs a store address")?;
            let crash = crash.and_then(|s| s.claim_victim().then_some(s));
            spawn_tier(net, &hint, |w| Dgt::new(w, store, timeout, crash)).map_err(bind_err)
        }
        TierKind::Dwt => {
            let crash = crash.map(|s| {
                let victim = s.claim_victim();
                (s, victim)
            });
            let catalog = settings.catalog.clone();
            let provider = Some(host.clone());
            spawn_tier(net, &hint, |w| Dwt::new(w, provider, catalog, timeout, crash)).map_err(bind_err)
        }
        TierKind::Gim => spawn_tier(net, &hint, |w| Gim::new(w, timeout)).map_err(bind_err),
    }
}

pub struct NodeController {
    node_id: String,
    port: Arc<Port>,
    settings: TierSettings,
    hosted: Hosted,
    spawned: usize,
}

impl NodeController {
    pub fn new(wiring: Wiring<()>, node_id: &str, settings: TierSettings, hosted: Hosted) -> Self {
        NodeController { node_id: node_id.to_string(), port: wiring.port, settings, hosted, spawned: 0 }
    }

    fn spawn(&mut self, kind: TierKind, store: Option<Address>) -> Message {
        self.spawned += 1;
        let name = format!("{}/{}{}", self.node_id, kind.as_str().to_lowercase(), self.spawned);
        let net = self.port.network().clone();
        match spawn_kind(net, self.port.address(), &name, kind, store, &self.settings) {
            Ok(h) => {
                let addr = h.address().clone();
                self.hosted.lock().unwrap().push((kind, h));
                Message::ack(addr.0)
            }
            Err(e) => Message::err("SpawnFailed", e),
        }
    }
}

impl Tier for NodeController {
    type Local = ();

    fn name(&self) -> &'static str {
        "NODE"
    }

    fn handle(&mut self, env: Envelope) -> Flow {
        let reply = match &env.msg {
            Message::Sys { command: SystemCommand::SpawnTier { kind, store, .. } } => self.spawn(*kind, store.clone()),
            Message::Sys { command: SystemCommand::AddProcedure { name } } => {
                if self.settings.catalog.contains(name) {
                    Message::ack(name.clone())
                } else {
                    Message::err("UnknownProcedure", format!("unknown procedure `{name}`"))
                }
            }
            other => Message::err("Unsupported", format!("a node does not handle {}", other.kind().as_str())),
        };
        let _ = self.port.reply(&env, reply);
        Flow::Continue
    }

    fn status(&self) -> serde_json::Value {
        let hosted = self.hosted.lock().unwrap();
        let tiers: Vec<_> = hosted
            .iter()
            .map(|(k, h)| json!({ "kind": k, "address": h.address(), "running": h.is_running() }))
            .collect();
        json!({ "node_id": self.node_id, "tiers": tiers })
    }

    fn on_stop(&mut self) {
        for (_, h) in self.hosted.lock().unwrap().iter() {
            h.kill();
        }
    }
}

/// A running node and the tiers it hosts.
pub struct NodeHandle {
    pub node_id: String,
    pub handle: TierHandle,
    pub hosted: Hosted,
}

impl NodeHandle {
    pub fn start(net: Arc<dyn Network>, hint: &str, node_id: &str, settings: TierSettings) -> Result<NodeHandle, NetError> {
        let hosted: Hosted = Arc::default();
        let h = hosted.clone();
        let handle = spawn_tier(net, hint, |w| NodeController::new(w, node_id, settings, h))?;
        Ok(NodeHandle { node_id: node_id.to_string(), handle, hosted })
    }

    pub fn address(&self) -> &Address {
        self.handle.address()
    }

    pub fn tiers(&self) -> Vec<(TierKind, Address)> {
        self.hosted.lock().unwrap().iter().map(|(k, h)| (*k, h.address().clone())).collect()
    }

    /// Kills the hosted instance at `addr`; false if none is hosted here.
    pub fn kill(&self, addr: &Address) -> bool {
        let hosted = self.hosted.lock().unwrap();
        match hosted.iter().find(|(_, h)| h.address() == addr) {
            Some((_, h)) => {
                h.kill();
                true
            }
            None => false,
        }
    }

    pub fn stop(&self) {
        for (_, h) in self.hosted.lock().unwrap().iter() {
            h.kill();
        }
        self.handle.kill();
    }
}
