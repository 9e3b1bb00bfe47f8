//! A whole instance in one process: managers, nodes and the tiers they
//! host, plus a client wired to them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use iplc_core::{Context, Geer, Value};

use crate::client::Client;
use crate::error::TierError;
use crate::message::{Address, TierKind};
use crate::net::{Network, SimNetwork, TcpNetwork};
use crate::node::{spawn_kind, NodeHandle, TierSettings};
use crate::tier::TierHandle;
use crate::net::NetError;

/// How many instances of each tier kind to start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub gim: usize,
    pub dgt: usize,
    pub dst: usize,
    pub dwt: usize,
}

impl Topology {
    pub fn count(&self, kind: TierKind) -> usize {
        match kind {
            TierKind::Gim => self.gim,
            TierKind::Dgt => self.dgt,
            TierKind::Dst => self.dst,
            TierKind::Dwt => self.dwt,
        }
    }
}

impl Default for Topology {
    fn default() -> Self {
        Topology { gim: 1, dgt: 2, dst: 2, dwt: 2 }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gim:{},dgt:{},dst:{},dwt:{}", self.gim, self.dgt, self.dst, self.dwt)
    }
}

impl FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut counts = [None; 4];
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (kind, n) = part.split_once(':').ok_or_else(|| format!("`{part}` is not kind:count"))?;
            let kind: TierKind = kind.trim().parse()?;
            let n: usize = n.trim().parse().map_err(|_| format!("`{n}` is not a count"))?;
            let slot = &mut counts[TierKind::ALL.iter().position(|k| *k == kind).unwrap()];
            if slot.replace(n).is_some() {
                return Err(format!("{kind} listed twice"));
            }
        }
        for (kind, n) in TierKind::ALL.iter().zip(counts) {
            match n {
                None => return Err(format!("topology needs a {} count", kind.as_str().to_lowercase())),
                Some(0) => return Err(format!("topology needs at least one {kind}")),
                Some(_) => {}
            }
        }
        let [gim, dgt, dst, dwt] = counts.map(Option::unwrap);
        Ok(Topology { gim, dgt, dst, dwt })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Sim { seed: u64 },
    Tcp,
}

#[derive(Clone)]
pub struct ClusterConfig {
    pub topology: Topology,
    pub transport: Transport,
    /// Assignment deadline on the transport clock; the transport default
    /// when unset.
    pub deadline: Option<u64>,
    pub settings: TierSettings,
    /// Number of nodes the tiers are spread over.
    pub nodes: usize,
}

impl ClusterConfig {
    pub fn sim(topology: Topology, seed: u64) -> Self {
        ClusterConfig {
            topology,
            transport: Transport::Sim { seed },
            deadline: None,
            settings: TierSettings::default(),
            nodes: 2,
        }
    }
}

/// Aggregate counters over every live tier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClusterStats {
    /// Store lookups and procedural demands raised by generators.
    pub generated: u64,
    /// Demands handed from a store to a generator or worker.
    pub migrated: u64,
    pub redispatched: u64,
    /// Values written to stores.
    pub stored: u64,
    /// Procedural demands executed by workers.
    pub executed: u64,
}

impl fmt::Display for ClusterStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "generated={} migrated={} redispatched={} stored={} executed={}",
            self.generated, self.migrated, self.redispatched, self.stored, self.executed
        )
    }
}

pub struct Cluster {
    net: Arc<dyn Network>,
    gims: Vec<TierHandle>,
    nodes: Vec<NodeHandle>,
    client: Client,
}

impl Cluster {
    pub fn start(cfg: ClusterConfig) -> Result<Cluster, TierError> {
        let net: Arc<dyn Network> = match cfg.transport {
            Transport::Sim { seed } => match cfg.deadline {
                Some(d) => SimNetwork::with_deadline(seed, d),
                None => SimNetwork::new(seed),
            },
            Transport::Tcp => TcpNetwork::new(cfg.deadline.unwrap_or(crate::net::TCP_DEADLINE_MS)),
        };
        let tcp = cfg.transport == Transport::Tcp;
        let hint = |name: &str| if tcp { "127.0.0.1:0".to_string() } else { name.to_string() };
        let home = if tcp { Address::from("127.0.0.1:0") } else { Address::sim("cluster") };

        let mut gims = Vec::new();
        for i in 0..cfg.topology.gim {
            let h = spawn_kind(net.clone(), &home, &format!("gim{i}"), TierKind::Gim, None, &cfg.settings)
                .map_err(TierError::Config)?;
            gims.push(h);
        }
        let client = Client::connect(net.clone(), &hint("client"), cfg.settings.call_timeout)?;
        let managers: Vec<Address> = gims.iter().map(|g| g.address().clone()).collect();
        for g in &managers {
            client.announce_managers(g, &managers)?;
        }
        let gim = managers[0].clone();

        let mut nodes = Vec::new();
        for i in 0..cfg.nodes.max(1) {
            let id = format!("node{i}");
            let node = NodeHandle::start(net.clone(), &hint(&id), &id, cfg.settings.clone())?;
            client.register_node(&gim, &id, node.address())?;
            nodes.push(node);
        }
        let mut next = 0;
        for kind in [TierKind::Dst, TierKind::Dgt, TierKind::Dwt] {
            for _ in 0..cfg.topology.count(kind) {
                let node = &nodes[next % nodes.len()];
                next += 1;
                client.spawn_tier(&gim, &node.node_id, kind)?;
            }
        }
        Ok(Cluster { net, gims, nodes, client })
    }

    pub fn network(&self) -> &Arc<dyn Network> {
        &self.net
    }

    pub fn client(&self) -> &Client {
        &self.client
    }

    pub fn managers(&self) -> Vec<Address> {
        self.gims.iter().map(|g| g.address().clone()).collect()
    }

    pub fn nodes(&self) -> &[NodeHandle] {
        &self.nodes
    }

    pub fn tiers(&self, kind: TierKind) -> Vec<Address> {
        self.nodes.iter().flat_map(|n| n.tiers()).filter(|(k, _)| *k == kind).map(|(_, a)| a).collect()
    }

    pub fn stores(&self) -> Vec<Address> {
        self.tiers(TierKind::Dst)
    }

    /// Stores `geer` with the first store; returns its program id.
    pub fn load(&self, geer: &Geer) -> Result<String, TierError> {
        self.client.add_geer(&self.stores()[0], geer)
    }

    /// Loads `geer` and evaluates its root at `ctx` through the store at
    /// `store` (modulo the number of stores).
    pub fn run_via(&self, store: usize, geer: &Geer, ctx: &Context) -> Result<Value, TierError> {
        self.load(geer)?;
        let stores = self.stores();
        self.client.execute(&stores[store % stores.len()], geer, ctx)
    }

    pub fn run(&self, geer: &Geer, ctx: &Context) -> Result<Value, TierError> {
        self.run_via(0, geer, ctx)
    }

    /// Kills the tier at `addr`; false if no node hosts it.
    pub fn kill(&self, addr: &Address) -> bool {
        self.nodes.iter().any(|n| n.kill(addr))
    }

    /// Status of every reachable tier, as (kind, address, stats).
    pub fn statuses(&self) -> Vec<(TierKind, Address, serde_json::Value)> {
        let mut out = Vec::new();
        let all = self.managers().into_iter().map(|a| (TierKind::Gim, a)).chain(self.nodes.iter().flat_map(|n| n.tiers()));
        for (kind, addr) in all {
            if let Ok(s) = self.client.status(&addr) {
                out.push((kind, addr, s["stats"].clone()));
            }
        }
        out
    }

    pub fn stats(&self) -> ClusterStats {
        let mut s = ClusterStats::default();
        let n = |v: &serde_json::Value, f: &str| v[f].as_u64().unwrap_or(0);
        for (kind, _, v) in self.statuses() {
            match kind {
                TierKind::Dgt => s.generated += n(&v, "fetches") + n(&v, "procedural"),
                TierKind::Dst => {
                    s.migrated += n(&v, "dispatched") + n(&v, "redispatched");
                    s.redispatched += n(&v, "redispatched");
                    s.stored += n(&v, "puts");
                }
                TierKind::Dwt => s.executed += n(&v, "processed"),
                TierKind::Gim => {}
            }
        }
        s
    }

    pub fn shutdown(&self) {
        for n in &self.nodes {
            n.stop();
        }
        for g in &self.gims {
            g.kill();
        }
    }
}

impl Drop for Cluster {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Waits until `addr` answers a heartbeat or `timeout` passes.
pub fn wait_for(client: &Client, addr: &Address, timeout: Duration) -> Result<(), TierError> {
    let start = std::time::Instant::now();
    loop {
        match client.heartbeat(addr) {
            Ok(_) => return Ok(()),
            Err(e) if start.elapsed() >= timeout => return Err(e),
            Err(TierError::Net(NetError::Unreachable(_))) | Err(_) => std::thread::sleep(Duration::from_millis(20)),
        }
    }
}
