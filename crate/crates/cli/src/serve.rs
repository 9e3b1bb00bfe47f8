//! Long-running tier hosting over TCP.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::sleep;
use std::time::Duration;

use iplc_tiers::net::{Network, TcpNetwork, TCP_DEADLINE_MS};
use iplc_tiers::gim::Gim;
use iplc_tiers::node::NodeHandle;
use iplc_tiers::store::FsyncPolicy;
use iplc_tiers::tier::spawn_tier;
use iplc_tiers::{Address, Client, TierKind, TierSettings};

use crate::program::{deadline_override, tier_failure, Failure};

const POLL: Duration = Duration::from_millis(50);
const STARTUP_TIMEOUT: Duration = Duration::from_secs(5);

pub struct Options {
    pub tier: TierKind,
    pub listen: String,
    pub gim: Option<String>,
    pub node: Option<String>,
    pub log: Option<PathBuf>,
    pub fsync: bool,
}

fn announce(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

pub fn run(opts: Options) -> Result<(), Failure> {
    let net: Arc<dyn Network> = TcpNetwork::new(deadline_override().unwrap_or(TCP_DEADLINE_MS));
    let fsync = if opts.fsync { FsyncPolicy::EveryPut } else { FsyncPolicy::Never };
    let settings = TierSettings { log_dir: opts.log.clone(), fsync, ..TierSettings::default() };
    if let Some(dir) = &opts.log {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }

    if opts.tier == TierKind::Gim {
        if opts.gim.is_some() {
            return Err(Failure::Usage("--gim does not apply to a manager".into()));
        }
        let h = spawn_tier(net, &opts.listen, |w| Gim::new(w, settings.call_timeout))
            .map_err(|e| Failure::Distributed(format!("BindFailed: {e}")))?;
        announce(format!("GIM {}", h.address()));
        while h.is_running() {
            sleep(POLL);
        }
        return Ok(());
    }

    let gim = opts.gim.as_deref().ok_or_else(|| Failure::Usage(format!("--gim is required for a {} tier", opts.tier.as_str())))?;
    let gim = Address::from(gim);
    let client = Client::connect(net.clone(), "127.0.0.1:0", STARTUP_TIMEOUT).map_err(tier_failure)?;
    let node_id = opts.node.clone().unwrap_or_else(|| format!("node-{}", std::process::id()));
    let node = NodeHandle::start(net.clone(), &opts.listen, &node_id, settings)
        .map_err(|e| Failure::Distributed(format!("BindFailed: {e}")))?;
    client.register_node(&gim, &node.node_id, node.address()).map_err(tier_failure)?;
    let addr = client.spawn_tier(&gim, &node.node_id, opts.tier).map_err(tier_failure)?;
    announce(format!("{} {addr} node {} {}", opts.tier.as_str(), node.node_id, node.address()));
    drop(client);
    while node.handle.is_running() && node.hosted.lock().unwrap().iter().any(|(_, h)| h.is_running()) {
        sleep(POLL);
    }
    node.stop();
    Ok(())
}
