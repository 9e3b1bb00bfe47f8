//! An in-process cluster run with statistics and optional fault injection.

use std::sync::Arc;

use iplc_core::gee::{Eductive, ProcedureRegistry, Warehouse, ROOT_SUBJECT};
use iplc_core::{Context, Geer};
use iplc_tiers::{Cluster, ClusterConfig, CrashSwitch, TierKind, Topology, Transport};

use crate::program::{deadline_override, eval_failure, load_named, parse_ctx, tier_failure, Failure};

pub struct Options {
    pub program: String,
    pub topology: String,
    pub ctx: String,
    pub kill: Option<String>,
    pub seed: u64,
    pub tcp: bool,
}

/// A `kind@pct%` crash request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kill {
    pub kind: TierKind,
    pub percent: u32,
}

pub fn parse_kill(s: &str) -> Result<Kill, String> {
    let (kind, pct) = s.split_once('@').ok_or_else(|| format!("expected kind@N%, got `{s}`"))?;
    let kind: TierKind = kind.parse().map_err(|_| format!("unknown tier kind `{kind}`"))?;
    if !matches!(kind, TierKind::Dgt | TierKind::Dwt) {
        return Err(format!("only dgt and dwt instances can be crashed, not {}", kind.as_str()));
    }
    let percent: u32 = pct
        .strip_suffix('%')
        .unwrap_or(pct)
        .parse()
        .map_err(|_| format!("bad percentage `{pct}`"))?;
    if percent > 100 {
        return Err(format!("percentage {percent} is above 100"));
    }
    Ok(Kill { kind, percent })
}

/// How many demands of `kind` a local run issues: procedure calls for
/// workers, intensional demands for generators.
fn dry_run(geer: &Geer, ctx: &Context, kind: TierKind) -> Result<u64, Failure> {
    let registry = ProcedureRegistry::standard();
    let warehouse = Warehouse::new();
    let engine = Eductive::new(geer, &warehouse, &registry);
    engine.demand(ROOT_SUBJECT, ctx).map_err(|e| eval_failure(&e))?;
    let stats = engine.stats();
    Ok(if kind == TierKind::Dwt { stats.procedure_calls } else { stats.demands })
}

pub fn run(opts: Options) -> Result<(), Failure> {
    let topology: Topology = opts.topology.parse().map_err(|e| Failure::Usage(format!("bad topology: {e}")))?;
    let ctx = parse_ctx(&opts.ctx)?;
    let kill = opts.kill.as_deref().map(parse_kill).transpose().map_err(Failure::Usage)?;
    if let Some(k) = kill {
        if topology.count(k.kind) < 2 {
            return Err(Failure::Usage(format!("crashing a {} needs at least two of them", k.kind.as_str())));
        }
    }
    let geer = load_named(&opts.program)?;

    let transport = if opts.tcp { Transport::Tcp } else { Transport::Sim { seed: opts.seed } };
    let mut cfg = ClusterConfig::sim(topology, opts.seed);
    cfg.transport = transport;
    cfg.deadline = deadline_override();
    let mut switch: Option<(Kill, u64, Arc<CrashSwitch>)> = None;
    if let Some(k) = kill {
        let total = dry_run(&geer, &ctx, k.kind)?;
        let after = total * u64::from(k.percent) / 100;
        let s = CrashSwitch::new(after as usize);
        cfg.settings.fault = Some((k.kind, s.clone()));
        switch = Some((k, total, s));
    }

    let cluster = Cluster::start(cfg).map_err(tier_failure)?;
    let value = cluster.run(&geer, &ctx).map_err(tier_failure)?;
    println!("{value}");
    let how = if opts.tcp { "tcp".to_string() } else { format!("sim seed {}", opts.seed) };
    println!("topology {topology} ({how})");
    if let Some((k, total, s)) = &switch {
        let verdict = if s.fired() { "crashed" } else { "not reached" };
        println!("kill {}@{}% of {total}: {verdict}", k.kind.as_str().to_lowercase(), k.percent);
    }
    println!("{}", cluster.stats());
    for (kind, addr, stats) in cluster.statuses() {
        if kind != TierKind::Gim {
            println!("  {} {addr} {stats}", kind.as_str());
        }
    }
    cluster.shutdown();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kill_specs() {
        assert_eq!(parse_kill("dwt@50%"), Ok(Kill { kind: TierKind::Dwt, percent: 50 }));
        assert_eq!(parse_kill("DGT@10"), Ok(Kill { kind: TierKind::Dgt, percent: 10 }));
        assert!(parse_kill("dst@50%").is_err());
        assert!(parse_kill("dwt@150%").is_err());
        assert!(parse_kill("dwt").is_err());
    }
}
