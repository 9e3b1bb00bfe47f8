use std::sync::Arc;
use std::time::Duration;

use iplc_tiers::net::{Network, SimNetwork};
use iplc_tiers::node::{spawn_kind, NodeHandle};
use iplc_tiers::tier::TierHandle;
use iplc_tiers::{Address, Client, TierError, TierKind, TierSettings};

struct Rig {
    net: Arc<dyn Network>,
    gims: Vec<TierHandle>,
    client: Client,
}

fn rig(gims: usize) -> Rig {
    let net: Arc<dyn Network> = SimNetwork::new(3);
    let settings = TierSettings::default();
    let home = Address::sim("rig");
    let gims: Vec<_> = (0..gims)
        .map(|i| spawn_kind(net.clone(), &home, &format!("gim{i}"), TierKind::Gim, None, &settings).unwrap())
        .collect();
    let client = Client::connect(net.clone(), "client", Duration::from_secs(5)).unwrap();
    let managers: Vec<Address> = gims.iter().map(|g| g.address().clone()).collect();
    for g in &managers {
        client.announce_managers(g, &managers).unwrap();
    }
    Rig { net, gims, client }
}

fn node(r: &Rig, id: &str) -> NodeHandle {
    NodeHandle::start(r.net.clone(), id, id, TierSettings::default()).unwrap()
}

fn node_ids(r: &Rig, gim: usize) -> Vec<String> {
    let s = r.client.status(r.gims[gim].address()).unwrap();
    s["stats"]["nodes"].as_object().unwrap().keys().cloned().collect()
}

#[test]
fn registering_a_node_lists_it() {
    let r = rig(1);
    let a = node(&r, "A");
    assert_eq!(r.client.register_node(r.gims[0].address(), "A", a.address()).unwrap(), "A");
    assert_eq!(node_ids(&r, 0), ["A"]);
}

#[test]
fn registering_twice_is_a_duplicate() {
    let r = rig(1);
    let a = node(&r, "A");
    r.client.register_node(r.gims[0].address(), "A", a.address()).unwrap();
    let err = r.client.register_node(r.gims[0].address(), "A", a.address()).unwrap_err();
    assert_eq!(err.name(), "DuplicateNode");
}

#[test]
fn registration_reaches_peer_managers() {
    let r = rig(2);
    let a = node(&r, "A");
    r.client.register_node(r.gims[0].address(), "A", a.address()).unwrap();
    assert_eq!(node_ids(&r, 0), ["A"]);
    assert_eq!(node_ids(&r, 1), ["A"]);
}

#[test]
fn unreachable_node_is_refused() {
    let r = rig(1);
    let err = r.client.register_node(r.gims[0].address(), "ghost", &Address::sim("nowhere")).unwrap_err();
    assert_eq!(err.name(), "Unreachable");
    assert!(node_ids(&r, 0).is_empty());
}

#[test]
fn spawned_store_answers_heartbeats() {
    let r = rig(1);
    let a = node(&r, "A");
    let gim = r.gims[0].address();
    r.client.register_node(gim, "A", a.address()).unwrap();
    let dst = r.client.spawn_tier(gim, "A", TierKind::Dst).unwrap();
    assert_eq!(r.client.heartbeat(&dst).unwrap(), "DST");
    assert_eq!(a.tiers(), [(TierKind::Dst, dst)]);
}

#[test]
fn spawning_on_an_unknown_node_fails() {
    let r = rig(1);
    let err = r.client.spawn_tier(r.gims[0].address(), "B", TierKind::Dwt).unwrap_err();
    assert_eq!(err.name(), "UnknownNode");
}

#[test]
fn two_worker_spawns_are_distinct_instances() {
    let r = rig(1);
    let a = node(&r, "A");
    let gim = r.gims[0].address();
    r.client.register_node(gim, "A", a.address()).unwrap();
    let w1 = r.client.spawn_tier(gim, "A", TierKind::Dwt).unwrap();
    let w2 = r.client.spawn_tier(gim, "A", TierKind::Dwt).unwrap();
    assert_ne!(w1, w2);
    assert_eq!(r.client.heartbeat(&w1).unwrap(), "DWT");
    assert_eq!(r.client.heartbeat(&w2).unwrap(), "DWT");
}

#[test]
fn generator_needs_a_store_first() {
    let r = rig(1);
    let a = node(&r, "A");
    let gim = r.gims[0].address();
    r.client.register_node(gim, "A", a.address()).unwrap();
    let err = r.client.spawn_tier(gim, "A", TierKind::Dgt).unwrap_err();
    assert_eq!(err.name(), "SpawnFailed");
}

#[test]
fn stores_learn_membership() {
    let r = rig(1);
    let a = node(&r, "A");
    let gim = r.gims[0].address();
    r.client.register_node(gim, "A", a.address()).unwrap();
    let s1 = r.client.spawn_tier(gim, "A", TierKind::Dst).unwrap();
    r.client.spawn_tier(gim, "A", TierKind::Dst).unwrap();
    r.client.spawn_tier(gim, "A", TierKind::Dgt).unwrap();
    r.client.spawn_tier(gim, "A", TierKind::Dwt).unwrap();
    let st = &r.client.status(&s1).unwrap()["stats"];
    assert_eq!((st["peers"].as_u64(), st["generators"].as_u64(), st["workers"].as_u64()), (Some(1), Some(1), Some(1)));
}

#[test]
fn shutdown_stops_a_tier() {
    let r = rig(1);
    let a = node(&r, "A");
    let gim = r.gims[0].address();
    r.client.register_node(gim, "A", a.address()).unwrap();
    let dst = r.client.spawn_tier(gim, "A", TierKind::Dst).unwrap();
    r.client.shutdown(&dst).unwrap();
    std::thread::sleep(Duration::from_millis(50));
    assert!(matches!(r.client.heartbeat(&dst), Err(TierError::Net(_))));
}
