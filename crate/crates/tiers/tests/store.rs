use std::time::{Duration, Instant};

use iplc_tiers::store::parse_log_line;
use iplc_tiers::{Cluster, ClusterConfig, TierError, Topology};

fn stores(n: usize) -> Cluster {
    Cluster::start(ClusterConfig::sim(Topology { gim: 1, dgt: 1, dst: n, dwt: 1 }, 11)).unwrap()
}

#[test]
fn put_then_get_on_the_same_peer() {
    let c = stores(1);
    let a = &c.stores()[0];
    c.client().put(a, "k", "42").unwrap();
    assert_eq!(c.client().get(a, "k").unwrap(), "42");
}

#[test]
fn equal_puts_are_idempotent() {
    let c = stores(1);
    let a = &c.stores()[0];
    c.client().put(a, "k", "true").unwrap();
    c.client().put(a, "k", "true").unwrap();
    let st = &c.client().status(a).unwrap()["stats"];
    assert_eq!(st["puts"].as_u64(), Some(1));
    assert_eq!(st["conflicts"].as_u64(), Some(0));
}

#[test]
fn differing_puts_conflict() {
    let c = stores(1);
    let a = &c.stores()[0];
    c.client().put(a, "k", "1").unwrap();
    let err = c.client().put(a, "k", "2").unwrap_err();
    assert_eq!(err.name(), "ConflictingResult");
    assert_eq!(c.client().get(a, "k").unwrap(), "1");
}

#[test]
fn value_put_on_one_peer_is_found_via_another() {
    let c = stores(2);
    let s = c.stores();
    c.client().put(&s[0], "k", "\"New York\"").unwrap();
    assert_eq!(c.client().get(&s[1], "k").unwrap(), "\"New York\"");
}

#[test]
fn every_live_peer_sees_every_put() {
    let c = stores(3);
    let s = c.stores();
    for (i, a) in s.iter().enumerate() {
        c.client().put(a, &format!("k{i}"), &i.to_string()).unwrap();
    }
    for b in &s {
        for i in 0..s.len() {
            assert_eq!(c.client().get(b, &format!("k{i}")).unwrap(), i.to_string());
        }
    }
}

#[test]
fn unknown_key_is_not_found() {
    let c = stores(2);
    let err = c.client().get(&c.stores()[1], "missing").unwrap_err();
    assert_eq!(err, TierError::NotFound("missing".into()));
}

#[test]
fn dead_peer_is_skipped() {
    let c = stores(3);
    let s = c.stores();
    c.client().put(&s[2], "k", "7").unwrap();
    assert!(c.kill(&s[0]));
    assert_eq!(c.client().get(&s[1], "k").unwrap(), "7");
}

#[test]
fn stopped_peer_keys_are_reported_missing_without_hanging() {
    let c = stores(2);
    let s = c.stores();
    c.client().put(&s[0], "only-a", "1").unwrap();
    c.client().put(&s[1], "only-b", "2").unwrap();
    assert!(c.kill(&s[0]));
    let start = Instant::now();
    assert_eq!(c.client().get(&s[1], "only-b").unwrap(), "2");
    assert_eq!(c.client().get(&s[1], "only-a").unwrap_err().name(), "NotFound");
    assert!(start.elapsed() < Duration::from_secs(1));
}

#[test]
fn fetched_values_are_kept_by_the_asking_peer() {
    let c = stores(2);
    let s = c.stores();
    c.client().put(&s[0], "k", "5").unwrap();
    assert_eq!(c.client().get(&s[1], "k").unwrap(), "5");
    assert!(c.kill(&s[0]));
    assert_eq!(c.client().get(&s[1], "k").unwrap(), "5");
}

#[test]
fn stores_append_to_their_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ClusterConfig::sim(Topology { gim: 1, dgt: 1, dst: 1, dwt: 1 }, 5);
    cfg.settings.log_dir = Some(dir.path().to_path_buf());
    let c = Cluster::start(cfg).unwrap();
    let a = &c.stores()[0];
    c.client().put(a, "p:X:[place:\"New York\"]", "true").unwrap();
    c.client().put(a, "p:X:[place:\"New York\"]", "true").unwrap();
    let logs: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(logs.len(), 1);
    let text = std::fs::read_to_string(&logs[0]).unwrap();
    let records: Vec<_> = text.lines().map(|l| parse_log_line(l).unwrap()).collect();
    assert_eq!(records, [("p:X:[place:\"New York\"]".to_string(), "true".to_string())]);
}
