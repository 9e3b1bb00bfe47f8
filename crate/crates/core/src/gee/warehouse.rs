//! The warehouse: memoized demand results keyed by identifier and
//! rank-restricted context.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Condvar, Mutex, MutexGuard};

use super::EvalError;
use crate::context::{Context, ContextError};
use crate::lang::geer::{EntryKind, Geer};
use crate::lang::rank::free_dims;
use crate::lang::value::Value;

/// Subject name used for demands of the program's root expression.
pub const ROOT_SUBJECT: &str = "<root>";

/// An identifier-context pair, scoped by program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DemandKey {
    pub program_id: String,
    pub subject: String,
    pub context: Context,
}

impl fmt::Display for DemandKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.program_id, self.subject, self.context)
    }
}

impl FromStr for DemandKey {
    type Err = ContextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| ContextError::Syntax { offset: 0, message: m.to_string() };
        let (program_id, rest) = s.split_once(':').ok_or_else(|| bad("missing program id"))?;
        let (subject, ctx) = rest.split_once(':').ok_or_else(|| bad("missing subject"))?;
        if subject.is_empty() {
            return Err(bad("empty subject"));
        }
        Ok(DemandKey { program_id: program_id.to_string(), subject: subject.to_string(), context: ctx.parse()? })
    }
}

/// The key under which `subject` evaluated at `point` is stored: the point
/// restricted to the subject's rank.
pub fn demand_key_of(geer: &Geer, subject: &str, point: &Context) -> Result<DemandKey, EvalError> {
    let rank = if subject == ROOT_SUBJECT {
        free_dims(geer.root(), geer).map_err(|e| EvalError::UnresolvedIdentifier(e.0))?
    } else {
        match geer.entry(subject) {
            Some(e) if matches!(e.kind, EntryKind::Var | EntryKind::Const) => e.rank.clone(),
            _ => return Err(EvalError::UnresolvedIdentifier(subject.to_string())),
        }
    };
    Ok(DemandKey {
        program_id: geer.program_id().to_string(),
        subject: subject.to_string(),
        context: point.project(&rank),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WarehouseStats {
    pub issued: u64,
    pub hits: u64,
    pub misses: u64,
    pub recomputations: u64,
}

#[derive(Debug)]
enum Slot {
    Pending(u64),
    Computed(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Claim {
    /// The value is already known.
    Computed(Value),
    /// The caller now owns the key and must `complete` or `abandon` it.
    Claimed,
    /// The key is pending under the caller's own evaluation.
    Cyclic,
}

#[derive(Debug, Default)]
struct State {
    slots: HashMap<DemandKey, Slot>,
    stats: WarehouseStats,
}

/// Concurrent memo store. `claim` is atomic per key: the first claimant
/// computes, later claimants block until the value is available.
#[derive(Debug, Default)]
pub struct Warehouse {
    state: Mutex<State>,
    ready: Condvar,
}

impl Warehouse {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Records an issued demand and either returns the stored value or
    /// hands ownership of the key to `owner`.
    pub fn claim(&self, key: &DemandKey, owner: u64) -> Claim {
        let mut st = self.lock();
        st.stats.issued += 1;
        loop {
            match st.slots.get(key) {
                Some(Slot::Computed(v)) => {
                    let v = v.clone();
                    st.stats.hits += 1;
                    return Claim::Computed(v);
                }
                Some(Slot::Pending(o)) if *o == owner => return Claim::Cyclic,
                Some(Slot::Pending(_)) => {
                    st = self.ready.wait(st).unwrap_or_else(|p| p.into_inner());
                }
                None => {
                    st.slots.insert(key.clone(), Slot::Pending(owner));
                    st.stats.misses += 1;
                    return Claim::Claimed;
                }
            }
        }
    }

    /// Stores the value of a claimed key.
    pub fn complete(&self, key: &DemandKey, value: Value) {
        let mut st = self.lock();
        if let Some(Slot::Computed(_)) = st.slots.get(key) {
            st.stats.recomputations += 1;
        }
        st.slots.insert(key.clone(), Slot::Computed(value));
        drop(st);
        self.ready.notify_all();
    }

    /// Releases a claim whose computation failed.
    pub fn abandon(&self, key: &DemandKey) {
        let mut st = self.lock();
        if let Some(Slot::Pending(_)) = st.slots.get(key) {
            st.slots.remove(key);
        }
        drop(st);
        self.ready.notify_all();
    }

    /// Inserts a value computed elsewhere. Returns false if the key already
    /// held a different value.
    pub fn insert(&self, key: DemandKey, value: Value) -> bool {
        let mut st = self.lock();
        let ok = match st.slots.get(&key) {
            Some(Slot::Computed(v)) => *v == value,
            _ => true,
        };
        if ok {
            st.slots.insert(key, Slot::Computed(value));
        }
        drop(st);
        self.ready.notify_all();
        ok
    }

    pub fn get(&self, key: &DemandKey) -> Option<Value> {
        match self.lock().slots.get(key) {
            Some(Slot::Computed(v)) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn stats(&self) -> WarehouseStats {
        self.lock().stats
    }

    /// Number of computed entries.
    pub fn len(&self) -> usize {
        self.lock().slots.values().filter(|s| matches!(s, Slot::Computed(_))).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every computed entry, sorted by key.
    pub fn entries(&self) -> Vec<(DemandKey, Value)> {
        let mut out: Vec<_> = self
            .lock()
            .slots
            .iter()
            .filter_map(|(k, s)| match s {
                Slot::Computed(v) => Some((k.clone(), v.clone())),
                Slot::Pending(_) => None,
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn key(s: &str) -> DemandKey {
        DemandKey { program_id: "p".into(), subject: s.into(), context: "[t:1]".parse().unwrap() }
    }

    #[test]
    fn key_text_round_trips() {
        let k = DemandKey { program_id: "ab12".into(), subject: "x'1".into(), context: "[s:\"a:b\",t:3]".parse().unwrap() };
        assert_eq!(k.to_string().parse::<DemandKey>().unwrap(), k);
    }

    #[test]
    fn claim_complete_hit() {
        let wh = Warehouse::new();
        assert_eq!(wh.claim(&key("x"), 1), Claim::Claimed);
        assert_eq!(wh.claim(&key("x"), 1), Claim::Cyclic);
        wh.complete(&key("x"), Value::Int(4));
        assert_eq!(wh.claim(&key("x"), 2), Claim::Computed(Value::Int(4)));
        let s = wh.stats();
        assert_eq!((s.issued, s.hits, s.misses, s.recomputations), (3, 1, 1, 0));
    }

    #[test]
    fn abandon_releases_the_key() {
        let wh = Warehouse::new();
        assert_eq!(wh.claim(&key("x"), 1), Claim::Claimed);
        wh.abandon(&key("x"));
        assert_eq!(wh.claim(&key("x"), 2), Claim::Claimed);
    }

    #[test]
    fn concurrent_claimants_compute_once() {
        let wh = Arc::new(Warehouse::new());
        let computed = Arc::new(std::sync::atomic::AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|owner| {
                let (wh, computed) = (wh.clone(), computed.clone());
                std::thread::spawn(move || match wh.claim(&key("x"), owner) {
                    Claim::Claimed => {
                        computed.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                        std::thread::sleep(std::time::Duration::from_millis(20));
                        wh.complete(&key("x"), Value::Int(7));
                        Value::Int(7)
                    }
                    Claim::Computed(v) => v,
                    Claim::Cyclic => unreachable!(),
                })
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), Value::Int(7));
        }
        assert_eq!(computed.load(std::sync::atomic::Ordering::SeqCst), 1);
        assert_eq!(wh.stats().recomputations, 0);
    }
}
