use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, Weak};
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetError, Network, Sink};
use crate::codec::{decode_frame, encode_frame};
use crate::message::{Address, Envelope};

pub const SIM_DEADLINE_TICKS: u64 = 500;

struct InFlight {
    from: Address,
    to: Address,
    frame: Vec<u8>,
}

struct State {
    sinks: HashMap<Address, Sink>,
    queue: Vec<InFlight>,
    rng: ChaCha8Rng,
}

struct Inner {
    state: Mutex<State>,
    wake: Condvar,
    ticks: AtomicU64,
    delivered: AtomicU64,
    stopped: AtomicBool,
    deadline: u64,
}

/// In-process transport. A hub thread delivers queued frames one at a time,
/// picking among the oldest frame of every sender/receiver pair at random,
/// so runs with different seeds see different interleavings while each
/// pair keeps FIFO order. The clock advances one tick per idle millisecond,
/// so a deadline only runs out while nothing is in flight.
pub struct SimNetwork {
    inner: Arc<Inner>,
}

impl SimNetwork {
    pub fn new(seed: u64) -> Arc<SimNetwork> {
        Self::with_deadline(seed, SIM_DEADLINE_TICKS)
    }

    pub fn with_deadline(seed: u64, deadline: u64) -> Arc<SimNetwork> {
        let inner = Arc::new(Inner {
            state: Mutex::new(State {
                sinks: HashMap::new(),
                queue: Vec::new(),
                rng: ChaCha8Rng::seed_from_u64(seed),
            }),
            wake: Condvar::new(),
            ticks: AtomicU64::new(0),
            delivered: AtomicU64::new(0),
            stopped: AtomicBool::new(false),
            deadline,
        });
        let weak = Arc::downgrade(&inner);
        thread::Builder::new().name("sim-hub".into()).spawn(move || hub(weak)).expect("spawn hub");
        Arc::new(SimNetwork { inner })
    }

    pub fn delivered(&self) -> u64 {
        self.inner.delivered.load(Ordering::Relaxed)
    }
}

impl Drop for SimNetwork {
    fn drop(&mut self) {
        self.inner.stopped.store(true, Ordering::Relaxed);
        self.inner.wake.notify_all();
    }
}

fn hub(weak: Weak<Inner>) {
    loop {
        let Some(inner) = weak.upgrade() else { return };
        if inner.stopped.load(Ordering::Relaxed) {
            return;
        }
        let next = {
            let mut st = inner.state.lock().unwrap();
            if st.queue.is_empty() {
                let (guard, timeout) = inner.wake.wait_timeout(st, Duration::from_millis(1)).unwrap();
                st = guard;
                if timeout.timed_out() {
                    inner.ticks.fetch_add(1, Ordering::Relaxed);
                }
            }
            if st.queue.is_empty() {
                None
            } else {
                let mut seen = HashSet::new();
                let heads: Vec<usize> = (0..st.queue.len())
                    .filter(|&i| seen.insert((st.queue[i].from.clone(), st.queue[i].to.clone())))
                    .collect();
                let pick = heads[st.rng.gen_range(0..heads.len())];
                let msg = st.queue.remove(pick);
                let sink = st.sinks.get(&msg.to).cloned();
                Some((msg, sink))
            }
        };
        if let Some((msg, Some(sink))) = next {
            inner.delivered.fetch_add(1, Ordering::Relaxed);
            match decode_frame(&msg.frame) {
                Ok(env) => sink(env),
                Err(e) => log::warn!("sim: dropping undecodable frame for {}: {e}", msg.to),
            }
        }
    }
}

impl Network for SimNetwork {
    fn bind(&self, hint: &str, sink: Sink) -> Result<Address, NetError> {
        let addr = if hint.starts_with("sim:") { Address(hint.to_string()) } else { Address::sim(hint) };
        let mut st = self.inner.state.lock().unwrap();
        if st.sinks.contains_key(&addr) {
            return Err(NetError::Bind(addr.0, "address in use".into()));
        }
        st.sinks.insert(addr.clone(), sink);
        Ok(addr)
    }

    fn unbind(&self, addr: &Address) {
        let mut st = self.inner.state.lock().unwrap();
        st.sinks.remove(addr);
        st.queue.retain(|m| &m.to != addr);
    }

    fn send(&self, to: &Address, env: &Envelope) -> Result<(), NetError> {
        let frame = encode_frame(env);
        let mut st = self.inner.state.lock().unwrap();
        if !st.sinks.contains_key(to) {
            return Err(NetError::Unreachable(to.clone()));
        }
        st.queue.push(InFlight { from: env.from.clone(), to: to.clone(), frame });
        self.inner.wake.notify_one();
        Ok(())
    }

    fn now(&self) -> u64 {
        self.inner.ticks.load(Ordering::Relaxed)
    }

    fn deadline(&self) -> u64 {
        self.inner.deadline
    }
}
