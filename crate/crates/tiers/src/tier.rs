//! The tier runtime: one thread per instance consuming its inbox in order.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crossbeam_channel::{select, unbounded, Receiver, Sender};
use serde_json::json;

use crate::message::{Address, Envelope, Message, SystemCommand};
use crate::net::{NetError, Network};
use crate::port::Port;

const IDLE: Duration = Duration::from_millis(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
    /// Stop without answering, as if the process died.
    Crash,
}

pub trait Tier: Send + 'static {
    /// Events posted back to the tier by helper threads it started.
    type Local: Send + 'static;

    fn name(&self) -> &'static str;
    fn handle(&mut self, env: Envelope) -> Flow;
    fn local(&mut self, _event: Self::Local) -> Flow {
        Flow::Continue
    }
    fn tick(&mut self, _now: u64) {}
    /// Counters and state reported by the Status system command.
    fn status(&self) -> serde_json::Value;
    fn on_stop(&mut self) {}
}

/// The handle a tier's builder gets: its port and a way to post local events.
pub struct Wiring<L> {
    pub port: Arc<Port>,
    pub local: Sender<L>,
}

pub struct TierHandle {
    name: &'static str,
    port: Arc<Port>,
    stop: Arc<AtomicBool>,
    thread: Mutex<Option<JoinHandle<()>>>,
}

impl TierHandle {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn address(&self) -> &Address {
        self.port.address()
    }

    pub fn is_running(&self) -> bool {
        !self.stop.load(Ordering::Relaxed)
    }

    /// Stops the instance abruptly: its address goes dark and in-flight
    /// work is dropped.
    pub fn kill(&self) {
        self.stop.store(true, Ordering::Relaxed);
        self.port.close();
    }

    pub fn join(&self) {
        if let Some(t) = self.thread.lock().unwrap().take() {
            let _ = t.join();
        }
    }
}

impl Drop for TierHandle {
    fn drop(&mut self) {
        self.kill();
    }
}

pub fn spawn_tier<T, F>(net: Arc<dyn Network>, hint: &str, build: F) -> Result<TierHandle, NetError>
where
    T: Tier,
    F: FnOnce(Wiring<T::Local>) -> T,
{
    let (inbox_tx, inbox) = unbounded();
    let (local_tx, local_rx) = unbounded();
    let port = Port::bind(net, hint, inbox_tx)?;
    let keep_open = local_tx.clone();
    let tier = build(Wiring { port: port.clone(), local: local_tx });
    let name = tier.name();
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let loop_port = port.clone();
    let thread = thread::Builder::new()
        .name(format!("{name}-{}", port.address()))
        .spawn(move || {
            run(tier, loop_port, inbox, local_rx, flag);
            drop(keep_open);
        })
        .map_err(|e| NetError::Bind(hint.to_string(), e.to_string()))?;
    Ok(TierHandle { name, port, stop, thread: Mutex::new(Some(thread)) })
}

fn run<T: Tier>(mut tier: T, port: Arc<Port>, inbox: Receiver<Envelope>, local: Receiver<T::Local>, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::Relaxed) {
        let flow = select! {
            recv(inbox) -> env => match env {
                Ok(env) => dispatch(&mut tier, &port, env),
                Err(_) => Flow::Stop,
            },
            recv(local) -> ev => match ev {
                Ok(ev) => tier.local(ev),
                Err(_) => Flow::Continue,
            },
            default(IDLE) => Flow::Continue,
        };
        if stop.load(Ordering::Relaxed) {
            break;
        }
        match flow {
            Flow::Continue => tier.tick(port.now()),
            Flow::Stop => break,
            Flow::Crash => {
                stop.store(true, Ordering::Relaxed);
                port.close();
                return;
            }
        }
    }
    stop.store(true, Ordering::Relaxed);
    tier.on_stop();
    port.close();
}

fn dispatch<T: Tier>(tier: &mut T, port: &Port, env: Envelope) -> Flow {
    let Message::Sys { command } = &env.msg else { return tier.handle(env) };
    match command {
        SystemCommand::Heartbeat => {
            let _ = port.reply(&env, Message::ack(tier.name()));
            Flow::Continue
        }
        SystemCommand::Status => {
            let body = json!({ "kind": tier.name(), "address": port.address(), "stats": tier.status() });
            let _ = port.reply(&env, Message::ack(body.to_string()));
            Flow::Continue
        }
        SystemCommand::Shutdown => {
            let _ = port.reply(&env, Message::ack("shutting down"));
            Flow::Stop
        }
        _ => tier.handle(env),
    }
}

/// Fault injection: the first instance that claims the victim slot crashes
/// when it accepts a demand after `after` demands have been accepted by all
/// instances sharing the switch.
#[derive(Debug)]
pub struct CrashSwitch {
    after: usize,
    accepted: AtomicUsize,
    victim_taken: AtomicBool,
    fired: AtomicBool,
}

impl CrashSwitch {
    pub fn new(after: usize) -> Arc<CrashSwitch> {
        Arc::new(CrashSwitch {
            after,
            accepted: AtomicUsize::new(0),
            victim_taken: AtomicBool::new(false),
            fired: AtomicBool::new(false),
        })
    }

    pub fn claim_victim(&self) -> bool {
        !self.victim_taken.swap(true, Ordering::SeqCst)
    }

    /// Records an accepted demand; true when the victim should die now.
    pub fn on_accept(&self, is_victim: bool) -> bool {
        let n = self.accepted.fetch_add(1, Ordering::SeqCst) + 1;
        is_victim && n > self.after && !self.fired.swap(true, Ordering::SeqCst)
    }

    pub fn fired(&self) -> bool {
        self.fired.load(Ordering::SeqCst)
    }
}
