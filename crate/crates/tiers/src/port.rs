//! A bound endpoint with request/reply correlation. Replies to pending
//! calls are routed straight to the waiting caller from the transport's
//! delivery thread; everything else goes to the owner's inbox, so a tier may
//! block on a call while its own inbox keeps filling.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crossbeam_channel::{bounded, Sender};
use thiserror::Error;

use crate::message::{Address, Envelope, Message};
use crate::net::{NetError, Network};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CallError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("no reply from {0} within {1:?}")]
    Timeout(Address, Duration),
}

type Waiting = Arc<Mutex<HashMap<u64, Sender<Envelope>>>>;

pub struct Port {
    addr: Address,
    net: Arc<dyn Network>,
    waiting: Waiting,
    next: AtomicU64,
    closed: AtomicBool,
}

impl Port {
    pub fn bind(net: Arc<dyn Network>, hint: &str, inbox: Sender<Envelope>) -> Result<Arc<Port>, NetError> {
        let waiting: Waiting = Arc::default();
        let routes = waiting.clone();
        let sink = Arc::new(move |env: Envelope| {
            if let Some(re) = env.re {
                let waiter = routes.lock().unwrap().remove(&re);
                if let Some(tx) = waiter {
                    let _ = tx.send(env);
                    return;
                }
            }
            let _ = inbox.send(env);
        });
        let addr = net.bind(hint, sink)?;
        Ok(Arc::new(Port { addr, net, waiting, next: AtomicU64::new(1), closed: AtomicBool::new(false) }))
    }

    pub fn address(&self) -> &Address {
        &self.addr
    }

    pub fn network(&self) -> &Arc<dyn Network> {
        &self.net
    }

    pub fn now(&self) -> u64 {
        self.net.now()
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Relaxed)
    }

    /// A closed port is dead: it neither receives nor sends.
    fn transmit(&self, to: &Address, env: &Envelope) -> Result<(), NetError> {
        if self.is_closed() {
            return Err(NetError::Unreachable(self.addr.clone()));
        }
        self.net.send(to, env)
    }

    fn envelope(&self, re: Option<u64>, msg: Message) -> Envelope {
        Envelope { from: self.addr.clone(), corr: self.next.fetch_add(1, Ordering::Relaxed), re, msg }
    }

    /// A number unique among this port's messages.
    pub fn fresh_id(&self) -> u64 {
        self.next.fetch_add(1, Ordering::Relaxed)
    }

    pub fn send(&self, to: &Address, msg: Message) -> Result<u64, NetError> {
        let env = self.envelope(None, msg);
        self.transmit(to, &env)?;
        Ok(env.corr)
    }

    pub fn reply(&self, to: &Envelope, msg: Message) -> Result<(), NetError> {
        self.reply_to(&to.from, to.corr, msg)
    }

    pub fn reply_to(&self, to: &Address, corr: u64, msg: Message) -> Result<(), NetError> {
        let env = self.envelope(Some(corr), msg);
        self.transmit(to, &env)
    }

    /// Sends `msg` and blocks until the matching reply arrives.
    pub fn call(&self, to: &Address, msg: Message, timeout: Duration) -> Result<Message, CallError> {
        let env = self.envelope(None, msg);
        let (tx, rx) = bounded(1);
        self.waiting.lock().unwrap().insert(env.corr, tx);
        if let Err(e) = self.transmit(to, &env) {
            self.waiting.lock().unwrap().remove(&env.corr);
            return Err(e.into());
        }
        match rx.recv_timeout(timeout) {
            Ok(reply) => Ok(reply.msg),
            Err(_) => {
                self.waiting.lock().unwrap().remove(&env.corr);
                Err(CallError::Timeout(to.clone(), timeout))
            }
        }
    }

    pub fn close(&self) {
        self.closed.store(true, Ordering::Relaxed);
        self.net.unbind(&self.addr);
        self.waiting.lock().unwrap().clear();
    }
}
