use std::collections::HashMap;
use std::io::{self, BufReader, BufWriter};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::{NetError, Network, Sink};
use crate::codec::{read_frame, write_frame, CodecError};
use crate::message::{Address, Envelope};

pub const TCP_DEADLINE_MS: u64 = 5_000;
const CONNECT_TIMEOUT: Duration = Duration::from_millis(500);
const POLL: Duration = Duration::from_millis(20);

type Conn = Arc<Mutex<BufWriter<TcpStream>>>;

/// Length-prefixed frames over TCP. Each bound address owns a listener;
/// outgoing connections are cached per destination and re-dialled once on
/// a write failure.
pub struct TcpNetwork {
    start: Instant,
    deadline_ms: u64,
    listeners: Mutex<HashMap<Address, Listener>>,
    conns: Mutex<HashMap<Address, Conn>>,
}

impl TcpNetwork {
    pub fn new(deadline_ms: u64) -> Arc<TcpNetwork> {
        Arc::new(TcpNetwork {
            start: Instant::now(),
            deadline_ms,
            listeners: Mutex::new(HashMap::new()),
            conns: Mutex::new(HashMap::new()),
        })
    }

    fn dial(to: &Address) -> io::Result<Conn> {
        let addr: SocketAddr = to
            .as_str()
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no socket address"))?;
        let stream = TcpStream::connect_timeout(&addr, CONNECT_TIMEOUT)?;
        stream.set_nodelay(true)?;
        Ok(Arc::new(Mutex::new(BufWriter::new(stream))))
    }

    fn conn(&self, to: &Address, fresh: bool) -> io::Result<Conn> {
        if !fresh {
            if let Some(c) = self.conns.lock().unwrap().get(to) {
                return Ok(c.clone());
            }
        }
        let c = Self::dial(to)?;
        self.conns.lock().unwrap().insert(to.clone(), c.clone());
        Ok(c)
    }

    fn try_send(&self, to: &Address, env: &Envelope, fresh: bool) -> Result<(), CodecError> {
        let conn = self.conn(to, fresh)?;
        let mut w = conn.lock().unwrap();
        write_frame(&mut *w, env)
    }
}

struct Listener {
    stop: Arc<AtomicBool>,
    accepted: Arc<Mutex<Vec<TcpStream>>>,
}

fn serve_connection(stream: TcpStream, sink: Sink, stop: Arc<AtomicBool>) {
    let mut reader = BufReader::new(stream);
    while let Ok(env) = read_frame(&mut reader) {
        if stop.load(Ordering::Relaxed) {
            return;
        }
        sink(env);
    }
}

impl Network for TcpNetwork {
    fn bind(&self, hint: &str, sink: Sink) -> Result<Address, NetError> {
        let listener = TcpListener::bind(hint).map_err(|e| NetError::Bind(hint.to_string(), e.to_string()))?;
        let local = listener.local_addr().map_err(|e| NetError::Bind(hint.to_string(), e.to_string()))?;
        listener.set_nonblocking(true).map_err(|e| NetError::Bind(hint.to_string(), e.to_string()))?;
        let addr = Address(local.to_string());
        let stop = Arc::new(AtomicBool::new(false));
        let accepted = Arc::new(Mutex::new(Vec::new()));
        self.listeners
            .lock()
            .unwrap()
            .insert(addr.clone(), Listener { stop: stop.clone(), accepted: accepted.clone() });
        thread::Builder::new()
            .name(format!("tcp-accept-{addr}"))
            .spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((stream, _)) => {
                            let _ = stream.set_nonblocking(false);
                            if let Ok(clone) = stream.try_clone() {
                                accepted.lock().unwrap().push(clone);
                            }
                            let (sink, stop) = (sink.clone(), stop.clone());
                            thread::spawn(move || serve_connection(stream, sink, stop));
                        }
                        Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
                        Err(_) => thread::sleep(POLL),
                    }
                }
            })
            .map_err(|e| NetError::Bind(hint.to_string(), e.to_string()))?;
        Ok(addr)
    }

    fn unbind(&self, addr: &Address) {
        if let Some(l) = self.listeners.lock().unwrap().remove(addr) {
            l.stop.store(true, Ordering::Relaxed);
            for s in l.accepted.lock().unwrap().drain(..) {
                let _ = s.shutdown(Shutdown::Both);
            }
        }
    }

    fn send(&self, to: &Address, env: &Envelope) -> Result<(), NetError> {
        if self.try_send(to, env, false).is_ok() {
            return Ok(());
        }
        self.conns.lock().unwrap().remove(to);
        self.try_send(to, env, true).map_err(|_| {
            self.conns.lock().unwrap().remove(to);
            NetError::Unreachable(to.clone())
        })
    }

    fn now(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }

    fn deadline(&self) -> u64 {
        self.deadline_ms
    }
}
