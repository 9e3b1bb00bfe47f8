//! Demand worker tier: runs native procedures for procedural demands,
//! loading each procedure into its pool from the node's catalog on first
//! use.

use std::sync::Arc;
use std::time::Duration;

use iplc_core::gee::{procedures::invoke, ProcedureRegistry};
use iplc_core::{EvalError, Value};
use serde_json::json;

use crate::dgt::outcome_of;
use crate::message::{Address, Demand, Envelope, Message, Payload, SystemCommand};
use crate::port::Port;
use crate::tier::{CrashSwitch, Flow, Tier, Wiring};

pub struct Dwt {
    port: Arc<Port>,
    provider: Option<Address>,
    catalog: Arc<ProcedureRegistry>,
    pool: ProcedureRegistry,
    call_timeout: Duration,
    crash: Option<(Arc<CrashSwitch>, bool)>,
    processed: u64,
    loads: u64,
    failures: u64,
}

impl Dwt {
    /// `provider` answers AddProcedure requests; without one the worker
    /// loads straight from `catalog`.
    pub fn new(
        wiring: Wiring<()>,
        provider: Option<Address>,
        catalog: Arc<ProcedureRegistry>,
        call_timeout: Duration,
        crash: Option<(Arc<CrashSwitch>, bool)>,
    ) -> Self {
        Dwt {
            port: wiring.port,
            provider,
            catalog,
            pool: ProcedureRegistry::new(),
            call_timeout,
            crash,
            processed: 0,
            loads: 0,
            failures: 0,
        }
    }

    fn load(&mut self, name: &str) -> Result<(), EvalError> {
        if self.pool.contains(name) {
            return Ok(());
        }
        if let Some(provider) = &self.provider {
            let request = Message::sys(SystemCommand::AddProcedure { name: name.to_string() });
            match self.port.call(provider, request, self.call_timeout) {
                Ok(Message::Ack { .. }) => {}
                Ok(Message::Err(w)) => return Err(EvalError::from_wire(&w.kind, &w.message)),
                _ => return Err(EvalError::UnknownProcedure(name.to_string())),
            }
        }
        let p = self.catalog.get(name).ok_or_else(|| EvalError::UnknownProcedure(name.to_string()))?;
        self.pool.register_procedure(name, p.clone())?;
        self.loads += 1;
        Ok(())
    }

    fn process(&mut self, name: &str, args: &[String]) -> Result<Value, EvalError> {
        self.load(name)?;
        let args = args
            .iter()
            .map(|a| a.parse::<Value>().map_err(|e| EvalError::TypeError(format!("bad argument `{a}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        invoke(name, self.pool.get(name).expect("loaded above"), &args)
    }
}

impl Tier for Dwt {
    type Local = ();

    fn name(&self) -> &'static str {
        "DWT"
    }

    fn handle(&mut self, env: Envelope) -> Flow {
        let Message::Demand(Demand { id, payload: Payload::Procedural { name, args }, reply_to, .. }) = &env.msg else {
            let m = Message::err("Unsupported", format!("a worker does not handle {}", env.msg.kind().as_str()));
            let _ = self.port.reply(&env, m);
            return Flow::Continue;
        };
        if let Some((switch, victim)) = &self.crash {
            if switch.on_accept(*victim) {
                return Flow::Crash;
            }
        }
        let result = self.process(name, args);
        self.processed += 1;
        if result.is_err() {
            self.failures += 1;
        }
        let msg = Message::Result { demand_id: id.clone(), outcome: outcome_of(result) };
        let _ = self.port.reply_to(reply_to, env.corr, msg);
        Flow::Continue
    }

    fn status(&self) -> serde_json::Value {
        json!({
            "processed": self.processed,
            "loads": self.loads,
            "failures": self.failures,
            "pool": self.pool.names().collect::<Vec<_>>(),
        })
    }
}
