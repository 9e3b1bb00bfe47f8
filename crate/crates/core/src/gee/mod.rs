//! Evaluation: a reference interpreter and the eductive engine.

pub mod eductive;
mod error;
pub mod naive;
pub mod ops;
pub mod procedures;
pub mod trace;
pub mod warehouse;

pub use eductive::{eval_eductive, EngineStats, Eductive, RemoteStore};
pub use error::EvalError;
pub use naive::{eval_naive, Naive, Rule};
pub use procedures::{standard_procedures, NativeFn, Procedure, ProcedureHost, ProcedureRegistry};
pub use trace::{DemandTrace, TraceEvent, TraceRecord};
pub use warehouse::{demand_key_of, Claim, DemandKey, Warehouse, WarehouseStats, ROOT_SUBJECT};
