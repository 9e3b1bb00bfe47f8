//! The distributed runtime: generator, store, worker and manager tiers
//! hosted by node controllers, talking over a simulated or TCP transport.

pub mod client;
pub mod cluster;
pub mod codec;
pub mod dgt;
pub mod dst;
pub mod dwt;
mod error;
pub mod gim;
pub mod message;
pub mod net;
pub mod node;
pub mod port;
pub mod store;
pub mod tier;

pub use client::Client;
pub use cluster::{Cluster, ClusterConfig, ClusterStats, Topology, Transport};
pub use error::TierError;
pub use message::{Address, TierKind};
pub use node::{NodeHandle, TierSettings};
pub use tier::CrashSwitch;
