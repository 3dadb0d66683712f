//! Deterministic multi-node simulation of the Proof-of-Authority pipeline.
//!
//! Nodes run in one virtual-time event loop; message latency is drawn from
//! a seeded generator, so a seed and a configuration fully determine the
//! [`SimReport`]. A block is final at a node once a strict majority of
//! authorities has acknowledged it; each honest authority acknowledges at
//! most one block per height.

mod config;
mod node;
mod report;
mod simulation;
mod workload;

pub use config::{Fault, Latency, ScheduledFault, SimConfig};
pub use node::{Evidence, NodeKind};
pub use report::{MessageCounts, NodeReport, SimReport, SkippedSlot};
pub use simulation::{run_simulation, Simulation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("cannot schedule a fault for {node} at height {at_height}: already at {current}")]
    AlreadyPast {
        node: String,
        at_height: u64,
        current: u64,
    },
}
