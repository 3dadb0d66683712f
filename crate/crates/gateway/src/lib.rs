//! HTTP/JSON gateway of a live medledger node.
//!
//! Writes arrive only as signed transactions through the mempool; reads are
//! answered from the last committed snapshot. See [`api`] for the route
//! table and [`auth`] for read authorization.

pub mod api;
pub mod auth;
pub mod node;

pub use api::{router, serve};
pub use node::{Clock, LiveNode, NodeConfig, NodeError, Snapshot, TxStatus};
