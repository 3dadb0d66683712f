use std::collections::BTreeMap;

use medledger_core::{AccountId, Hash32};
use serde::Serialize;

use crate::config::{Fault, SimConfig};
use crate::node::{Evidence, NodeKind};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MessageCounts {
    pub sent: u64,
    pub received: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeReport {
    pub id: String,
    pub kind: NodeKind,
    pub fault: Fault,
    pub committed_height: u64,
    pub head_hash: Hash32,
    pub state_root: Hash32,
    pub messages: MessageCounts,
    /// Refused blocks, acknowledgements and transactions by reason.
    pub rejections: BTreeMap<String, u64>,
    pub evidence: Vec<Evidence>,
}

/// A proposer slot that passed without a committed block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedSlot {
    pub height: u64,
    pub round: u32,
    pub proposer: AccountId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub virtual_time_ms: u64,
    pub reached_target: bool,
    pub nodes: Vec<NodeReport>,
    /// Whether two honest nodes committed different blocks at one height.
    pub divergence: bool,
    pub divergent_heights: Vec<u64>,
    pub min_honest_height: u64,
    pub max_honest_height: u64,
    pub skipped_slots: Vec<SkippedSlot>,
    pub sybil_blocks_sent: u64,
    /// Committed blocks, on any honest node, sealed outside the authority set.
    pub foreign_blocks_accepted: u64,
    /// Honest nodes holding equivocation evidence.
    pub nodes_with_evidence: usize,
    pub client_messages: u64,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
