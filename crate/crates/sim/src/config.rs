use serde::{Deserialize, Serialize};

use crate::SimError;

/// Per-message delivery delay in virtual milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Latency {
    Fixed { ms: u64 },
    Uniform { min_ms: u64, max_ms: u64 },
}

impl Default for Latency {
    fn default() -> Self {
        Latency::Uniform {
            min_ms: 5,
            max_ms: 120,
        }
    }
}

impl Latency {
    pub fn max_ms(&self) -> u64 {
        match *self {
            Latency::Fixed { ms } => ms,
            Latency::Uniform { max_ms, .. } => max_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    #[default]
    None,
    /// Processes and sends nothing.
    Crashed,
    /// Seals two conflicting blocks in each of its slots and acknowledges
    /// every valid block it sees.
    Byzantine,
    /// Every message to or from the node is lost.
    Flooded,
}

/// One scenario-script entry: `node` takes on `fault` once any node has
/// committed `at_height`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledFault {
    pub at_height: u64,
    pub node: String,
    pub fault: Fault,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub authorities: usize,
    pub observers: usize,
    /// Unregistered nodes that seal blocks with keys outside the authority
    /// set.
    pub sybil_nodes: usize,
    pub latency: Latency,
    pub block_interval_secs: u64,
    /// The run ends once every fault-free node has committed this height.
    pub target_height: u64,
    /// Hard stop in virtual seconds.
    pub max_time_secs: u64,
    /// Transactions the workload client broadcasts per block interval.
    pub txs_per_slot: usize,
    pub permissive_guards: bool,
    pub faults: Vec<ScheduledFault>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            authorities: 4,
            observers: 0,
            sybil_nodes: 0,
            latency: Latency::default(),
            block_interval_secs: 2,
            target_height: 20,
            max_time_secs: 600,
            txs_per_slot: 2,
            permissive_guards: false,
            faults: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.authorities == 0 {
            return invalid("at least one authority is required");
        }
        if self.block_interval_secs == 0 {
            return invalid("block_interval_secs must be positive");
        }
        if let Latency::Uniform { min_ms, max_ms } = self.latency {
            if min_ms > max_ms {
                return invalid("latency min_ms exceeds max_ms");
            }
        }
        // Two hops (block, then acknowledgement) must fit in one slot.
        if self.latency.max_ms() * 2 >= self.block_interval_secs * 1000 {
            return invalid("latency must stay below half the block interval");
        }
        if self.max_time_secs == 0 {
            return invalid("max_time_secs must be positive");
        }
        Ok(())
    }

    pub fn node_names(&self) -> Vec<String> {
        let a = (0..self.authorities).map(|i| format!("a{i}"));
        let o = (0..self.observers).map(|i| format!("o{i}"));
        let s = (0..self.sybil_nodes).map(|i| format!("s{i}"));
        a.chain(o).chain(s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_and_names() {
        let c: SimConfig = serde_json::from_str(r#"{"seed": 9, "observers": 1}"#).unwrap();
        assert_eq!(c.authorities, 4);
        assert_eq!(c.node_names(), vec!["a0", "a1", "a2", "a3", "o0"]);
        c.validate().unwrap();
    }

    #[test]
    fn latency_must_fit_interval() {
        let c = SimConfig {
            latency: Latency::Fixed { ms: 1000 },
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn fault_script_parses() {
        let f: Vec<ScheduledFault> =
            serde_json::from_str(r#"[{"at_height": 3, "node": "a1", "fault": "crashed"}]"#)
                .unwrap();
        assert_eq!(f[0].fault, Fault::Crashed);
    }
}
