use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::rc::Rc;

use medledger_core::contract::TOKEN;
use medledger_core::ledger::{GenesisConfig, Transaction};
use medledger_core::Keypair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Fault, Latency, SimConfig};
use crate::node::{Msg, Node, NodeKind, Out};
use crate::report::{MessageCounts, NodeReport, SimReport, SkippedSlot};
use crate::workload::Workload;
use crate::SimError;

const GENESIS_TIME: u64 = 1_700_000_000;

enum Event {
    Deliver {
        to: usize,
        msg: Msg,
    },
    Slot {
        node: usize,
        height: u64,
        round: u32,
    },
    SybilSlot {
        node: usize,
    },
    Client,
}

struct Scheduled {
    at: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

pub struct Simulation {
    config: SimConfig,
    nodes: Vec<Node>,
    counts: Vec<MessageCounts>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: u64,
    net_rng: ChaCha8Rng,
    client_rng: ChaCha8Rng,
    workload: Workload,
    client_messages: u64,
    pending: Vec<(u64, usize, Fault)>,
}

fn genesis_for(config: &SimConfig, authorities: &[Keypair], admin: &Keypair) -> GenesisConfig {
    GenesisConfig {
        chain_id: format!("sim-{}", config.seed),
        genesis_time: GENESIS_TIME,
        block_interval_secs: config.block_interval_secs,
        authorities: authorities.iter().map(Keypair::public).collect(),
        administrators: vec![admin.account()],
        balances: [(admin.account(), 1_000_000 * TOKEN)].into_iter().collect(),
        permissive_guards: config.permissive_guards,
    }
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let seed = config.seed;
        let authorities: Vec<Keypair> = (0..config.authorities)
            .map(|i| Keypair::from_seed(&format!("sim/{seed}/authority/{i}")))
            .collect();
        let admin = Keypair::from_seed(&format!("sim/{seed}/admin"));
        let genesis = genesis_for(&config, &authorities, &admin);
        let names = config.node_names();
        let total = names.len();
        let nodes = names
            .into_iter()
            .enumerate()
            .map(|(i, name)| {
                let (kind, key) = if i < config.authorities {
                    (NodeKind::Authority, authorities[i].clone())
                } else if i < config.authorities + config.observers {
                    (
                        NodeKind::Observer,
                        Keypair::from_seed(&format!("sim/{seed}/{name}")),
                    )
                } else {
                    (
                        NodeKind::Sybil,
                        Keypair::from_seed(&format!("sim/{seed}/{name}")),
                    )
                };
                Node::new(i, name, kind, key, authorities.clone(), &genesis, total)
            })
            .collect();
        let mut sim = Simulation {
            workload: Workload::new(&genesis.chain_id, admin, seed),
            counts: vec![MessageCounts::default(); total],
            nodes,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            net_rng: ChaCha8Rng::seed_from_u64(seed),
            client_rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c11e),
            client_messages: 0,
            pending: Vec::new(),
            config,
        };
        for f in sim.config.faults.clone() {
            sim.inject_fault(&f.node, f.fault, f.at_height)?;
        }
        Ok(sim)
    }

    fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    fn max_committed(&self) -> u64 {
        self.nodes
            .iter()
            .map(|n| n.chain.height())
            .max()
            .unwrap_or(0)
    }

    /// Schedules `fault` for `node` once any node reaches `at_height`.
    pub fn inject_fault(
        &mut self,
        node: &str,
        fault: Fault,
        at_height: u64,
    ) -> Result<(), SimError> {
        let index = self
            .node_index(node)
            .ok_or_else(|| SimError::UnknownNode(node.to_string()))?;
        let current = self.max_committed();
        if at_height < current {
            return Err(SimError::AlreadyPast {
                node: node.to_string(),
                at_height,
                current,
            });
        }
        self.pending.push((at_height, index, fault));
        Ok(())
    }

    fn schedule(&mut self, at: u64, event: Event) {
        self.seq += 1;
        self.queue.push(Scheduled {
            at,
            seq: self.seq,
            event,
        });
    }

    fn latency(&mut self) -> u64 {
        match self.config.latency {
            Latency::Fixed { ms } => ms,
            Latency::Uniform { min_ms, max_ms } => self.net_rng.gen_range(min_ms..=max_ms),
        }
    }

    fn send(&mut self, from: usize, to: usize, msg: Msg) {
        self.counts[from].sent += 1;
        if self.nodes[from].fault == Fault::Flooded {
            self.counts[from].dropped += 1;
            return;
        }
        let at = self.now + self.latency();
        self.schedule(at, Event::Deliver { to, msg });
    }

    fn dispatch(&mut self, from: usize, out: Vec<Out>) {
        for o in out {
            match o {
                Out::All(msg) => {
                    for to in 0..self.nodes.len() {
                        if to != from {
                            self.send(from, to, msg.clone());
                        }
                    }
                }
                Out::To(targets, msg) => {
                    for to in targets {
                        self.send(from, to, msg.clone());
                    }
                }
            }
        }
    }

    fn activate_faults(&mut self) {
        let reached = self.max_committed();
        let (due, later): (Vec<_>, Vec<_>) =
            self.pending.drain(..).partition(|(h, _, _)| *h <= reached);
        self.pending = later;
        for (_, index, fault) in due {
            self.nodes[index].fault = fault;
        }
    }

    fn schedule_next_height(&mut self, node: usize) {
        let n = &self.nodes[node];
        let height = n.chain.height() + 1;
        let at = n.slot_time_ms(0).max(self.now);
        self.schedule(
            at,
            Event::Slot {
                node,
                height,
                round: 0,
            },
        );
    }

    fn done(&self) -> bool {
        self.nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Sybil && n.fault == Fault::None)
            .all(|n| n.chain.height() >= self.config.target_height)
    }

    fn handle(&mut self, event: Event) {
        let mut out = Vec::new();
        let (node, before) = match &event {
            Event::Deliver { to, .. }
            | Event::Slot { node: to, .. }
            | Event::SybilSlot { node: to } => (Some(*to), self.nodes[*to].chain.height()),
            Event::Client => (None, 0),
        };
        if let Some(i) = node {
            if self.nodes[i].fault == Fault::Crashed {
                if let Event::Deliver { .. } = event {
                    self.counts[i].dropped += 1;
                }
                return;
            }
        }
        match event {
            Event::Deliver { to, msg } => {
                if self.nodes[to].fault == Fault::Flooded {
                    self.counts[to].dropped += 1;
                    return;
                }
                self.counts[to].received += 1;
                let n = &mut self.nodes[to];
                match msg {
                    Msg::Txs(txs) => n.on_txs(&txs),
                    Msg::Block(block) => n.on_block(block, &mut out),
                    Msg::Ack(ack) => n.on_ack(&ack, &mut out),
                }
            }
            Event::Slot {
                node,
                height,
                round,
            } => {
                let n = &mut self.nodes[node];
                if n.chain.height() + 1 != height {
                    return;
                }
                n.on_slot(height, round, &mut out);
                if n.chain.height() + 1 == height {
                    let at = n.slot_time_ms(round + 1);
                    self.schedule(
                        at,
                        Event::Slot {
                            node,
                            height,
                            round: round + 1,
                        },
                    );
                }
            }
            Event::SybilSlot { node } => {
                self.nodes[node].on_sybil_slot(&mut out);
                let at = self.now + self.config.block_interval_secs * 1000;
                self.schedule(at, Event::SybilSlot { node });
            }
            Event::Client => {
                let txs = Rc::new(
                    self.workload
                        .batch(&mut self.client_rng, self.config.txs_per_slot),
                );
                self.send_client(txs);
                let at = self.now + self.config.block_interval_secs * 1000;
                self.schedule(at, Event::Client);
            }
        }
        if let Some(i) = node {
            self.dispatch(i, out);
            if self.nodes[i].chain.height() > before {
                self.schedule_next_height(i);
                self.activate_faults();
            }
        }
    }

    fn send_client(&mut self, txs: Rc<Vec<Transaction>>) {
        for to in 0..self.nodes.len() {
            if self.nodes[to].kind == NodeKind::Sybil {
                continue;
            }
            self.client_messages += 1;
            let at = self.now + self.latency();
            self.schedule(
                at,
                Event::Deliver {
                    to,
                    msg: Msg::Txs(txs.clone()),
                },
            );
        }
    }

    pub fn run(mut self) -> SimReport {
        self.activate_faults();
        let interval_ms = self.config.block_interval_secs * 1000;
        for i in 0..self.nodes.len() {
            match self.nodes[i].kind {
                NodeKind::Sybil => self.schedule(interval_ms + 1, Event::SybilSlot { node: i }),
                _ => self.schedule_next_height(i),
            }
        }
        if self.config.txs_per_slot > 0 {
            self.schedule(interval_ms / 2, Event::Client);
        }
        let deadline = self.config.max_time_secs * 1000;
        let mut reached = self.done();
        while !reached {
            let Some(next) = self.queue.pop() else { break };
            if next.at > deadline {
                break;
            }
            self.now = next.at;
            self.handle(next.event);
            reached = self.done();
        }
        self.report(reached)
    }

    fn report(self, reached_target: bool) -> SimReport {
        let honest: Vec<&Node> = self
            .nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Sybil && n.fault != Fault::Byzantine)
            .collect();
        let mut by_height: BTreeMap<u64, std::collections::BTreeSet<_>> = BTreeMap::new();
        for n in &honest {
            for b in n.chain.blocks() {
                by_height.entry(b.height()).or_default().insert(b.hash());
            }
        }
        let divergent_heights: Vec<u64> = by_height
            .iter()
            .filter(|(_, hashes)| hashes.len() > 1)
            .map(|(h, _)| *h)
            .collect();
        let authority_accounts = self.nodes[0].chain.genesis().authority_accounts();
        let foreign_blocks_accepted = honest
            .iter()
            .flat_map(|n| n.chain.blocks().iter().skip(1))
            .filter(|b| !authority_accounts.contains(&b.header.proposer))
            .count() as u64;
        let reference = honest
            .iter()
            .max_by_key(|n| (n.chain.height(), std::cmp::Reverse(n.index)));
        let mut skipped_slots = Vec::new();
        if let Some(r) = reference {
            for b in r.chain.blocks().iter().skip(1) {
                for round in 0..b.header.round {
                    skipped_slots.push(SkippedSlot {
                        height: b.height(),
                        round,
                        proposer: r.chain.genesis().proposer_for(b.height(), round).account(),
                    });
                }
            }
        }
        let heights: Vec<u64> = honest.iter().map(|n| n.chain.height()).collect();
        let nodes_with_evidence = honest.iter().filter(|n| !n.evidence.is_empty()).count();
        let nodes = self
            .nodes
            .iter()
            .zip(&self.counts)
            .map(|(n, c)| NodeReport {
                id: n.name.clone(),
                kind: n.kind,
                fault: n.fault,
                committed_height: n.chain.height(),
                head_hash: n.head_hash(),
                state_root: n.chain.state().state_root(),
                messages: c.clone(),
                rejections: n.rejections.clone(),
                evidence: n.evidence.clone(),
            })
            .collect();
        SimReport {
            virtual_time_ms: self.now,
            reached_target,
            nodes,
            divergence: !divergent_heights.is_empty(),
            divergent_heights,
            min_honest_height: heights.iter().copied().min().unwrap_or(0),
            max_honest_height: heights.iter().copied().max().unwrap_or(0),
            skipped_slots,
            sybil_blocks_sent: self.nodes.iter().map(|n| n.sybil_blocks).sum(),
            foreign_blocks_accepted,
            nodes_with_evidence,
            client_messages: self.client_messages,
            config: self.config,
        }
    }
}

pub fn run_simulation(config: SimConfig) -> Result<SimReport, SimError> {
    Ok(Simulation::new(config)?.run())
}
