use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::rc::Rc;

use medledger_core::codec::Writer;
use medledger_core::ledger::{
    AppliedBlock, Block, BlockHeader, Chain, GenesisConfig, Mempool, Transaction,
};
use medledger_core::{AccountId, Hash32, Keypair, Signature};
use serde::Serialize;

use crate::config::Fault;

const MAX_BLOCK_TXS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Authority,
    Observer,
    Sybil,
}

#[derive(Debug, Clone)]
pub(crate) struct Ack {
    height: u64,
    hash: Hash32,
    authority: usize,
    signature: Signature,
}

#[derive(Debug, Clone)]
pub(crate) enum Msg {
    Txs(Rc<Vec<Transaction>>),
    Block(Rc<Block>),
    Ack(Ack),
}

pub(crate) enum Out {
    All(Msg),
    To(Vec<usize>, Msg),
}

/// Two distinct sealed blocks from one authority for the same slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub height: u64,
    pub round: u32,
    pub proposer: AccountId,
    pub first: Hash32,
    pub second: Hash32,
}

fn ack_bytes(chain_id: &str, height: u64, hash: &Hash32) -> Vec<u8> {
    let mut w = Writer::with_tag(b"MLACK");
    w.str(chain_id).u64(height).hash(hash);
    w.finish()
}

pub(crate) struct Node {
    pub index: usize,
    pub name: String,
    pub kind: NodeKind,
    pub fault: Fault,
    key: Keypair,
    authority_index: Option<usize>,
    authorities: Vec<Keypair>,
    quorum: usize,
    node_count: usize,
    pub chain: Chain,
    mempool: Mempool,
    /// Validated blocks for the next height.
    candidates: BTreeMap<Hash32, AppliedBlock>,
    future: BTreeMap<u64, Vec<Rc<Block>>>,
    acks: BTreeMap<(u64, Hash32), BTreeSet<usize>>,
    /// Heights this node has acknowledged a block at.
    locked: BTreeSet<u64>,
    proposed: BTreeSet<u64>,
    seen: HashSet<Hash32>,
    sealed: BTreeMap<(u64, u32, AccountId), Hash32>,
    pub evidence: Vec<Evidence>,
    pub rejections: BTreeMap<String, u64>,
    /// Best header a sybil node has heard of; it builds on this blindly.
    sybil_tip: BlockHeader,
    pub sybil_blocks: u64,
}

impl Node {
    pub fn new(
        index: usize,
        name: String,
        kind: NodeKind,
        key: Keypair,
        authorities: Vec<Keypair>,
        genesis: &GenesisConfig,
        node_count: usize,
    ) -> Self {
        let authority_index = authorities.iter().position(|k| k.public() == key.public());
        let chain = Chain::new(genesis.clone()).expect("simulation genesis is valid");
        let sybil_tip = chain.tip().header.clone();
        Node {
            index,
            name,
            kind,
            fault: Fault::None,
            key,
            authority_index,
            quorum: authorities.len() / 2 + 1,
            authorities,
            node_count,
            chain,
            mempool: Mempool::new(),
            candidates: BTreeMap::new(),
            future: BTreeMap::new(),
            acks: BTreeMap::new(),
            locked: BTreeSet::new(),
            proposed: BTreeSet::new(),
            seen: HashSet::new(),
            sealed: BTreeMap::new(),
            evidence: Vec::new(),
            rejections: BTreeMap::new(),
            sybil_tip,
            sybil_blocks: 0,
        }
    }

    fn reject(&mut self, reason: &str) {
        *self.rejections.entry(reason.to_string()).or_default() += 1;
    }

    fn acks_for_byzantine(&self) -> bool {
        self.fault == Fault::Byzantine && self.authority_index.is_some()
    }

    pub fn on_txs(&mut self, txs: &[Transaction]) {
        if self.kind == NodeKind::Sybil {
            return;
        }
        for tx in txs {
            if let Err(e) = self.mempool.admit(tx.clone(), self.chain.state()) {
                self.reject(&format!("tx:{}", e.code()));
            }
        }
    }

    pub fn on_block(&mut self, block: Rc<Block>, out: &mut Vec<Out>) {
        if self.kind == NodeKind::Sybil {
            if block.height() > self.sybil_tip.height {
                self.sybil_tip = block.header.clone();
            }
            return;
        }
        let hash = block.hash();
        if !self.seen.insert(hash) {
            return;
        }
        self.record_seal(&block, hash);
        let tip = self.chain.height();
        let height = block.height();
        if height <= tip {
            if self.chain.block(height).map(Block::hash) != Some(hash) {
                self.reject("Stale");
            }
        } else if height > tip + 1 {
            self.future.entry(height).or_default().push(block);
        } else {
            self.consider(block, out);
            self.try_finalize(out);
        }
    }

    /// Notes which authority sealed which block for each slot, recording
    /// evidence when one authority seals two.
    fn record_seal(&mut self, block: &Block, hash: Hash32) {
        let h = &block.header;
        let Some(key) = self.chain.genesis().authority_key(&h.proposer) else {
            return;
        };
        if !block.seal_verifies(key) {
            return;
        }
        let slot = (h.height, h.round, h.proposer);
        match self.sealed.get(&slot) {
            None => {
                self.sealed.insert(slot, hash);
            }
            Some(first) if *first != hash => {
                let already = self
                    .evidence
                    .iter()
                    .any(|e| (e.height, e.round, e.proposer) == slot);
                if !already {
                    self.evidence.push(Evidence {
                        height: h.height,
                        round: h.round,
                        proposer: h.proposer,
                        first: *first,
                        second: hash,
                    });
                }
            }
            Some(_) => {}
        }
    }

    /// Validates a block for the next height; relays and acknowledges it
    /// when it passes.
    fn consider(&mut self, block: Rc<Block>, out: &mut Vec<Out>) {
        match self.chain.validate_block(&block) {
            Err(r) => self.reject(r.kind()),
            Ok(applied) => {
                let hash = block.hash();
                let height = block.height();
                self.candidates.insert(hash, applied);
                out.push(Out::All(Msg::Block(block)));
                if self.authority_index.is_some()
                    && (self.acks_for_byzantine() || self.locked.insert(height))
                {
                    self.acknowledge(height, hash, out);
                }
            }
        }
    }

    fn acknowledge(&mut self, height: u64, hash: Hash32, out: &mut Vec<Out>) {
        let authority = self.authority_index.expect("only authorities acknowledge");
        let signature = self
            .key
            .sign(&ack_bytes(&self.chain.genesis().chain_id, height, &hash));
        self.acks
            .entry((height, hash))
            .or_default()
            .insert(authority);
        out.push(Out::All(Msg::Ack(Ack {
            height,
            hash,
            authority,
            signature,
        })));
    }

    pub fn on_ack(&mut self, ack: &Ack, out: &mut Vec<Out>) {
        if self.kind == NodeKind::Sybil || ack.height <= self.chain.height() {
            return;
        }
        let valid = self.authorities.get(ack.authority).is_some_and(|k| {
            k.public().verify(
                &ack_bytes(&self.chain.genesis().chain_id, ack.height, &ack.hash),
                &ack.signature,
            )
        });
        if !valid {
            self.reject("BadAck");
            return;
        }
        self.acks
            .entry((ack.height, ack.hash))
            .or_default()
            .insert(ack.authority);
        self.try_finalize(out);
    }

    /// Commits every next-height candidate that has a quorum of
    /// acknowledgements, then works through buffered blocks.
    fn try_finalize(&mut self, out: &mut Vec<Out>) {
        loop {
            let next = self.chain.height() + 1;
            let quorum = self.quorum;
            let acks = &self.acks;
            let Some(hash) = self
                .candidates
                .keys()
                .find(|h| acks.get(&(next, **h)).is_some_and(|s| s.len() >= quorum))
                .copied()
            else {
                return;
            };
            let applied = self.candidates.remove(&hash).expect("found above");
            self.chain.commit(applied);
            self.candidates.clear();
            self.mempool.prune(self.chain.state());
            self.acks = self.acks.split_off(&(next + 1, Hash32::ZERO));
            self.locked = self.locked.split_off(&(next + 1));
            if let Some(blocks) = self.future.remove(&(next + 1)) {
                for block in blocks {
                    self.consider(block, out);
                }
            }
        }
    }

    /// Virtual millisecond at which slot `round` of the next height opens.
    pub fn slot_time_ms(&self, round: u32) -> u64 {
        let g = self.chain.genesis();
        (self.chain.earliest_timestamp(round) - g.genesis_time) * 1000
    }

    pub fn on_slot(&mut self, height: u64, round: u32, out: &mut Vec<Out>) {
        if height != self.chain.height() + 1 || self.authority_index.is_none() {
            return;
        }
        if *self.chain.genesis().proposer_for(height, round) != self.key.public() {
            return;
        }
        if self.locked.contains(&height) || !self.proposed.insert(height) {
            return;
        }
        let ts = self.chain.earliest_timestamp(round);
        let first = self
            .chain
            .build_block(self.mempool.iter(), round, ts, &self.key, MAX_BLOCK_TXS)
            .expect("proposer checked above");
        if self.fault == Fault::Byzantine {
            let second = self
                .chain
                .build_block([], round, ts + 1, &self.key, 0)
                .expect("proposer checked above");
            let peers: Vec<usize> = (0..self.node_count).filter(|i| *i != self.index).collect();
            let (left, right) = peers.split_at(peers.len() / 2);
            for (applied, targets) in [(first, left), (second, right)] {
                let block = Rc::new(applied.block.clone());
                self.adopt_own(applied, out);
                out.push(Out::To(targets.to_vec(), Msg::Block(block)));
            }
        } else {
            let block = Rc::new(first.block.clone());
            self.adopt_own(first, out);
            out.push(Out::All(Msg::Block(block)));
        }
        self.try_finalize(out);
    }

    fn adopt_own(&mut self, applied: AppliedBlock, out: &mut Vec<Out>) {
        let hash = applied.block.hash();
        let height = applied.block.height();
        self.seen.insert(hash);
        self.record_seal(&applied.block, hash);
        self.candidates.insert(hash, applied);
        self.locked.insert(height);
        self.acknowledge(height, hash, out);
    }

    /// A sybil seals a block on the best header it has heard of. Even-indexed
    /// sybils name themselves as proposer, odd ones impersonate the
    /// scheduled authority.
    pub fn on_sybil_slot(&mut self, out: &mut Vec<Out>) {
        let g = self.chain.genesis();
        let tip = &self.sybil_tip;
        let height = tip.height + 1;
        let proposer = if self.index.is_multiple_of(2) {
            self.key.account()
        } else {
            g.proposer_for(height, 0).account()
        };
        let header = BlockHeader {
            chain_id: g.chain_id.clone(),
            height,
            round: 0,
            prev_hash: tip.hash(),
            timestamp: tip.timestamp + g.block_interval_secs,
            proposer,
            tx_root: medledger_core::ledger::tx_root(&[]),
            state_root: tip.state_root,
        };
        let block = Block::sealed(header, Vec::new(), &self.key);
        self.sybil_blocks += 1;
        out.push(Out::All(Msg::Block(Rc::new(block))));
    }

    pub fn head_hash(&self) -> Hash32 {
        self.chain.tip().hash()
    }
}
