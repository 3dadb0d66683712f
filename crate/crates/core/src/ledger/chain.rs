//! The hash-linked chain: block production, validation, replay and the
//! newline-delimited JSON chain file.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use super::block::{tx_root, Block, BlockHeader};
use super::genesis::{GenesisConfig, GenesisError};
use super::state::{LedgerState, Receipt};
use super::tx::{Transaction, TxError};
use crate::account::{AccountId, Keypair, Signature};
use crate::hash::Hash32;

/// Why a block was refused.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlockRejection {
    #[error("bad link: {0}")]
    BadLink(String),
    #[error("proposer {got} is not scheduled for this slot (expected {expected})")]
    WrongProposer { expected: AccountId, got: AccountId },
    #[error("seal does not verify")]
    BadSeal,
    #[error("transaction {index}: {reason}")]
    BadTx { index: usize, reason: String },
    #[error("state root mismatch: header {claimed}, recomputed {computed}")]
    BadStateRoot { claimed: Hash32, computed: Hash32 },
}

impl BlockRejection {
    pub fn kind(&self) -> &'static str {
        match self {
            BlockRejection::BadLink(_) => "BadLink",
            BlockRejection::WrongProposer { .. } => "WrongProposer",
            BlockRejection::BadSeal => "BadSeal",
            BlockRejection::BadTx { .. } => "BadTx",
            BlockRejection::BadStateRoot { .. } => "BadStateRoot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProposeError {
    #[error("not this authority's turn: slot belongs to {expected}")]
    NotYourTurn { expected: AccountId },
    #[error("timestamp {timestamp} precedes the earliest allowed {earliest}")]
    TooEarly { timestamp: u64, earliest: u64 },
}

/// A validated block together with the state it produces.
#[derive(Debug, Clone)]
pub struct AppliedBlock {
    pub block: Block,
    pub receipts: Vec<Receipt>,
    pub state: LedgerState,
}

#[derive(Debug, Clone)]
pub struct Chain {
    genesis: GenesisConfig,
    blocks: Vec<Block>,
    receipts: Vec<Vec<Receipt>>,
    state: LedgerState,
}

/// The block at height 0: links to the genesis configuration hash and
/// commits to the initial state.
pub fn genesis_block(genesis: &GenesisConfig) -> Block {
    let state = LedgerState::from_genesis(genesis);
    Block {
        header: BlockHeader {
            chain_id: genesis.chain_id.clone(),
            height: 0,
            round: 0,
            prev_hash: genesis.hash(),
            timestamp: genesis.genesis_time,
            proposer: AccountId::ZERO,
            tx_root: tx_root(&[]),
            state_root: state.state_root(),
        },
        transactions: Vec::new(),
        seal: Signature::EMPTY,
    }
}

impl Chain {
    pub fn new(genesis: GenesisConfig) -> Result<Self, GenesisError> {
        genesis.validate()?;
        let block = genesis_block(&genesis);
        let state = LedgerState::from_genesis(&genesis);
        Ok(Chain {
            genesis,
            blocks: vec![block],
            receipts: vec![Vec::new()],
            state,
        })
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn tip(&self) -> &Block {
        self.blocks
            .last()
            .expect("chain always holds the genesis block")
    }

    pub fn height(&self) -> u64 {
        self.tip().height()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(height).ok()?)
    }

    pub fn receipts(&self, height: u64) -> Option<&[Receipt]> {
        self.receipts
            .get(usize::try_from(height).ok()?)
            .map(Vec::as_slice)
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    /// Earliest timestamp a block at the next height may carry in `round`.
    pub fn earliest_timestamp(&self, round: u32) -> u64 {
        let slots = u64::from(round) + 1;
        self.tip()
            .header
            .timestamp
            .saturating_add(self.genesis.block_interval_secs.saturating_mul(slots))
    }

    /// Builds and seals the next block from `pending` in arrival order.
    /// Transactions that cannot be applied (bad nonce, unknown sender,
    /// bad signature) are left out.
    pub fn build_block<'a>(
        &self,
        pending: impl IntoIterator<Item = &'a Transaction>,
        round: u32,
        timestamp: u64,
        key: &Keypair,
        max_txs: usize,
    ) -> Result<AppliedBlock, ProposeError> {
        let height = self.height() + 1;
        let expected = self.genesis.proposer_for(height, round);
        if *expected != key.public() {
            return Err(ProposeError::NotYourTurn {
                expected: expected.account(),
            });
        }
        let earliest = self.earliest_timestamp(round);
        if timestamp < earliest {
            return Err(ProposeError::TooEarly {
                timestamp,
                earliest,
            });
        }
        let mut state = self.state.clone();
        let mut included = Vec::new();
        let mut receipts = Vec::new();
        for tx in pending {
            if included.len() >= max_txs {
                break;
            }
            if let Ok(receipt) = state.apply_transaction(tx) {
                included.push(tx.clone());
                receipts.push(receipt);
            }
        }
        let header = BlockHeader {
            chain_id: self.genesis.chain_id.clone(),
            height,
            round,
            prev_hash: self.tip().hash(),
            timestamp,
            proposer: key.account(),
            tx_root: tx_root(&included),
            state_root: state.state_root(),
        };
        Ok(AppliedBlock {
            block: Block::sealed(header, included, key),
            receipts,
            state,
        })
    }

    /// Full check of a candidate next block: link, proposer schedule, seal,
    /// every transaction and the recomputed state root.
    pub fn validate_block(&self, block: &Block) -> Result<AppliedBlock, BlockRejection> {
        let h = &block.header;
        let tip = self.tip();
        if h.chain_id != self.genesis.chain_id {
            return Err(BlockRejection::BadLink(format!(
                "chain id {:?}",
                h.chain_id
            )));
        }
        if h.height != tip.height() + 1 {
            return Err(BlockRejection::BadLink(format!(
                "height {} does not follow {}",
                h.height,
                tip.height()
            )));
        }
        if h.prev_hash != tip.hash() {
            return Err(BlockRejection::BadLink(
                "prev_hash does not match parent".into(),
            ));
        }
        let earliest = self.earliest_timestamp(h.round);
        if h.timestamp < earliest {
            return Err(BlockRejection::BadLink(format!(
                "timestamp {} earlier than {} for round {}",
                h.timestamp, earliest, h.round
            )));
        }
        let expected = self.genesis.proposer_for(h.height, h.round);
        if h.proposer != expected.account() {
            return Err(BlockRejection::WrongProposer {
                expected: expected.account(),
                got: h.proposer,
            });
        }
        if !block.seal_verifies(expected) {
            return Err(BlockRejection::BadSeal);
        }
        if tx_root(&block.transactions) != h.tx_root {
            return Err(BlockRejection::BadTx {
                index: 0,
                reason: "transaction list does not match tx_root".into(),
            });
        }
        let mut state = self.state.clone();
        let mut receipts = Vec::with_capacity(block.transactions.len());
        for (index, tx) in block.transactions.iter().enumerate() {
            let receipt =
                state
                    .apply_transaction(tx)
                    .map_err(|e: TxError| BlockRejection::BadTx {
                        index,
                        reason: e.to_string(),
                    })?;
            receipts.push(receipt);
        }
        let computed = state.state_root();
        if computed != h.state_root {
            return Err(BlockRejection::BadStateRoot {
                claimed: h.state_root,
                computed,
            });
        }
        Ok(AppliedBlock {
            block: block.clone(),
            receipts,
            state,
        })
    }

    /// Appends a block previously returned by [`build_block`](Self::build_block)
    /// or [`validate_block`](Self::validate_block) against the current tip.
    pub fn commit(&mut self, applied: AppliedBlock) {
        assert_eq!(
            applied.block.header.prev_hash,
            self.tip().hash(),
            "applied block does not extend the tip"
        );
        self.blocks.push(applied.block);
        self.receipts.push(applied.receipts);
        self.state = applied.state;
    }

    pub fn import_block(&mut self, block: &Block) -> Result<&[Receipt], BlockRejection> {
        let applied = self.validate_block(block)?;
        self.commit(applied);
        Ok(self.receipts.last().expect("just pushed"))
    }

    pub fn to_ndjson(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for block in &self.blocks {
            out.extend_from_slice(block.to_canonical_json().as_bytes());
            out.push(b'\n');
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> io::Result<()> {
        let mut file = File::create(path)?;
        file.write_all(&self.to_ndjson())?;
        file.sync_all()
    }
}

/// Appends one block line to a chain file.
pub fn append_block(path: &Path, block: &Block) -> io::Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = block.to_canonical_json().into_bytes();
    line.push(b'\n');
    file.write_all(&line)
}

/// First position at which a chain fails verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainFault {
    /// Index of the offending block (its line number, 0 = genesis).
    pub height: u64,
    pub reason: FaultReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultReason {
    InvalidGenesisConfig(GenesisError),
    Missing,
    GenesisMismatch,
    Malformed(String),
    Rejected(BlockRejection),
}

impl fmt::Display for ChainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "height {}: {}", self.height, self.reason)
    }
}

impl fmt::Display for FaultReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultReason::InvalidGenesisConfig(e) => write!(f, "invalid genesis config: {e}"),
            FaultReason::Missing => f.write_str("genesis block missing"),
            FaultReason::GenesisMismatch => {
                f.write_str("genesis block does not match configuration")
            }
            FaultReason::Malformed(e) => write!(f, "malformed block: {e}"),
            FaultReason::Rejected(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ChainFault {}

/// Re-executes `blocks` from genesis, checking every link, seal and state
/// root.
pub fn verify_chain(genesis: &GenesisConfig, blocks: &[Block]) -> Result<Chain, ChainFault> {
    let mut verifier = Verifier::new(genesis)?;
    for block in blocks {
        verifier.push(block)?;
    }
    verifier.finish()
}

/// [`verify_chain`] over the raw bytes of a chain file. Any line that is not
/// the exact canonical encoding of a block fails at that line.
pub fn verify_chain_bytes(genesis: &GenesisConfig, bytes: &[u8]) -> Result<Chain, ChainFault> {
    let mut verifier = Verifier::new(genesis)?;
    let mut lines: Vec<&[u8]> = bytes.split(|b| *b == b'\n').collect();
    match lines.pop() {
        Some([]) => {}
        _ => {
            return Err(ChainFault {
                height: lines.len() as u64,
                reason: FaultReason::Malformed("missing trailing newline".into()),
            })
        }
    }
    for line in lines {
        let block = Block::from_canonical_json(line).map_err(|e| ChainFault {
            height: verifier.position(),
            reason: FaultReason::Malformed(e),
        })?;
        verifier.push(&block)?;
    }
    verifier.finish()
}

pub fn verify_chain_file(
    genesis: &GenesisConfig,
    path: &Path,
) -> io::Result<Result<Chain, ChainFault>> {
    let bytes = std::fs::read(path)?;
    Ok(verify_chain_bytes(genesis, &bytes))
}

struct Verifier<'a> {
    genesis: &'a GenesisConfig,
    chain: Option<Chain>,
}

impl<'a> Verifier<'a> {
    fn new(genesis: &'a GenesisConfig) -> Result<Self, ChainFault> {
        genesis.validate().map_err(|e| ChainFault {
            height: 0,
            reason: FaultReason::InvalidGenesisConfig(e),
        })?;
        Ok(Verifier {
            genesis,
            chain: None,
        })
    }

    fn position(&self) -> u64 {
        self.chain.as_ref().map_or(0, |c| c.blocks.len() as u64)
    }

    fn push(&mut self, block: &Block) -> Result<(), ChainFault> {
        let height = self.position();
        match &mut self.chain {
            None => {
                if *block != genesis_block(self.genesis) {
                    return Err(ChainFault {
                        height,
                        reason: FaultReason::GenesisMismatch,
                    });
                }
                self.chain = Some(Chain::new(self.genesis.clone()).expect("validated"));
            }
            Some(chain) => {
                chain.import_block(block).map_err(|e| ChainFault {
                    height,
                    reason: FaultReason::Rejected(e),
                })?;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Chain, ChainFault> {
        self.chain.ok_or(ChainFault {
            height: 0,
            reason: FaultReason::Missing,
        })
    }
}
