//! A live single-process node: mempool, block production with the
//! authority keys it holds, the chain file and the document store.
//!
//! Writers serialize on one mutex. Readers take an `Arc` to the last
//! committed [`Snapshot`] and never block block production.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use medledger_core::ledger::{
    append_block, verify_chain_file, Block, Chain, ChainFault, GenesisConfig, LedgerState, Mempool,
    Receipt, Transaction, TxError,
};
use medledger_core::store::BlobStore;
use medledger_core::{AccountId, Hash32, Keypair};
use parking_lot::{Mutex, RwLock};

use crate::auth::{AuthError, ReadAuth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    /// Block timestamps follow the wall clock.
    System,
    /// Every block carries the earliest timestamp its slot allows.
    Earliest,
}

pub struct NodeConfig {
    pub genesis: GenesisConfig,
    /// Authority keys this node may seal with.
    pub keys: Vec<Keypair>,
    pub chain_file: Option<PathBuf>,
    pub store: BlobStore,
    pub clock: Clock,
    pub max_block_txs: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error("invalid genesis: {0}")]
    Genesis(#[from] medledger_core::ledger::GenesisError),
    #[error("chain file does not verify at {0}")]
    Chain(ChainFault),
    #[error("node holds no authority key for this chain")]
    NotAnAuthority,
    #[error("chain file: {0}")]
    Io(#[from] std::io::Error),
}

/// Committed state as seen by readers.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub height: u64,
    pub head_hash: Hash32,
    pub timestamp: u64,
    pub proposer: AccountId,
    pub state_root: Hash32,
    pub state: LedgerState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxStatus {
    Pending,
    Committed { height: u64, receipt: Box<Receipt> },
    Unknown,
}

struct Inner {
    chain: Chain,
    mempool: Mempool,
    receipts: HashMap<Hash32, (u64, Receipt)>,
}

pub struct LiveNode {
    inner: Mutex<Inner>,
    snapshot: RwLock<Arc<Snapshot>>,
    read_nonces: Mutex<BTreeMap<AccountId, u64>>,
    keys: Vec<Keypair>,
    chain_file: Option<PathBuf>,
    store: BlobStore,
    clock: Clock,
    max_block_txs: usize,
}

fn snapshot_of(chain: &Chain) -> Snapshot {
    let tip = chain.tip();
    Snapshot {
        height: tip.height(),
        head_hash: tip.hash(),
        timestamp: tip.header.timestamp,
        proposer: tip.header.proposer,
        state_root: tip.header.state_root,
        state: chain.state().clone(),
    }
}

fn receipts_index(chain: &Chain) -> HashMap<Hash32, (u64, Receipt)> {
    (0..=chain.height())
        .flat_map(|h| {
            chain
                .receipts(h)
                .unwrap_or_default()
                .iter()
                .map(move |r| (r.tx_hash, (h, r.clone())))
        })
        .collect()
}

impl LiveNode {
    /// Opens the node, replaying and verifying an existing chain file or
    /// starting one at genesis.
    pub fn open(config: NodeConfig) -> Result<Self, NodeError> {
        config.genesis.validate()?;
        let authorities = config.genesis.authority_accounts();
        let keys: Vec<Keypair> = config
            .keys
            .into_iter()
            .filter(|k| authorities.contains(&k.account()))
            .collect();
        if keys.is_empty() {
            return Err(NodeError::NotAnAuthority);
        }
        let chain = match &config.chain_file {
            Some(path) if path.exists() => {
                verify_chain_file(&config.genesis, path)?.map_err(NodeError::Chain)?
            }
            Some(path) => {
                let chain = Chain::new(config.genesis.clone())?;
                append_block(path, chain.tip())?;
                chain
            }
            None => Chain::new(config.genesis.clone())?,
        };
        let snapshot = Arc::new(snapshot_of(&chain));
        Ok(LiveNode {
            inner: Mutex::new(Inner {
                receipts: receipts_index(&chain),
                chain,
                mempool: Mempool::new(),
            }),
            snapshot: RwLock::new(snapshot),
            read_nonces: Mutex::new(BTreeMap::new()),
            keys,
            chain_file: config.chain_file,
            store: config.store,
            clock: config.clock,
            max_block_txs: config.max_block_txs,
        })
    }

    pub fn chain_id(&self) -> String {
        self.snapshot().state.chain_id().to_string()
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().clone()
    }

    pub fn store(&self) -> &BlobStore {
        &self.store
    }

    pub fn block(&self, height: u64) -> Option<Block> {
        self.inner.lock().chain.block(height).cloned()
    }

    pub fn pending(&self) -> usize {
        self.inner.lock().mempool.len()
    }

    pub fn block_interval_secs(&self) -> u64 {
        self.inner.lock().chain.genesis().block_interval_secs
    }

    pub fn submit(&self, tx: Transaction) -> Result<Hash32, TxError> {
        let mut inner = self.inner.lock();
        let Inner { chain, mempool, .. } = &mut *inner;
        mempool.admit(tx, chain.state())
    }

    pub fn tx_status(&self, hash: &Hash32) -> TxStatus {
        let inner = self.inner.lock();
        if let Some((height, receipt)) = inner.receipts.get(hash) {
            TxStatus::Committed {
                height: *height,
                receipt: Box::new(receipt.clone()),
            }
        } else if inner.mempool.contains(hash) {
            TxStatus::Pending
        } else {
            TxStatus::Unknown
        }
    }

    /// Seals and commits one block from the mempool using the first round
    /// whose proposer key this node holds. Returns the new height, or
    /// `None` when nothing is pending.
    pub fn produce_block(&self) -> Result<Option<u64>, NodeError> {
        let mut inner = self.inner.lock();
        if inner.mempool.is_empty() {
            return Ok(None);
        }
        let Inner {
            chain,
            mempool,
            receipts,
        } = &mut *inner;
        let height = chain.height() + 1;
        let n = chain.genesis().authorities.len() as u32;
        let (round, key) = (0..n)
            .find_map(|r| {
                let expected = chain.genesis().proposer_for(height, r);
                self.keys
                    .iter()
                    .find(|k| k.public() == *expected)
                    .map(|k| (r, k))
            })
            .ok_or(NodeError::NotAnAuthority)?;
        let earliest = chain.earliest_timestamp(round);
        let timestamp = match self.clock {
            Clock::Earliest => earliest,
            Clock::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
                .max(earliest),
        };
        let applied = chain
            .build_block(mempool.iter(), round, timestamp, key, self.max_block_txs)
            .expect("proposer and timestamp chosen to be valid");
        if let Some(path) = &self.chain_file {
            append_block(path, &applied.block)?;
        }
        for r in &applied.receipts {
            receipts.insert(r.tx_hash, (height, r.clone()));
        }
        chain.commit(applied);
        mempool.prune(chain.state());
        *self.snapshot.write() = Arc::new(snapshot_of(chain));
        tracing::info!(height, round, "committed block");
        Ok(Some(height))
    }

    /// Verifies read headers for `method path` and consumes the nonce.
    pub fn authenticate(
        &self,
        auth: &ReadAuth,
        method: &str,
        path: &str,
    ) -> Result<AccountId, AuthError> {
        auth.verify(&self.chain_id(), method, path)?;
        let mut nonces = self.read_nonces.lock();
        let last = nonces.get(&auth.account).copied();
        if let Some(last) = last {
            if auth.nonce <= last {
                return Err(AuthError::StaleNonce {
                    last,
                    got: auth.nonce,
                });
            }
        }
        nonces.insert(auth.account, auth.nonce);
        Ok(auth.account)
    }
}
