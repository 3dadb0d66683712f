//! FIFO pool of admitted, not yet committed transactions.

use std::collections::{BTreeMap, HashSet, VecDeque};

use super::state::LedgerState;
use super::tx::{Transaction, TxError};
use crate::account::AccountId;
use crate::hash::Hash32;

#[derive(Debug, Default, Clone)]
pub struct Mempool {
    queue: VecDeque<Transaction>,
    hashes: HashSet<Hash32>,
    /// Next admissible nonce per sender with pending transactions.
    next_nonce: BTreeMap<AccountId, u64>,
}

impl Mempool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn contains(&self, hash: &Hash32) -> bool {
        self.hashes.contains(hash)
    }

    pub fn expected_nonce(&self, state: &LedgerState, sender: &AccountId) -> u64 {
        self.next_nonce
            .get(sender)
            .copied()
            .unwrap_or_else(|| state.nonce(sender))
    }

    /// Admits a transaction whose nonce directly follows the sender's
    /// committed and pending transactions.
    pub fn admit(&mut self, tx: Transaction, state: &LedgerState) -> Result<Hash32, TxError> {
        state.check_admissible(&tx)?;
        let hash = tx.hash();
        if self.hashes.contains(&hash) {
            return Err(TxError::Duplicate);
        }
        let expected = self.expected_nonce(state, &tx.sender);
        if tx.nonce != expected {
            return Err(TxError::BadNonce {
                expected,
                got: tx.nonce,
            });
        }
        self.next_nonce.insert(tx.sender, expected + 1);
        self.hashes.insert(hash);
        self.queue.push_back(tx);
        Ok(hash)
    }

    /// Pending transactions in arrival order.
    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.queue.iter()
    }

    /// Drops transactions that the new committed state has consumed or made
    /// unusable (nonce below the committed nonce).
    pub fn prune(&mut self, state: &LedgerState) {
        self.queue.retain(|tx| tx.nonce >= state.nonce(&tx.sender));
        self.hashes = self.queue.iter().map(Transaction::hash).collect();
        self.next_nonce.clear();
        for tx in &self.queue {
            let next = self.next_nonce.entry(tx.sender).or_insert(0);
            *next = (*next).max(tx.nonce + 1);
        }
    }
}
