//! Blocks and their sealed headers.
//!
//! Header encoding for hashing and sealing:
//!
//! ```text
//! "MLBH" 0x01 chain_id(u32 len + UTF-8) height(u64) round(u32)
//! prev_hash(32) timestamp(u64) proposer(20) tx_root(32) state_root(32)
//! ```
//!
//! The block hash is SHA-256 of that encoding; the seal is the proposer's
//! Ed25519 signature over the same bytes.

use serde::{Deserialize, Serialize};

use super::tx::Transaction;
use crate::account::{AccountId, Keypair, PublicKey, Signature};
use crate::codec::Writer;
use crate::hash::Hash32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockHeader {
    pub chain_id: String,
    pub height: u64,
    /// Number of missed proposer slots at this height; the proposer is
    /// `authorities[(height + round) mod n]`.
    pub round: u32,
    pub prev_hash: Hash32,
    pub timestamp: u64,
    pub proposer: AccountId,
    pub tx_root: Hash32,
    pub state_root: Hash32,
}

impl BlockHeader {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(b"MLBH");
        w.u8(1)
            .str(&self.chain_id)
            .u64(self.height)
            .u32(self.round)
            .hash(&self.prev_hash)
            .u64(self.timestamp)
            .account(&self.proposer)
            .hash(&self.tx_root)
            .hash(&self.state_root);
        w.finish()
    }

    pub fn hash(&self) -> Hash32 {
        Hash32::of(&self.encode())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
    pub seal: Signature,
}

/// Commitment to the ordered transaction list.
pub fn tx_root(transactions: &[Transaction]) -> Hash32 {
    let mut w = Writer::with_tag(b"MLTR");
    w.u64(transactions.len() as u64);
    for tx in transactions {
        w.hash(&tx.hash());
    }
    w.digest()
}

impl Block {
    pub fn sealed(header: BlockHeader, transactions: Vec<Transaction>, key: &Keypair) -> Self {
        let seal = key.sign(&header.encode());
        Block {
            header,
            transactions,
            seal,
        }
    }

    pub fn hash(&self) -> Hash32 {
        self.header.hash()
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn seal_verifies(&self, key: &PublicKey) -> bool {
        key.verify(&self.header.encode(), &self.seal)
    }

    /// One-line JSON with object keys in sorted order; the chain file form.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("block serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Parses a chain-file line, refusing any text that is not exactly the
    /// canonical form of the block it decodes to.
    pub fn from_canonical_json(line: &[u8]) -> Result<Self, String> {
        let block: Block = serde_json::from_slice(line).map_err(|e| e.to_string())?;
        if block.to_canonical_json().as_bytes() != line {
            return Err("non-canonical block encoding".into());
        }
        Ok(block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block() -> Block {
        let key = Keypair::from_seed("auth");
        let header = BlockHeader {
            chain_id: "c".into(),
            height: 1,
            round: 0,
            prev_hash: Hash32::of(b"prev"),
            timestamp: 12,
            proposer: key.account(),
            tx_root: tx_root(&[]),
            state_root: Hash32::of(b"state"),
        };
        Block::sealed(header, vec![], &key)
    }

    #[test]
    fn seal_covers_header() {
        let b = block();
        let key = Keypair::from_seed("auth").public();
        assert!(b.seal_verifies(&key));
        let mut t = b.clone();
        t.header.timestamp += 1;
        assert!(!t.seal_verifies(&key));
        assert_ne!(t.hash(), b.hash());
    }

    #[test]
    fn canonical_json_is_strict() {
        let b = block();
        let line = b.to_canonical_json();
        assert_eq!(Block::from_canonical_json(line.as_bytes()).unwrap(), b);
        let spaced = line.replacen(':', ": ", 1);
        assert!(Block::from_canonical_json(spaced.as_bytes()).is_err());
        let upper = line.to_uppercase();
        assert!(Block::from_canonical_json(upper.as_bytes()).is_err());
    }

    #[test]
    fn tx_root_depends_on_order_and_count() {
        let k = Keypair::from_seed("s");
        let a = Transaction::sign("c", &k, 0, 0, crate::contract::Call::GetRecordCount);
        let b = Transaction::sign("c", &k, 1, 0, crate::contract::Call::GetRecordCount);
        assert_ne!(tx_root(&[a.clone(), b.clone()]), tx_root(&[b, a.clone()]));
        assert_ne!(tx_root(&[]), tx_root(&[a]));
    }
}
