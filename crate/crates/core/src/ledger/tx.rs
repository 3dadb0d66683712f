//! Signed transactions.
//!
//! Signing payload (all integers big-endian):
//!
//! ```text
//! "MLTX" 0x01
//! chain_id      u32 length + UTF-8
//! sender        20 bytes
//! public_key    32 bytes
//! nonce         u64
//! value         u128
//! call          opcode u8, then arguments in declaration order
//!               (account = 20 bytes, integer = fixed width,
//!                string = u32 length + UTF-8, content hash = u32 length 32 + digest)
//! ```
//!
//! The signature is Ed25519 over the payload; the transaction hash is
//! SHA-256 of the payload followed by the 64 signature bytes.

use serde::{Deserialize, Serialize};

use crate::account::{AccountId, Keypair, PublicKey, Signature};
use crate::codec::Writer;
use crate::contract::{Balance, Call};
use crate::hash::Hash32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub chain_id: String,
    pub sender: AccountId,
    pub public_key: PublicKey,
    pub nonce: u64,
    #[serde(with = "crate::codec::decimal_u128")]
    pub value: Balance,
    pub call: Call,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TxError {
    #[error("malformed transaction: {0}")]
    Malformed(String),
    #[error("unknown operation: {0}")]
    UnknownOperation(String),
    #[error("signature does not verify")]
    BadSignature,
    #[error("transaction is for chain {got:?}, expected {expected:?}")]
    WrongChain { expected: String, got: String },
    #[error("bad nonce: expected {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("transaction already pending")]
    Duplicate,
    #[error("sender {0} is not a registered account")]
    UnknownSender(AccountId),
}

impl TxError {
    pub fn code(&self) -> &'static str {
        match self {
            TxError::Malformed(_) => "MALFORMED",
            TxError::UnknownOperation(_) => "UNKNOWN_OPERATION",
            TxError::BadSignature => "BAD_SIGNATURE",
            TxError::WrongChain { .. } => "WRONG_CHAIN",
            TxError::BadNonce { .. } => "BAD_NONCE",
            TxError::Duplicate => "DUPLICATE",
            TxError::UnknownSender(_) => "NOT_REGISTERED",
        }
    }
}

impl Transaction {
    pub fn sign(chain_id: &str, key: &Keypair, nonce: u64, value: Balance, call: Call) -> Self {
        let mut tx = Transaction {
            chain_id: chain_id.to_string(),
            sender: key.account(),
            public_key: key.public(),
            nonce,
            value,
            call,
            signature: Signature::EMPTY,
        };
        tx.signature = key.sign(&tx.signing_bytes());
        tx
    }

    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(b"MLTX");
        w.u8(1)
            .str(&self.chain_id)
            .account(&self.sender)
            .public_key(&self.public_key)
            .u64(self.nonce)
            .u128(self.value);
        self.call.encode(&mut w);
        w.finish()
    }

    pub fn hash(&self) -> Hash32 {
        let mut w = Writer::new();
        w.raw(&self.signing_bytes()).signature(&self.signature);
        w.digest()
    }

    /// Checks the sender is derived from the embedded key and the signature
    /// covers the payload.
    pub fn verify_signature(&self) -> Result<(), TxError> {
        if self.public_key.account() != self.sender {
            return Err(TxError::BadSignature);
        }
        if !self
            .public_key
            .verify(&self.signing_bytes(), &self.signature)
        {
            return Err(TxError::BadSignature);
        }
        Ok(())
    }

    /// Parses the JSON wire form, separating unknown operations from other
    /// malformed input.
    pub fn from_json(bytes: &[u8]) -> Result<Self, TxError> {
        serde_json::from_slice(bytes).map_err(|e| {
            let msg = e.to_string();
            if msg.contains("unknown variant") {
                TxError::UnknownOperation(msg)
            } else {
                TxError::Malformed(msg)
            }
        })
    }
}
