//! Core of a permissioned healthcare ledger: the contract state machine, the
//! content-addressed document store and the Proof-of-Authority chain.

pub mod account;
pub mod codec;
pub mod contract;
pub mod hash;
pub mod ledger;
pub mod store;

pub use account::{AccountId, Keypair, PublicKey, Signature};
pub use hash::{ContentHash, Hash32};
