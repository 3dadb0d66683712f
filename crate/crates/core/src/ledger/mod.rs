//! Transactions, blocks, the replicated ledger state and chain verification.

mod block;
mod chain;
mod genesis;
mod mempool;
mod state;
mod tx;

pub use block::{tx_root, Block, BlockHeader};
pub use chain::{
    append_block, genesis_block, verify_chain, verify_chain_bytes, verify_chain_file, AppliedBlock,
    BlockRejection, Chain, ChainFault, FaultReason, ProposeError,
};
pub use genesis::{GenesisConfig, GenesisError};
pub use mempool::Mempool;
pub use state::{LedgerState, Receipt};
pub use tx::{Transaction, TxError};
