use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::genesis::GenesisConfig;
use super::tx::{Transaction, TxError};
use crate::account::AccountId;
use crate::codec::Writer;
use crate::contract::{ContractState, Output};
use crate::hash::Hash32;

/// Outcome of one applied transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_hash: Hash32,
    pub sender: AccountId,
    pub nonce: u64,
    pub op: String,
    pub ok: bool,
    /// `OK` or the contract error code.
    pub code: String,
    /// Empty on success, otherwise the guard's message.
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Output>,
}

/// Contract state plus the ledger's per-account nonces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerState {
    chain_id: String,
    pub contract: ContractState,
    nonces: BTreeMap<AccountId, u64>,
    genesis_accounts: BTreeSet<AccountId>,
}

impl LedgerState {
    pub fn from_genesis(genesis: &GenesisConfig) -> Self {
        LedgerState {
            chain_id: genesis.chain_id.clone(),
            contract: genesis.initial_contract_state(),
            nonces: BTreeMap::new(),
            genesis_accounts: genesis.known_accounts().collect(),
        }
    }

    pub fn chain_id(&self) -> &str {
        &self.chain_id
    }

    /// Next nonce expected from `account`.
    pub fn nonce(&self, account: &AccountId) -> u64 {
        self.nonces.get(account).copied().unwrap_or(0)
    }

    /// Whether the ledger accepts transactions from `account`: genesis
    /// accounts and holders of a contract role.
    pub fn is_known(&self, account: &AccountId) -> bool {
        self.genesis_accounts.contains(account) || self.contract.role(account).is_some()
    }

    /// Signature, chain, sender and nonce checks shared by mempool
    /// admission and block application.
    pub fn check_admissible(&self, tx: &Transaction) -> Result<(), TxError> {
        if tx.chain_id != self.chain_id {
            return Err(TxError::WrongChain {
                expected: self.chain_id.clone(),
                got: tx.chain_id.clone(),
            });
        }
        tx.verify_signature()?;
        if !self.is_known(&tx.sender) {
            return Err(TxError::UnknownSender(tx.sender));
        }
        Ok(())
    }

    /// Applies one transaction. Rejections leave the state untouched; a
    /// contract error still consumes the nonce and is reported in the
    /// receipt.
    pub fn apply_transaction(&mut self, tx: &Transaction) -> Result<Receipt, TxError> {
        self.check_admissible(tx)?;
        let expected = self.nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(TxError::BadNonce {
                expected,
                got: tx.nonce,
            });
        }
        self.nonces.insert(tx.sender, expected + 1);
        let outcome = self.contract.execute(&tx.sender, tx.value, &tx.call);
        let (ok, code, message, output) = match outcome {
            Ok(out) => (true, "OK".to_string(), String::new(), Some(out)),
            Err(e) => (false, e.code().to_string(), e.message(), None),
        };
        Ok(Receipt {
            tx_hash: tx.hash(),
            sender: tx.sender,
            nonce: tx.nonce,
            op: tx.call.name().to_string(),
            ok,
            code,
            message,
            output,
        })
    }

    pub fn state_root(&self) -> Hash32 {
        let mut w = Writer::with_tag(b"medledger/state/v1");
        self.contract.encode_canonical(&mut w);
        w.raw(b"nonces").u64(self.nonces.len() as u64);
        for (account, nonce) in &self.nonces {
            w.account(account).u64(*nonce);
        }
        w.digest()
    }
}
