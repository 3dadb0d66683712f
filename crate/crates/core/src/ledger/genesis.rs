use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::account::{AccountId, PublicKey};
use crate::codec::Writer;
use crate::contract::{Balance, ContractState, GuardMode};
use crate::hash::Hash32;

/// Chain parameters fixed at genesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisConfig {
    pub chain_id: String,
    /// Unix seconds of the genesis block.
    pub genesis_time: u64,
    #[serde(default = "default_interval")]
    pub block_interval_secs: u64,
    /// Authority public keys in proposer order.
    pub authorities: Vec<PublicKey>,
    pub administrators: Vec<AccountId>,
    #[serde(default, with = "balance_map")]
    pub balances: BTreeMap<AccountId, Balance>,
    /// Chain-wide guard mode; see [`GuardMode`].
    #[serde(default)]
    pub permissive_guards: bool,
}

fn default_interval() -> u64 {
    2
}

mod balance_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::account::AccountId;

    #[derive(Serialize, Deserialize)]
    struct Amount(#[serde(with = "crate::codec::decimal_u128")] u128);

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<AccountId, u128>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let view: BTreeMap<String, Amount> =
            m.iter().map(|(k, v)| (k.to_string(), Amount(*v))).collect();
        view.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<AccountId, u128>, D::Error> {
        let view = BTreeMap::<String, Amount>::deserialize(d)?;
        view.into_iter()
            .map(|(k, v)| {
                k.parse::<AccountId>()
                    .map(|id| (id, v.0))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenesisError {
    #[error("authority set is empty")]
    NoAuthorities,
    #[error("authority {0} listed twice")]
    DuplicateAuthority(AccountId),
    #[error("block interval must be positive")]
    ZeroInterval,
    #[error("chain id must be non-empty")]
    EmptyChainId,
}

impl GenesisConfig {
    pub fn validate(&self) -> Result<(), GenesisError> {
        if self.chain_id.is_empty() {
            return Err(GenesisError::EmptyChainId);
        }
        if self.authorities.is_empty() {
            return Err(GenesisError::NoAuthorities);
        }
        if self.block_interval_secs == 0 {
            return Err(GenesisError::ZeroInterval);
        }
        let mut seen = std::collections::BTreeSet::new();
        for key in &self.authorities {
            if !seen.insert(key.account()) {
                return Err(GenesisError::DuplicateAuthority(key.account()));
            }
        }
        Ok(())
    }

    pub fn guard_mode(&self) -> GuardMode {
        if self.permissive_guards {
            GuardMode::Literal
        } else {
            GuardMode::Strict
        }
    }

    pub fn authority_accounts(&self) -> Vec<AccountId> {
        self.authorities.iter().map(PublicKey::account).collect()
    }

    /// Key of the authority entitled to seal `(height, round)`.
    pub fn proposer_for(&self, height: u64, round: u32) -> &PublicKey {
        let n = self.authorities.len() as u64;
        let slot = (height % n + u64::from(round) % n) % n;
        &self.authorities[slot as usize]
    }

    pub fn authority_key(&self, account: &AccountId) -> Option<&PublicKey> {
        self.authorities.iter().find(|k| k.account() == *account)
    }

    pub fn initial_contract_state(&self) -> ContractState {
        ContractState::genesis(
            self.guard_mode(),
            self.administrators.iter().copied(),
            self.balances.iter().map(|(a, b)| (*a, *b)),
        )
    }

    /// Accounts the ledger accepts transactions from before they hold a
    /// contract role: administrators, authorities and funded accounts.
    pub fn known_accounts(&self) -> impl Iterator<Item = AccountId> + '_ {
        self.administrators
            .iter()
            .copied()
            .chain(self.authority_accounts())
            .chain(self.balances.keys().copied())
    }

    /// Digest of the canonical encoding of this configuration; the genesis
    /// block links to it.
    pub fn hash(&self) -> Hash32 {
        let mut w = Writer::with_tag(b"medledger/genesis/v1");
        w.str(&self.chain_id)
            .u64(self.genesis_time)
            .u64(self.block_interval_secs)
            .u64(self.authorities.len() as u64);
        for key in &self.authorities {
            w.public_key(key);
        }
        w.u64(self.administrators.len() as u64);
        for admin in &self.administrators {
            w.account(admin);
        }
        w.u64(self.balances.len() as u64);
        for (account, amount) in &self.balances {
            w.account(account).u128(*amount);
        }
        w.bool(self.permissive_guards);
        w.digest()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::account::Keypair;

    fn config() -> GenesisConfig {
        let a = Keypair::from_seed("auth-0");
        let b = Keypair::from_seed("auth-1");
        GenesisConfig {
            chain_id: "test".into(),
            genesis_time: 1_700_000_000,
            block_interval_secs: 2,
            authorities: vec![a.public(), b.public()],
            administrators: vec![Keypair::from_seed("admin").account()],
            balances: [(a.account(), 10u128.pow(30))].into_iter().collect(),
            permissive_guards: false,
        }
    }

    #[test]
    fn json_round_trip_with_string_amounts() {
        let cfg = config();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"1000000000000000000000000000000\""));
        let back: GenesisConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn round_robin_schedule() {
        let cfg = config();
        assert_eq!(cfg.proposer_for(0, 0), &cfg.authorities[0]);
        assert_eq!(cfg.proposer_for(1, 0), &cfg.authorities[1]);
        assert_eq!(cfg.proposer_for(2, 0), &cfg.authorities[0]);
        assert_eq!(cfg.proposer_for(1, 1), &cfg.authorities[0]);
    }

    #[test]
    fn validation() {
        let mut cfg = config();
        assert!(cfg.validate().is_ok());
        cfg.authorities.push(cfg.authorities[0]);
        assert!(matches!(
            cfg.validate(),
            Err(GenesisError::DuplicateAuthority(_))
        ));
        cfg.authorities.clear();
        assert_eq!(cfg.validate(), Err(GenesisError::NoAuthorities));
    }

    #[test]
    fn any_field_change_moves_the_hash() {
        let base = config();
        let mut other = base.clone();
        other.permissive_guards = true;
        assert_ne!(base.hash(), other.hash());
        let mut other = base.clone();
        other.genesis_time += 1;
        assert_ne!(base.hash(), other.hash());
    }
}
