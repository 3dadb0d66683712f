//! Guard predicates evaluated before contract operations run.
//!
//! Each [`GuardId`] is a pure predicate over committed state. Operations call
//! the same predicates through [`ContractState::require`], so the catalog
//! exposed by [`ContractState::evaluate_guard`] is exactly what the
//! operations enforce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::error::ContractError;
use super::state::ContractState;
use super::types::Role;
use crate::account::AccountId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardId {
    Checkp,
    Checkpe,
    Recexist,
    Allowins,
    Checkd,
    Checkde,
    Hospitalreg,
    Hospitalexists,
    Recordexist,
    Icompreg,
    Icompexists,
    Icustomer,
    Payrequire,
    Phcompreg,
    Phcompexists,
    Isall,
}

impl GuardId {
    pub const ALL: [GuardId; 16] = [
        GuardId::Checkp,
        GuardId::Checkpe,
        GuardId::Recexist,
        GuardId::Allowins,
        GuardId::Checkd,
        GuardId::Checkde,
        GuardId::Hospitalreg,
        GuardId::Hospitalexists,
        GuardId::Recordexist,
        GuardId::Icompreg,
        GuardId::Icompexists,
        GuardId::Icustomer,
        GuardId::Payrequire,
        GuardId::Phcompreg,
        GuardId::Phcompexists,
        GuardId::Isall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GuardId::Checkp => "checkp",
            GuardId::Checkpe => "checkpe",
            GuardId::Recexist => "recexist",
            GuardId::Allowins => "allowins",
            GuardId::Checkd => "checkd",
            GuardId::Checkde => "checkde",
            GuardId::Hospitalreg => "hospitalreg",
            GuardId::Hospitalexists => "hospitalexists",
            GuardId::Recordexist => "recordexist",
            GuardId::Icompreg => "icompreg",
            GuardId::Icompexists => "icompexists",
            GuardId::Icustomer => "icustomer",
            GuardId::Payrequire => "payrequire",
            GuardId::Phcompreg => "phcompreg",
            GuardId::Phcompexists => "phcompexists",
            GuardId::Isall => "isall",
        }
    }

    pub fn failure_message(self) -> String {
        ContractError::from_guard(self).message()
    }
}

impl fmt::Display for GuardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GuardId {
    type Err = GuardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GuardId::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| GuardError::UnknownGuard(s.to_string()))
    }
}

/// Strict mode tightens two predicates relative to the literal modifier
/// listings; `Literal` restores them for differential testing:
///
/// * `recexist` admits record id 0 (`n <= record_count` instead of
///   `1 <= n <= record_count`);
/// * `icustomer` always passes, and raising a claim does not require a
///   customer link with the chosen insurer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardMode {
    #[default]
    Strict,
    Literal,
}

/// Arguments a guard inspects. Which fields a guard reads is listed on
/// [`ContractState::evaluate_guard`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardContext {
    pub account: Option<AccountId>,
    pub counterparty: Option<AccountId>,
    pub record_id: Option<u64>,
}

impl GuardContext {
    pub fn account(account: AccountId) -> Self {
        GuardContext {
            account: Some(account),
            ..Default::default()
        }
    }

    pub fn pair(account: AccountId, counterparty: AccountId) -> Self {
        GuardContext {
            account: Some(account),
            counterparty: Some(counterparty),
            record_id: None,
        }
    }

    pub fn record(account: AccountId, record_id: u64) -> Self {
        GuardContext {
            account: Some(account),
            counterparty: None,
            record_id: Some(record_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuardError {
    #[error("unknown guard {0:?}")]
    UnknownGuard(String),
    #[error("guard {guard} needs context field `{field}`")]
    MissingContext { guard: GuardId, field: &'static str },
}

impl ContractState {
    /// Evaluates one guard without side effects.
    ///
    /// | guard | `account` | `counterparty` | `record_id` |
    /// |---|---|---|---|
    /// | checkp, checkpe, allowins | patient | | |
    /// | checkd, checkde | doctor | | |
    /// | hospitalreg, hospitalexists | hospital | | |
    /// | icompreg, icompexists | insurer | | |
    /// | phcompreg, phcompexists | pharmacy | | |
    /// | recexist | patient | | record |
    /// | recordexist | patient | doctor | |
    /// | icustomer, payrequire | insurer | patient | |
    /// | isall | patient | pharmacy | |
    pub fn evaluate_guard(&self, guard: GuardId, ctx: &GuardContext) -> Result<bool, GuardError> {
        let account = ctx.account.ok_or(GuardError::MissingContext {
            guard,
            field: "account",
        })?;
        let counterparty = || {
            ctx.counterparty.ok_or(GuardError::MissingContext {
                guard,
                field: "counterparty",
            })
        };
        Ok(match guard {
            GuardId::Checkp => !self.has_role(&account, Role::Patient),
            GuardId::Checkpe => self.has_role(&account, Role::Patient),
            GuardId::Checkd => !self.has_role(&account, Role::Doctor),
            GuardId::Checkde => self.has_role(&account, Role::Doctor),
            GuardId::Hospitalreg => !self.has_role(&account, Role::Hospital),
            GuardId::Hospitalexists => self.has_role(&account, Role::Hospital),
            GuardId::Icompreg => !self.has_role(&account, Role::Insurer),
            GuardId::Icompexists => self.has_role(&account, Role::Insurer),
            GuardId::Phcompreg => !self.has_role(&account, Role::Pharmacy),
            GuardId::Phcompexists => self.has_role(&account, Role::Pharmacy),
            GuardId::Allowins => self.patient(&account).is_some_and(|p| p.insured),
            GuardId::Recexist => {
                let n = ctx.record_id.ok_or(GuardError::MissingContext {
                    guard,
                    field: "record_id",
                })?;
                let count = self.record_count_of(&account);
                match self.mode() {
                    GuardMode::Strict => (1..=count).contains(&n),
                    GuardMode::Literal => n <= count,
                }
            }
            GuardId::Recordexist => {
                let doctor = counterparty()?;
                let count = self.record_count_of(&account);
                count >= 1 && self.record_slot(&account, count).doctor == doctor
            }
            GuardId::Icustomer => {
                let patient = counterparty()?;
                match self.mode() {
                    GuardMode::Strict => self.link(&patient, &account).is_customer,
                    GuardMode::Literal => true,
                }
            }
            GuardId::Payrequire => {
                let patient = counterparty()?;
                self.link(&patient, &account).flag_raised
            }
            GuardId::Isall => {
                let pharmacy = counterparty()?;
                self.grant(&account, &pharmacy).allowed
            }
        })
    }

    /// Runs a guard on behalf of an operation, mapping failure to the
    /// guard's error.
    pub(crate) fn require(&self, guard: GuardId, ctx: GuardContext) -> Result<(), ContractError> {
        match self.evaluate_guard(guard, &ctx) {
            Ok(true) => Ok(()),
            Ok(false) => Err(ContractError::from_guard(guard)),
            Err(e) => panic!("operation passed incomplete guard context: {e}"),
        }
    }
}
