use serde::{Deserialize, Serialize};

use super::guard::GuardId;
use super::types::Role;

/// Failure of a contract operation. Every variant has a stable
/// machine-readable [`code`](ContractError::code) and a human message; guard
/// failures reuse the exact message of the guard that rejected the call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ContractError {
    #[error("Not Administrator")]
    NotAdministrator,
    #[error("Already Registered")]
    AlreadyRegistered,
    /// The named role's registration was required and missing. `None` means
    /// the account holds no role at all.
    #[error("Not Registered")]
    NotRegistered(Option<Role>),
    #[error("Not Registered")]
    HospitalNotRegistered,
    #[error("Not Valid")]
    InvalidRecordId,
    #[error("Don't Have Insurance")]
    NotInsured,
    #[error("Record Don't Exist")]
    RecordDoesNotExist,
    #[error("Not a customer")]
    NotACustomer,
    #[error("Request Not Raised")]
    RequestNotRaised,
    #[error("Not Allowed")]
    NotAllowed,
    #[error("Transaction Unsucessful")]
    InsufficientFunds,
    #[error("Already Set")]
    AlreadySet,
    #[error("Arithmetic Overflow")]
    Overflow,
    #[error("Value Not Accepted")]
    ValueNotAccepted,
}

impl ContractError {
    pub fn code(&self) -> &'static str {
        match self {
            ContractError::NotAdministrator => "NOT_ADMINISTRATOR",
            ContractError::AlreadyRegistered => "ALREADY_REGISTERED",
            ContractError::NotRegistered(_) => "NOT_REGISTERED",
            ContractError::HospitalNotRegistered => "HOSPITAL_NOT_REGISTERED",
            ContractError::InvalidRecordId => "INVALID_RECORD_ID",
            ContractError::NotInsured => "NOT_INSURED",
            ContractError::RecordDoesNotExist => "RECORD_DOES_NOT_EXIST",
            ContractError::NotACustomer => "NOT_A_CUSTOMER",
            ContractError::RequestNotRaised => "REQUEST_NOT_RAISED",
            ContractError::NotAllowed => "NOT_ALLOWED",
            ContractError::InsufficientFunds => "INSUFFICIENT_FUNDS",
            ContractError::AlreadySet => "ALREADY_SET",
            ContractError::Overflow => "OVERFLOW",
            ContractError::ValueNotAccepted => "VALUE_NOT_ACCEPTED",
        }
    }

    pub fn message(&self) -> String {
        self.to_string()
    }

    /// The error raised when `guard` rejects a call.
    pub fn from_guard(guard: GuardId) -> Self {
        use GuardId::*;
        match guard {
            Checkp | Checkd | Hospitalreg | Icompreg | Phcompreg => {
                ContractError::AlreadyRegistered
            }
            Checkpe => ContractError::NotRegistered(Some(Role::Patient)),
            Checkde => ContractError::NotRegistered(Some(Role::Doctor)),
            Hospitalexists => ContractError::NotRegistered(Some(Role::Hospital)),
            Icompexists => ContractError::NotRegistered(Some(Role::Insurer)),
            Phcompexists => ContractError::NotRegistered(Some(Role::Pharmacy)),
            Recexist => ContractError::InvalidRecordId,
            Allowins => ContractError::NotInsured,
            Recordexist => ContractError::RecordDoesNotExist,
            Icustomer => ContractError::NotACustomer,
            Payrequire => ContractError::RequestNotRaised,
            Isall => ContractError::NotAllowed,
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            code: self.code().to_string(),
            message: self.message(),
        }
    }
}

/// Serializable `{code, message}` pair carried in receipts and HTTP bodies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub code: String,
    pub message: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_messages_match_modifier_strings() {
        let expect = [
            (GuardId::Checkp, "Already Registered"),
            (GuardId::Checkpe, "Not Registered"),
            (GuardId::Recexist, "Not Valid"),
            (GuardId::Allowins, "Don't Have Insurance"),
            (GuardId::Checkd, "Already Registered"),
            (GuardId::Checkde, "Not Registered"),
            (GuardId::Hospitalreg, "Already Registered"),
            (GuardId::Hospitalexists, "Not Registered"),
            (GuardId::Recordexist, "Record Don't Exist"),
            (GuardId::Icompreg, "Already Registered"),
            (GuardId::Icompexists, "Not Registered"),
            (GuardId::Icustomer, "Not a customer"),
            (GuardId::Payrequire, "Request Not Raised"),
            (GuardId::Phcompreg, "Already Registered"),
            (GuardId::Phcompexists, "Not Registered"),
            (GuardId::Isall, "Not Allowed"),
        ];
        for (guard, msg) in expect {
            assert_eq!(ContractError::from_guard(guard).message(), msg, "{guard:?}");
            assert_eq!(guard.failure_message(), msg);
        }
    }

    #[test]
    fn payment_failure_keeps_literal_message() {
        assert_eq!(
            ContractError::InsufficientFunds.message(),
            "Transaction Unsucessful"
        );
    }
}
