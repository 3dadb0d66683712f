//! Roles, medical records, pharmacy grants, insurance claims and token
//! balances as a deterministic state machine.
//!
//! Operations take the calling account explicitly; the ledger supplies the
//! transaction signer. See [`Call`] for the full operation catalog.

mod call;
mod digest;
mod error;
mod guard;
mod state;
mod types;

#[cfg(test)]
mod tests;

pub use call::{Call, Output};
pub use error::{ContractError, ErrorReport};
pub use guard::{GuardContext, GuardError, GuardId, GuardMode};
pub use state::{ClaimView, ContractState, Demographics, RecordView};
pub use types::{
    Balance, DoctorProfile, InsuranceLink, MedicalRecord, PatientProfile, PharmacyGrant, Role,
    TOKEN,
};
