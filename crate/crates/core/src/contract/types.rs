use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::account::AccountId;
use crate::hash::{optional_content_hash, ContentHash};

/// Token amount in base units. One token is [`TOKEN`] base units.
pub type Balance = u128;

pub const TOKEN: Balance = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Administrator,
    Patient,
    Doctor,
    Hospital,
    Insurer,
    Pharmacy,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Administrator,
        Role::Patient,
        Role::Doctor,
        Role::Hospital,
        Role::Insurer,
        Role::Pharmacy,
    ];

    pub fn code(self) -> u8 {
        match self {
            Role::Administrator => 1,
            Role::Patient => 2,
            Role::Doctor => 3,
            Role::Hospital => 4,
            Role::Insurer => 5,
            Role::Pharmacy => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Administrator => "administrator",
            Role::Patient => "patient",
            Role::Doctor => "doctor",
            Role::Hospital => "hospital",
            Role::Insurer => "insurer",
            Role::Pharmacy => "pharmacy",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub age: u32,
    pub gender: String,
    /// Number of records ever created for this patient. Never decreases.
    pub record_count: u64,
    pub insured: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoctorProfile {
    pub name: String,
    pub hospital: AccountId,
    pub specialization: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedicalRecord {
    pub record_id: u64,
    pub hospital: AccountId,
    pub doctor: AccountId,
    pub admission_date: u64,
    pub discharge_date: u64,
    #[serde(with = "optional_content_hash")]
    pub prescription: Option<ContentHash>,
    #[serde(with = "optional_content_hash")]
    pub bill: Option<ContentHash>,
}

impl MedicalRecord {
    /// Default contents of a slot that was never written.
    pub fn unwritten(record_id: u64) -> Self {
        MedicalRecord {
            record_id,
            hospital: AccountId::ZERO,
            doctor: AccountId::ZERO,
            admission_date: 0,
            discharge_date: 0,
            prescription: None,
            bill: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PharmacyGrant {
    pub record_id: u64,
    pub allowed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InsuranceLink {
    pub is_customer: bool,
    pub flag_raised: bool,
    pub claimed_record_id: u64,
}
