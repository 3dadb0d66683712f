//! The healthcare contract state machine.
//!
//! Every write operation evaluates all of its guards before touching state,
//! so a failed call leaves the state exactly as it was.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::error::ContractError;
use super::guard::{GuardContext, GuardId, GuardMode};
use super::types::{
    Balance, DoctorProfile, InsuranceLink, MedicalRecord, PatientProfile, PharmacyGrant, Role,
};
use crate::account::AccountId;
use crate::hash::{optional_content_hash, ContentHash};

/// Fields a patient sees for one of their own records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordView {
    pub doctor: AccountId,
    pub admission_date: u64,
    pub discharge_date: u64,
    #[serde(with = "optional_content_hash")]
    pub prescription: Option<ContentHash>,
    #[serde(with = "optional_content_hash")]
    pub bill: Option<ContentHash>,
}

/// Fields an insurer sees for the claimed record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimView {
    #[serde(with = "optional_content_hash")]
    pub prescription: Option<ContentHash>,
    #[serde(with = "optional_content_hash")]
    pub bill: Option<ContentHash>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: u32,
    pub gender: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContractState {
    pub(crate) mode: GuardMode,
    pub(crate) roles: BTreeMap<AccountId, Role>,
    pub(crate) patients: BTreeMap<AccountId, PatientProfile>,
    pub(crate) records: BTreeMap<(AccountId, u64), MedicalRecord>,
    pub(crate) doctors: BTreeMap<AccountId, DoctorProfile>,
    /// Keyed by (patient, pharmacy).
    pub(crate) grants: BTreeMap<(AccountId, AccountId), PharmacyGrant>,
    /// Keyed by (patient, insurer).
    pub(crate) links: BTreeMap<(AccountId, AccountId), InsuranceLink>,
    /// Zero balances are never stored.
    pub(crate) balances: BTreeMap<AccountId, Balance>,
}

impl ContractState {
    pub fn new(mode: GuardMode) -> Self {
        ContractState {
            mode,
            ..Default::default()
        }
    }

    /// Initial state: the given administrators and funded accounts.
    pub fn genesis(
        mode: GuardMode,
        administrators: impl IntoIterator<Item = AccountId>,
        balances: impl IntoIterator<Item = (AccountId, Balance)>,
    ) -> Self {
        let mut state = Self::new(mode);
        for admin in administrators {
            state.roles.insert(admin, Role::Administrator);
        }
        for (account, amount) in balances {
            state.credit_unchecked(account, amount);
        }
        state
    }

    pub fn mode(&self) -> GuardMode {
        self.mode
    }

    // ----------------------------------------------------------------------
    // Plain accessors (unguarded, used by tooling, tests and digests)
    // ----------------------------------------------------------------------

    pub fn role(&self, account: &AccountId) -> Option<Role> {
        self.roles.get(account).copied()
    }

    pub fn has_role(&self, account: &AccountId, role: Role) -> bool {
        self.role(account) == Some(role)
    }

    pub fn patient(&self, account: &AccountId) -> Option<&PatientProfile> {
        self.patients.get(account)
    }

    pub fn doctor(&self, account: &AccountId) -> Option<&DoctorProfile> {
        self.doctors.get(account)
    }

    pub fn record(&self, patient: &AccountId, record_id: u64) -> Option<&MedicalRecord> {
        self.records.get(&(*patient, record_id))
    }

    pub fn records_of<'a>(
        &'a self,
        patient: &AccountId,
    ) -> impl Iterator<Item = &'a MedicalRecord> + 'a {
        let patient = *patient;
        self.records
            .range((patient, 0)..=(patient, u64::MAX))
            .map(|(_, r)| r)
    }

    pub fn grant(&self, patient: &AccountId, pharmacy: &AccountId) -> PharmacyGrant {
        self.grants
            .get(&(*patient, *pharmacy))
            .copied()
            .unwrap_or_default()
    }

    pub fn link(&self, patient: &AccountId, insurer: &AccountId) -> InsuranceLink {
        self.links
            .get(&(*patient, *insurer))
            .copied()
            .unwrap_or_default()
    }

    pub fn balance(&self, account: &AccountId) -> Balance {
        self.balances.get(account).copied().unwrap_or(0)
    }

    pub fn total_supply(&self) -> Balance {
        self.balances.values().sum()
    }

    pub fn accounts_with_roles(&self) -> impl Iterator<Item = (&AccountId, &Role)> {
        self.roles.iter()
    }

    /// Records visible to guards: only an active patient has any.
    pub(crate) fn record_count_of(&self, account: &AccountId) -> u64 {
        if !self.has_role(account, Role::Patient) {
            return 0;
        }
        self.patients.get(account).map_or(0, |p| p.record_count)
    }

    /// The stored record, or the default contents of a never-written slot.
    pub(crate) fn record_slot(&self, patient: &AccountId, record_id: u64) -> MedicalRecord {
        self.record(patient, record_id)
            .cloned()
            .unwrap_or_else(|| MedicalRecord::unwritten(record_id))
    }

    fn require_admin(&self, caller: &AccountId) -> Result<(), ContractError> {
        if self.has_role(caller, Role::Administrator) {
            Ok(())
        } else {
            Err(ContractError::NotAdministrator)
        }
    }

    fn require_unassigned(&self, account: &AccountId) -> Result<(), ContractError> {
        if self.roles.contains_key(account) {
            Err(ContractError::AlreadyRegistered)
        } else {
            Ok(())
        }
    }

    // ----------------------------------------------------------------------
    // Registration (administrator only)
    // ----------------------------------------------------------------------

    pub fn register_patient(
        &mut self,
        caller: &AccountId,
        patient: AccountId,
        age: u32,
        gender: &str,
    ) -> Result<(), ContractError> {
        self.require_admin(caller)?;
        self.require(GuardId::Checkp, GuardContext::account(patient))?;
        self.require_unassigned(&patient)?;
        self.roles.insert(patient, Role::Patient);
        // A returning patient keeps the record history from before removal.
        let record_count = self.patients.get(&patient).map_or(0, |p| p.record_count);
        self.patients.insert(
            patient,
            PatientProfile {
                age,
                gender: gender.to_string(),
                record_count,
                insured: false,
            },
        );
        Ok(())
    }

    pub fn register_doctor(
        &mut self,
        caller: &AccountId,
        doctor: AccountId,
        name: &str,
        hospital: AccountId,
        specialization: &str,
    ) -> Result<(), ContractError> {
        self.require_admin(caller)?;
        self.require(GuardId::Checkd, GuardContext::account(doctor))?;
        self.require_unassigned(&doctor)?;
        self.require(GuardId::Hospitalexists, GuardContext::account(hospital))
            .map_err(|_| ContractError::HospitalNotRegistered)?;
        self.roles.insert(doctor, Role::Doctor);
        self.doctors.insert(
            doctor,
            DoctorProfile {
                name: name.to_string(),
                hospital,
                specialization: specialization.to_string(),
            },
        );
        Ok(())
    }

    pub fn register_hospital(
        &mut self,
        caller: &AccountId,
        hospital: AccountId,
    ) -> Result<(), ContractError> {
        self.register_institution(caller, hospital, GuardId::Hospitalreg, Role::Hospital)
    }

    pub fn register_insurer(
        &mut self,
        caller: &AccountId,
        insurer: AccountId,
    ) -> Result<(), ContractError> {
        self.register_institution(caller, insurer, GuardId::Icompreg, Role::Insurer)
    }

    pub fn register_pharmacy(
        &mut self,
        caller: &AccountId,
        pharmacy: AccountId,
    ) -> Result<(), ContractError> {
        self.register_institution(caller, pharmacy, GuardId::Phcompreg, Role::Pharmacy)
    }

    fn register_institution(
        &mut self,
        caller: &AccountId,
        account: AccountId,
        guard: GuardId,
        role: Role,
    ) -> Result<(), ContractError> {
        self.require_admin(caller)?;
        self.require(guard, GuardContext::account(account))?;
        self.require_unassigned(&account)?;
        self.roles.insert(account, role);
        Ok(())
    }

    /// Clears the target's role and every permission naming it. Patient
    /// records stay in place.
    pub fn remove_stakeholder(
        &mut self,
        caller: &AccountId,
        target: AccountId,
    ) -> Result<(), ContractError> {
        self.require_admin(caller)?;
        let role = self
            .roles
            .remove(&target)
            .ok_or(ContractError::NotRegistered(None))?;
        match role {
            Role::Patient => {
                self.grants.retain(|(patient, _), _| *patient != target);
                self.links.retain(|(patient, _), _| *patient != target);
                if let Some(profile) = self.patients.get_mut(&target) {
                    profile.insured = false;
                }
            }
            Role::Doctor => {
                self.doctors.remove(&target);
            }
            Role::Insurer => {
                let customers: Vec<AccountId> = self
                    .links
                    .keys()
                    .filter(|(_, insurer)| *insurer == target)
                    .map(|(patient, _)| *patient)
                    .collect();
                self.links.retain(|(_, insurer), _| *insurer != target);
                for patient in customers {
                    self.refresh_insured(&patient);
                }
            }
            Role::Pharmacy => {
                self.grants.retain(|(_, pharmacy), _| *pharmacy != target);
            }
            Role::Hospital | Role::Administrator => {}
        }
        Ok(())
    }

    // ----------------------------------------------------------------------
    // Hospital
    // ----------------------------------------------------------------------

    /// Opens a new record and returns its id (records are numbered from 1).
    pub fn add_record(
        &mut self,
        caller: &AccountId,
        patient: AccountId,
        doctor: AccountId,
        admission_date: u64,
        discharge_date: u64,
    ) -> Result<u64, ContractError> {
        self.require(GuardId::Hospitalexists, GuardContext::account(*caller))?;
        self.require(GuardId::Checkpe, GuardContext::account(patient))?;
        self.require(GuardId::Checkde, GuardContext::account(doctor))?;
        let profile = self
            .patients
            .get_mut(&patient)
            .expect("registered patient has a profile");
        let record_id = profile
            .record_count
            .checked_add(1)
            .ok_or(ContractError::Overflow)?;
        profile.record_count = record_id;
        self.records.insert(
            (patient, record_id),
            MedicalRecord {
                record_id,
                hospital: *caller,
                doctor,
                admission_date,
                discharge_date,
                prescription: None,
                bill: None,
            },
        );
        Ok(record_id)
    }

    // ----------------------------------------------------------------------
    // Doctor
    // ----------------------------------------------------------------------

    /// Attaches a prescription to the patient's latest record, which must be
    /// assigned to the calling doctor.
    pub fn add_prescription(
        &mut self,
        caller: &AccountId,
        patient: AccountId,
        prescription: ContentHash,
    ) -> Result<(), ContractError> {
        self.require(GuardId::Checkde, GuardContext::account(*caller))?;
        self.require(GuardId::Recordexist, GuardContext::pair(patient, *caller))?;
        let latest = self.record_count_of(&patient);
        let record = self
            .records
            .get_mut(&(patient, latest))
            .expect("recordexist implies the latest record is stored");
        if record.prescription.is_some() {
            return Err(ContractError::AlreadySet);
        }
        record.prescription = Some(prescription);
        Ok(())
    }

    pub fn doctor_get_record(
        &self,
        caller: &AccountId,
        patient: AccountId,
        record_id: u64,
    ) -> Result<Option<ContentHash>, ContractError> {
        self.require(GuardId::Checkde, GuardContext::account(*caller))?;
        self.require(GuardId::Checkpe, GuardContext::account(patient))?;
        self.require(GuardId::Recexist, GuardContext::record(patient, record_id))?;
        Ok(self.record_slot(&patient, record_id).prescription)
    }

    pub fn doctor_get_patient(
        &self,
        caller: &AccountId,
        patient: AccountId,
    ) -> Result<Demographics, ContractError> {
        self.require(GuardId::Checkde, GuardContext::account(*caller))?;
        self.require(GuardId::Checkpe, GuardContext::account(patient))?;
        let p = &self.patients[&patient];
        Ok(Demographics {
            age: p.age,
            gender: p.gender.clone(),
        })
    }

    pub fn doctor_get_record_count(
        &self,
        caller: &AccountId,
        patient: AccountId,
    ) -> Result<u64, ContractError> {
        self.require(GuardId::Checkde, GuardContext::account(*caller))?;
        self.require(GuardId::Checkpe, GuardContext::account(patient))?;
        Ok(self.record_count_of(&patient))
    }

    // ----------------------------------------------------------------------
    // Patient
    // ----------------------------------------------------------------------

    pub fn get_record(
        &self,
        caller: &AccountId,
        record_id: u64,
    ) -> Result<RecordView, ContractError> {
        self.require(GuardId::Checkpe, GuardContext::account(*caller))?;
        self.require(GuardId::Recexist, GuardContext::record(*caller, record_id))?;
        let r = self.record_slot(caller, record_id);
        Ok(RecordView {
            doctor: r.doctor,
            admission_date: r.admission_date,
            discharge_date: r.discharge_date,
            prescription: r.prescription,
            bill: r.bill,
        })
    }

    pub fn get_record_count(&self, caller: &AccountId) -> Result<u64, ContractError> {
        self.require(GuardId::Checkpe, GuardContext::account(*caller))?;
        Ok(self.record_count_of(caller))
    }

    /// Unguarded token transfer from the caller.
    pub fn trigger_payment(
        &mut self,
        caller: &AccountId,
        beneficiary: AccountId,
        value: Balance,
    ) -> Result<(), ContractError> {
        self.transfer(caller, &beneficiary, value)
    }

    /// Grants one pharmacy access to one record. A later grant to the same
    /// pharmacy replaces the earlier one.
    pub fn allow_pharmacy(
        &mut self,
        caller: &AccountId,
        pharmacy: AccountId,
        record_id: u64,
    ) -> Result<(), ContractError> {
        self.require(GuardId::Recexist, GuardContext::record(*caller, record_id))?;
        self.require(GuardId::Phcompexists, GuardContext::account(pharmacy))?;
        self.grants.insert(
            (*caller, pharmacy),
            PharmacyGrant {
                record_id,
                allowed: true,
            },
        );
        Ok(())
    }

    /// Raises a payout request against one record.
    pub fn allow_insurer(
        &mut self,
        caller: &AccountId,
        insurer: AccountId,
        record_id: u64,
    ) -> Result<(), ContractError> {
        self.require(GuardId::Allowins, GuardContext::account(*caller))?;
        if self.mode == GuardMode::Strict && !self.link(caller, &insurer).is_customer {
            return Err(ContractError::NotACustomer);
        }
        self.require(GuardId::Recexist, GuardContext::record(*caller, record_id))?;
        let link = self.links.entry((*caller, insurer)).or_default();
        link.claimed_record_id = record_id;
        link.flag_raised = true;
        Ok(())
    }

    /// Any caller may read a registered doctor's profile.
    pub fn get_doctor(
        &self,
        _caller: &AccountId,
        doctor: AccountId,
    ) -> Result<DoctorProfile, ContractError> {
        self.require(GuardId::Checkde, GuardContext::account(doctor))?;
        Ok(self.doctors[&doctor].clone())
    }

    // ----------------------------------------------------------------------
    // Insurer
    // ----------------------------------------------------------------------

    pub fn add_customer(
        &mut self,
        caller: &AccountId,
        patient: AccountId,
    ) -> Result<(), ContractError> {
        self.require(GuardId::Icompexists, GuardContext::account(*caller))?;
        self.require(GuardId::Checkpe, GuardContext::account(patient))?;
        self.links
            .entry((patient, *caller))
            .or_default()
            .is_customer = true;
        self.refresh_insured(&patient);
        Ok(())
    }

    /// Drops the customer link; the patient stays insured while any other
    /// insurer still lists them.
    pub fn remove_customer(
        &mut self,
        caller: &AccountId,
        patient: AccountId,
    ) -> Result<(), ContractError> {
        self.require(GuardId::Icompexists, GuardContext::account(*caller))?;
        self.require(GuardId::Icustomer, GuardContext::pair(*caller, patient))?;
        if let Some(link) = self.links.get_mut(&(patient, *caller)) {
            link.is_customer = false;
            if *link == InsuranceLink::default() {
                self.links.remove(&(patient, *caller));
            }
        }
        self.refresh_insured(&patient);
        Ok(())
    }

    pub fn insurer_get_record(
        &self,
        caller: &AccountId,
        patient: AccountId,
    ) -> Result<ClaimView, ContractError> {
        self.require(GuardId::Payrequire, GuardContext::pair(*caller, patient))?;
        let claimed = self.link(&patient, caller).claimed_record_id;
        let r = self.record_slot(&patient, claimed);
        Ok(ClaimView {
            prescription: r.prescription,
            bill: r.bill,
        })
    }

    /// Pays the raised claim and resets the request flag.
    pub fn insurance_payment(
        &mut self,
        caller: &AccountId,
        patient: AccountId,
        value: Balance,
    ) -> Result<(), ContractError> {
        self.require(GuardId::Payrequire, GuardContext::pair(*caller, patient))?;
        self.transfer(caller, &patient, value)?;
        self.links
            .get_mut(&(patient, *caller))
            .expect("payrequire implies a link")
            .flag_raised = false;
        Ok(())
    }

    // ----------------------------------------------------------------------
    // Pharmacy
    // ----------------------------------------------------------------------

    pub fn pharmacy_get_record(
        &self,
        caller: &AccountId,
        patient: AccountId,
    ) -> Result<Option<ContentHash>, ContractError> {
        self.require(GuardId::Isall, GuardContext::pair(patient, *caller))?;
        let granted = self.grant(&patient, caller).record_id;
        Ok(self.record_slot(&patient, granted).prescription)
    }

    /// Files the bill on the granted record and consumes the grant.
    pub fn set_bill(
        &mut self,
        caller: &AccountId,
        patient: AccountId,
        bill: ContentHash,
    ) -> Result<(), ContractError> {
        self.require(GuardId::Isall, GuardContext::pair(patient, *caller))?;
        let granted = self.grant(&patient, caller).record_id;
        if self.record_slot(&patient, granted).bill.is_some() {
            return Err(ContractError::AlreadySet);
        }
        self.records
            .entry((patient, granted))
            .or_insert_with(|| MedicalRecord::unwritten(granted))
            .bill = Some(bill);
        self.grants
            .get_mut(&(patient, *caller))
            .expect("isall implies a grant")
            .allowed = false;
        Ok(())
    }

    // ----------------------------------------------------------------------
    // Balances
    // ----------------------------------------------------------------------

    fn transfer(
        &mut self,
        from: &AccountId,
        to: &AccountId,
        value: Balance,
    ) -> Result<(), ContractError> {
        let from_balance = self.balance(from);
        if from_balance < value {
            return Err(ContractError::InsufficientFunds);
        }
        if from == to || value == 0 {
            return Ok(());
        }
        let to_balance = self
            .balance(to)
            .checked_add(value)
            .ok_or(ContractError::Overflow)?;
        self.set_balance(*from, from_balance - value);
        self.set_balance(*to, to_balance);
        Ok(())
    }

    fn set_balance(&mut self, account: AccountId, amount: Balance) {
        if amount == 0 {
            self.balances.remove(&account);
        } else {
            self.balances.insert(account, amount);
        }
    }

    fn credit_unchecked(&mut self, account: AccountId, amount: Balance) {
        let next = self.balance(&account).saturating_add(amount);
        self.set_balance(account, next);
    }

    fn refresh_insured(&mut self, patient: &AccountId) {
        let insured = self
            .links
            .iter()
            .any(|((p, _), link)| p == patient && link.is_customer);
        if let Some(profile) = self.patients.get_mut(patient) {
            profile.insured = insured;
        }
    }
}
