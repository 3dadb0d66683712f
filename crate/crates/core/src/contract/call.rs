//! Contract calls as data: the operation catalog carried by transactions.

use serde::{Deserialize, Serialize};

use super::error::ContractError;
use super::state::{ClaimView, ContractState, Demographics, RecordView};
use super::types::{Balance, DoctorProfile};
use crate::account::AccountId;
use crate::codec::Writer;
use crate::hash::{optional_content_hash, ContentHash};

/// One contract operation with its arguments. The JSON form is
/// `{"op": "<snake_case name>", "args": {...}}`; argument-less operations
/// omit `args`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    tag = "op",
    content = "args",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum Call {
    RegisterPatient {
        patient: AccountId,
        age: u32,
        gender: String,
    },
    RegisterDoctor {
        doctor: AccountId,
        name: String,
        hospital: AccountId,
        specialization: String,
    },
    RegisterHospital {
        hospital: AccountId,
    },
    RegisterInsurer {
        insurer: AccountId,
    },
    RegisterPharmacy {
        pharmacy: AccountId,
    },
    RemoveStakeholder {
        target: AccountId,
    },
    AddRecord {
        patient: AccountId,
        doctor: AccountId,
        admission: u64,
        discharge: u64,
    },
    AddPrescription {
        patient: AccountId,
        prescription: ContentHash,
    },
    GetRecord {
        record_id: u64,
    },
    GetRecordCount,
    TriggerPayment {
        beneficiary: AccountId,
    },
    AllowPharmacy {
        pharmacy: AccountId,
        record_id: u64,
    },
    AllowInsurer {
        insurer: AccountId,
        record_id: u64,
    },
    GetDoctor {
        doctor: AccountId,
    },
    DoctorGetRecord {
        patient: AccountId,
        record_id: u64,
    },
    DoctorGetPatient {
        patient: AccountId,
    },
    DoctorGetRecordCount {
        patient: AccountId,
    },
    AddCustomer {
        patient: AccountId,
    },
    RemoveCustomer {
        patient: AccountId,
    },
    InsurerGetRecord {
        patient: AccountId,
    },
    InsurancePayment {
        patient: AccountId,
    },
    PharmacyGetRecord {
        patient: AccountId,
    },
    SetBill {
        patient: AccountId,
        bill: ContentHash,
    },
}

/// Return value of a successful call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Output {
    Ack,
    RecordId {
        record_id: u64,
    },
    Count {
        count: u64,
    },
    Record(RecordView),
    Prescription {
        #[serde(with = "optional_content_hash")]
        prescription: Option<ContentHash>,
    },
    Patient(Demographics),
    Doctor(DoctorProfile),
    Claim(ClaimView),
}

impl Call {
    /// Every operation name, in opcode order (opcode = index + 1).
    pub const NAMES: [&'static str; 23] = [
        "register_patient",
        "register_doctor",
        "register_hospital",
        "register_insurer",
        "register_pharmacy",
        "remove_stakeholder",
        "add_record",
        "add_prescription",
        "get_record",
        "get_record_count",
        "trigger_payment",
        "allow_pharmacy",
        "allow_insurer",
        "get_doctor",
        "doctor_get_record",
        "doctor_get_patient",
        "doctor_get_record_count",
        "add_customer",
        "remove_customer",
        "insurer_get_record",
        "insurance_payment",
        "pharmacy_get_record",
        "set_bill",
    ];

    pub fn opcode(&self) -> u8 {
        match self {
            Call::RegisterPatient { .. } => 1,
            Call::RegisterDoctor { .. } => 2,
            Call::RegisterHospital { .. } => 3,
            Call::RegisterInsurer { .. } => 4,
            Call::RegisterPharmacy { .. } => 5,
            Call::RemoveStakeholder { .. } => 6,
            Call::AddRecord { .. } => 7,
            Call::AddPrescription { .. } => 8,
            Call::GetRecord { .. } => 9,
            Call::GetRecordCount => 10,
            Call::TriggerPayment { .. } => 11,
            Call::AllowPharmacy { .. } => 12,
            Call::AllowInsurer { .. } => 13,
            Call::GetDoctor { .. } => 14,
            Call::DoctorGetRecord { .. } => 15,
            Call::DoctorGetPatient { .. } => 16,
            Call::DoctorGetRecordCount { .. } => 17,
            Call::AddCustomer { .. } => 18,
            Call::RemoveCustomer { .. } => 19,
            Call::InsurerGetRecord { .. } => 20,
            Call::InsurancePayment { .. } => 21,
            Call::PharmacyGetRecord { .. } => 22,
            Call::SetBill { .. } => 23,
        }
    }

    pub fn name(&self) -> &'static str {
        Self::NAMES[usize::from(self.opcode()) - 1]
    }

    /// Operations that may carry a non-zero transaction value.
    pub fn is_payable(&self) -> bool {
        matches!(
            self,
            Call::TriggerPayment { .. } | Call::InsurancePayment { .. }
        )
    }

    pub fn is_read(&self) -> bool {
        matches!(
            self,
            Call::GetRecord { .. }
                | Call::GetRecordCount
                | Call::GetDoctor { .. }
                | Call::DoctorGetRecord { .. }
                | Call::DoctorGetPatient { .. }
                | Call::DoctorGetRecordCount { .. }
                | Call::InsurerGetRecord { .. }
                | Call::PharmacyGetRecord { .. }
        )
    }

    /// Appends the opcode followed by the arguments in declaration order.
    pub fn encode(&self, w: &mut Writer) {
        w.u8(self.opcode());
        match self {
            Call::RegisterPatient {
                patient,
                age,
                gender,
            } => {
                w.account(patient).u32(*age).str(gender);
            }
            Call::RegisterDoctor {
                doctor,
                name,
                hospital,
                specialization,
            } => {
                w.account(doctor)
                    .str(name)
                    .account(hospital)
                    .str(specialization);
            }
            Call::RegisterHospital { hospital: a }
            | Call::RegisterInsurer { insurer: a }
            | Call::RegisterPharmacy { pharmacy: a }
            | Call::RemoveStakeholder { target: a }
            | Call::TriggerPayment { beneficiary: a }
            | Call::GetDoctor { doctor: a }
            | Call::DoctorGetPatient { patient: a }
            | Call::DoctorGetRecordCount { patient: a }
            | Call::AddCustomer { patient: a }
            | Call::RemoveCustomer { patient: a }
            | Call::InsurerGetRecord { patient: a }
            | Call::InsurancePayment { patient: a }
            | Call::PharmacyGetRecord { patient: a } => {
                w.account(a);
            }
            Call::AddRecord {
                patient,
                doctor,
                admission,
                discharge,
            } => {
                w.account(patient)
                    .account(doctor)
                    .u64(*admission)
                    .u64(*discharge);
            }
            Call::AddPrescription {
                patient,
                prescription: h,
            }
            | Call::SetBill { patient, bill: h } => {
                w.account(patient).content_hash(h);
            }
            Call::GetRecord { record_id } => {
                w.u64(*record_id);
            }
            Call::GetRecordCount => {}
            Call::AllowPharmacy {
                pharmacy: a,
                record_id,
            }
            | Call::AllowInsurer {
                insurer: a,
                record_id,
            }
            | Call::DoctorGetRecord {
                patient: a,
                record_id,
            } => {
                w.account(a).u64(*record_id);
            }
        }
    }
}

impl ContractState {
    /// Dispatches a call on behalf of `caller` with attached `value`.
    /// The state is unchanged when an error is returned.
    pub fn execute(
        &mut self,
        caller: &AccountId,
        value: Balance,
        call: &Call,
    ) -> Result<Output, ContractError> {
        if value != 0 && !call.is_payable() {
            return Err(ContractError::ValueNotAccepted);
        }
        if call.is_read() {
            return self.query(caller, call);
        }
        let c = caller;
        match call {
            Call::RegisterPatient {
                patient,
                age,
                gender,
            } => self.register_patient(c, *patient, *age, gender).map(ack),
            Call::RegisterDoctor {
                doctor,
                name,
                hospital,
                specialization,
            } => self
                .register_doctor(c, *doctor, name, *hospital, specialization)
                .map(ack),
            Call::RegisterHospital { hospital } => self.register_hospital(c, *hospital).map(ack),
            Call::RegisterInsurer { insurer } => self.register_insurer(c, *insurer).map(ack),
            Call::RegisterPharmacy { pharmacy } => self.register_pharmacy(c, *pharmacy).map(ack),
            Call::RemoveStakeholder { target } => self.remove_stakeholder(c, *target).map(ack),
            Call::AddRecord {
                patient,
                doctor,
                admission,
                discharge,
            } => self
                .add_record(c, *patient, *doctor, *admission, *discharge)
                .map(|record_id| Output::RecordId { record_id }),
            Call::AddPrescription {
                patient,
                prescription,
            } => self.add_prescription(c, *patient, *prescription).map(ack),
            Call::TriggerPayment { beneficiary } => {
                self.trigger_payment(c, *beneficiary, value).map(ack)
            }
            Call::AllowPharmacy {
                pharmacy,
                record_id,
            } => self.allow_pharmacy(c, *pharmacy, *record_id).map(ack),
            Call::AllowInsurer { insurer, record_id } => {
                self.allow_insurer(c, *insurer, *record_id).map(ack)
            }
            Call::AddCustomer { patient } => self.add_customer(c, *patient).map(ack),
            Call::RemoveCustomer { patient } => self.remove_customer(c, *patient).map(ack),
            Call::InsurancePayment { patient } => {
                self.insurance_payment(c, *patient, value).map(ack)
            }
            Call::SetBill { patient, bill } => self.set_bill(c, *patient, *bill).map(ack),
            _ => unreachable!("read calls are answered by query"),
        }
    }

    /// Answers a read call against the current state. Write calls are
    /// refused with `NotAllowed`.
    pub fn query(&self, caller: &AccountId, call: &Call) -> Result<Output, ContractError> {
        let c = caller;
        match call {
            Call::GetRecord { record_id } => self.get_record(c, *record_id).map(Output::Record),
            Call::GetRecordCount => self
                .get_record_count(c)
                .map(|count| Output::Count { count }),
            Call::GetDoctor { doctor } => self.get_doctor(c, *doctor).map(Output::Doctor),
            Call::DoctorGetRecord { patient, record_id } => self
                .doctor_get_record(c, *patient, *record_id)
                .map(|prescription| Output::Prescription { prescription }),
            Call::DoctorGetPatient { patient } => {
                self.doctor_get_patient(c, *patient).map(Output::Patient)
            }
            Call::DoctorGetRecordCount { patient } => self
                .doctor_get_record_count(c, *patient)
                .map(|count| Output::Count { count }),
            Call::InsurerGetRecord { patient } => {
                self.insurer_get_record(c, *patient).map(Output::Claim)
            }
            Call::PharmacyGetRecord { patient } => self
                .pharmacy_get_record(c, *patient)
                .map(|prescription| Output::Prescription { prescription }),
            _ => Err(ContractError::NotAllowed),
        }
    }
}

fn ack(_: ()) -> Output {
    Output::Ack
}
