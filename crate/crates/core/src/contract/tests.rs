use super::*;
use crate::account::{AccountId, Keypair};
use crate::hash::ContentHash;

fn id(seed: &str) -> AccountId {
    Keypair::from_seed(seed).account()
}

struct World {
    s: ContractState,
    admin: AccountId,
    patient: AccountId,
    doctor: AccountId,
    hospital: AccountId,
    insurer: AccountId,
    pharmacy: AccountId,
}

impl World {
    fn new(mode: GuardMode) -> Self {
        let admin = id("admin");
        let insurer = id("insurer");
        let mut s = ContractState::genesis(mode, [admin], [(insurer, 1_000), (id("patient"), 100)]);
        let w = World {
            admin,
            patient: id("patient"),
            doctor: id("doctor"),
            hospital: id("hospital"),
            insurer,
            pharmacy: id("pharmacy"),
            s: ContractState::new(mode),
        };
        s.register_hospital(&admin, w.hospital).unwrap();
        s.register_patient(&admin, w.patient, 30, "F").unwrap();
        s.register_doctor(&admin, w.doctor, "Dr. Ada", w.hospital, "cardiology")
            .unwrap();
        s.register_insurer(&admin, w.insurer).unwrap();
        s.register_pharmacy(&admin, w.pharmacy).unwrap();
        World { s, ..w }
    }

    fn strict() -> Self {
        Self::new(GuardMode::Strict)
    }

    fn record(&mut self) -> u64 {
        self.s
            .add_record(&self.hospital, self.patient, self.doctor, 1_000, 2_000)
            .unwrap()
    }
}

fn h(text: &str) -> ContentHash {
    ContentHash::of(text.as_bytes())
}

#[test]
fn register_patient_examples() {
    let mut w = World::strict();
    let a1 = id("a1");
    w.s.register_patient(&w.admin, a1, 30, "F").unwrap();
    assert_eq!(w.s.role(&a1), Some(Role::Patient));
    assert_eq!(w.s.patient(&a1).unwrap().record_count, 0);
    assert!(!w.s.patient(&a1).unwrap().insured);
    assert_eq!(
        w.s.register_patient(&w.admin, a1, 30, "F"),
        Err(ContractError::AlreadyRegistered)
    );
    let pharmacy = w.pharmacy;
    assert_eq!(
        w.s.register_patient(&pharmacy, id("a2"), 1, "M"),
        Err(ContractError::NotAdministrator)
    );
    assert_eq!(
        ContractError::AlreadyRegistered.message(),
        "Already Registered"
    );
}

#[test]
fn one_role_per_account() {
    let mut w = World::strict();
    let doctor = w.doctor;
    assert_eq!(
        w.s.register_patient(&w.admin, doctor, 40, "M"),
        Err(ContractError::AlreadyRegistered)
    );
    assert_eq!(
        w.s.register_pharmacy(&w.admin, w.hospital),
        Err(ContractError::AlreadyRegistered)
    );
}

#[test]
fn register_doctor_examples() {
    let mut w = World::strict();
    let d = w.s.get_doctor(&w.patient, w.doctor).unwrap();
    assert_eq!(d.name, "Dr. Ada");
    assert_eq!(d.hospital, w.hospital);
    assert_eq!(d.specialization, "cardiology");
    assert_eq!(
        w.s.register_doctor(&w.admin, id("d2"), "x", id("h9"), "y"),
        Err(ContractError::HospitalNotRegistered)
    );
    assert_eq!(
        ContractError::HospitalNotRegistered.message(),
        "Not Registered"
    );
    assert_eq!(
        w.s.register_doctor(&w.admin, w.doctor, "x", w.hospital, "y"),
        Err(ContractError::AlreadyRegistered)
    );
}

#[test]
fn register_institutions() {
    let mut w = World::strict();
    let h1 = id("h1");
    w.s.register_hospital(&w.admin, h1).unwrap();
    assert!(w
        .s
        .evaluate_guard(GuardId::Hospitalexists, &GuardContext::account(h1))
        .unwrap());
    assert_eq!(
        w.s.register_hospital(&w.admin, h1),
        Err(ContractError::AlreadyRegistered)
    );
    let i1 = id("i1");
    w.s.register_insurer(&w.admin, i1).unwrap();
    assert!(w
        .s
        .evaluate_guard(GuardId::Icompexists, &GuardContext::account(i1))
        .unwrap());
}

#[test]
fn remove_stakeholder_examples() {
    let mut w = World::strict();
    let r = w.record();
    w.s.allow_pharmacy(&w.patient.clone(), w.pharmacy, r)
        .unwrap();
    w.s.remove_stakeholder(&w.admin, w.pharmacy).unwrap();
    assert!(!w
        .s
        .evaluate_guard(GuardId::Phcompexists, &GuardContext::account(w.pharmacy))
        .unwrap());
    assert_eq!(
        w.s.remove_stakeholder(&w.admin, id("nobody")),
        Err(ContractError::NotRegistered(None))
    );
    assert_eq!(
        w.s.pharmacy_get_record(&w.pharmacy, w.patient),
        Err(ContractError::NotAllowed)
    );
}

#[test]
fn removed_patient_keeps_history_but_fails_guards() {
    let mut w = World::strict();
    w.record();
    let patient = w.patient;
    w.s.remove_stakeholder(&w.admin, patient).unwrap();
    assert!(w.s.record(&patient, 1).is_some());
    assert_eq!(
        w.s.get_record(&patient, 1),
        Err(ContractError::NotRegistered(Some(Role::Patient)))
    );
    assert!(!w
        .s
        .evaluate_guard(GuardId::Recexist, &GuardContext::record(patient, 1))
        .unwrap());
    w.s.register_patient(&w.admin, patient, 31, "F").unwrap();
    assert_eq!(w.s.get_record_count(&patient), Ok(1));
}

#[test]
fn add_record_examples() {
    let mut w = World::strict();
    assert_eq!(w.record(), 1);
    assert_eq!(w.s.get_record_count(&w.patient), Ok(1));
    w.record();
    assert_eq!(w.record(), 3);
    let r = w.s.record(&w.patient, 3).unwrap();
    assert_eq!(r.hospital, w.hospital);
    assert_eq!(r.prescription, None);
    assert_eq!(
        w.s.add_record(&w.doctor.clone(), w.patient, w.doctor, 0, 0),
        Err(ContractError::NotRegistered(Some(Role::Hospital)))
    );
}

#[test]
fn add_prescription_examples() {
    let mut w = World::strict();
    w.record();
    let (doctor, patient) = (w.doctor, w.patient);
    w.s.add_prescription(&doctor, patient, h("rx")).unwrap();
    assert_eq!(
        w.s.get_record(&patient, 1).unwrap().prescription,
        Some(h("rx"))
    );
    assert_eq!(
        w.s.add_prescription(&doctor, patient, h("rx2")),
        Err(ContractError::AlreadySet)
    );
    let d2 = id("d2");
    w.s.register_doctor(&w.admin, d2, "B", w.hospital, "x")
        .unwrap();
    w.record();
    assert_eq!(
        w.s.add_prescription(&d2, patient, h("rx")),
        Err(ContractError::RecordDoesNotExist)
    );
    let fresh = id("fresh");
    w.s.register_patient(&w.admin, fresh, 5, "M").unwrap();
    assert_eq!(
        w.s.add_prescription(&doctor, fresh, h("rx")),
        Err(ContractError::RecordDoesNotExist)
    );
    assert_eq!(
        ContractError::RecordDoesNotExist.message(),
        "Record Don't Exist"
    );
}

#[test]
fn get_record_examples() {
    let mut w = World::strict();
    w.record();
    w.record();
    let view = w.s.get_record(&w.patient, 2).unwrap();
    assert_eq!(view.doctor, w.doctor);
    assert_eq!((view.admission_date, view.discharge_date), (1_000, 2_000));
    assert_eq!(
        w.s.get_record(&w.patient, 3),
        Err(ContractError::InvalidRecordId)
    );
    assert_eq!(
        w.s.get_record(&w.patient, 0),
        Err(ContractError::InvalidRecordId)
    );
    assert_eq!(ContractError::InvalidRecordId.message(), "Not Valid");
}

#[test]
fn record_id_sweep_matches_range() {
    let mut w = World::strict();
    for count in 0..4u64 {
        for n in 0..=count + 1 {
            let ok = w.s.get_record(&w.patient, n).is_ok();
            assert_eq!(ok, (1..=count).contains(&n), "count {count} n {n}");
        }
        w.record();
    }
}

#[test]
fn get_record_count_examples() {
    let mut w = World::strict();
    assert_eq!(w.s.get_record_count(&w.patient), Ok(0));
    w.record();
    w.record();
    assert_eq!(w.s.get_record_count(&w.patient), Ok(2));
    assert_eq!(
        w.s.get_record_count(&id("stranger")),
        Err(ContractError::NotRegistered(Some(Role::Patient)))
    );
}

#[test]
fn trigger_payment_examples() {
    let mut w = World::strict();
    let (p, b) = (w.patient, id("beneficiary"));
    w.s.trigger_payment(&p, b, 40).unwrap();
    assert_eq!((w.s.balance(&p), w.s.balance(&b)), (60, 40));
    let before = w.s.clone();
    w.s.trigger_payment(&p, b, 0).unwrap();
    assert_eq!(w.s, before);
    w.s.trigger_payment(&p, b, 50).unwrap();
    assert_eq!(
        w.s.trigger_payment(&p, b, 11),
        Err(ContractError::InsufficientFunds)
    );
    assert_eq!(
        ContractError::InsufficientFunds.message(),
        "Transaction Unsucessful"
    );
}

#[test]
fn allow_pharmacy_examples() {
    let mut w = World::strict();
    w.record();
    w.record();
    let (p, ph) = (w.patient, w.pharmacy);
    w.s.allow_pharmacy(&p, ph, 1).unwrap();
    assert_eq!(
        w.s.grant(&p, &ph),
        PharmacyGrant {
            record_id: 1,
            allowed: true
        }
    );
    assert_eq!(
        w.s.allow_pharmacy(&p, ph, 5),
        Err(ContractError::InvalidRecordId)
    );
    w.s.allow_pharmacy(&p, ph, 2).unwrap();
    assert_eq!(w.s.grant(&p, &ph).record_id, 2);
    w.s.allow_pharmacy(&p, ph, 1).unwrap();
    assert_eq!(w.s.grant(&p, &ph).record_id, 1);
    assert_eq!(
        w.s.allow_pharmacy(&p, id("p9"), 1),
        Err(ContractError::NotRegistered(Some(Role::Pharmacy)))
    );
}

#[test]
fn allow_insurer_examples() {
    let mut w = World::strict();
    w.record();
    let (p, i) = (w.patient, w.insurer);
    assert_eq!(w.s.allow_insurer(&p, i, 1), Err(ContractError::NotInsured));
    assert_eq!(ContractError::NotInsured.message(), "Don't Have Insurance");
    w.s.add_customer(&i, p).unwrap();
    w.s.allow_insurer(&p, i, 1).unwrap();
    let link = w.s.link(&p, &i);
    assert!(link.flag_raised);
    assert_eq!(link.claimed_record_id, 1);
    let i2 = id("i2");
    w.s.register_insurer(&w.admin, i2).unwrap();
    assert_eq!(
        w.s.allow_insurer(&p, i2, 1),
        Err(ContractError::NotACustomer)
    );
    assert_eq!(
        w.s.allow_insurer(&p, i, 2),
        Err(ContractError::InvalidRecordId)
    );
}

#[test]
fn get_doctor_examples() {
    let w = World::strict();
    assert_eq!(
        w.s.get_doctor(&w.patient, id("d9")),
        Err(ContractError::NotRegistered(Some(Role::Doctor)))
    );
    for caller in [
        w.admin, w.patient, w.doctor, w.hospital, w.insurer, w.pharmacy,
    ] {
        assert!(w.s.get_doctor(&caller, w.doctor).is_ok());
    }
}

#[test]
fn doctor_reads() {
    let mut w = World::strict();
    w.record();
    let (d, p) = (w.doctor, w.patient);
    w.s.add_prescription(&d, p, h("rx")).unwrap();
    assert_eq!(w.s.doctor_get_record(&d, p, 1), Ok(Some(h("rx"))));
    assert_eq!(
        w.s.doctor_get_record(&w.pharmacy, p, 1),
        Err(ContractError::NotRegistered(Some(Role::Doctor)))
    );
    assert_eq!(
        w.s.doctor_get_record(&d, p, 2),
        Err(ContractError::InvalidRecordId)
    );
    let demo = w.s.doctor_get_patient(&d, p).unwrap();
    assert_eq!((demo.age, demo.gender.as_str()), (30, "F"));
    assert_eq!(
        w.s.doctor_get_patient(&w.insurer, p),
        Err(ContractError::NotRegistered(Some(Role::Doctor)))
    );
    assert_eq!(
        w.s.doctor_get_patient(&d, id("nobody")),
        Err(ContractError::NotRegistered(Some(Role::Patient)))
    );
    assert_eq!(w.s.doctor_get_record_count(&d, p), Ok(1));
    assert!(w.s.doctor_get_record_count(&w.hospital, p).is_err());
}

#[test]
fn customers_with_multiple_insurers() {
    let mut w = World::strict();
    let (p, i1) = (w.patient, w.insurer);
    let i2 = id("i2");
    w.s.register_insurer(&w.admin, i2).unwrap();
    w.s.add_customer(&i1, p).unwrap();
    assert!(w.s.patient(&p).unwrap().insured);
    w.s.add_customer(&i2, p).unwrap();
    w.s.remove_customer(&i1, p).unwrap();
    assert!(w.s.patient(&p).unwrap().insured);
    w.s.remove_customer(&i2, p).unwrap();
    assert!(!w.s.patient(&p).unwrap().insured);
    w.record();
    assert_eq!(w.s.allow_insurer(&p, i1, 1), Err(ContractError::NotInsured));
    assert_eq!(
        w.s.remove_customer(&i1, p),
        Err(ContractError::NotACustomer)
    );
    assert_eq!(ContractError::NotACustomer.message(), "Not a customer");
}

fn claim_world() -> World {
    let mut w = World::strict();
    w.record();
    w.record();
    let (d, p, i, ph) = (w.doctor, w.patient, w.insurer, w.pharmacy);
    w.s.add_prescription(&d, p, h("rx2")).unwrap();
    w.s.allow_pharmacy(&p, ph, 2).unwrap();
    w.s.set_bill(&ph, p, h("bill2")).unwrap();
    w.s.add_customer(&i, p).unwrap();
    w
}

#[test]
fn insurer_get_record_is_scoped_to_claim() {
    let mut w = claim_world();
    let (p, i) = (w.patient, w.insurer);
    assert_eq!(
        w.s.insurer_get_record(&i, p),
        Err(ContractError::RequestNotRaised)
    );
    assert_eq!(
        ContractError::RequestNotRaised.message(),
        "Request Not Raised"
    );
    w.s.allow_insurer(&p, i, 2).unwrap();
    let claim = w.s.insurer_get_record(&i, p).unwrap();
    assert_eq!(claim.prescription, Some(h("rx2")));
    assert_eq!(claim.bill, Some(h("bill2")));
    w.s.insurance_payment(&i, p, 50).unwrap();
    assert_eq!(
        w.s.insurer_get_record(&i, p),
        Err(ContractError::RequestNotRaised)
    );
}

#[test]
fn insurance_payment_examples() {
    let mut w = claim_world();
    let (p, i) = (w.patient, w.insurer);
    w.s.allow_insurer(&p, i, 2).unwrap();
    w.s.insurance_payment(&i, p, 50).unwrap();
    assert_eq!(w.s.balance(&p), 150);
    assert!(!w.s.link(&p, &i).flag_raised);
    assert_eq!(
        w.s.insurance_payment(&i, p, 50),
        Err(ContractError::RequestNotRaised)
    );
    w.s.allow_insurer(&p, i, 1).unwrap();
    let before = w.s.clone();
    assert_eq!(
        w.s.insurance_payment(&i, p, 10_000),
        Err(ContractError::InsufficientFunds)
    );
    assert_eq!(w.s, before);
    assert!(w.s.link(&p, &i).flag_raised);
}

#[test]
fn pharmacy_grant_lifecycle() {
    let mut w = World::strict();
    w.record();
    let (d, p, ph) = (w.doctor, w.patient, w.pharmacy);
    w.s.add_prescription(&d, p, h("rx")).unwrap();
    assert_eq!(
        w.s.pharmacy_get_record(&ph, p),
        Err(ContractError::NotAllowed)
    );
    assert_eq!(w.s.set_bill(&ph, p, h("b")), Err(ContractError::NotAllowed));
    w.s.allow_pharmacy(&p, ph, 1).unwrap();
    assert_eq!(w.s.pharmacy_get_record(&ph, p), Ok(Some(h("rx"))));
    w.s.set_bill(&ph, p, h("b")).unwrap();
    assert_eq!(w.s.record(&p, 1).unwrap().bill, Some(h("b")));
    assert!(!w.s.grant(&p, &ph).allowed);
    assert_eq!(
        w.s.pharmacy_get_record(&ph, p),
        Err(ContractError::NotAllowed)
    );
    assert_eq!(
        w.s.set_bill(&ph, p, h("b2")),
        Err(ContractError::NotAllowed)
    );
    w.s.allow_pharmacy(&p, ph, 1).unwrap();
    assert_eq!(
        w.s.set_bill(&ph, p, h("b2")),
        Err(ContractError::AlreadySet)
    );
    assert_eq!(ContractError::NotAllowed.message(), "Not Allowed");
}

#[test]
fn guard_evaluation_examples() {
    let mut w = World::strict();
    let p = w.patient;
    assert!(w
        .s
        .evaluate_guard(GuardId::Checkpe, &GuardContext::account(p))
        .unwrap());
    w.record();
    assert!(!w
        .s
        .evaluate_guard(GuardId::Recexist, &GuardContext::record(p, 0))
        .unwrap());
    assert!(w
        .s
        .evaluate_guard(GuardId::Recexist, &GuardContext::record(p, 1))
        .unwrap());
    assert!(!w
        .s
        .evaluate_guard(GuardId::Icustomer, &GuardContext::pair(w.insurer, p))
        .unwrap());
    assert_eq!(
        "nope".parse::<GuardId>(),
        Err(GuardError::UnknownGuard("nope".into()))
    );
    assert!(matches!(
        w.s.evaluate_guard(GuardId::Isall, &GuardContext::account(p)),
        Err(GuardError::MissingContext { .. })
    ));
}

#[test]
fn literal_mode_gaps() {
    let mut w = World::new(GuardMode::Literal);
    let (p, i) = (w.patient, w.insurer);
    assert!(w
        .s
        .evaluate_guard(GuardId::Recexist, &GuardContext::record(p, 0))
        .unwrap());
    assert!(w.s.get_record(&p, 0).is_ok());
    assert!(w
        .s
        .evaluate_guard(GuardId::Icustomer, &GuardContext::pair(i, p))
        .unwrap());
    assert!(w.s.remove_customer(&i, p).is_ok());
    let i2 = id("i2");
    w.s.register_insurer(&w.admin, i2).unwrap();
    w.s.add_customer(&i, p).unwrap();
    w.record();
    assert!(w.s.allow_insurer(&p, i2, 1).is_ok());
    assert_eq!(w.s.get_record(&p, 2), Err(ContractError::InvalidRecordId));
}

#[test]
fn value_only_on_payable_calls() {
    let mut w = World::strict();
    let p = w.patient;
    assert_eq!(
        w.s.execute(&p, 5, &Call::GetRecordCount),
        Err(ContractError::ValueNotAccepted)
    );
    assert_eq!(
        w.s.execute(
            &p,
            5,
            &Call::TriggerPayment {
                beneficiary: w.doctor
            }
        ),
        Ok(Output::Ack)
    );
    assert_eq!(w.s.balance(&w.doctor), 5);
}

#[test]
fn failed_calls_leave_state_unchanged() {
    let mut w = World::strict();
    let before = w.s.digest();
    let calls = [
        Call::GetRecord { record_id: 1 },
        Call::AddRecord {
            patient: w.patient,
            doctor: w.doctor,
            admission: 0,
            discharge: 0,
        },
        Call::SetBill {
            patient: w.patient,
            bill: h("b"),
        },
        Call::AllowInsurer {
            insurer: w.insurer,
            record_id: 1,
        },
    ];
    for call in &calls {
        assert!(w.s.execute(&w.patient.clone(), 0, call).is_err());
    }
    assert_eq!(w.s.digest(), before);
}
