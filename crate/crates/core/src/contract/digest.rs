//! Canonical serialization of the contract state.
//!
//! Sections appear in a fixed order, each as a big-endian `u64` entry count
//! followed by entries in ascending key order (keys compare as raw bytes).
//! The ledger hashes this encoding, together with account nonces, into the
//! block state root.

use super::state::ContractState;
use crate::codec::Writer;

impl ContractState {
    pub fn encode_canonical(&self, w: &mut Writer) {
        w.raw(b"roles").u64(self.roles.len() as u64);
        for (account, role) in &self.roles {
            w.account(account).u8(role.code());
        }

        w.raw(b"patients").u64(self.patients.len() as u64);
        for (account, p) in &self.patients {
            w.account(account)
                .u32(p.age)
                .str(&p.gender)
                .u64(p.record_count)
                .bool(p.insured);
        }

        w.raw(b"records").u64(self.records.len() as u64);
        for ((patient, id), r) in &self.records {
            w.account(patient)
                .u64(*id)
                .account(&r.hospital)
                .account(&r.doctor)
                .u64(r.admission_date)
                .u64(r.discharge_date)
                .opt_content_hash(&r.prescription)
                .opt_content_hash(&r.bill);
        }

        w.raw(b"doctors").u64(self.doctors.len() as u64);
        for (account, d) in &self.doctors {
            w.account(account)
                .str(&d.name)
                .account(&d.hospital)
                .str(&d.specialization);
        }

        w.raw(b"grants").u64(self.grants.len() as u64);
        for ((patient, pharmacy), g) in &self.grants {
            w.account(patient)
                .account(pharmacy)
                .u64(g.record_id)
                .bool(g.allowed);
        }

        w.raw(b"links").u64(self.links.len() as u64);
        for ((patient, insurer), l) in &self.links {
            w.account(patient)
                .account(insurer)
                .bool(l.is_customer)
                .bool(l.flag_raised)
                .u64(l.claimed_record_id);
        }

        w.raw(b"balances").u64(self.balances.len() as u64);
        for (account, amount) in &self.balances {
            w.account(account).u128(*amount);
        }
    }

    /// SHA-256 of the canonical encoding of the contract state alone.
    pub fn digest(&self) -> crate::hash::Hash32 {
        let mut w = Writer::with_tag(b"medledger/contract/v1");
        self.encode_canonical(&mut w);
        w.digest()
    }
}
