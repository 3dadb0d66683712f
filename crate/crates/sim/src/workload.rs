use medledger_core::contract::{Call, TOKEN};
use medledger_core::ledger::Transaction;
use medledger_core::{AccountId, Keypair};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Seeded client that signs administrator traffic with sequential nonces.
pub(crate) struct Workload {
    chain_id: String,
    admin: Keypair,
    nonce: u64,
    created: Vec<AccountId>,
    prefix: String,
}

impl Workload {
    pub fn new(chain_id: &str, admin: Keypair, seed: u64) -> Self {
        Workload {
            chain_id: chain_id.to_string(),
            admin,
            nonce: 0,
            created: Vec::new(),
            prefix: format!("sim/{seed}/account"),
        }
    }

    fn fresh(&mut self) -> AccountId {
        let id = Keypair::from_seed(&format!("{}/{}", self.prefix, self.created.len())).account();
        self.created.push(id);
        id
    }

    pub fn batch(&mut self, rng: &mut ChaCha8Rng, count: usize) -> Vec<Transaction> {
        let mut txs = Vec::with_capacity(count);
        for _ in 0..count {
            let (value, call) = match rng.gen_range(0..5) {
                0 => (
                    0,
                    Call::RegisterHospital {
                        hospital: self.fresh(),
                    },
                ),
                1 => (
                    0,
                    Call::RegisterPatient {
                        patient: self.fresh(),
                        age: rng.gen_range(1..100),
                        gender: if rng.gen_bool(0.5) { "F" } else { "M" }.into(),
                    },
                ),
                2 => (
                    0,
                    Call::RegisterPharmacy {
                        pharmacy: self.fresh(),
                    },
                ),
                _ if !self.created.is_empty() => {
                    let to = self.created[rng.gen_range(0..self.created.len())];
                    (
                        rng.gen_range(1..1000) * TOKEN / 1000,
                        Call::TriggerPayment { beneficiary: to },
                    )
                }
                _ => (
                    0,
                    Call::RegisterInsurer {
                        insurer: self.fresh(),
                    },
                ),
            };
            txs.push(Transaction::sign(
                &self.chain_id,
                &self.admin,
                self.nonce,
                value,
                call,
            ));
            self.nonce += 1;
        }
        txs
    }
}
