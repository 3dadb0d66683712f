//! Signed read authorization.
//!
//! A caller proves its identity on reads by sending four headers:
//!
//! ```text
//! x-medledger-account     0x-prefixed account id
//! x-medledger-pubkey      64 hex chars, must derive the account id
//! x-medledger-read-nonce  decimal u64, strictly increasing per account
//! x-medledger-signature   128 hex chars, Ed25519 over the request digest
//! ```
//!
//! The request digest is SHA-256 of
//! `"MLREAD" 0x01 chain_id method path nonce(u64)` with strings encoded as
//! u32 length plus UTF-8.

use medledger_core::codec::Writer;
use medledger_core::{AccountId, Hash32, Keypair, PublicKey, Signature};

pub const ACCOUNT_HEADER: &str = "x-medledger-account";
pub const PUBKEY_HEADER: &str = "x-medledger-pubkey";
pub const NONCE_HEADER: &str = "x-medledger-read-nonce";
pub const SIGNATURE_HEADER: &str = "x-medledger-signature";

pub fn read_digest(chain_id: &str, method: &str, path: &str, nonce: u64) -> Hash32 {
    let mut w = Writer::with_tag(b"MLREAD");
    w.u8(1).str(chain_id).str(method).str(path).u64(nonce);
    w.digest()
}

/// Header name/value pairs authorizing one read.
pub fn sign_read(
    key: &Keypair,
    chain_id: &str,
    method: &str,
    path: &str,
    nonce: u64,
) -> Vec<(&'static str, String)> {
    let digest = read_digest(chain_id, method, path, nonce);
    vec![
        (ACCOUNT_HEADER, key.account().to_string()),
        (PUBKEY_HEADER, key.public().to_hex()),
        (NONCE_HEADER, nonce.to_string()),
        (SIGNATURE_HEADER, key.sign(&digest.0).to_hex()),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuthError {
    #[error("missing header {0}")]
    Missing(&'static str),
    #[error("malformed header {0}")]
    Malformed(&'static str),
    #[error("public key does not match account")]
    KeyMismatch,
    #[error("read signature does not verify")]
    BadSignature,
    #[error("read nonce {got} not above last accepted {last}")]
    StaleNonce { last: u64, got: u64 },
}

/// Parsed but not yet verified authorization headers.
#[derive(Debug, Clone)]
pub struct ReadAuth {
    pub account: AccountId,
    pub public_key: PublicKey,
    pub nonce: u64,
    pub signature: Signature,
}

impl ReadAuth {
    pub fn from_headers<'a>(
        get: impl Fn(&'static str) -> Option<&'a str>,
    ) -> Result<Self, AuthError> {
        let field = |name| get(name).ok_or(AuthError::Missing(name));
        Ok(ReadAuth {
            account: field(ACCOUNT_HEADER)?
                .parse()
                .map_err(|_| AuthError::Malformed(ACCOUNT_HEADER))?,
            public_key: PublicKey::from_hex(field(PUBKEY_HEADER)?)
                .map_err(|_| AuthError::Malformed(PUBKEY_HEADER))?,
            nonce: field(NONCE_HEADER)?
                .parse()
                .map_err(|_| AuthError::Malformed(NONCE_HEADER))?,
            signature: Signature::from_hex(field(SIGNATURE_HEADER)?)
                .map_err(|_| AuthError::Malformed(SIGNATURE_HEADER))?,
        })
    }

    pub fn verify(&self, chain_id: &str, method: &str, path: &str) -> Result<(), AuthError> {
        if self.public_key.account() != self.account {
            return Err(AuthError::KeyMismatch);
        }
        let digest = read_digest(chain_id, method, path, self.nonce);
        if !self.public_key.verify(&digest.0, &self.signature) {
            return Err(AuthError::BadSignature);
        }
        Ok(())
    }
}
