//! Account identifiers and Ed25519 key material.
//!
//! An [`AccountId`] is the trailing 20 bytes of the SHA-256 digest of the
//! account's 32-byte Ed25519 public key, rendered as `0x` + 40 lowercase hex.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::hash::{decode_lower_hex, Hash32, HashParseError};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AccountId(pub [u8; 20]);

impl AccountId {
    /// The all-zero account. Never derived from a real key in practice; used
    /// for unset record fields and the genesis proposer.
    pub const ZERO: AccountId = AccountId([0u8; 20]);

    pub fn from_public_key(key: &PublicKey) -> Self {
        let digest = Hash32::of(&key.0);
        let mut id = [0u8; 20];
        id.copy_from_slice(&digest.0[12..]);
        AccountId(id)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AccountId({})", self)
    }
}

impl FromStr for AccountId {
    type Err = HashParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.strip_prefix("0x").ok_or(HashParseError::Prefix("0x"))?;
        let bytes = decode_lower_hex(body, 20)?;
        let mut id = [0u8; 20];
        id.copy_from_slice(&bytes);
        Ok(AccountId(id))
    }
}

impl Serialize for AccountId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AccountId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// 32-byte Ed25519 public key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey(pub [u8; 32]);

impl PublicKey {
    pub fn account(&self) -> AccountId {
        AccountId::from_public_key(self)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, HashParseError> {
        let bytes = decode_lower_hex(s, 32)?;
        let mut out = [0u8; 32];
        out.copy_from_slice(&bytes);
        Ok(PublicKey(out))
    }

    /// Verifies `signature` over `message`. Malformed keys never verify.
    pub fn verify(&self, message: &[u8], signature: &Signature) -> bool {
        let Ok(key) = VerifyingKey::from_bytes(&self.0) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
        key.verify(message, &sig).is_ok()
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.to_hex())
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PublicKey::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// 64-byte Ed25519 signature.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; 64]);

impl Signature {
    pub const EMPTY: Signature = Signature([0u8; 64]);

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, HashParseError> {
        let bytes = decode_lower_hex(s, 64)?;
        let mut out = [0u8; 64];
        out.copy_from_slice(&bytes);
        Ok(Signature(out))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}..)", &self.to_hex()[..16])
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Signature::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// An Ed25519 signing key together with its derived account.
#[derive(Clone)]
pub struct Keypair {
    signing: SigningKey,
    public: PublicKey,
    account: AccountId,
}

impl Keypair {
    pub fn from_secret(secret: [u8; 32]) -> Self {
        let signing = SigningKey::from_bytes(&secret);
        let public = PublicKey(signing.verifying_key().to_bytes());
        let account = public.account();
        Keypair {
            signing,
            public,
            account,
        }
    }

    /// Deterministic key derived from an arbitrary seed string. Intended for
    /// simulations, test fixtures and reproducible scenario runs.
    pub fn from_seed(seed: &str) -> Self {
        Self::from_secret(Hash32::of(seed.as_bytes()).0)
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn public(&self) -> PublicKey {
        self.public
    }

    pub fn account(&self) -> AccountId {
        self.account
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing.sign(message).to_bytes())
    }
}

impl fmt::Debug for Keypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Keypair")
            .field("account", &self.account)
            .finish_non_exhaustive()
    }
}

/// On-disk key file: `{"alias", "account", "public_key", "secret_key"}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct KeyFile {
    pub alias: String,
    pub account: AccountId,
    pub public_key: PublicKey,
    pub secret_key: String,
}

impl KeyFile {
    pub fn new(alias: &str, key: &Keypair) -> Self {
        KeyFile {
            alias: alias.to_string(),
            account: key.account(),
            public_key: key.public(),
            secret_key: hex::encode(key.secret_bytes()),
        }
    }

    /// Rebuilds the keypair, checking the stored public key and account
    /// against the secret.
    pub fn keypair(&self) -> Result<Keypair, KeyFileError> {
        let bytes = decode_lower_hex(&self.secret_key, 32).map_err(KeyFileError::Secret)?;
        let mut secret = [0u8; 32];
        secret.copy_from_slice(&bytes);
        let key = Keypair::from_secret(secret);
        if key.public() != self.public_key || key.account() != self.account {
            return Err(KeyFileError::Mismatch);
        }
        Ok(key)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum KeyFileError {
    #[error("malformed secret key: {0}")]
    Secret(HashParseError),
    #[error("public key or account does not match the secret key")]
    Mismatch,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn account_is_trailing_twenty_bytes_of_key_digest() {
        let key = Keypair::from_seed("alice");
        let digest = Hash32::of(&key.public().0);
        assert_eq!(&key.account().0[..], &digest.0[12..]);
        assert_eq!(key.account().to_string().len(), 42);
        assert!(key.account().to_string().starts_with("0x"));
    }

    #[test]
    fn derivation_is_deterministic() {
        assert_eq!(
            Keypair::from_seed("x").account(),
            Keypair::from_seed("x").account()
        );
        assert_ne!(
            Keypair::from_seed("x").account(),
            Keypair::from_seed("y").account()
        );
    }

    #[test]
    fn account_text_round_trip_and_strictness() {
        let id = Keypair::from_seed("bob").account();
        assert_eq!(id.to_string().parse::<AccountId>().unwrap(), id);
        assert!(id.to_string()[2..].parse::<AccountId>().is_err());
        assert!("0x1234".parse::<AccountId>().is_err());
    }

    #[test]
    fn sign_and_verify() {
        let key = Keypair::from_seed("signer");
        let sig = key.sign(b"payload");
        assert!(key.public().verify(b"payload", &sig));
        assert!(!key.public().verify(b"payloaD", &sig));
        assert!(!Keypair::from_seed("other")
            .public()
            .verify(b"payload", &sig));
    }

    #[test]
    fn key_file_round_trip_detects_mismatch() {
        let key = Keypair::from_seed("k");
        let mut file = KeyFile::new("k", &key);
        assert_eq!(file.keypair().unwrap().account(), key.account());
        file.account = Keypair::from_seed("z").account();
        assert!(matches!(file.keypair(), Err(KeyFileError::Mismatch)));
    }
}
