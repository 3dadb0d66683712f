//! Canonical binary encoding shared by transaction signing, block sealing
//! and state digests.
//!
//! Integers are fixed-width big-endian. Variable-length byte strings and UTF-8
//! strings carry a `u32` big-endian length prefix. Accounts are their raw 20
//! bytes, digests their raw 32 bytes. An absent content hash is encoded as a
//! zero-length byte string, a present one as a 32-byte string.

use crate::account::{AccountId, PublicKey, Signature};
use crate::hash::{ContentHash, Hash32};

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_tag(tag: &[u8]) -> Self {
        let mut w = Self::new();
        w.raw(tag);
        w
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.raw(&v.to_be_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.raw(&v.to_be_bytes())
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.raw(&v.to_be_bytes())
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        let len = u32::try_from(v.len()).expect("canonical field longer than u32::MAX");
        self.u32(len).raw(v)
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    pub fn account(&mut self, v: &AccountId) -> &mut Self {
        self.raw(&v.0)
    }

    pub fn hash(&mut self, v: &Hash32) -> &mut Self {
        self.raw(&v.0)
    }

    pub fn public_key(&mut self, v: &PublicKey) -> &mut Self {
        self.raw(&v.0)
    }

    pub fn signature(&mut self, v: &Signature) -> &mut Self {
        self.raw(&v.0)
    }

    pub fn content_hash(&mut self, v: &ContentHash) -> &mut Self {
        self.bytes(&v.digest().0)
    }

    pub fn opt_content_hash(&mut self, v: &Option<ContentHash>) -> &mut Self {
        match v {
            Some(h) => self.content_hash(h),
            None => self.bytes(&[]),
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }

    pub fn digest(&self) -> Hash32 {
        Hash32::of(&self.buf)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Serde adapter writing `u128` amounts as decimal strings, since JSON
/// numbers above 2^53 are not portable.
pub mod decimal_u128 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        // Canonical decimal only: no sign, no leading zeros.
        if s.is_empty()
            || (s.len() > 1 && s.starts_with('0'))
            || !s.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(serde::de::Error::custom(format!(
                "invalid decimal amount {s:?}"
            )));
        }
        s.parse().map_err(serde::de::Error::custom)
    }
}
