//! Canonical byte encoding used for ids and digests.
//!
//! Every field is written in declaration order. Integers are fixed-width
//! big-endian; variable-length values carry a `u32` big-endian length prefix.

use sha2::{Digest, Sha256};

use crate::types::{Address, Hash32, NativeAmount};

#[derive(Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
        self
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    pub fn address(&mut self, a: &Address) -> &mut Self {
        self.buf.extend_from_slice(a.as_bytes());
        self
    }

    pub fn hash(&mut self, h: &Hash32) -> &mut Self {
        self.buf.extend_from_slice(&h.0);
        self
    }

    pub fn amount(&mut self, a: NativeAmount) -> &mut Self {
        self.u128(a.0)
    }

    /// Length prefix for a list; the caller encodes the items.
    pub fn len(&mut self, n: usize) -> &mut Self {
        self.u32(n as u32)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn digest(&self) -> Hash32 {
        Hash32(Sha256::digest(&self.buf).into())
    }
}

/// Types with a canonical encoding.
pub trait Canonical {
    fn encode(&self, enc: &mut Encoder);

    fn canonical_digest(&self) -> Hash32 {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.digest()
    }
}

impl<T: Canonical> Canonical for [T] {
    fn encode(&self, enc: &mut Encoder) {
        enc.len(self.len());
        for item in self {
            item.encode(enc);
        }
    }
}

impl<T: Canonical> Canonical for Vec<T> {
    fn encode(&self, enc: &mut Encoder) {
        self.as_slice().encode(enc)
    }
}
