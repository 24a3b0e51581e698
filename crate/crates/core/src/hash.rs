//! Deterministic 128-bit content hashing for structural encodings.
//!
//! Encodings must be stable across processes and platforms, so this is a fixed
//! FNV-1a variant rather than the std hasher with its randomized keys.

const OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
const PRIME: u128 = 0x0000000001000000000000000000013b;

#[derive(Clone, Copy)]
pub(crate) struct Fnv128(u128);

impl Fnv128 {
    pub fn new() -> Self {
        Fnv128(OFFSET)
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u128::from(b);
            self.0 = self.0.wrapping_mul(PRIME);
        }
    }

    pub fn write_u8(&mut self, v: u8) {
        self.write_bytes(&[v]);
    }

    pub fn write_u32(&mut self, v: u32) {
        self.write_bytes(&v.to_le_bytes());
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write_bytes(&v.to_le_bytes());
    }

    pub fn write_u128(&mut self, v: u128) {
        self.write_bytes(&v.to_le_bytes());
    }

    pub fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }

    pub fn write_opt_str(&mut self, s: Option<&str>) {
        match s {
            Some(s) => {
                self.write_u8(1);
                self.write_usize(s.len());
                self.write_bytes(s.as_bytes());
            }
            None => self.write_u8(0),
        }
    }

    pub fn finish(self) -> u128 {
        self.0
    }
}
