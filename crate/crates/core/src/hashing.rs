//! Stable FNV-1a hashing.
//!
//! Used wherever a hash must be reproducible across runs, platforms and
//! processes: feature bucketing in the classifiers and the deterministic
//! translation-language assignment. `std`'s default hasher is deliberately
//! not relied on.

pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy)]
pub struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(FNV_OFFSET)
    }

    pub fn with_seed(seed: u64) -> Self {
        let mut h = Fnv1a::new();
        h.write(&seed.to_le_bytes());
        h
    }

    pub fn write(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        self
    }

    /// Separator byte between logical fields, so ("ab","c") != ("a","bc").
    pub fn sep(&mut self) -> &mut Self {
        self.write(&[0x1f])
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = Fnv1a::new();
    h.write(bytes);
    h.finish()
}

/// Hash a string into one of `buckets` slots.
pub fn bucket_of(s: &str, buckets: u64) -> u64 {
    debug_assert!(buckets > 0);
    hash_bytes(s.as_bytes()) % buckets
}
