//! Named seed derivation. Every random stream in the crate is seeded as
//! `base ⊕ hash(context)` so results never depend on ambient entropy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and toolchains, unlike `DefaultHasher`.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// A context label for seed derivation, built from typed parts.
#[derive(Debug, Default, Clone)]
pub struct Context(Vec<u8>);

impl Context {
    pub fn new(label: &str) -> Self {
        Self(label.as_bytes().to_vec())
    }

    pub fn with_u64(mut self, v: u64) -> Self {
        self.0.push(0x1f);
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn with_f64(self, v: f64) -> Self {
        self.with_u64(v.to_bits())
    }

    pub fn with_str(mut self, s: &str) -> Self {
        self.0.push(0x1e);
        self.0.extend_from_slice(s.as_bytes());
        self
    }

    pub fn derive(&self, base: u64) -> u64 {
        base ^ fnv1a(&self.0)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
