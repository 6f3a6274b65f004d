//! Keyed deterministic random streams.
//!
//! Simulated components must be pure functions of `(seed, inputs)`, so every
//! draw comes from a ChaCha stream whose seed is a hash of the inputs. The
//! hash is a fixed FNV-1a/splitmix64 construction so logs stay stable across
//! toolchains (std's `DefaultHasher` makes no such promise).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Incremental key builder; feed it the inputs a draw depends on.
#[derive(Debug, Clone)]
pub(crate) struct Key(u64);

impl Key {
    pub fn new(seed: u64, domain: &str) -> Self {
        Key(splitmix64(seed)).str(domain)
    }

    pub fn u64(mut self, v: u64) -> Self {
        for b in v.to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        self
    }

    pub fn i64(self, v: i64) -> Self {
        self.u64(v as u64)
    }

    pub fn str(mut self, s: &str) -> Self {
        self.0 ^= FNV_OFFSET;
        for b in s.bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        // length terminator keeps ("ab","c") and ("a","bc") apart
        self.u64(s.len() as u64)
    }

    pub fn finish(&self) -> u64 {
        splitmix64(self.0)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.finish())
    }
}
