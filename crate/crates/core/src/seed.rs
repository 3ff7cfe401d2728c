//! Stable seed derivation.
//!
//! Seeds are derived from a master seed plus a sequence of labels, so any
//! sub-computation (one particle, one experiment cell) can be replayed in
//! isolation and independently of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Builds a derived seed incrementally.
#[derive(Debug, Clone, Copy)]
pub struct SeedBuilder(u64);

impl SeedBuilder {
    pub fn new(master: u64) -> Self {
        SeedBuilder(splitmix64(master))
    }

    pub fn bytes(self, part: &[u8]) -> Self {
        let mut h = FNV_OFFSET;
        for &b in (part.len() as u64).to_le_bytes().iter().chain(part) {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        SeedBuilder(splitmix64(self.0 ^ h))
    }

    pub fn str(self, part: &str) -> Self {
        self.bytes(part.as_bytes())
    }

    pub fn num(self, part: u64) -> Self {
        self.bytes(&part.to_le_bytes())
    }

    pub fn finish(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
