//! Seeding. Every run owns one generator; ensembles derive per-replica
//! seeds from a base seed with a counter hash so the result of replica `i`
//! never depends on scheduling.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` in stream `stream` of an experiment seeded with
/// `base`. Distinct `(stream, index)` pairs give unrelated seeds.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let a = splitmix64(base ^ splitmix64(stream.wrapping_mul(0xD1B5_4A32_D192_ED03)));
    splitmix64(a ^ index.wrapping_mul(0xA24B_AED4_963E_E407))
}
