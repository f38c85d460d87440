//! Seeded random streams.
//!
//! Every concurrent unit of work (a trial, a calibration sample, an inner
//! star estimate) owns a generator derived from the master seed and a short
//! path of tags, so results never depend on scheduling order.

use rand::SeedableRng;

/// Generator used by all simulations.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Stream tags, kept distinct so derived seeds never collide across purposes.
pub mod tag {
    pub const TRIAL: u64 = 0x7472_6961_6c00;
    pub const CALIBRATION: u64 = 0x6361_6c69_6200;
    pub const STAR_CACHE: u64 = 0x7374_6172_0000;
    pub const REMEASURE: u64 = 0x7265_6d65_6100;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of tags into a single 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(seed), |acc, &x| splitmix(acc ^ splitmix(x)))
}

pub fn stream(seed: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, path))
}

pub fn from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
