//! Seed plumbing. Every stochastic routine takes an explicit `u64` seed and
//! derives sub-streams from it with [`derive_seed`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for sub-stream `tag` of `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix(mix(seed) ^ tag.rotate_left(17))
}

/// Seed for a Louvain run at resolution `gamma` under a master seed.
pub fn resolution_seed(seed: u64, gamma: f64) -> u64 {
    derive_seed(seed, gamma.to_bits())
}

pub fn permutation(n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}
