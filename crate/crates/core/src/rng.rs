//! Seed derivation. Every random stream in the simulator is a ChaCha8 RNG
//! seeded through `splitmix64`, so one master seed fully determines a run
//! and per-sample / per-subsystem streams never alias.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step (Steele, Lea, Flood). Used only for seed mixing.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed of sub-stream `index` from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// Mix several labels into one sub-seed (order-sensitive).
pub fn mix_seed(base: u64, labels: &[u64]) -> u64 {
    let mut s = splitmix64(base);
    for &l in labels {
        s = splitmix64(s ^ splitmix64(l.wrapping_add(0x51ed_270b)));
    }
    s
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-mean exponential draw (Rayleigh power fade).
#[inline]
pub fn exp1(rng: &mut impl rand::Rng) -> f64 {
    let u: f64 = rng.gen();
    // u in [0,1) so 1-u in (0,1]; guard the measure-zero ln(1) = 0 draw
    (-(1.0 - u).ln()).max(1e-300)
}

/// Standard normal draw via Box-Muller (cosine branch only).
#[inline]
pub fn std_normal(rng: &mut impl rand::Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
