//! Seeded randomness with labelled sub-streams.
//!
//! A run owns one 64-bit seed. Each consumer asks for a stream by label; the
//! label is hashed (FNV-1a) into the ChaCha stream id, so streams are
//! independent of the order in which they are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn stream(seed: u64, label: &str) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label.as_bytes()));
    rng
}

/// Standard normal sample by Box-Muller.
pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    use num_traits::Float;
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}
