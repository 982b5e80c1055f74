//! Seed derivation and counter-addressed Gaussian streams.
//!
//! Every random quantity is addressed by `(seed, stream, index)`: the seed is
//! expanded into a ChaCha8 key, the stream selects the ChaCha nonce and the
//! index selects the word position. Any sample can be regenerated without
//! producing the ones before it, so results do not depend on evaluation order.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain tags keep independent consumers of one master seed apart.
pub mod domain {
    pub const CHANNEL: u64 = 0x4348_414e;
    pub const SOUND_NOISE: u64 = 0x534e_4453;
    pub const TR_NOISE: u64 = 0x5452_4e53;
    pub const SWEEP_CELL: u64 = 0x5357_4550;
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for `(master, domain, index)`.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    mix64(mix64(master ^ mix64(domain)) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// A ChaCha8 generator for `seed`, positioned at the start of `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn unit_open(bits: u64) -> f64 {
    // (0, 1): never exactly zero, so ln() is finite
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal variates `start..start + out.len()` of `(seed, stream)`,
/// written into `out`. Box-Muller pairs occupy four ChaCha words each, so
/// sample `k` always comes from words `4·(k/2)..4·(k/2)+4`.
pub fn fill_standard_normal(seed: u64, stream: u64, start: u64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut rng = stream_rng(seed, stream);
    let first_pair = start / 2;
    rng.set_word_pos(4 * first_pair as u128);
    let mut k = start;
    let end = start + out.len() as u64;
    let mut i = 0;
    while k < end {
        let u1 = unit_open(rng.next_u64());
        let u2 = unit_open(rng.next_u64());
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        let pair = [r * c, r * s];
        let offset = (k % 2) as usize;
        for z in &pair[offset..] {
            if k >= end {
                break;
            }
            out[i] = *z;
            i += 1;
            k += 1;
        }
    }
}

/// Convenience wrapper around [`fill_standard_normal`].
pub fn standard_normal(seed: u64, stream: u64, start: u64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    fill_standard_normal(seed, stream, start, &mut out);
    out
}
