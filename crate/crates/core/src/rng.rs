//! Counter-based random substreams.
//!
//! A substream is a ChaCha8 generator whose key is derived from
//! `(master seed, experiment id, cell)` and whose 64-bit stream id is the
//! trial index, so any trial can be regenerated without touching the others.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type TrialRng = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Factory for the per-trial generators of one `(seed, experiment, cell)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substreams {
    key: [u8; 32],
}

impl Substreams {
    pub fn new(master_seed: u64, experiment: &str, cell: u64) -> Self {
        let mut state = master_seed ^ fnv1a(experiment.as_bytes()).rotate_left(17);
        state ^= splitmix64(&mut cell.clone());
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key }
    }

    pub fn trial(&self, index: u64) -> TrialRng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// Circularly-symmetric complex Gaussian with `E|z|² = variance`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn fill_complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64, out: &mut [Complex64]) {
    for z in out {
        *z = complex_normal(rng, variance);
    }
}

/// Stable 64-bit digest, used to key persisted artifacts.
pub fn digest(text: &str) -> u64 {
    let mut s = fnv1a(text.as_bytes());
    splitmix64(&mut s)
}
