//! Seed derivation for independent, order-free random streams.
//!
//! Every stream is keyed by `(master_seed, trial, round, client, step)` plus a
//! domain tag, so adding work or reordering parallel clients never shifts
//! another stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Domain tags separating streams that share the same coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Sampling = 0x5341_4d50,
    Gradient = 0x4752_4144,
    Suite = 0x5355_4954,
    Probe = 0x5052_4f42,
    Trial = 0x5452_4941,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a sequence of coordinates into a 64-bit seed.
pub fn derive_seed(master: u64, domain: Domain, coords: &[u64]) -> u64 {
    let mut h = splitmix(master ^ (domain as u64).rotate_left(17));
    for &c in coords {
        h = splitmix(h ^ c);
    }
    h
}

pub fn stream(master: u64, domain: Domain, coords: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, domain, coords))
}
