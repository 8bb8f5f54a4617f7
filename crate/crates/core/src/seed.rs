//! Seed derivation.
//!
//! Repetition `i` of an experiment with master seed `m` uses
//! `splitmix64(m + (i + 1) * 0x9E37_79B9_7F4A_7C15)` (wrapping arithmetic),
//! and every randomized step inside a repetition draws from
//! `derive(rep_seed, tag)` with its own fixed tag. Results are therefore a
//! pure function of the master seed, whatever order repetitions run in.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rep_seed(master: u64, rep: u64) -> u64 {
    splitmix64(master.wrapping_add(rep.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}
