//! Counter-based seeding: every coupled sample gets a seed that depends only on
//! the run seed, the level index and the sample index, so results do not depend
//! on how work is split across workers.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sample `index` on level `level` of a run seeded with `run_seed`.
pub fn sample_seed(run_seed: u64, level: usize, index: u64) -> u64 {
    let a = mix64(run_seed.wrapping_add(GOLDEN));
    let b = mix64(a ^ (level as u64).wrapping_add(1).wrapping_mul(GOLDEN));
    mix64(b ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Derive an independent child seed from a parent seed and a label.
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    mix64(mix64(parent ^ GOLDEN) ^ label.wrapping_mul(0xA076_1D64_78BD_642F))
}
