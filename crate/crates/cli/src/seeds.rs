//! Seed derivation. Run `i` uses `base + i`; every random consumer inside a
//! run gets its own seed mixed from the run seed and a fixed purpose tag, so
//! no two consumers ever share a generator state.

pub const TRAIN_DATA: u64 = 1;
pub const VAL_DATA: u64 = 2;
pub const TEST_DATA: u64 = 3;
pub const DATASET: u64 = 4;
pub const SPLIT: u64 = 5;
pub const NOISE: u64 = 6;
pub const SUBSAMPLE: u64 = 7;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn run_seed(base: u64, run: usize) -> u64 {
    base.wrapping_add(run as u64)
}

pub fn derive(run_seed: u64, purpose: u64) -> u64 {
    splitmix64(run_seed ^ splitmix64(purpose))
}
