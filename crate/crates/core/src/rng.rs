//! Counter-based random streams.
//!
//! Every draw in an experiment comes from a generator keyed by
//! `(experiment seed, cycle, point, purpose)`, so results do not depend on the
//! order in which analysis points or members are processed.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    TruthInit = 1,
    EnsembleInit = 2,
    Observation = 3,
    Resampling = 4,
    Rejuvenation = 5,
    Jitter = 6,
    Simulation = 7,
    Synthetic = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(seed, cycle, point, purpose)` key.
pub fn stream(seed: u64, cycle: u64, point: u64, purpose: Purpose) -> ChaCha8Rng {
    let words = [
        splitmix64(seed),
        splitmix64(cycle ^ 0x5555_0000_0000_0000),
        splitmix64(point ^ 0xAAAA_0000_0000_0000),
        splitmix64(purpose as u64),
    ];
    let mut key = [0u8; 32];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn standard_normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    // column-major fill order is part of the reproducibility contract
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `count` uniform draws in the open interval (0, 1).
pub fn open_uniform<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.sample::<f64, _>(Open01)).collect()
}
