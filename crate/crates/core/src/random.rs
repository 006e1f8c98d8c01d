//! Seeded sampling of structured matrices.
//!
//! All randomness goes through [`seeded_rng`], a ChaCha8 stream keyed by a
//! `u64` seed. ChaCha output is specified bit-for-bit, so fixtures generated
//! from a seed are identical on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Mat;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut SeededRng, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        rng.gen_range(-scale..=scale)
    }
}

/// Symmetric `dim × dim` matrix with upper-triangle entries i.i.d. in `[−scale, scale]`.
pub fn symmetric(rng: &mut SeededRng, dim: usize, scale: f64) -> Mat {
    let mut s = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let x = uniform(rng, scale);
            s[(i, j)] = x;
            s[(j, i)] = x;
        }
    }
    s
}

/// Skew-symmetric `dim × dim` matrix with strictly-upper entries i.i.d. in `[−scale, scale]`.
pub fn skew(rng: &mut SeededRng, dim: usize, scale: f64) -> Mat {
    let mut k = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let x = uniform(rng, scale);
            k[(i, j)] = x;
            k[(j, i)] = -x;
        }
    }
    k
}

/// Dense matrix with i.i.d. entries in `[−scale, scale]`.
pub fn dense(rng: &mut SeededRng, rows: usize, cols: usize, scale: f64) -> Mat {
    let mut a = Mat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            a[(i, j)] = uniform(rng, scale);
        }
    }
    a
}
