//! Test helpers and independent oracles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numkernel::{CMatrix, C64};
pub use crate::sample::{gaussian_matrix as random_matrix, random_hermitian};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn taylor_expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * C64::from(scale);
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &x / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
