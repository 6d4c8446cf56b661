//! Low-discrepancy point sets for the pointwise certificates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// First `n` points of the 2D Halton sequence (bases 2 and 3) with a seeded
/// Cranley–Patterson rotation, so different seeds give different but equally
/// uniform point sets. Coordinates lie in `[0, 1)`.
pub fn halton_2d(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 2] = [rng.gen(), rng.gen()];
    (1..=n as u64)
        .map(|i| {
            let p = [radical_inverse(i, 2), radical_inverse(i, 3)];
            [(p[0] + shift[0]).fract(), (p[1] + shift[1]).fract()]
        })
        .collect()
}
