//! Seeded randomness and small distribution helpers shared by the generators.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere a seed is accepted. ChaCha keeps streams
/// identical across platforms and releases.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator for `seed`. Stream 0 is the
/// same sequence as [`rng_from_seed`].
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws an index with probability proportional to `weights`.
///
/// Returns `None` when no weight is positive.
pub fn sample_index(weights: &[f64], rng: &mut Rng) -> Option<usize> {
    let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last
}

/// Shannon entropy in nats. Zero entries contribute nothing.
pub fn entropy(dist: &[f64]) -> f64 {
    let h: f64 = dist.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum();
    // turns -0.0 from a point mass into 0.0
    h + 0.0
}

/// Total-variation distance between two distributions over the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions differ in support size");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Normalises non-negative weights in place. Returns false when they sum to zero.
pub fn normalize(weights: &mut [f64]) -> bool {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return false;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    true
}
