//! Seeded random test data: admissible points and initial states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::point::Point;

/// Deterministic generator used by every sampler.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points drawn uniformly from `[-2, 2]^n`, rejecting any with two
/// coordinates closer than `delta_sep` or a coordinate of modulus below it.
pub fn sample_points(n: usize, count: usize, seed: u64, delta_sep: f64) -> Result<Vec<Point>> {
    sample_points_in(n, count, seed, delta_sep, -2.0, 2.0)
}

/// As [`sample_points`] on the box `[lo, hi]^n`.
pub fn sample_points_in(n: usize, count: usize, seed: u64, delta_sep: f64, lo: f64, hi: f64) -> Result<Vec<Point>> {
    if !(lo < hi) {
        return Err(Error::Invalid(format!("empty sampling box [{lo}, {hi}]")));
    }
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(Error::Domain("rejection sampling made no progress".into()));
        }
        let p = Point::new((0..n).map(|_| r.gen_range(lo..hi)).collect())?;
        if p.min_gap() >= delta_sep && p.min_abs() >= delta_sep {
            out.push(p);
        }
    }
    Ok(out)
}

/// Uniform vector in `[-1, 1]^k`.
pub fn uniform_vec(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| r.gen_range(-1.0..1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_admissible_and_reproducible() {
        let a = sample_points(4, 50, 7, 1e-3).unwrap();
        let b = sample_points(4, 50, 7, 1e-3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.min_gap() >= 1e-3 && p.min_abs() >= 1e-3 && p.max_abs() <= 2.0));
        assert_ne!(a, sample_points(4, 50, 8, 1e-3).unwrap());
    }
}
