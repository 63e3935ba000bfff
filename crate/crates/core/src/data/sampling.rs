use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mask::SamplingMask;

/// Samples `round(density · n)` distinct nodes uniformly at every time step.
pub fn random_sampling_mask(n: usize, m: usize, density: f64, seed: u64) -> Result<SamplingMask> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::config("density", format!("must lie in (0, 1], got {density}")));
    }
    if n == 0 || m == 0 {
        return Err(Error::shape("random_sampling_mask", "n, m >= 1", format!("{n}x{m}")));
    }
    let per_column = (density * n as f64).round() as usize;
    if per_column == 0 {
        return Err(Error::config("density", format!("round({density} * {n}) = 0 nodes per time step")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = Array2::from_elem((n, m), false);
    for t in 0..m {
        for node in index::sample(&mut rng, n, per_column) {
            bits[[node, t]] = true;
        }
    }
    SamplingMask::from_bool(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Axis;

    #[test]
    fn full_density_is_all_ones() {
        let m = random_sampling_mask(7, 4, 1.0, 3).unwrap();
        assert!(m.mask().iter().all(|&b| b));
    }

    #[test]
    fn column_counts_are_exact() {
        let m = random_sampling_mask(100, 25, 0.3, 9).unwrap();
        for col in m.mask().axis_iter(Axis(1)) {
            assert_eq!(col.iter().filter(|&&b| b).count(), 30);
        }
        assert!((m.density() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = random_sampling_mask(40, 10, 0.45, 1234).unwrap();
        let b = random_sampling_mask(40, 10, 0.45, 1234).unwrap();
        let c = random_sampling_mask(40, 10, 0.45, 1235).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_empty_columns_and_bad_density() {
        assert!(random_sampling_mask(10, 3, 0.04, 0).is_err());
        assert!(random_sampling_mask(10, 3, 0.0, 0).is_err());
        assert!(random_sampling_mask(10, 3, 1.5, 0).is_err());
    }
}
