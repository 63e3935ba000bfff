//! Binary sampling masks over node × time entries.

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};

/// A binary `N × M` observation mask `J` and its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    mask: Array2<bool>,
    sampled: Vec<(usize, usize)>,
}

impl SamplingMask {
    pub fn from_bool(mask: Array2<bool>) -> Result<Self> {
        if mask.is_empty() {
            return Err(Error::shape("SamplingMask", "non-empty mask", format!("{:?}", mask.dim())));
        }
        let sampled: Vec<(usize, usize)> = mask
            .indexed_iter()
            .filter(|(_, &on)| on)
            .map(|(idx, _)| idx)
            .collect();
        if sampled.is_empty() {
            return Err(Error::EmptySet("sampling mask has no observed entries"));
        }
        Ok(Self { mask, sampled })
    }

    /// All entries observed.
    pub fn full(n: usize, m: usize) -> Result<Self> {
        Self::from_bool(Array2::from_elem((n, m), true))
    }

    pub fn dim(&self) -> (usize, usize) {
        self.mask.dim()
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn is_sampled(&self, node: usize, time: usize) -> bool {
        self.mask[[node, time]]
    }

    /// Observed `(node, time)` pairs in row-major order.
    pub fn sampled_indices(&self) -> &[(usize, usize)] {
        &self.sampled
    }

    /// Unobserved `(node, time)` pairs in row-major order.
    pub fn unsampled_indices(&self) -> Vec<(usize, usize)> {
        self.mask
            .indexed_iter()
            .filter(|(_, &on)| !on)
            .map(|(idx, _)| idx)
            .collect()
    }

    pub fn density(&self) -> f64 {
        self.sampled.len() as f64 / self.mask.len() as f64
    }

    /// `J` as a 0/1 matrix.
    pub fn to_f64(&self) -> Array2<f64> {
        self.mask.mapv(|on| if on { 1.0 } else { 0.0 })
    }

    /// Hadamard product `J ∘ X`.
    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.dim() != self.mask.dim() {
            return Err(Error::shape("SamplingMask::apply", format!("{:?}", self.mask.dim()), format!("{:?}", x.dim())));
        }
        let mut out = x.clone();
        Zip::from(&mut out).and(&self.mask).for_each(|v, &on| {
            if !on {
                *v = 0.0;
            }
        });
        Ok(out)
    }

    /// FNV-1a over the shape and the mask bits, as 16 hex digits.
    pub fn hash_hex(&self) -> String {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let (n, m) = self.mask.dim();
        let mut h = OFFSET;
        let mut feed = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(PRIME);
        };
        for b in (n as u64).to_le_bytes().into_iter().chain((m as u64).to_le_bytes()) {
            feed(b);
        }
        for &on in self.mask.iter() {
            feed(on as u8);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn support_and_density() {
        let m = SamplingMask::from_bool(array![[true, false], [false, true], [true, true]]).unwrap();
        assert_eq!(m.sampled_indices(), &[(0, 0), (1, 1), (2, 0), (2, 1)]);
        assert_eq!(m.unsampled_indices(), vec![(0, 1), (1, 0)]);
        assert!((m.density() - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(m.to_f64(), array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn hadamard_zeroes_unobserved() {
        let m = SamplingMask::from_bool(array![[true, false]]).unwrap();
        assert_eq!(m.apply(&array![[3.0, 4.0]]).unwrap(), array![[3.0, 0.0]]);
        assert!(m.apply(&array![[1.0]]).is_err());
    }

    #[test]
    fn empty_mask_rejected() {
        assert!(SamplingMask::from_bool(Array2::from_elem((2, 2), false)).is_err());
    }

    #[test]
    fn hash_distinguishes_masks() {
        let a = SamplingMask::from_bool(array![[true, false]]).unwrap();
        let b = SamplingMask::from_bool(array![[false, true]]).unwrap();
        assert_ne!(a.hash_hex(), b.hash_hex());
        assert_eq!(a.hash_hex(), a.clone().hash_hex());
        assert_eq!(a.hash_hex().len(), 16);
    }
}
