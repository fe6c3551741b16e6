//! Halton sequences built from radical inverses in the first prime bases.

use crate::error::{Error, Result};

/// Default bound on the number of Halton coordinates (size of the prime table).
/// The Hénon–Heiles runs need `2d + 2` coordinates, up to 258 for `d = 128`.
pub const DEFAULT_HALTON_MAX_DIM: usize = 512;

/// First `count` primes by trial division against the primes found so far.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Radical inverse of `index` in `base`: digits mirrored about the radix point.
/// Computed as one correctly rounded division of exact integers while those
/// stay below 2^53.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut reversed: u64 = 0;
    let mut denom: u64 = 1;
    const EXACT: u64 = 1 << 53;
    while index > 0 {
        if denom > EXACT / base {
            // continue in floating point for the remaining high digits
            let mut value = reversed as f64 / denom as f64;
            let mut scale = 1.0 / denom as f64;
            let inv = 1.0 / base as f64;
            while index > 0 {
                scale *= inv;
                value += (index % base) as f64 * scale;
                index /= base;
            }
            return value;
        }
        reversed = reversed * base + index % base;
        denom *= base;
        index /= base;
    }
    reversed as f64 / denom as f64
}

/// A `dim`-dimensional Halton sequence; element `i` of the emitted stream is
/// sequence element `skip + i * leap`.
#[derive(Clone, Debug)]
pub struct HaltonSequence {
    bases: Vec<u64>,
    skip: u64,
    leap: u64,
}

impl HaltonSequence {
    pub fn new(dim: usize, skip: u64, leap: u64) -> Result<Self> {
        Self::with_max_dim(dim, skip, leap, DEFAULT_HALTON_MAX_DIM)
    }

    pub fn with_max_dim(dim: usize, skip: u64, leap: u64, max_dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("Halton dimension must be at least 1"));
        }
        if dim > max_dim {
            return Err(Error::Unsupported(format!(
                "Halton dimension {dim} exceeds the prime table bound {max_dim}"
            )));
        }
        if leap == 0 {
            return Err(Error::usage("Halton leap must be at least 1"));
        }
        Ok(Self {
            bases: first_primes(dim),
            skip,
            leap,
        })
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    /// Writes stream element `i` into `out[..dim]`.
    pub fn fill(&self, i: u64, out: &mut [f64]) {
        let index = self.skip + i * self.leap;
        for (slot, &b) in out.iter_mut().zip(&self.bases) {
            *slot = radical_inverse(index, b);
        }
    }

    pub fn point(&self, i: u64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        self.fill(i, &mut v);
        v
    }
}

/// Elements `skip .. skip + n` of the `dim`-dimensional Halton sequence.
pub fn halton_points(n: usize, dim: usize, skip: u64) -> Result<Vec<Vec<f64>>> {
    let seq = HaltonSequence::new(dim, skip, 1)?;
    Ok((0..n as u64).map(|i| seq.point(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput_prefix() {
        let pts = halton_points(3, 1, 1).unwrap();
        assert_eq!(pts, vec![vec![0.5], vec![0.25], vec![0.75]]);
        assert_eq!(radical_inverse(6, 2), 3.0 / 8.0);
    }

    #[test]
    fn two_dimensional_prefix() {
        let pts = halton_points(2, 2, 1).unwrap();
        assert_eq!(pts, vec![vec![0.5, 1.0 / 3.0], vec![0.25, 2.0 / 3.0]]);
    }

    #[test]
    fn matches_incremental_generator() {
        // the classic incremental update for base b, as an independent oracle
        for &b in &[2u64, 3, 5, 7, 1627] {
            let (mut n, mut d) = (0u64, 1u64);
            for i in 1..5000u64 {
                let x = d - n;
                if x == 1 {
                    n = 1;
                    d *= b;
                } else {
                    let mut y = d / b;
                    while x <= y {
                        y /= b;
                    }
                    n = (b + 1) * y - x;
                }
                assert_eq!(radical_inverse(i, b), n as f64 / d as f64, "base {b} index {i}");
            }
        }
    }

    #[test]
    fn large_indices_stay_in_unit_interval() {
        for &b in &[2u64, 3, 1627] {
            for i in [u64::MAX / 3, u64::MAX - 1, 1 << 60] {
                let v = radical_inverse(i, b);
                assert!(v > 0.0 && v < 1.0);
            }
        }
    }

    #[test]
    fn skip_and_leap() {
        let seq = HaltonSequence::new(2, 10, 3).unwrap();
        assert_eq!(seq.point(2), vec![radical_inverse(16, 2), radical_inverse(16, 3)]);
    }

    #[test]
    fn prime_table_and_bounds() {
        assert_eq!(first_primes(10), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(first_primes(258)[257], 1627);
        assert!(HaltonSequence::with_max_dim(65, 1, 1, 64).is_err());
        assert!(HaltonSequence::new(0, 1, 1).is_err());
        assert!(HaltonSequence::new(DEFAULT_HALTON_MAX_DIM + 1, 1, 1).is_err());
        assert!(HaltonSequence::new(258, 1000, 1).is_ok());
    }
}
