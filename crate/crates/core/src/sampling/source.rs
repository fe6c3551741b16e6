//! Reproducible sources of points in the open unit cube.
//!
//! Pseudo-random points come from ChaCha8 (`rand_chacha`). The generator is
//! seeded with `seed_from_u64(seed)`, the ChaCha stream id selects the sampled
//! component, and point `i` starts at word position `2 · dimension · i`:
//! every coordinate consumes one 64-bit output. A chunk starting at point `s`
//! therefore derives its substream from `(seed, component, s)` alone, and a
//! point is the same whatever chunk it is drawn in.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::halton::HaltonSequence;
use crate::error::{Error, Result};

/// Recorded in output metadata as part of the reproducibility contract.
pub const PSEUDO_RANDOM_GENERATOR: &str =
    "ChaCha8Rng (rand_chacha 0.9): seed_from_u64(seed), stream = component id, \
     word_pos = 2*dimension*point_index, u = ((x >> 12) + 0.5) / 2^52";

pub const DEFAULT_HALTON_SKIP: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    PseudoRandom { seed: u64 },
    Halton { skip: u64, leap: u64 },
}

#[derive(Clone, Debug)]
pub struct PointSource {
    kind: SourceKind,
    dimension: usize,
    halton: Option<HaltonSequence>,
}

impl PointSource {
    pub fn pseudo_random(seed: u64, dimension: usize) -> Result<Self> {
        Self::new(SourceKind::PseudoRandom { seed }, dimension)
    }

    pub fn halton(skip: u64, leap: u64, dimension: usize) -> Result<Self> {
        Self::new(SourceKind::Halton { skip, leap }, dimension)
    }

    pub fn new(kind: SourceKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::usage("point dimension must be at least 1"));
        }
        let halton = match kind {
            SourceKind::PseudoRandom { .. } => None,
            SourceKind::Halton { skip, leap } => {
                // element 0 is the corner of the cube, outside (0,1)^dim
                if skip == 0 {
                    return Err(Error::usage("Halton skip must be at least 1"));
                }
                Some(HaltonSequence::new(dimension, skip, leap)?)
            }
        };
        Ok(Self { kind, dimension, halton })
    }

    /// The same kind of source with a different dimension.
    pub fn with_dimension(&self, dimension: usize) -> Result<Self> {
        Self::new(self.kind, dimension)
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_pseudo_random(&self) -> bool {
        matches!(self.kind, SourceKind::PseudoRandom { .. })
    }

    pub fn describe(&self) -> String {
        match self.kind {
            SourceKind::PseudoRandom { seed } => format!("{PSEUDO_RANDOM_GENERATOR}; seed = {seed}"),
            SourceKind::Halton { skip, leap } => {
                format!("Halton, one prime base per coordinate (2, 3, 5, ...); skip = {skip}, leap = {leap}")
            }
        }
    }

    /// Cursor over points `start, start + 1, …` of substream `stream`.
    /// Halton points ignore `stream`: every component walks the same sequence.
    pub fn cursor(&self, stream: u64, start: u64) -> PointCursor<'_> {
        let inner = match self.kind {
            SourceKind::PseudoRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                rng.set_word_pos(2 * self.dimension as u128 * start as u128);
                CursorInner::Chacha(Box::new(rng))
            }
            SourceKind::Halton { .. } => CursorInner::Halton {
                seq: self.halton.as_ref().expect("constructed with sequence"),
                index: start,
            },
        };
        PointCursor { inner }
    }

    /// Points `start .. start + n` of substream `stream`.
    pub fn points(&self, stream: u64, start: u64, n: usize) -> Vec<Vec<f64>> {
        let mut cursor = self.cursor(stream, start);
        (0..n)
            .map(|_| {
                let mut u = vec![0.0; self.dimension];
                cursor.next_into(&mut u);
                u
            })
            .collect()
    }
}

enum CursorInner<'a> {
    Chacha(Box<ChaCha8Rng>),
    Halton { seq: &'a HaltonSequence, index: u64 },
}

pub struct PointCursor<'a> {
    inner: CursorInner<'a>,
}

/// Maps 64 random bits to the midpoint of one of 2^52 equal cells of (0,1);
/// every midpoint is exactly representable.
#[inline]
fn open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

impl PointCursor<'_> {
    /// Fills `out` (length = source dimension) with the next point.
    #[inline]
    pub fn next_into(&mut self, out: &mut [f64]) {
        match &mut self.inner {
            CursorInner::Chacha(rng) => {
                for slot in out.iter_mut() {
                    *slot = open_unit(rng.next_u64());
                }
            }
            CursorInner::Halton { seq, index } => {
                seq.fill(*index, out);
                *index += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_unit_bounds() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
        assert_eq!(open_unit(1 << 63), 0.5 + 0.5 / (1u64 << 52) as f64);
        assert_eq!(open_unit(u64::MAX), 1.0 - 0.5 / (1u64 << 52) as f64);
    }

    #[test]
    fn pseudo_random_points_independent_of_chunking() {
        let src = PointSource::pseudo_random(42, 7).unwrap();
        let all = src.points(1, 0, 40);
        for start in [0u64, 1, 13, 39] {
            let tail = src.points(1, start, 40 - start as usize);
            assert_eq!(&all[start as usize..], &tail[..]);
        }
        // odd dimensions straddle ChaCha block boundaries
        let src = PointSource::pseudo_random(7, 3).unwrap();
        let all = src.points(0, 0, 100);
        assert_eq!(src.points(0, 77, 1)[0], all[77]);
    }

    #[test]
    fn streams_and_seeds_differ() {
        let a = PointSource::pseudo_random(1, 4).unwrap();
        let b = PointSource::pseudo_random(2, 4).unwrap();
        assert_ne!(a.points(0, 0, 1), a.points(1, 0, 1));
        assert_ne!(a.points(0, 0, 1), b.points(0, 0, 1));
        assert_eq!(a.points(0, 5, 3), a.points(0, 5, 3));
    }

    #[test]
    fn halton_cursor_uses_skip_and_rejects_zero_skip() {
        let src = PointSource::halton(1, 1, 2).unwrap();
        assert_eq!(src.points(9, 0, 2), vec![vec![0.5, 1.0 / 3.0], vec![0.25, 2.0 / 3.0]]);
        assert_eq!(src.points(0, 1, 1), vec![vec![0.25, 2.0 / 3.0]]);
        assert!(PointSource::halton(0, 1, 2).is_err());
        assert!(PointSource::pseudo_random(0, 0).is_err());
    }

    #[test]
    fn pseudo_random_marginals_are_uniform() {
        let src = PointSource::pseudo_random(3, 2).unwrap();
        let n = 100_000;
        let pts = src.points(0, 0, n);
        for c in 0..2 {
            let mean: f64 = pts.iter().map(|u| u[c]).sum::<f64>() / n as f64;
            // sd of the mean: sqrt(1/12/n)
            assert!((mean - 0.5).abs() < 5.0 * (1.0 / 12.0 / n as f64).sqrt());
        }
    }
}
