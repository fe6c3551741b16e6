//! Phase-space geometry: points `z = (q, p)` in `R^{2d}` and the symplectic form.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A point `z = (q, p)` of phase space, stored as separate position and
/// momentum blocks of equal length `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::usage("phase point needs dimension d >= 1"));
        }
        check_dim(q.len(), p.len())?;
        Ok(Self { q, p })
    }

    pub fn origin(d: usize) -> Self {
        assert!(d >= 1, "phase point needs dimension d >= 1");
        Self {
            q: vec![0.0; d],
            p: vec![0.0; d],
        }
    }

    /// Builds a point from the flat layout `(q_1..q_d, p_1..p_d)`.
    pub fn from_flat(z: &[f64]) -> Result<Self> {
        if z.is_empty() || !z.len().is_multiple_of(2) {
            return Err(Error::usage(format!(
                "flat phase point must have even positive length, got {}",
                z.len()
            )));
        }
        let d = z.len() / 2;
        Self::new(z[..d].to_vec(), z[d..].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q_mut(&mut self) -> &mut [f64] {
        &mut self.q
    }

    pub fn p_mut(&mut self) -> &mut [f64] {
        &mut self.p
    }

    /// Coordinate `v` in the flat layout: `v < d` is `q_v`, otherwise `p_{v-d}`.
    #[inline]
    pub fn coord(&self, v: usize) -> f64 {
        let d = self.q.len();
        if v < d {
            self.q[v]
        } else {
            self.p[v - d]
        }
    }

    #[inline]
    pub fn set_coord(&mut self, v: usize, value: f64) {
        let d = self.q.len();
        if v < d {
            self.q[v] = value;
        } else {
            self.p[v - d] = value;
        }
    }

    /// The `j`-th plane component `z_j = (q_j, p_j)`.
    #[inline]
    pub fn plane(&self, j: usize) -> (f64, f64) {
        (self.q[j], self.p[j])
    }

    /// `|z_j|^2 = q_j^2 + p_j^2`.
    #[inline]
    pub fn plane_norm2(&self, j: usize) -> f64 {
        self.q[j] * self.q[j] + self.p[j] * self.p[j]
    }

    pub fn norm2(&self) -> f64 {
        self.q.iter().chain(&self.p).map(|x| x * x).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn sub(&self, other: &PhasePoint) -> PhasePoint {
        debug_assert_eq!(self.dim(), other.dim());
        PhasePoint {
            q: self.q.iter().zip(&other.q).map(|(a, b)| a - b).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &PhasePoint) -> PhasePoint {
        debug_assert_eq!(self.dim(), other.dim());
        PhasePoint {
            q: self.q.iter().zip(&other.q).map(|(a, b)| a + b).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> PhasePoint {
        PhasePoint {
            q: self.q.iter().map(|a| s * a).collect(),
            p: self.p.iter().map(|a| s * a).collect(),
        }
    }

    pub fn midpoint(&self, other: &PhasePoint) -> PhasePoint {
        debug_assert_eq!(self.dim(), other.dim());
        PhasePoint {
            q: self.q.iter().zip(&other.q).map(|(a, b)| 0.5 * (a + b)).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| 0.5 * (a + b)).collect(),
        }
    }

    /// Squared Euclidean distance `|self - other|^2`.
    pub fn dist2(&self, other: &PhasePoint) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let dq: f64 = self.q.iter().zip(&other.q).map(|(a, b)| (a - b) * (a - b)).sum();
        let dp: f64 = self.p.iter().zip(&other.p).map(|(a, b)| (a - b) * (a - b)).sum();
        dq + dp
    }

    pub fn dot(&self, other: &PhasePoint) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let dq: f64 = self.q.iter().zip(&other.q).map(|(a, b)| a * b).sum();
        let dp: f64 = self.p.iter().zip(&other.p).map(|(a, b)| a * b).sum();
        dq + dp
    }
}

/// The standard symplectic matrix `Ω = [[0, Id], [-Id, 0]]` acting on `R^{2d}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SymplecticForm;

impl SymplecticForm {
    /// `Ω z = (p, -q)`.
    pub fn apply(&self, z: &PhasePoint) -> PhasePoint {
        PhasePoint {
            q: z.p.clone(),
            p: z.q.iter().map(|x| -x).collect(),
        }
    }

    /// The bilinear form `a · Ω b`.
    pub fn product(&self, a: &PhasePoint, b: &PhasePoint) -> Result<f64> {
        symplectic_product(a, b)
    }
}

/// `a · Ω b = Σ_j (a_{q,j} b_{p,j} - a_{p,j} b_{q,j})`.
pub fn symplectic_product(a: &PhasePoint, b: &PhasePoint) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(symplectic_product_unchecked(a, b))
}

#[inline]
pub(crate) fn symplectic_product_unchecked(a: &PhasePoint, b: &PhasePoint) -> f64 {
    a.q.iter()
        .zip(&a.p)
        .zip(b.q.iter().zip(&b.p))
        .map(|((aq, ap), (bq, bp))| aq * bp - ap * bq)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(q: &[f64], p: &[f64]) -> PhasePoint {
        PhasePoint::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn symplectic_product_examples() {
        let a = pt(&[0.3, -1.2], &[2.0, 0.7]);
        assert_eq!(symplectic_product(&a, &a).unwrap(), 0.0);

        let e_q = pt(&[1.0], &[0.0]);
        let e_p = pt(&[0.0], &[1.0]);
        assert_eq!(symplectic_product(&e_q, &e_p).unwrap(), 1.0);

        let a = pt(&[1.0, 2.0], &[3.0, 4.0]);
        let b = pt(&[5.0, 6.0], &[7.0, 8.0]);
        assert_eq!(symplectic_product(&a, &b).unwrap(), -16.0);
    }

    #[test]
    fn symplectic_product_matches_matrix_form() {
        // explicit 4x4 matrix product as the reference
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let omega = [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
        ];
        let mut expected = 0.0;
        for i in 0..4 {
            for k in 0..4 {
                expected += a[i] * omega[i][k] * b[k];
            }
        }
        let got = symplectic_product(
            &PhasePoint::from_flat(&a).unwrap(),
            &PhasePoint::from_flat(&b).unwrap(),
        )
        .unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = pt(&[1.0], &[0.0]);
        let b = pt(&[1.0, 2.0], &[0.0, 0.0]);
        assert!(matches!(
            symplectic_product(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(PhasePoint::new(vec![1.0], vec![]).is_err());
        assert!(PhasePoint::new(vec![], vec![]).is_err());
    }

    #[test]
    fn omega_squares_to_minus_identity() {
        let z = pt(&[0.5, -2.0, 1.0], &[3.0, 0.25, -1.5]);
        let w = SymplecticForm.apply(&SymplecticForm.apply(&z));
        assert_eq!(w, z.scale(-1.0));
    }

    #[test]
    fn plane_accessors() {
        let z = pt(&[3.0, 1.0], &[4.0, 2.0]);
        assert_eq!(z.plane(0), (3.0, 4.0));
        assert_eq!(z.plane_norm2(0), 25.0);
        assert_eq!(z.norm2(), 30.0);
        assert_eq!(z.coord(3), 2.0);
    }

    fn point(d: usize) -> impl Strategy<Value = PhasePoint> {
        prop::collection::vec(-5.0..5.0f64, 2 * d).prop_map(|v| PhasePoint::from_flat(&v).unwrap())
    }

    proptest! {
        #[test]
        fn bilinear_and_antisymmetric(
            (a, b, c) in (1usize..5).prop_flat_map(|d| (point(d), point(d), point(d))),
            s in -3.0..3.0f64,
        ) {
            let f = |x: &PhasePoint, y: &PhasePoint| symplectic_product(x, y).unwrap();
            let lhs = f(&a.scale(s).add(&b), &c);
            let rhs = s * f(&a, &c) + f(&b, &c);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            prop_assert!((f(&a, &b) + f(&b, &a)).abs() <= 1e-12);
        }
    }
}
