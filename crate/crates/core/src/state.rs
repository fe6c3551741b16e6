//! Semiclassical Gaussian wavepackets and their superpositions.
//!
//! The wavepacket centered at `z = (q, p)` is
//!
//! ```text
//! g_z(x) = (πh)^{-d/4} exp(i/h p·(x - q/2)) exp(-|x - q|² / 2h)
//! ```
//!
//! With this phase convention the overlap of two packets is
//! `<g_a, g_b> = exp(-|a - b|²/4h) exp(i a·Ωb / 2h)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::phase::{symplectic_product_unchecked, PhasePoint};

/// The semiclassical parameter `h > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SemiclassicalParam(f64);

impl SemiclassicalParam {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 {
            Ok(Self(h))
        } else {
            Err(Error::usage(format!("semiclassical parameter must be positive, got {h}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SemiclassicalParam {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<SemiclassicalParam> for f64 {
    fn from(h: SemiclassicalParam) -> f64 {
        h.0
    }
}

/// One term `c · g_z` of a superposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub coeff: Complex64,
    pub center: PhasePoint,
}

/// A superposition `Σ_k c_k g_{z_k}` of Gaussian wavepackets sharing `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    h: SemiclassicalParam,
    branches: Vec<Branch>,
}

impl GaussianState {
    pub fn new(h: SemiclassicalParam, branches: Vec<Branch>) -> Result<Self> {
        let first = branches
            .first()
            .ok_or_else(|| Error::usage("a Gaussian state needs at least one branch"))?;
        let d = first.center.dim();
        for b in &branches {
            check_dim(d, b.center.dim())?;
            if !(b.coeff.re.is_finite() && b.coeff.im.is_finite()) {
                return Err(Error::usage("branch coefficients must be finite"));
            }
        }
        let state = Self { h, branches };
        let n2 = state_norm2(&state);
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(Error::usage(format!("state has non-positive squared norm {n2:e}")));
        }
        Ok(state)
    }

    /// The normalized wavepacket `g_z`.
    pub fn coherent(h: SemiclassicalParam, center: PhasePoint) -> Self {
        Self {
            h,
            branches: vec![Branch {
                coeff: Complex64::new(1.0, 0.0),
                center,
            }],
        }
    }

    /// `g_{z1} + g_{z2}` with unit coefficients.
    pub fn superposition(h: SemiclassicalParam, z1: PhasePoint, z2: PhasePoint) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        Self::new(
            h,
            vec![
                Branch { coeff: one, center: z1 },
                Branch { coeff: one, center: z2 },
            ],
        )
    }

    pub fn h(&self) -> f64 {
        self.h.value()
    }

    pub fn param(&self) -> SemiclassicalParam {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.branches[0].center.dim()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_single(&self) -> bool {
        self.branches.len() == 1
    }

    /// `Σ_k |c_k|²`, the squared norm with overlaps between branches dropped.
    pub fn diagonal_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.coeff.norm_sqr()).sum()
    }

    /// Position-space amplitude `ψ(x)`.
    pub fn position_amplitude(&self, x: &[f64]) -> Complex64 {
        let h = self.h();
        self.branches
            .iter()
            .map(|b| {
                b.coeff
                    * x.iter()
                        .enumerate()
                        .map(|(j, &xj)| {
                            let (q, p) = b.center.plane(j);
                            wavepacket_1d(q, p, h, xj)
                        })
                        .product::<Complex64>()
            })
            .sum()
    }

    /// Momentum-space amplitude `ψ̂(ξ) = (2πh)^{-d/2} ∫ exp(-i x·ξ/h) ψ(x) dx`.
    pub fn momentum_amplitude(&self, xi: &[f64]) -> Complex64 {
        let h = self.h();
        self.branches
            .iter()
            .map(|b| {
                b.coeff
                    * xi.iter()
                        .enumerate()
                        .map(|(j, &k)| {
                            let (q, p) = b.center.plane(j);
                            wavepacket_momentum_1d(q, p, h, k)
                        })
                        .product::<Complex64>()
            })
            .sum()
    }
}

/// One-dimensional factor of `g_z` at position `x`.
#[inline]
pub fn wavepacket_1d(q: f64, p: f64, h: f64, x: f64) -> Complex64 {
    let amp = (PI * h).powf(-0.25) * (-(x - q) * (x - q) / (2.0 * h)).exp();
    Complex64::from_polar(amp, p * (x - 0.5 * q) / h)
}

/// One-dimensional factor of the Fourier transform of `g_z`:
/// `(πh)^{-1/4} exp(-(ξ-p)²/2h) exp(-i q (ξ - p/2)/h)`.
#[inline]
pub fn wavepacket_momentum_1d(q: f64, p: f64, h: f64, xi: f64) -> Complex64 {
    let amp = (PI * h).powf(-0.25) * (-(xi - p) * (xi - p) / (2.0 * h)).exp();
    Complex64::from_polar(amp, -q * (xi - 0.5 * p) / h)
}

/// `<g_{z1}, g_{z2}>`, antilinear in the first slot.
pub fn gaussian_overlap(z1: &PhasePoint, z2: &PhasePoint, h: f64) -> Result<Complex64> {
    check_dim(z1.dim(), z2.dim())?;
    Ok(overlap_unchecked(z1, z2, h))
}

#[inline]
pub(crate) fn overlap_unchecked(z1: &PhasePoint, z2: &PhasePoint, h: f64) -> Complex64 {
    let modulus = (-z1.dist2(z2) / (4.0 * h)).exp();
    Complex64::from_polar(modulus, symplectic_product_unchecked(z1, z2) / (2.0 * h))
}

/// `<ψ|ψ> = Σ_{k,l} conj(c_k) c_l <g_{z_k}, g_{z_l}>`.
pub fn state_norm2(state: &GaussianState) -> f64 {
    let h = state.h();
    let bs = &state.branches;
    let mut total = 0.0;
    for (k, bk) in bs.iter().enumerate() {
        total += bk.coeff.norm_sqr();
        for bl in &bs[k + 1..] {
            let ov = overlap_unchecked(&bk.center, &bl.center, h);
            total += 2.0 * (bk.coeff.conj() * bl.coeff * ov).re;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{adaptive_simpson_complex, two_branch_state};
    use proptest::prelude::*;

    fn h(v: f64) -> SemiclassicalParam {
        SemiclassicalParam::new(v).unwrap()
    }

    fn pt(q: &[f64], p: &[f64]) -> PhasePoint {
        PhasePoint::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn self_overlap_is_one() {
        let z = pt(&[0.4, -1.0], &[2.0, 0.3]);
        let ov = gaussian_overlap(&z, &z, 0.05).unwrap();
        assert_eq!(ov, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn overlap_modulus_example() {
        let ov = gaussian_overlap(&pt(&[0.0], &[0.0]), &pt(&[1.0], &[0.0]), 0.1).unwrap();
        assert!((ov.norm() - (-2.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn overlap_matches_position_quadrature() {
        // ∫ conj(g_{z1}(x)) g_{z2}(x) dx by adaptive Simpson
        let hh = 0.1;
        let (q1, p1, q2, p2) = (0.0, 0.0, 1.0, 1.0);
        let f = |x: f64| wavepacket_1d(q1, p1, hh, x).conj() * wavepacket_1d(q2, p2, hh, x);
        let oracle = adaptive_simpson_complex(&f, -6.0, 7.0, 1e-13);
        let got = gaussian_overlap(&pt(&[q1], &[p1]), &pt(&[q2], &[p2]), hh).unwrap();
        assert!((got - oracle).norm() < 1e-10, "{got} vs {oracle}");

        // a second configuration with both coordinates displaced
        let (q1, p1, q2, p2) = (-0.3, 0.8, 0.2, -0.4);
        let f = |x: f64| wavepacket_1d(q1, p1, hh, x).conj() * wavepacket_1d(q2, p2, hh, x);
        let oracle = adaptive_simpson_complex(&f, -6.0, 6.0, 1e-13);
        let got = gaussian_overlap(&pt(&[q1], &[p1]), &pt(&[q2], &[p2]), hh).unwrap();
        assert!((got - oracle).norm() < 1e-10, "{got} vs {oracle}");
        assert!(got.arg().abs() > 0.1, "phase must be non-trivial here");
    }

    #[test]
    fn momentum_transform_matches_fourier_quadrature() {
        let hh = 0.07;
        let (q, p) = (0.6, -0.9);
        for &xi in &[-1.3, -0.9, -0.5, 0.0, 0.4] {
            let f = |x: f64| {
                Complex64::from_polar(1.0, -x * xi / hh) * wavepacket_1d(q, p, hh, x)
            };
            let oracle =
                adaptive_simpson_complex(&f, q - 4.0, q + 4.0, 1e-13) / (2.0 * PI * hh).sqrt();
            let got = wavepacket_momentum_1d(q, p, hh, xi);
            assert!((got - oracle).norm() < 1e-8, "xi={xi}: {got} vs {oracle}");
        }
    }

    #[test]
    fn norm_examples() {
        let z = pt(&[0.3], &[0.1]);
        assert_eq!(state_norm2(&GaussianState::coherent(h(0.1), z.clone())), 1.0);

        let doubled = GaussianState::superposition(h(0.1), z.clone(), z).unwrap();
        assert!((state_norm2(&doubled) - 4.0).abs() < 1e-15);

        let s = two_branch_state(0.01);
        let ov = gaussian_overlap(&s.branches()[0].center, &s.branches()[1].center, 0.01).unwrap();
        assert!(ov.norm() < (-181.0f64).exp());
        assert_eq!(state_norm2(&s), 2.0 + 2.0 * ov.re);
        assert!((state_norm2(&s) - 2.0).abs() < 1e-70);
    }

    #[test]
    fn cancelling_branches_are_rejected() {
        let z = pt(&[0.0], &[0.0]);
        let res = GaussianState::new(
            h(0.1),
            vec![
                Branch { coeff: Complex64::new(1.0, 0.0), center: z.clone() },
                Branch { coeff: Complex64::new(-1.0, 0.0), center: z },
            ],
        );
        assert!(res.is_err());
        assert!(GaussianState::new(h(0.1), vec![]).is_err());
        assert!(SemiclassicalParam::new(0.0).is_err());
        assert!(SemiclassicalParam::new(-1.0).is_err());
    }

    fn point(d: usize) -> impl Strategy<Value = PhasePoint> {
        prop::collection::vec(-2.0..2.0f64, 2 * d).prop_map(|v| PhasePoint::from_flat(&v).unwrap())
    }

    proptest! {
        #[test]
        fn overlap_is_hermitian_with_gaussian_modulus(
            (a, b) in (1usize..4).prop_flat_map(|d| (point(d), point(d))),
            hh in 0.01..0.5f64,
        ) {
            let ab = gaussian_overlap(&a, &b, hh).unwrap();
            let ba = gaussian_overlap(&b, &a, hh).unwrap();
            prop_assert!((ab - ba.conj()).norm() <= 1e-14);
            let expected = (-a.dist2(&b) / (4.0 * hh)).exp();
            prop_assert!((ab.norm() - expected).abs() <= 1e-12);
        }

        #[test]
        fn norm_is_permutation_invariant(
            centers in (1usize..3).prop_flat_map(|d| prop::collection::vec(point(d), 2..5)),
            coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5),
            hh in 0.05..1.0f64,
        ) {
            let branches: Vec<Branch> = centers
                .iter()
                .zip(&coeffs)
                .map(|(c, &(re, im))| Branch { coeff: Complex64::new(re + 1.5, im), center: c.clone() })
                .collect();
            let mut reversed = branches.clone();
            reversed.reverse();
            let a = GaussianState::new(h(hh), branches).unwrap();
            let b = GaussianState::new(h(hh), reversed).unwrap();
            let (na, nb) = (state_norm2(&a), state_norm2(&b));
            prop_assert!((na - nb).abs() <= 1e-12 * na);
        }
    }
}
