//! Sparse polynomials over the `2d` phase-space variables
//! `(q_1..q_d, p_1..p_d)` and their Gaussian moments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::PhasePoint;

/// A monomial stored as sorted `(variable, exponent)` pairs with positive
/// exponents. Variable `v < d` is `q_v`, `v >= d` is `p_{v-d}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(usize, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(v: usize, exp: u32) -> Self {
        if exp == 0 {
            Self::one()
        } else {
            Self(vec![(v, exp)])
        }
    }

    /// From a dense exponent list over all `2d` variables.
    pub fn from_exponents(exps: &[u32]) -> Self {
        Self(
            exps.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| (v, e))
                .collect(),
        )
    }

    pub fn factors(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut acc: BTreeMap<usize, u32> = self.0.iter().copied().collect();
        for &(v, e) in &other.0 {
            *acc.entry(v).or_default() += e;
        }
        Monomial(acc.into_iter().collect())
    }

    #[inline]
    pub fn eval(&self, z: &PhasePoint) -> f64 {
        self.0.iter().map(|&(v, e)| z.coord(v).powi(e as i32)).product()
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.0.last().map(|&(v, _)| v)
    }
}

/// `Σ coeff · monomial`, canonical: sorted, no duplicate monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolynomialSymbol {
    terms: Vec<(f64, Monomial)>,
}

/// Inline polynomial record as read from config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

impl PolynomialSymbol {
    pub fn new(terms: impl IntoIterator<Item = (f64, Monomial)>) -> Self {
        let mut acc: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (c, m) in terms {
            *acc.entry(m).or_default() += c;
        }
        Self {
            terms: acc.into_iter().map(|(m, c)| (c, m)).collect(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new([(c, Monomial::one())])
    }

    /// From `(coefficient, dense exponent list)` records; every list must have length `2d`.
    pub fn from_specs(d: usize, specs: &[TermSpec]) -> Result<Self> {
        for s in specs {
            if s.exponents.len() != 2 * d {
                return Err(Error::usage(format!(
                    "polynomial term needs {} exponents (q_1..q_d, p_1..p_d), got {}",
                    2 * d,
                    s.exponents.len()
                )));
            }
        }
        Ok(Self::new(
            specs
                .iter()
                .map(|s| (s.coeff, Monomial::from_exponents(&s.exponents))),
        ))
    }

    pub fn terms(&self) -> &[(f64, Monomial)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, m)| m.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &PolynomialSymbol) -> PolynomialSymbol {
        Self::new(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn scale(&self, s: f64) -> PolynomialSymbol {
        Self::new(self.terms.iter().map(|(c, m)| (s * c, m.clone())))
    }

    pub fn mul(&self, other: &PolynomialSymbol) -> PolynomialSymbol {
        Self::new(self.terms.iter().flat_map(|(a, ma)| {
            other.terms.iter().map(move |(b, mb)| (a * b, ma.mul(mb)))
        }))
    }

    pub fn eval(&self, z: &PhasePoint) -> f64 {
        self.terms.iter().map(|(c, m)| c * m.eval(z)).sum()
    }

    /// Number of variables the polynomial needs, i.e. `1 + max variable index`.
    pub fn required_vars(&self) -> usize {
        self.terms
            .iter()
            .filter_map(|(_, m)| m.max_var())
            .max()
            .map_or(0, |v| v + 1)
    }

    /// `E[A(X)]` for independent `X_v ~ N(mean_v, var)`.
    pub fn gaussian_expectation(&self, mean: &PhasePoint, var: f64) -> f64 {
        self.terms
            .iter()
            .map(|(c, m)| {
                c * m
                    .factors()
                    .iter()
                    .map(|&(v, e)| normal_raw_moment(mean.coord(v), var, e))
                    .product::<f64>()
            })
            .sum()
    }
}

/// `E[Y^n]` for `Y ~ N(0, var)`: `0` for odd `n`, `(n-1)!! var^{n/2}` otherwise.
pub fn normal_central_moment(var: f64, n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let double_factorial: f64 = (1..n).step_by(2).map(|k| k as f64).product();
    double_factorial * var.powi((n / 2) as i32)
}

/// `E[X^n]` for `X ~ N(mean, var)`, expanded binomially over central moments.
pub fn normal_raw_moment(mean: f64, var: f64, n: u32) -> f64 {
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            binom = binom * (n - k + 1) as f64 / k as f64;
        }
        total += binom * mean.powi((n - k) as i32) * normal_central_moment(var, k);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalization_merges_duplicates() {
        let p = PolynomialSymbol::new([
            (1.0, Monomial::var(0, 2)),
            (2.0, Monomial::var(1, 1)),
            (0.5, Monomial::var(0, 2)),
        ]);
        assert_eq!(p.terms().len(), 2);
        assert_eq!(p.degree(), 2);
        let z = PhasePoint::new(vec![2.0], vec![3.0]).unwrap();
        assert_eq!(p.eval(&z), 1.5 * 4.0 + 6.0);
    }

    #[test]
    fn central_moment_table() {
        let v = 0.3;
        let expected = [1.0, 0.0, v, 0.0, 3.0 * v * v, 0.0, 15.0 * v * v * v];
        for (n, e) in expected.iter().enumerate() {
            assert!((normal_central_moment(v, n as u32) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn raw_moments() {
        let (m, v) = (0.7, 0.2);
        assert!((normal_raw_moment(m, v, 1) - m).abs() < 1e-15);
        assert!((normal_raw_moment(m, v, 2) - (m * m + v)).abs() < 1e-15);
        assert!((normal_raw_moment(m, v, 3) - (m.powi(3) + 3.0 * m * v)).abs() < 1e-15);
        let fourth = m.powi(4) + 6.0 * m * m * v + 3.0 * v * v;
        assert!((normal_raw_moment(m, v, 4) - fourth).abs() < 1e-14);
    }

    #[test]
    fn specs_need_full_exponent_lists() {
        let ok = PolynomialSymbol::from_specs(1, &[TermSpec { coeff: 1.0, exponents: vec![1, 2] }]);
        assert_eq!(ok.unwrap().degree(), 3);
        let bad = PolynomialSymbol::from_specs(2, &[TermSpec { coeff: 1.0, exponents: vec![1] }]);
        assert!(bad.is_err());
    }

    #[test]
    fn product_expands() {
        let x = PolynomialSymbol::new([(1.0, Monomial::var(0, 1)), (1.0, Monomial::var(1, 1))]);
        let sq = x.mul(&x);
        assert_eq!(sq.terms().len(), 3);
        let z = PhasePoint::new(vec![2.0], vec![5.0]).unwrap();
        assert_eq!(sq.eval(&z), 49.0);
    }
}
