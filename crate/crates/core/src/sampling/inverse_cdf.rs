//! Inverse CDFs that map uniform coordinates onto the component densities.

use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("probability must lie in (0, 1), got {u}")))
    }
}

/// Standard normal quantile `Φ⁻¹(u)`.
pub fn inverse_normal_cdf(u: f64) -> Result<f64> {
    check_open_unit(u)?;
    Ok(inverse_normal_unchecked(u))
}

#[inline]
pub(crate) fn inverse_normal_unchecked(u: f64) -> f64 {
    // reflect so the argument of erfc⁻¹ is formed without cancellation
    if u < 0.5 {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    } else {
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * (1.0 - u))
    }
}

/// `F(x) = 1 - (1 + x) e^{-x}`, the CDF of a Gamma(2, 1) variable.
#[inline]
pub fn gamma2_cdf(x: f64) -> f64 {
    // -expm1(-x) - x e^{-x} keeps relative accuracy near zero
    -(-x).exp_m1() - x * (-x).exp()
}

/// Inverse of [`gamma2_cdf`] by Newton iteration safeguarded with bisection.
pub fn gamma2_inverse_cdf(u: f64) -> Result<f64> {
    check_open_unit(u)?;
    Ok(gamma2_inverse_unchecked(u))
}

pub(crate) fn gamma2_inverse_unchecked(u: f64) -> f64 {
    // initial guess: small-x series F ≈ x²/2, tail F ≈ 1 - x e^{-x}
    let mut x = if u < 0.5 {
        (2.0 * u).sqrt()
    } else {
        let t = -(1.0 - u).ln();
        t + t.ln().max(0.0)
    };
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let f = gamma2_cdf(x) - u;
        if f > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let density = x * (-x).exp();
        let mut next = if density > 0.0 { x - f / density } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo.max(1.0) };
        }
        if (next - x).abs() <= 1e-15 * x.max(1e-300) {
            return next;
        }
        x = next;
    }
    x
}
