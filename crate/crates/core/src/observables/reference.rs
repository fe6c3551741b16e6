//! Grid references for one-sided observables.
//!
//! A symbol depending on `q` only is the multiplication operator `A(q̂)`, so
//! `<Â>_ψ = ∫ A(q) |ψ(q)|² dq`; likewise in momentum space with `ψ̂`. The
//! marginal densities are available in closed form, interference included,
//! so no phase-space grid is needed.

use num_complex::Complex64;

use super::{Observable, PlaneFactor, Side};
use crate::error::{Error, Result};
use crate::phase::PhasePoint;
use crate::state::{wavepacket_1d, wavepacket_momentum_1d, GaussianState};

pub const DEFAULT_REFERENCE_RESOLUTION: usize = 2048;

const MAX_DIM: usize = 3;
const MAX_BRUTE_NODES: usize = 1 << 27;
const BOX_SDS: f64 = 12.0;

/// Trapezoid nodes and weights on `[lo, hi]`.
fn trapezoid_nodes(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let step = (hi - lo) / (n - 1) as f64;
    let xs = (0..n).map(|i| lo + i as f64 * step).collect();
    let ws = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * step } else { step })
        .collect();
    (xs, ws)
}

/// `∫ A |ψ|²` over position or momentum space for the unnormalized state;
/// divide by `state_norm2` for a normalized expectation.
pub fn reference_expectation_grid(
    state: &GaussianState,
    obs: &Observable,
    side: Side,
    resolution: usize,
) -> Result<f64> {
    let d = state.dim();
    if obs.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: obs.dim() });
    }
    if !matches!(side, Side::PositionOnly | Side::MomentumOnly) {
        return Err(Error::usage("reference side must be position-only or momentum-only"));
    }
    match obs.side() {
        Side::Neither => {}
        s if s == side => {}
        Side::Mixed => {
            return Err(Error::Unsupported(format!(
                "observable '{}' mixes q and p; no one-sided grid reference",
                obs.label()
            )))
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "observable '{}' does not depend on the requested side only",
                obs.label()
            )))
        }
    }
    if d > MAX_DIM {
        return Err(Error::Resource(format!(
            "grid reference limited to d <= {MAX_DIM}, got d = {d}"
        )));
    }
    if resolution < 3 {
        return Err(Error::usage("grid resolution must be at least 3"));
    }

    let h = state.h();
    let sd = (0.5 * h).sqrt();
    let momentum = side == Side::MomentumOnly;
    let centers: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            state
                .branches()
                .iter()
                .map(|b| {
                    let (q, p) = b.center.plane(j);
                    if momentum {
                        p
                    } else {
                        q
                    }
                })
                .collect()
        })
        .collect();
    let grids: Vec<(Vec<f64>, Vec<f64>)> = centers
        .iter()
        .map(|cs| {
            let lo = cs.iter().cloned().fold(f64::INFINITY, f64::min) - BOX_SDS * sd;
            let hi = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + BOX_SDS * sd;
            trapezoid_nodes(lo, hi, resolution)
        })
        .collect();

    let amplitude = |b: usize, j: usize, x: f64| -> Complex64 {
        let (q, p) = state.branches()[b].center.plane(j);
        if momentum {
            wavepacket_momentum_1d(q, p, h, x)
        } else {
            wavepacket_1d(q, p, h, x)
        }
    };

    if let Some(sep) = obs.separable() {
        // the tensor trapezoid of a separable integrand factorizes exactly
        let nb = state.branches().len();
        let mut total = Complex64::new(0.0, 0.0);
        for term in &sep.terms {
            for k in 0..nb {
                for l in 0..nb {
                    let mut prod = Complex64::new(term.coeff, 0.0);
                    for (j, (xs, ws)) in grids.iter().enumerate() {
                        let factor = term
                            .factors
                            .iter()
                            .find(|(pj, _)| *pj == j)
                            .map(|&(_, f)| f)
                            .unwrap_or(PlaneFactor::Monomial { q: 0, p: 0 });
                        let line: Complex64 = xs
                            .iter()
                            .zip(ws)
                            .map(|(&x, &w)| {
                                let f = if momentum { factor.eval(0.0, x) } else { factor.eval(x, 0.0) };
                                w * f * amplitude(k, j, x).conj() * amplitude(l, j, x)
                            })
                            .sum();
                        prod *= line;
                    }
                    total += state.branches()[k].coeff.conj() * state.branches()[l].coeff * prod;
                }
            }
        }
        return Ok(total.re);
    }

    let nodes = resolution.checked_pow(d as u32).unwrap_or(usize::MAX);
    if nodes > MAX_BRUTE_NODES {
        return Err(Error::Resource(format!(
            "tensor grid of {resolution}^{d} nodes exceeds the limit of {MAX_BRUTE_NODES}"
        )));
    }
    let mut idx = vec![0usize; d];
    let mut z = PhasePoint::origin(d);
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    for _ in 0..nodes {
        let mut w = 1.0;
        for j in 0..d {
            let (xs, ws) = &grids[j];
            x[j] = xs[idx[j]];
            w *= ws[idx[j]];
            if momentum {
                z.p_mut()[j] = x[j];
            } else {
                z.q_mut()[j] = x[j];
            }
        }
        let density = if momentum {
            state.momentum_amplitude(&x).norm_sqr()
        } else {
            state.position_amplitude(&x).norm_sqr()
        };
        total += w * obs.eval(&z) * density;
        for j in 0..d {
            idx[j] += 1;
            if idx[j] < resolution {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(total)
}
