//! Sampling of the two component densities of μ and the signed-mixture
//! expectation estimator.
//!
//! Uniform coordinate layout, for a point of dimension `2d + 2`:
//!
//! | component | `u[0]` | `u[1]` | `u[2]` | `u[3]` | rest |
//! |---|---|---|---|---|---|
//! | Husimi | branch | Gaussian `q₁` | Gaussian `q₂` | … | `2d` Gaussians in the order `q₁…q_d, p₁…p_d`; last coordinate unused |
//! | Hermite mixture | branch | plane | angle | squared radius | `2d − 2` Gaussians, same order with `q_j, p_j` removed |

mod estimator;
pub mod halton;
pub mod inverse_cdf;
pub mod source;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use estimator::{
    estimate_expectation, estimate_expectations, EstimatorConfig, EstimatorResult, Method,
    DEFAULT_CHUNK_SIZE, DEFAULT_SPLIT,
};
pub use halton::{halton_points, HaltonSequence, DEFAULT_HALTON_MAX_DIM};
pub use inverse_cdf::{gamma2_cdf, gamma2_inverse_cdf, inverse_normal_cdf};
pub use source::{PointSource, SourceKind, DEFAULT_HALTON_SKIP, PSEUDO_RANDOM_GENERATOR};

use crate::densities::{cross_damping, CrossTermMode, CrossTermPolicy};
use crate::error::{Error, Result};
use crate::phase::PhasePoint;
use crate::state::GaussianState;
use inverse_cdf::{gamma2_inverse_unchecked, inverse_normal_unchecked};

/// Number of uniform coordinates consumed per sampled point.
pub fn sampling_dimension(d: usize) -> usize {
    2 * d + 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    Husimi,
    HermiteMixture,
}

impl Component {
    /// Pseudo-random substream used for this component.
    pub fn stream(self) -> u64 {
        match self {
            Component::Husimi => 0,
            Component::HermiteMixture => 1,
        }
    }
}

/// Substream of the importance-sampled exact path.
pub(crate) const IMPORTANCE_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSample {
    pub point: PhasePoint,
    pub component: Component,
    pub branch: usize,
    /// Zero-based plane index, present for the Hermite mixture only.
    pub plane: Option<usize>,
}

/// Fails unless every pair of branches may be sampled independently under `policy`.
pub fn check_cross_terms(state: &GaussianState, policy: CrossTermPolicy) -> Result<()> {
    let bs = state.branches();
    for k in 0..bs.len() {
        for l in k + 1..bs.len() {
            let damping = cross_damping(&bs[k].center, &bs[l].center, state.h());
            let refuse = match policy.mode {
                CrossTermMode::Exact => true,
                CrossTermMode::NeglectBelowThreshold => damping >= policy.threshold,
            };
            if refuse {
                return Err(Error::CrossTermsNonNegligible(k, l, damping));
            }
        }
    }
    Ok(())
}

/// Maps uniform points to samples of the branch mixtures.
pub(crate) struct Transform<'a> {
    state: &'a GaussianState,
    cumulative: Vec<f64>,
    sqrt_h: f64,
}

impl<'a> Transform<'a> {
    pub(crate) fn new(state: &'a GaussianState) -> Self {
        let total = state.diagonal_weight();
        let mut acc = 0.0;
        let cumulative = state
            .branches()
            .iter()
            .map(|b| {
                acc += b.coeff.norm_sqr() / total;
                acc
            })
            .collect();
        Self {
            state,
            cumulative,
            sqrt_h: state.h().sqrt(),
        }
    }

    #[inline]
    fn branch(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }

    /// Writes the sample into `z`; returns `(branch, plane)`.
    #[inline]
    pub(crate) fn map(&self, component: Component, u: &[f64], z: &mut PhasePoint) -> (usize, Option<usize>) {
        let d = self.state.dim();
        let k = self.branch(u[0]);
        let center = &self.state.branches()[k].center;
        match component {
            Component::Husimi => {
                for j in 0..d {
                    z.q_mut()[j] = center.q()[j] + self.sqrt_h * inverse_normal_unchecked(u[1 + j]);
                    z.p_mut()[j] = center.p()[j] + self.sqrt_h * inverse_normal_unchecked(u[1 + d + j]);
                }
                (k, None)
            }
            Component::HermiteMixture => {
                let plane = ((u[1] * d as f64) as usize).min(d - 1);
                let theta = 2.0 * PI * u[2];
                let r = (2.0 * self.state.h() * gamma2_inverse_unchecked(u[3])).sqrt();
                let mut next = 4;
                for j in 0..d {
                    if j == plane {
                        continue;
                    }
                    z.q_mut()[j] = center.q()[j] + self.sqrt_h * inverse_normal_unchecked(u[next]);
                    next += 1;
                }
                for j in 0..d {
                    if j == plane {
                        continue;
                    }
                    z.p_mut()[j] = center.p()[j] + self.sqrt_h * inverse_normal_unchecked(u[next]);
                    next += 1;
                }
                let (cq, cp) = center.plane(plane);
                z.q_mut()[plane] = cq + r * theta.cos();
                z.p_mut()[plane] = cp + r * theta.sin();
                (k, Some(plane))
            }
        }
    }
}

fn check_source(state: &GaussianState, source: &PointSource) -> Result<()> {
    let want = sampling_dimension(state.dim());
    if source.dimension() != want {
        return Err(Error::DimensionMismatch {
            expected: want,
            found: source.dimension(),
        });
    }
    Ok(())
}

/// The first `n` samples of `component`.
pub fn sample_component(
    state: &GaussianState,
    component: Component,
    n: usize,
    source: &PointSource,
    policy: CrossTermPolicy,
) -> Result<Vec<ComponentSample>> {
    check_cross_terms(state, policy)?;
    check_source(state, source)?;
    let transform = Transform::new(state);
    let mut cursor = source.cursor(component.stream(), 0);
    let mut u = vec![0.0; source.dimension()];
    Ok((0..n)
        .map(|_| {
            cursor.next_into(&mut u);
            let mut point = PhasePoint::origin(state.dim());
            let (branch, plane) = transform.map(component, &u, &mut point);
            ComponentSample {
                point,
                component,
                branch,
                plane,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::SemiclassicalParam;
    use crate::testing::two_branch_state;
    use num_complex::Complex64;

    fn coherent(h: f64, q: &[f64], p: &[f64]) -> GaussianState {
        GaussianState::coherent(
            SemiclassicalParam::new(h).unwrap(),
            PhasePoint::new(q.to_vec(), p.to_vec()).unwrap(),
        )
    }

    #[test]
    fn husimi_moments() {
        let h = 0.04;
        let s = coherent(h, &[0.5, -1.0], &[2.0, 0.25]);
        let src = PointSource::pseudo_random(11, sampling_dimension(2)).unwrap();
        let n = 100_000;
        let samples = sample_component(&s, Component::Husimi, n, &src, CrossTermPolicy::neglect()).unwrap();
        let flat: Vec<Vec<f64>> = samples.iter().map(|c| c.point.to_flat()).collect();
        let center = [0.5, -1.0, 2.0, 0.25];
        let nf = n as f64;
        for a in 0..4 {
            let mean = flat.iter().map(|z| z[a]).sum::<f64>() / nf;
            assert!((mean - center[a]).abs() < 5.0 * (h / nf).sqrt(), "mean {a}");
            for b in 0..4 {
                let cov = flat
                    .iter()
                    .map(|z| (z[a] - center[a]) * (z[b] - center[b]))
                    .sum::<f64>()
                    / nf;
                let expect = if a == b { h } else { 0.0 };
                // sd of a sample covariance entry: h·sqrt(2/n) diagonal, h/sqrt(n) off
                let sd = if a == b { h * (2.0 / nf).sqrt() } else { h / nf.sqrt() };
                assert!((cov - expect).abs() < 5.0 * sd, "cov {a} {b}: {cov}");
            }
        }
        assert!(samples.iter().all(|c| c.plane.is_none() && c.branch == 0));
    }

    #[test]
    fn hermite_radius_mean() {
        let h = 0.1;
        let s = coherent(h, &[0.3], &[-0.2]);
        let src = PointSource::pseudo_random(5, sampling_dimension(1)).unwrap();
        let n = 100_000;
        let samples =
            sample_component(&s, Component::HermiteMixture, n, &src, CrossTermPolicy::neglect()).unwrap();
        let r2: Vec<f64> = samples
            .iter()
            .map(|c| (c.point.q()[0] - 0.3).powi(2) + (c.point.p()[0] + 0.2).powi(2))
            .collect();
        let mean = r2.iter().sum::<f64>() / n as f64;
        // Gamma(2, 2h): mean 4h, variance 8h²
        let sd = (8.0 * h * h / n as f64).sqrt();
        assert!((mean - 4.0 * h).abs() < 5.0 * sd, "{mean}");
        assert!(samples.iter().all(|c| c.plane == Some(0)));
    }

    /// Probability of the annulus a ≤ r < b under (2πh)⁻¹(r²/2h)e^{-r²/2h}.
    fn annulus_probability(h: f64, a: f64, b: f64) -> f64 {
        let cdf = |r: f64| {
            if r.is_infinite() {
                return 1.0;
            }
            let x = r * r / (2.0 * h);
            1.0 - (1.0 + x) * (-x).exp()
        };
        cdf(b) - cdf(a)
    }

    #[test]
    fn hermite_histogram_goodness_of_fit() {
        let h = 0.05;
        let s = coherent(h, &[0.0], &[0.0]);
        let src = PointSource::pseudo_random(99, sampling_dimension(1)).unwrap();
        let n = 100_000;
        let samples =
            sample_component(&s, Component::HermiteMixture, n, &src, CrossTermPolicy::neglect()).unwrap();
        // 2D histogram: 10 radial × 8 angular cells with equal-probability radii
        let radial = 10;
        let angular = 8;
        let mut edges = vec![0.0];
        for i in 1..radial {
            let x = gamma2_inverse_cdf(i as f64 / radial as f64).unwrap();
            edges.push((2.0 * h * x).sqrt());
        }
        edges.push(f64::INFINITY);
        let mut counts = vec![0usize; radial * angular];
        for c in &samples {
            let (q, p) = (c.point.q()[0], c.point.p()[0]);
            let r = (q * q + p * p).sqrt();
            let ri = edges.iter().rposition(|&e| e <= r).unwrap().min(radial - 1);
            let ang = p.atan2(q).rem_euclid(2.0 * PI);
            let ai = ((ang / (2.0 * PI) * angular as f64) as usize).min(angular - 1);
            counts[ri * angular + ai] += 1;
        }
        let mut chi2 = 0.0;
        for ri in 0..radial {
            let pr = annulus_probability(h, edges[ri], edges[ri + 1]) / angular as f64;
            for ai in 0..angular {
                let expect = pr * n as f64;
                let o = counts[ri * angular + ai] as f64;
                chi2 += (o - expect).powi(2) / expect;
            }
        }
        // 79 degrees of freedom; upper 10⁻³ quantile of χ²₇₉ is 122.2
        assert!(chi2 < 122.2, "chi2 = {chi2}");
    }

    #[test]
    fn hermite_planes_uniform_and_other_coordinates_gaussian() {
        let h = 0.02;
        let s = coherent(h, &[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]);
        let src = PointSource::pseudo_random(1, sampling_dimension(3)).unwrap();
        let n = 60_000;
        let samples =
            sample_component(&s, Component::HermiteMixture, n, &src, CrossTermPolicy::neglect()).unwrap();
        let mut per_plane = [0usize; 3];
        let mut off_var = 0.0;
        let mut off_n = 0;
        for c in &samples {
            let j = c.plane.unwrap();
            per_plane[j] += 1;
            for m in 0..3 {
                if m != j {
                    off_var += (c.point.q()[m] - (m + 1) as f64).powi(2);
                    off_n += 1;
                }
            }
        }
        for &c in &per_plane {
            let sd = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
            assert!((c as f64 - n as f64 / 3.0).abs() < 5.0 * sd);
        }
        let var = off_var / off_n as f64;
        assert!((var - h).abs() < 5.0 * h * (2.0 / off_n as f64).sqrt());
    }

    #[test]
    fn branch_selection_follows_weights() {
        let h = 0.01;
        let z1 = PhasePoint::new(vec![-3.0], vec![0.0]).unwrap();
        let z2 = PhasePoint::new(vec![3.0], vec![0.0]).unwrap();
        let s = GaussianState::new(
            SemiclassicalParam::new(h).unwrap(),
            vec![
                crate::state::Branch { coeff: Complex64::new(1.0, 0.0), center: z1 },
                crate::state::Branch { coeff: Complex64::new(0.0, 3f64.sqrt()), center: z2 },
            ],
        )
        .unwrap();
        let src = PointSource::pseudo_random(8, sampling_dimension(1)).unwrap();
        let n = 40_000;
        let samples = sample_component(&s, Component::Husimi, n, &src, CrossTermPolicy::neglect()).unwrap();
        let second = samples.iter().filter(|c| c.branch == 1).count() as f64 / n as f64;
        assert!((second - 0.75).abs() < 5.0 * (0.75 * 0.25 / n as f64).sqrt());
        for c in &samples {
            assert_eq!(c.branch == 1, c.point.q()[0] > 0.0);
        }
    }

    #[test]
    fn overlapping_branches_are_refused() {
        let s = two_branch_state(0.1);
        let src = PointSource::pseudo_random(0, sampling_dimension(2)).unwrap();
        let err = sample_component(&s, Component::Husimi, 10, &src, CrossTermPolicy::neglect());
        assert!(matches!(err, Err(Error::CrossTermsNonNegligible(0, 1, _))));
        assert!(err.unwrap_err().to_string().contains("importance"));
        // exact mode never samples superpositions independently
        let far = two_branch_state(0.001);
        assert!(sample_component(&far, Component::Husimi, 10, &src, CrossTermPolicy::neglect()).is_ok());
        assert!(sample_component(&far, Component::Husimi, 10, &src, CrossTermPolicy::exact()).is_err());
    }

    #[test]
    fn source_dimension_checked() {
        let s = coherent(0.1, &[0.0], &[0.0]);
        let src = PointSource::pseudo_random(0, 3).unwrap();
        assert!(matches!(
            sample_component(&s, Component::Husimi, 1, &src, CrossTermPolicy::neglect()),
            Err(Error::DimensionMismatch { expected: 4, found: 3 })
        ));
    }
}
