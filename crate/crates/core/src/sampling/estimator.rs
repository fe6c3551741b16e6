use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_cross_terms, check_source, Component, PointSource, Transform, IMPORTANCE_STREAM};
use crate::densities::{husimi, mu, CrossTermMode, CrossTermPolicy};
use crate::error::{check_dim, Error, Result};
use crate::observables::Observable;
use crate::phase::PhasePoint;
use crate::state::{state_norm2, GaussianState};

pub const DEFAULT_SPLIT: f64 = 0.5;
pub const DEFAULT_CHUNK_SIZE: usize = 4096;
const MAX_IMPORTANCE_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Signed mixture `(1 + d/2) H - (d/2) (1/d) Σ_j S_j`, error O(h²).
    Mu,
    /// Husimi density alone, error O(h).
    Husimi,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mu => "mu",
            Method::Husimi => "husimi",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(Method::Mu),
            "husimi" => Ok(Method::Husimi),
            _ => Err(Error::usage(format!("unknown method '{s}' (expected mu or husimi)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Total number of points over both components.
    pub n: usize,
    /// Fraction of points given to the Husimi component (mu method).
    pub split: f64,
    pub policy: CrossTermPolicy,
    pub chunk_size: usize,
}

impl EstimatorConfig {
    pub fn new(method: Method, n: usize) -> Self {
        Self {
            method,
            n,
            split: DEFAULT_SPLIT,
            policy: CrossTermPolicy::neglect(),
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn split(mut self, split: f64) -> Self {
        self.split = split;
        self
    }

    pub fn policy(mut self, policy: CrossTermPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::usage("need at least 2 sample points"));
        }
        if self.method == Method::Mu && !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::usage(format!("split must lie in (0, 1), got {}", self.split)));
        }
        if self.chunk_size == 0 {
            return Err(Error::usage("chunk size must be positive"));
        }
        Ok(())
    }

    /// Points given to the Husimi and Hermite components.
    pub fn budgets(&self) -> (usize, usize) {
        match self.method {
            Method::Husimi => (self.n, 0),
            Method::Mu => {
                let nh = ((self.n as f64 * self.split).round() as usize).clamp(1, self.n - 1);
                (nh, self.n - nh)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub label: String,
    pub method: Method,
    pub value: f64,
    /// Standard error; meaningful only when `stderr_available`.
    pub stderr: f64,
    /// False for Halton points, whose error has no sampling estimate.
    pub stderr_available: bool,
    pub n_husimi: usize,
    pub n_hermite: usize,
    /// Normalized component means; `value = (1 + d/2) mean_husimi - (d/2) mean_hermite`
    /// for the mu method. With importance weighting, `mean_husimi` is the
    /// weighted mean itself.
    pub mean_husimi: f64,
    pub mean_hermite: Option<f64>,
    pub importance_weighted: bool,
}

/// Running mean and centred second moment.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + delta * (b.n / n),
            m2: a.m2 + b.m2 + delta * delta * (a.n * b.n / n),
        }
    }

    /// Variance of the mean.
    fn mean_variance(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            self.m2 / (self.n - 1.0) / self.n
        }
    }
}

fn merge_all(a: Vec<Moments>, b: Vec<Moments>) -> Vec<Moments> {
    a.into_iter().zip(b).map(|(x, y)| Moments::merge(x, y)).collect()
}

/// Pairwise reduction of the per-chunk accumulators in chunk order.
fn tree_reduce(mut level: Vec<Vec<Moments>>, width: usize) -> Vec<Moments> {
    if level.is_empty() {
        return vec![Moments::default(); width];
    }
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => merge_all(a, b),
                None => a,
            });
        }
        level = next;
    }
    level.pop().unwrap()
}

/// Per-observable moments of `f(point)` over the first `n` points of `stream`.
/// Chunks and their reduction order depend only on `n` and `chunk_size`.
fn accumulate<F>(
    source: &PointSource,
    stream: u64,
    n: usize,
    chunk_size: usize,
    width: usize,
    d: usize,
    f: F,
) -> Vec<Moments>
where
    F: Fn(&[f64], &mut PhasePoint, &mut [Moments]) + Sync,
{
    let chunks = n.div_ceil(chunk_size);
    let partial: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk_size;
            let end = (start + chunk_size).min(n);
            let mut cursor = source.cursor(stream, start as u64);
            let mut u = vec![0.0; source.dimension()];
            let mut z = PhasePoint::origin(d);
            let mut acc = vec![Moments::default(); width];
            for _ in start..end {
                cursor.next_into(&mut u);
                f(&u, &mut z, &mut acc);
            }
            acc
        })
        .collect();
    tree_reduce(partial, width)
}

/// Estimates `<A>` for one observable; see [`estimate_expectations`].
pub fn estimate_expectation(
    state: &GaussianState,
    obs: &Observable,
    source: &PointSource,
    config: &EstimatorConfig,
) -> Result<EstimatorResult> {
    Ok(estimate_expectations(state, std::slice::from_ref(obs), source, config)?
        .pop()
        .unwrap())
}

/// Estimates normalized expectations of several observables on a shared set
/// of sample points.
///
/// Independent branch sampling is used when the policy allows cross terms to
/// be neglected. Under the exact policy a superposition with `d <= 3` is
/// instead handled by importance sampling from the branch Husimi mixture with
/// weight `density_exact / proposal`.
pub fn estimate_expectations(
    state: &GaussianState,
    observables: &[Observable],
    source: &PointSource,
    config: &EstimatorConfig,
) -> Result<Vec<EstimatorResult>> {
    config.validate()?;
    check_source(state, source)?;
    for obs in observables {
        check_dim(state.dim(), obs.dim())?;
    }
    if config.policy.mode == CrossTermMode::Exact && !state.is_single() {
        if state.dim() > MAX_IMPORTANCE_DIM {
            // report the offending pair, as the independent sampler would
            check_cross_terms(state, config.policy)?;
        }
        return estimate_importance(state, observables, source, config);
    }
    check_cross_terms(state, config.policy)?;

    let d = state.dim();
    let width = observables.len();
    let transform = Transform::new(state);
    let (n_h, n_s) = config.budgets();
    let component = |comp: Component, n: usize| {
        accumulate(source, comp.stream(), n, config.chunk_size, width, d, |u, z, acc| {
            transform.map(comp, u, z);
            for (m, obs) in acc.iter_mut().zip(observables) {
                m.push(obs.eval(z));
            }
        })
    };
    let husimi_moments = component(Component::Husimi, n_h);
    let hermite_moments = if n_s > 0 {
        Some(component(Component::HermiteMixture, n_s))
    } else {
        None
    };

    let scale = state.diagonal_weight() / state_norm2(state);
    let (wh, ws) = (1.0 + 0.5 * d as f64, 0.5 * d as f64);
    let with_stderr = source.is_pseudo_random();
    Ok(observables
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            let mh = husimi_moments[i];
            let mean_husimi = scale * mh.mean;
            let (value, variance, mean_hermite) = match (&hermite_moments, config.method) {
                (Some(hs), Method::Mu) => {
                    let ms = hs[i];
                    let mean_hermite = scale * ms.mean;
                    (
                        wh * mean_husimi - ws * mean_hermite,
                        wh * wh * mh.mean_variance() + ws * ws * ms.mean_variance(),
                        Some(mean_hermite),
                    )
                }
                _ => (mean_husimi, mh.mean_variance(), None),
            };
            EstimatorResult {
                label: obs.label().to_string(),
                method: config.method,
                value,
                stderr: if with_stderr { scale * variance.sqrt() } else { 0.0 },
                stderr_available: with_stderr,
                n_husimi: n_h,
                n_hermite: n_s,
                mean_husimi,
                mean_hermite,
                importance_weighted: false,
            }
        })
        .collect())
}

fn estimate_importance(
    state: &GaussianState,
    observables: &[Observable],
    source: &PointSource,
    config: &EstimatorConfig,
) -> Result<Vec<EstimatorResult>> {
    let d = state.dim();
    let h = state.h();
    let width = observables.len();
    let transform = Transform::new(state);
    let total = state.diagonal_weight();
    let norm = (2.0 * std::f64::consts::PI * h).powi(-(d as i32));
    let proposal = |z: &PhasePoint| -> f64 {
        state
            .branches()
            .iter()
            .map(|b| b.coeff.norm_sqr() / total * norm * (-z.dist2(&b.center) / (2.0 * h)).exp())
            .sum()
    };
    let policy = CrossTermPolicy::exact();
    let method = config.method;
    let moments = accumulate(source, IMPORTANCE_STREAM, config.n, config.chunk_size, width, d, |u, z, acc| {
        transform.map(Component::Husimi, u, z);
        let target = match method {
            Method::Mu => mu(state, z, policy),
            Method::Husimi => husimi(state, z),
        }
        .expect("dimensions checked");
        let weight = target / proposal(z);
        for (m, obs) in acc.iter_mut().zip(observables) {
            m.push(weight * obs.eval(z));
        }
    });
    let norm2 = state_norm2(state);
    let with_stderr = source.is_pseudo_random();
    Ok(observables
        .iter()
        .zip(moments)
        .map(|(obs, m)| {
            let value = m.mean / norm2;
            EstimatorResult {
                label: obs.label().to_string(),
                method,
                value,
                stderr: if with_stderr { m.mean_variance().sqrt() / norm2 } else { 0.0 },
                stderr_available: with_stderr,
                n_husimi: config.n,
                n_hermite: 0,
                mean_husimi: value,
                mean_hermite: None,
                importance_weighted: true,
            }
        })
        .collect())
}
