//! Run configuration: optional fields from a config file and command-line
//! flags, resolved against per-experiment defaults into [`Settings`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::densities::{CrossTermPolicy, DEFAULT_CROSS_THRESHOLD};
use crate::error::{Error, Result};
use crate::observables::{HenonHeilesSpec, DEFAULT_REFERENCE_RESOLUTION, HENON_HEILES_ALPHA, HENON_HEILES_H};
use crate::phase::PhasePoint;
use crate::quadrature::DEFAULT_POINTS_PER_AXIS;
use crate::sampling::{check_cross_terms, Method, DEFAULT_CHUNK_SIZE, DEFAULT_HALTON_SKIP, DEFAULT_SPLIT};
use crate::state::{Branch, GaussianState, SemiclassicalParam};

/// Default time budget of the resource guard, single-thread seconds.
pub const DEFAULT_BUDGET_SECONDS: f64 = 600.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DensitySection,
    AccuracySweep,
    HenonHeiles,
    Expectation,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::DensitySection => "density-section",
            Experiment::AccuracySweep => "accuracy-sweep",
            Experiment::HenonHeiles => "henon-heiles",
            Experiment::Expectation => "expectation",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How expectations are discretized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Deterministic phase-space trapezoid quadrature.
    Grid,
    /// Pseudo-random points.
    Mc,
    /// Halton points.
    Halton,
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(SamplerKind::Grid),
            "mc" => Ok(SamplerKind::Mc),
            "halton" => Ok(SamplerKind::Halton),
            _ => Err(Error::usage(format!("unknown sampler '{s}' (expected mc, halton or grid)"))),
        }
    }
}

/// Cross-term handling for sampling runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossTermChoice {
    /// Neglect when every pair is below the threshold, otherwise exact.
    Auto,
    Exact,
    Neglect,
}

impl CrossTermChoice {
    pub fn policy(self, state: &GaussianState, threshold: f64) -> Result<CrossTermPolicy> {
        let neglect = CrossTermPolicy::neglect_below(threshold)?;
        Ok(match self {
            CrossTermChoice::Exact => CrossTermPolicy::exact(),
            CrossTermChoice::Neglect => neglect,
            CrossTermChoice::Auto => {
                if check_cross_terms(state, neglect).is_ok() {
                    neglect
                } else {
                    CrossTermPolicy::exact()
                }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// `g_{z1} + g_{z2}` with `z1 = (-1, 1, 1, 1)`, `z2 = (0, 1, -1, -1/2)`, `d = 2`.
    Superposition,
    /// `q_j = 0.3645`, `p = (1, 0, …, 0)` in any `d >= 2`.
    HenonHeiles,
    /// One packet; empty coordinates mean the origin in dimension `d`.
    Coherent {
        #[serde(default)]
        q: Vec<f64>,
        #[serde(default)]
        p: Vec<f64>,
    },
    Branches { branches: Vec<BranchSpec> },
}

impl StateSpec {
    /// Dimension implied by the specification, if any.
    pub fn implied_dim(&self) -> Option<usize> {
        match self {
            StateSpec::Superposition => Some(2),
            StateSpec::HenonHeiles => None,
            StateSpec::Coherent { q, .. } => (!q.is_empty()).then_some(q.len()),
            StateSpec::Branches { branches } => branches.first().map(|b| b.q.len()),
        }
    }

    pub fn build(&self, h: f64, d: usize) -> Result<GaussianState> {
        let param = SemiclassicalParam::new(h)?;
        if let Some(implied) = self.implied_dim() {
            if implied != d {
                return Err(Error::usage(format!(
                    "state has dimension {implied} but d = {d} was requested"
                )));
            }
        }
        match self {
            StateSpec::Superposition => GaussianState::superposition(
                param,
                PhasePoint::new(vec![-1.0, 1.0], vec![1.0, 1.0])?,
                PhasePoint::new(vec![0.0, 1.0], vec![-1.0, -0.5])?,
            ),
            StateSpec::HenonHeiles => {
                let mut spec = HenonHeilesSpec::new(d)?;
                spec.h = param;
                Ok(spec.initial_state())
            }
            StateSpec::Coherent { q, p } => {
                let center = if q.is_empty() && p.is_empty() {
                    PhasePoint::origin(d)
                } else {
                    PhasePoint::new(q.clone(), p.clone())?
                };
                Ok(GaussianState::coherent(param, center))
            }
            StateSpec::Branches { branches } => {
                let bs = branches
                    .iter()
                    .map(|b| {
                        Ok(Branch {
                            coeff: Complex64::new(b.re, b.im),
                            center: PhasePoint::new(b.q.clone(), b.p.clone())?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                GaussianState::new(param, bs)
            }
        }
    }
}

/// Optional run settings as read from a config file or flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub h: Option<f64>,
    pub h_list: Option<Vec<f64>>,
    pub d: Option<usize>,
    pub d_list: Option<Vec<usize>>,
    pub state: Option<StateSpec>,
    pub observables: Option<Vec<String>>,
    pub methods: Option<Vec<Method>>,
    pub sampler: Option<SamplerKind>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub skip: Option<u64>,
    pub split: Option<f64>,
    pub cross_terms: Option<CrossTermChoice>,
    pub cross_threshold: Option<f64>,
    pub alpha: Option<f64>,
    pub max_radius: Option<f64>,
    pub n_points: Option<usize>,
    pub grid_points: Option<usize>,
    pub reference_resolution: Option<usize>,
    pub chunk_size: Option<usize>,
    pub budget_seconds: Option<f64>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    /// Fields set in `top` replace those of `self`.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay!(self, top; experiment, h, h_list, d, d_list, state, observables, methods, sampler, n,
            seed, skip, split, cross_terms, cross_threshold, alpha, max_radius, n_points, grid_points,
            reference_resolution, chunk_size, budget_seconds, out);
        self
    }

    /// Reads a TOML or JSON document, or the `# config:` line of a CSV
    /// written by a previous run.
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<RunConfig> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('#') {
            let line = text
                .lines()
                .find_map(|l| l.strip_prefix("# config: "))
                .ok_or_else(|| Error::usage("file has no '# config:' metadata line"))?;
            return serde_json::from_str(line).map_err(|e| Error::usage(format!("config line: {e}")));
        }
        if trimmed.starts_with('{') {
            return serde_json::from_str(text).map_err(|e| Error::usage(format!("JSON config: {e}")));
        }
        toml::from_str(text).map_err(|e| Error::usage(format!("TOML config: {e}")))
    }

    pub fn resolve(&self) -> Result<Settings> {
        let experiment = self
            .experiment
            .ok_or_else(|| Error::usage("no experiment selected"))?;
        let default_h_list = vec![1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5), 1e-3];
        let labels = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let state = self.state.clone().unwrap_or(match experiment {
            Experiment::DensitySection => StateSpec::Coherent { q: vec![], p: vec![] },
            Experiment::HenonHeiles => StateSpec::HenonHeiles,
            Experiment::AccuracySweep | Experiment::Expectation => StateSpec::Superposition,
        });
        let d = self.d.or(state.implied_dim()).unwrap_or(match experiment {
            Experiment::DensitySection => 1,
            _ => 2,
        });
        let h = self.h.unwrap_or(match (experiment, &state) {
            (Experiment::DensitySection, _) => 0.1,
            (_, StateSpec::HenonHeiles) => HENON_HEILES_H,
            _ => 1e-2,
        });
        let settings = Settings {
            experiment,
            h,
            h_list: self.h_list.clone().unwrap_or(default_h_list),
            d,
            d_list: self.d_list.clone().unwrap_or_else(|| match (experiment, self.d) {
                (Experiment::HenonHeiles, None) => vec![2, 4, 8, 16, 32, 64, 128],
                _ => vec![d],
            }),
            state,
            observables: self.observables.clone().unwrap_or_else(|| match experiment {
                Experiment::DensitySection => vec![],
                Experiment::AccuracySweep => labels(&["torsional", "quartic-momentum", "cubic-control"]),
                Experiment::HenonHeiles => labels(&["hh-kinetic", "hh-potential", "hh-total"]),
                Experiment::Expectation => labels(&["torsional"]),
            }),
            methods: self.methods.clone().unwrap_or_else(|| match experiment {
                Experiment::AccuracySweep => vec![Method::Mu, Method::Husimi],
                _ => vec![Method::Mu],
            }),
            sampler: self.sampler.unwrap_or(match experiment {
                Experiment::DensitySection | Experiment::AccuracySweep => SamplerKind::Grid,
                _ => SamplerKind::Halton,
            }),
            n: self.n.unwrap_or(match experiment {
                Experiment::HenonHeiles => 100_000_000,
                _ => 1_000_000,
            }),
            seed: self.seed.unwrap_or(0),
            skip: self.skip.unwrap_or(DEFAULT_HALTON_SKIP),
            split: self.split.unwrap_or(DEFAULT_SPLIT),
            cross_terms: self.cross_terms.unwrap_or(CrossTermChoice::Auto),
            cross_threshold: self.cross_threshold.unwrap_or(DEFAULT_CROSS_THRESHOLD),
            alpha: self.alpha.unwrap_or(HENON_HEILES_ALPHA),
            max_radius: self.max_radius.unwrap_or(6.0 * h.sqrt()),
            n_points: self.n_points.unwrap_or(241),
            grid_points: self.grid_points.unwrap_or(DEFAULT_POINTS_PER_AXIS),
            reference_resolution: self.reference_resolution.unwrap_or(DEFAULT_REFERENCE_RESOLUTION),
            chunk_size: self.chunk_size.unwrap_or(DEFAULT_CHUNK_SIZE),
            budget_seconds: self.budget_seconds.unwrap_or(DEFAULT_BUDGET_SECONDS),
        };
        settings.validate()?;
        Ok(settings)
    }
}

/// Fully resolved settings; serialized into every output's metadata so a
/// run can be repeated from its CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub experiment: Experiment,
    pub h: f64,
    pub h_list: Vec<f64>,
    pub d: usize,
    pub d_list: Vec<usize>,
    pub state: StateSpec,
    pub observables: Vec<String>,
    pub methods: Vec<Method>,
    pub sampler: SamplerKind,
    pub n: usize,
    pub seed: u64,
    pub skip: u64,
    pub split: f64,
    pub cross_terms: CrossTermChoice,
    pub cross_threshold: f64,
    pub alpha: f64,
    pub max_radius: f64,
    pub n_points: usize,
    pub grid_points: usize,
    pub reference_resolution: usize,
    pub chunk_size: usize,
    pub budget_seconds: f64,
}

impl Settings {
    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::usage(format!("{name} must be positive, got {v}")))
            }
        };
        positive("h", self.h)?;
        for &h in &self.h_list {
            positive("h_list entry", h)?;
        }
        if self.h_list.is_empty() || self.h_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::usage("h_list must be non-empty and strictly descending"));
        }
        if self.d == 0 || self.d_list.is_empty() || self.d_list.contains(&0) {
            return Err(Error::usage("dimensions must be at least 1"));
        }
        if self.d_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::usage("d_list must be strictly ascending"));
        }
        if self.n < 2 {
            return Err(Error::usage("n must be at least 2"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::usage(format!("split must lie in (0, 1), got {}", self.split)));
        }
        if self.skip == 0 {
            return Err(Error::usage("Halton skip must be at least 1"));
        }
        if !(self.cross_threshold >= 0.0) {
            return Err(Error::usage("cross_threshold must be non-negative"));
        }
        positive("max_radius", self.max_radius)?;
        positive("budget_seconds", self.budget_seconds)?;
        if self.n_points < 2 || self.grid_points < 3 || self.reference_resolution < 3 || self.chunk_size == 0 {
            return Err(Error::usage("grid sizes and chunk size are too small"));
        }
        if self.methods.is_empty() {
            return Err(Error::usage("at least one method is required"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("settings serialize")
    }
}
