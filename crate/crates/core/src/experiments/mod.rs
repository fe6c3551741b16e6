//! The numerical experiments behind the command line front end.

pub mod config;
pub mod csv;
mod runs;

pub use config::{
    BranchSpec, CrossTermChoice, Experiment, RunConfig, SamplerKind, Settings, StateSpec, DEFAULT_BUDGET_SECONDS,
};
pub use csv::{format_real, Cell, CsvTable};
pub use runs::{
    density_section, grid_expectation, least_squares_slope, projected_sampling_seconds, reference_expectation, run,
    run_accuracy_sweep, run_density_section, run_expectation, run_henon_heiles, version_string, DensityRow,
    ExpectationRow, SlopeFit, SweepResult, SweepRow, SweepVariable,
};
