use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use phasemu::experiments::{self, CrossTermChoice, Experiment, RunConfig, SamplerKind, StateSpec};
use phasemu::sampling::Method;
use phasemu::Error;

/// Expectation values of semiclassical Gaussian states from phase-space densities.
#[derive(Parser, Debug)]
#[command(name = "phasemu", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Semiclassical parameter.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Phase-space half dimension.
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Number of sample points.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, value_enum)]
    sampler: Option<SamplerArg>,
    /// Seed of the pseudo-random generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of leading Halton points to skip.
    #[arg(long, global = true)]
    skip: Option<u64>,
    /// Fraction of points given to the Husimi component.
    #[arg(long, global = true)]
    split: Option<f64>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    /// Observable label; repeat for several.
    #[arg(long, global = true)]
    observable: Vec<String>,
    #[arg(long, global = true, value_enum)]
    state: Option<StateArg>,
    #[arg(long, global = true, value_enum)]
    cross_terms: Option<CrossArg>,
    /// Resource guard budget in single-thread seconds.
    #[arg(long, global = true)]
    budget_seconds: Option<f64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML or JSON config file, or a CSV written by an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run even when the projected cost exceeds the budget.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Radial sections of the Wigner, Husimi and mu densities of one packet.
    DensitySection {
        #[arg(long)]
        max_radius: Option<f64>,
        #[arg(long)]
        n_points: Option<usize>,
    },
    /// Expectation errors of the mu and Husimi methods over a list of h.
    AccuracySweep {
        /// Comma-separated, descending.
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        reference_resolution: Option<usize>,
    },
    /// Henon-Heiles energy errors over a list of dimensions.
    HenonHeiles {
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',')]
        d_list: Option<Vec<usize>>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// A single expectation value.
    Expectation,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SamplerArg {
    Mc,
    Halton,
    Grid,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Mu,
    Husimi,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StateArg {
    Superposition,
    HenonHeiles,
    Coherent,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CrossArg {
    Auto,
    Exact,
    Neglect,
}

fn flags(cli: &Cli) -> RunConfig {
    let c = &cli.common;
    let mut cfg = RunConfig {
        h: c.h,
        d: c.d,
        n: c.n,
        sampler: c.sampler.map(|s| match s {
            SamplerArg::Mc => SamplerKind::Mc,
            SamplerArg::Halton => SamplerKind::Halton,
            SamplerArg::Grid => SamplerKind::Grid,
        }),
        seed: c.seed,
        skip: c.skip,
        split: c.split,
        methods: c.method.map(|m| {
            vec![match m {
                MethodArg::Mu => Method::Mu,
                MethodArg::Husimi => Method::Husimi,
            }]
        }),
        observables: (!c.observable.is_empty()).then(|| c.observable.clone()),
        state: c.state.map(|s| match s {
            StateArg::Superposition => StateSpec::Superposition,
            StateArg::HenonHeiles => StateSpec::HenonHeiles,
            StateArg::Coherent => StateSpec::Coherent { q: vec![], p: vec![] },
        }),
        cross_terms: c.cross_terms.map(|x| match x {
            CrossArg::Auto => CrossTermChoice::Auto,
            CrossArg::Exact => CrossTermChoice::Exact,
            CrossArg::Neglect => CrossTermChoice::Neglect,
        }),
        budget_seconds: c.budget_seconds,
        out: c.out.clone(),
        ..Default::default()
    };
    // a dimension flag selects that dimension alone for Henon-Heiles runs
    cfg.experiment = Some(match &cli.command {
        Command::DensitySection { max_radius, n_points } => {
            cfg.max_radius = *max_radius;
            cfg.n_points = *n_points;
            Experiment::DensitySection
        }
        Command::AccuracySweep { h_list, grid_points, reference_resolution } => {
            cfg.h_list = h_list.clone();
            cfg.grid_points = *grid_points;
            cfg.reference_resolution = *reference_resolution;
            Experiment::AccuracySweep
        }
        Command::HenonHeiles { d_list, alpha } => {
            cfg.d_list = d_list.clone().or(c.d.map(|d| vec![d]));
            cfg.alpha = *alpha;
            Experiment::HenonHeiles
        }
        Command::Expectation => Experiment::Expectation,
    });
    cfg
}

fn execute(cli: &Cli) -> Result<(), Error> {
    if let Some(t) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    }
    let base = match &cli.common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    let config = base.overlay(flags(cli));
    let settings = config.resolve()?;
    let table = experiments::run(&settings, cli.common.force)?;
    match &config.out {
        Some(path) => {
            table.write_to(path)?;
            println!("wrote {} rows to {}", table.rows.len(), path.display());
            for (k, v) in &table.trailer {
                println!("{k}: {v}");
            }
        }
        None => print!("{}", table.render()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
