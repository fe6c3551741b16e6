use std::time::Instant;

use serde::Serialize;

use super::config::{Experiment, SamplerKind, Settings, StateSpec};
use super::csv::{format_real, Cell, CsvTable};
use crate::densities::{husimi, mu_coherent, wigner_coherent, CrossTermPolicy};
use crate::error::{Error, Result};
use crate::observables::{
    observable_by_label, reference_expectation_grid, weyl_expectation_gaussian, Observable, Side,
};
use crate::phase::PhasePoint;
use crate::quadrature::{integrate_densities, PhaseGrid, DEFAULT_RADIUS_SDS};
use crate::sampling::{
    estimate_expectations, sampling_dimension, EstimatorConfig, EstimatorResult, Method, PointSource,
};
use crate::state::{state_norm2, GaussianState};

/// Package name, version and the `git describe` of the build tree.
pub fn version_string() -> String {
    format!(
        "{} {} (git {})",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        env!("PHASEMU_GIT_DESCRIBE")
    )
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("{what} is not finite ({v})")))
    }
}

fn rel_error(abs: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        abs
    } else {
        abs / reference.abs()
    }
}

/// Normalized reference `<Â>`: Gaussian moments for polynomials on a single
/// packet, otherwise the one-sided marginal grid when the symbol depends on
/// `q` or `p` only and `d <= 3`.
pub fn reference_expectation(state: &GaussianState, obs: &Observable, resolution: usize) -> Result<Option<f64>> {
    if state.is_single() {
        if let Some(poly) = obs.polynomial() {
            return weyl_expectation_gaussian(poly, state).map(Some);
        }
    }
    let side = match obs.side() {
        Side::PositionOnly | Side::Neither => Side::PositionOnly,
        Side::MomentumOnly => Side::MomentumOnly,
        Side::Mixed => return Ok(None),
    };
    match reference_expectation_grid(state, obs, side, resolution) {
        Ok(v) => Ok(Some(v / state_norm2(state))),
        Err(Error::Resource(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Normalized `∫ A ρ` by phase-space quadrature, `ρ` the method's density.
pub fn grid_expectation(state: &GaussianState, obs: &Observable, method: Method, points: usize) -> Result<f64> {
    let sep = obs.separable().ok_or_else(|| {
        Error::Unsupported(format!(
            "observable '{}' has no separable form for grid quadrature; use a sampler",
            obs.label()
        ))
    })?;
    let grid = PhaseGrid { points_per_axis: points, radius_sds: DEFAULT_RADIUS_SDS };
    let ints = integrate_densities(state, sep, grid)?;
    let raw = match method {
        Method::Mu => ints.mu,
        Method::Husimi => ints.husimi,
    };
    Ok(raw / state_norm2(state))
}

/// Projected single-thread seconds for `n` sample points in dimension `d`
/// evaluating polynomial symbols with `terms` monomials in total. The
/// constants are a conservative fit to timings of the release build.
pub fn projected_sampling_seconds(d: usize, n: usize, terms: usize) -> f64 {
    n as f64 * (sampling_dimension(d) as f64 * 8e-8 + terms as f64 * 1.5e-8 + 2e-7)
}

fn term_count(observables: &[Observable]) -> usize {
    observables
        .iter()
        .map(|o| o.polynomial().map_or(8, |p| p.terms().len()))
        .sum()
}

fn guard(projected: f64, settings: &Settings, force: bool) -> Result<()> {
    if projected > settings.budget_seconds && !force {
        return Err(Error::Resource(format!(
            "projected run time {projected:.0} s exceeds the budget of {:.0} s; pass --force to run anyway",
            settings.budget_seconds
        )));
    }
    Ok(())
}

fn source_for(settings: &Settings, d: usize) -> Result<PointSource> {
    match settings.sampler {
        SamplerKind::Mc => PointSource::pseudo_random(settings.seed, sampling_dimension(d)),
        SamplerKind::Halton => PointSource::halton(settings.skip, 1, sampling_dimension(d)),
        SamplerKind::Grid => Err(Error::usage("grid quadrature has no point source")),
    }
}

fn estimator_config(settings: &Settings, method: Method, n: usize, policy: CrossTermPolicy) -> EstimatorConfig {
    EstimatorConfig::new(method, n)
        .split(settings.split)
        .policy(policy)
        .chunk_size(settings.chunk_size)
}

fn observables_for(settings: &Settings, d: usize) -> Result<Vec<Observable>> {
    settings
        .observables
        .iter()
        .map(|l| observable_by_label(l, d, settings.alpha))
        .collect()
}

// ---------------------------------------------------------------------------
// density section

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub radius: f64,
    pub wigner: f64,
    pub husimi: f64,
    pub mu: f64,
}

/// Radial sections of the Wigner, Husimi and μ densities of one packet in
/// `d = 1`, on `n_points` radii evenly spaced in `[0, max_radius]`.
pub fn density_section(h: f64, max_radius: f64, n_points: usize) -> Result<Vec<DensityRow>> {
    if !(h > 0.0) || !(max_radius > 0.0) || n_points < 2 {
        return Err(Error::usage("density section needs h > 0, max_radius > 0 and n_points >= 2"));
    }
    let z = PhasePoint::origin(1);
    let state = StateSpec::Coherent { q: vec![0.0], p: vec![0.0] }.build(h, 1)?;
    (0..n_points)
        .map(|i| {
            let radius = max_radius * i as f64 / (n_points - 1) as f64;
            let w = PhasePoint::new(vec![radius], vec![0.0])?;
            Ok(DensityRow {
                radius,
                wigner: wigner_coherent(&z, h, &w),
                husimi: husimi(&state, &w)?,
                mu: mu_coherent(&z, h, &w),
            })
        })
        .collect()
}

pub fn run_density_section(settings: &Settings) -> Result<CsvTable> {
    if settings.d != 1 || !matches!(settings.state, StateSpec::Coherent { .. }) {
        return Err(Error::usage("density-section needs a single packet in d = 1"));
    }
    let rows = density_section(settings.h, settings.max_radius, settings.n_points)?;
    let mut table = CsvTable::new(&["radius", "wigner", "husimi", "mu"]);
    for r in rows {
        table.push_row(vec![r.radius.into(), r.wigner.into(), r.husimi.into(), r.mu.into()]);
    }
    table.footer("mu_root", format_real(2.0 * (settings.h * 1.5).sqrt()));
    Ok(table)
}

// ---------------------------------------------------------------------------
// sweeps

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    H,
    D,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// Value of the sweep variable (`h` or `d`).
    pub variable: f64,
    pub method: Method,
    pub observable: String,
    pub estimate: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    /// Sampling standard error (pseudo-random points only).
    pub stderr: Option<f64>,
    /// Estimated quadrature or sampling noise in `estimate - reference`.
    pub noise_floor: f64,
    /// Sample points, or tensor-grid nodes for quadrature.
    pub n: u64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub method: Method,
    pub observable: String,
    /// `None` when some error is within 10x its noise floor.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
    pub slopes: Vec<SlopeFit>,
}

impl SweepResult {
    pub fn rows_for<'a>(&'a self, method: Method, observable: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.method == method && r.observable == observable)
    }

    pub fn slope(&self, method: Method, observable: &str) -> Option<f64> {
        self.slopes
            .iter()
            .find(|s| s.method == method && s.observable == observable)
            .and_then(|s| s.slope)
    }

    pub fn to_table(&self) -> CsvTable {
        let var = match self.variable {
            SweepVariable::H => "h",
            SweepVariable::D => "d",
        };
        let mut table = CsvTable::new(&[
            var,
            "method",
            "observable",
            "estimate",
            "reference",
            "abs_error",
            "rel_error",
            "stderr",
            "noise_floor",
            "n",
            "wall_time_s",
        ]);
        for r in &self.rows {
            let v = match self.variable {
                SweepVariable::H => Cell::Real(r.variable),
                SweepVariable::D => Cell::Int(r.variable as u64),
            };
            table.push_row(vec![
                v,
                r.method.as_str().into(),
                r.observable.as_str().into(),
                r.estimate.into(),
                r.reference.into(),
                r.abs_error.into(),
                r.rel_error.into(),
                r.stderr.into(),
                r.noise_floor.into(),
                r.n.into(),
                r.wall_time_s.into(),
            ]);
        }
        for s in &self.slopes {
            let key = format!("slope[{},{}]", s.method, s.observable);
            let value = match s.slope {
                Some(v) => format_real(v),
                None => "omitted (errors within 10x the noise floor)".to_string(),
            };
            table.footer(key, value);
        }
        table
    }
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn fit_slopes(rows: &[SweepRow], methods: &[Method], observables: &[String]) -> Vec<SlopeFit> {
    let mut fits = Vec::new();
    for obs in observables {
        for &method in methods {
            let sel: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.method == method && &r.observable == obs)
                .collect();
            let resolved = sel.len() >= 2 && sel.iter().all(|r| r.abs_error > 10.0 * r.noise_floor);
            let slope = resolved.then(|| {
                let pts: Vec<(f64, f64)> = sel
                    .iter()
                    .map(|r| (r.variable.log10(), r.abs_error.log10()))
                    .collect();
                least_squares_slope(&pts)
            });
            fits.push(SlopeFit { method, observable: obs.clone(), slope });
        }
    }
    fits
}

/// Errors of each method against the reference over `h_list`, by grid
/// quadrature or, with a point sampler, by the sampling estimator.
pub fn run_accuracy_sweep(settings: &Settings, force: bool) -> Result<SweepResult> {
    let d = settings.d;
    let observables = observables_for(settings, d)?;
    if settings.sampler != SamplerKind::Grid {
        let per_h = projected_sampling_seconds(d, settings.n, term_count(&observables))
            * settings.methods.len() as f64
            * 1.5;
        guard(per_h * settings.h_list.len() as f64, settings, force)?;
    }
    let mut rows = Vec::new();
    for &h in &settings.h_list {
        let state = settings.state.build(h, d)?;
        if settings.sampler == SamplerKind::Grid {
            sweep_grid_rows(settings, &state, &observables, h, &mut rows)?;
        } else {
            sweep_sampled_rows(settings, &state, &observables, h, &mut rows)?;
        }
    }
    let slopes = fit_slopes(&rows, &settings.methods, &settings.observables);
    Ok(SweepResult { variable: SweepVariable::H, rows, slopes })
}

fn reference_with_floor(state: &GaussianState, obs: &Observable, resolution: usize) -> Result<(f64, f64)> {
    let reference = reference_expectation(state, obs, resolution)?.ok_or_else(|| {
        Error::Unsupported(format!("no reference available for observable '{}'", obs.label()))
    })?;
    let exact_moments = state.is_single() && obs.polynomial().is_some();
    let floor = if exact_moments {
        0.0
    } else {
        let fine = reference_expectation(state, obs, 2 * resolution)?.unwrap_or(reference);
        (fine - reference).abs()
    };
    Ok((finite(reference, "reference")?, floor))
}

fn sweep_grid_rows(
    settings: &Settings,
    state: &GaussianState,
    observables: &[Observable],
    h: f64,
    rows: &mut Vec<SweepRow>,
) -> Result<()> {
    let nodes = (settings.grid_points as u64).saturating_pow(2 * state.dim() as u32);
    let fine_points = settings.grid_points * 3 / 2;
    for obs in observables {
        let (reference, ref_floor) = reference_with_floor(state, obs, settings.reference_resolution)?;
        for &method in &settings.methods {
            let t0 = Instant::now();
            let estimate = finite(grid_expectation(state, obs, method, settings.grid_points)?, "estimate")?;
            let wall = t0.elapsed().as_secs_f64();
            let fine = grid_expectation(state, obs, method, fine_points)?;
            let abs_error = (estimate - reference).abs();
            rows.push(SweepRow {
                variable: h,
                method,
                observable: obs.label().to_string(),
                estimate,
                reference,
                abs_error,
                rel_error: rel_error(abs_error, reference),
                stderr: None,
                noise_floor: (fine - estimate).abs() + ref_floor,
                n: nodes,
                wall_time_s: wall,
            });
        }
    }
    Ok(())
}

fn sweep_sampled_rows(
    settings: &Settings,
    state: &GaussianState,
    observables: &[Observable],
    h: f64,
    rows: &mut Vec<SweepRow>,
) -> Result<()> {
    let source = source_for(settings, state.dim())?;
    let policy = settings.cross_terms.policy(state, settings.cross_threshold)?;
    let refs = observables
        .iter()
        .map(|o| reference_with_floor(state, o, settings.reference_resolution))
        .collect::<Result<Vec<_>>>()?;
    for &method in &settings.methods {
        let t0 = Instant::now();
        let cfg = estimator_config(settings, method, settings.n, policy);
        let results = estimate_expectations(state, observables, &source, &cfg)?;
        let wall = t0.elapsed().as_secs_f64();
        // Halton points carry no standard error: compare with half the points
        let half = if source.is_pseudo_random() {
            None
        } else {
            let cfg = estimator_config(settings, method, (settings.n / 2).max(2), policy);
            Some(estimate_expectations(state, observables, &source, &cfg)?)
        };
        for (i, r) in results.iter().enumerate() {
            let (reference, ref_floor) = refs[i];
            let estimate = finite(r.value, "estimate")?;
            let abs_error = (estimate - reference).abs();
            let sampling_floor = match &half {
                None => r.stderr,
                Some(hs) => (hs[i].value - estimate).abs(),
            };
            rows.push(SweepRow {
                variable: h,
                method,
                observable: r.label.clone(),
                estimate,
                reference,
                abs_error,
                rel_error: rel_error(abs_error, reference),
                stderr: r.stderr_available.then_some(r.stderr),
                noise_floor: sampling_floor + ref_floor,
                n: settings.n as u64,
                wall_time_s: wall,
            });
        }
    }
    Ok(())
}

/// Energy errors of the Hénon–Heiles benchmark packet over `d_list`.
pub fn run_henon_heiles(settings: &Settings, force: bool) -> Result<SweepResult> {
    if !matches!(settings.state, StateSpec::HenonHeiles) {
        return Err(Error::usage("henon-heiles runs the Henon-Heiles benchmark state only"));
    }
    if let Some(&d) = settings.d_list.iter().find(|&&d| d < 2) {
        return Err(Error::usage(format!("Henon-Heiles needs d >= 2, got {d}")));
    }
    let per_d = settings
        .d_list
        .iter()
        .map(|&d| Ok((d, observables_for(settings, d)?)))
        .collect::<Result<Vec<_>>>()?;
    if settings.sampler != SamplerKind::Grid {
        let projected: f64 = per_d
            .iter()
            .map(|(d, obs)| projected_sampling_seconds(*d, settings.n, term_count(obs)))
            .sum::<f64>()
            * settings.methods.len() as f64;
        guard(projected, settings, force)?;
    }
    let mut rows = Vec::new();
    for (d, observables) in &per_d {
        let state = settings.state.build(settings.h, *d)?;
        let references = observables
            .iter()
            .map(|o| {
                reference_expectation(&state, o, settings.reference_resolution)?
                    .ok_or_else(|| Error::Unsupported(format!("no reference for '{}'", o.label())))
            })
            .collect::<Result<Vec<_>>>()?;
        for &method in &settings.methods {
            let t0 = Instant::now();
            let results = sampled_or_grid(settings, &state, observables, method)?;
            let wall = t0.elapsed().as_secs_f64();
            for (r, &reference) in results.iter().zip(&references) {
                let estimate = finite(r.value, "estimate")?;
                let abs_error = (estimate - reference).abs();
                rows.push(SweepRow {
                    variable: *d as f64,
                    method,
                    observable: r.label.clone(),
                    estimate,
                    reference,
                    abs_error,
                    rel_error: rel_error(abs_error, reference),
                    stderr: r.stderr_available.then_some(r.stderr),
                    noise_floor: if r.stderr_available { r.stderr } else { 0.0 },
                    n: r.n_husimi as u64 + r.n_hermite as u64,
                    wall_time_s: wall,
                });
            }
        }
    }
    Ok(SweepResult { variable: SweepVariable::D, rows, slopes: vec![] })
}

fn sampled_or_grid(
    settings: &Settings,
    state: &GaussianState,
    observables: &[Observable],
    method: Method,
) -> Result<Vec<EstimatorResult>> {
    if settings.sampler == SamplerKind::Grid {
        return observables
            .iter()
            .map(|o| {
                let value = grid_expectation(state, o, method, settings.grid_points)?;
                Ok(EstimatorResult {
                    label: o.label().to_string(),
                    method,
                    value,
                    stderr: 0.0,
                    stderr_available: false,
                    n_husimi: 0,
                    n_hermite: 0,
                    mean_husimi: value,
                    mean_hermite: None,
                    importance_weighted: false,
                })
            })
            .collect();
    }
    let source = source_for(settings, state.dim())?;
    let policy = settings.cross_terms.policy(state, settings.cross_threshold)?;
    estimate_expectations(state, observables, &source, &estimator_config(settings, method, settings.n, policy))
}

// ---------------------------------------------------------------------------
// single expectation

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationRow {
    pub result: EstimatorResult,
    pub reference: Option<f64>,
    pub wall_time_s: f64,
}

pub fn run_expectation(settings: &Settings, force: bool) -> Result<Vec<ExpectationRow>> {
    let state = settings.state.build(settings.h, settings.d)?;
    let observables = observables_for(settings, settings.d)?;
    if settings.sampler != SamplerKind::Grid {
        let projected = projected_sampling_seconds(settings.d, settings.n, term_count(&observables))
            * settings.methods.len() as f64;
        guard(projected, settings, force)?;
    }
    let mut rows = Vec::new();
    for &method in &settings.methods {
        let t0 = Instant::now();
        let results = sampled_or_grid(settings, &state, &observables, method)?;
        let wall = t0.elapsed().as_secs_f64();
        for (r, obs) in results.into_iter().zip(&observables) {
            finite(r.value, "estimate")?;
            let reference = reference_expectation(&state, obs, settings.reference_resolution)?;
            rows.push(ExpectationRow { result: r, reference, wall_time_s: wall });
        }
    }
    Ok(rows)
}

fn expectation_table(rows: &[ExpectationRow]) -> CsvTable {
    let mut table = CsvTable::new(&[
        "observable",
        "method",
        "estimate",
        "stderr",
        "reference",
        "abs_error",
        "rel_error",
        "n_husimi",
        "n_hermite",
        "importance_weighted",
        "wall_time_s",
    ]);
    for row in rows {
        let r = &row.result;
        let abs = row.reference.map(|v| (r.value - v).abs());
        table.push_row(vec![
            r.label.as_str().into(),
            r.method.as_str().into(),
            r.value.into(),
            r.stderr_available.then_some(r.stderr).into(),
            row.reference.into(),
            abs.into(),
            abs.zip(row.reference).map(|(a, v)| rel_error(a, v)).into(),
            r.n_husimi.into(),
            r.n_hermite.into(),
            r.importance_weighted.into(),
            row.wall_time_s.into(),
        ]);
    }
    table
}

/// Runs the configured experiment and returns its CSV with metadata.
pub fn run(settings: &Settings, force: bool) -> Result<CsvTable> {
    let mut table = match settings.experiment {
        Experiment::DensitySection => run_density_section(settings)?,
        Experiment::AccuracySweep => run_accuracy_sweep(settings, force)?.to_table(),
        Experiment::HenonHeiles => run_henon_heiles(settings, force)?.to_table(),
        Experiment::Expectation => expectation_table(&run_expectation(settings, force)?),
    };
    let body = std::mem::take(&mut table.metadata);
    table.meta("experiment", settings.experiment.as_str());
    table.meta("version", version_string());
    let generator = match settings.sampler {
        SamplerKind::Grid => format!(
            "tensor trapezoid grid, {} points per axis, radius {} sqrt(h) beyond the branch hull",
            settings.grid_points, DEFAULT_RADIUS_SDS
        ),
        _ => source_for(settings, settings.d)?.describe(),
    };
    table.meta("generator", generator);
    if let serde_json::Value::Object(map) = serde_json::to_value(settings).expect("settings serialize") {
        for (k, v) in map {
            table.meta(k, v.to_string());
        }
    }
    table.meta("config", settings.to_json());
    table.metadata.extend(body);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::RunConfig;

    fn settings(e: Experiment, f: impl FnOnce(&mut RunConfig)) -> Settings {
        let mut c = RunConfig { experiment: Some(e), ..Default::default() };
        f(&mut c);
        c.resolve().unwrap()
    }

    #[test]
    fn density_section_center_and_root() {
        let rows = density_section(0.1, 6.0 * 0.1f64.sqrt(), 241).unwrap();
        let c = rows[0];
        let pi = std::f64::consts::PI;
        assert!((c.wigner - 1.0 / (pi * 0.1)).abs() < 1e-12);
        assert!((c.husimi - 1.0 / (2.0 * pi * 0.1)).abs() < 1e-12);
        assert!((c.mu - 1.5 / (2.0 * pi * 0.1)).abs() < 1e-12);
        assert!(c.wigner > c.mu && c.mu > c.husimi);
        let changes = rows.windows(2).filter(|w| (w[0].mu > 0.0) != (w[1].mu > 0.0)).count();
        assert_eq!(changes, 1);
        let root = 2.0 * (0.1f64 * 1.5).sqrt();
        let i = rows.iter().position(|r| r.mu < 0.0).unwrap();
        assert!(rows[i - 1].radius <= root && rows[i].radius >= root);
        assert!(rows.iter().all(|r| r.husimi >= 0.0));
    }

    #[test]
    fn sweep_slopes_and_control_row() {
        let s = settings(Experiment::AccuracySweep, |c| {
            c.h_list = Some(vec![1e-1, 1e-2, 1e-3]);
            c.grid_points = Some(120);
        });
        let res = run_accuracy_sweep(&s, false).unwrap();
        assert_eq!(res.rows.len(), 3 * 3 * 2);
        let mu = res.slope(Method::Mu, "torsional").unwrap();
        let hu = res.slope(Method::Husimi, "torsional").unwrap();
        assert!((mu - 2.0).abs() < 0.3 && (hu - 1.0).abs() < 0.2, "{mu} {hu}");
        for r in res.rows_for(Method::Mu, "cubic-control") {
            assert!(r.abs_error < 1e-9, "{r:?}");
        }
        assert!(res.slope(Method::Mu, "cubic-control").is_none());
        let table = res.to_table();
        assert!(table.render().contains("# slope[mu,torsional]: "));
    }

    #[test]
    fn sampled_sweep_runs_with_exact_cross_terms() {
        let s = settings(Experiment::AccuracySweep, |c| {
            c.h_list = Some(vec![1e-1, 1e-2]);
            c.sampler = Some(SamplerKind::Mc);
            c.n = Some(20_000);
            c.observables = Some(vec!["torsional".into()]);
            c.methods = Some(vec![Method::Mu]);
        });
        let res = run_accuracy_sweep(&s, false).unwrap();
        assert_eq!(res.rows.len(), 2);
        // the grid bias of μ is 4e-4 at h = 0.1
        for r in &res.rows {
            assert!(r.abs_error < 5.0 * r.stderr.unwrap() + 1e-3, "{r:?}");
        }
    }

    #[test]
    fn henon_heiles_small_and_guard() {
        let s = settings(Experiment::HenonHeiles, |c| {
            c.d_list = Some(vec![2, 3]);
            c.n = Some(20_000);
            c.sampler = Some(SamplerKind::Mc);
        });
        let res = run_henon_heiles(&s, false).unwrap();
        assert_eq!(res.rows.len(), 2 * 3);
        for r in &res.rows {
            assert!(r.abs_error < 5.0 * r.stderr.unwrap(), "{r:?}");
        }
        let full = settings(Experiment::HenonHeiles, |_| {});
        assert!(matches!(run_henon_heiles(&full, false), Err(Error::Resource(_))));
    }

    #[test]
    fn expectation_rows() {
        let s = settings(Experiment::Expectation, |c| {
            c.methods = Some(vec![Method::Mu, Method::Husimi]);
            c.n = Some(100_000);
        });
        let rows = run_expectation(&s, false).unwrap();
        let err = |i: usize| (rows[i].result.value - rows[i].reference.unwrap()).abs();
        assert!(err(1) > err(0));
        let bad = settings(Experiment::Expectation, |c| c.observables = Some(vec!["nope".into()]));
        let msg = run_expectation(&bad, false).unwrap_err().to_string();
        assert!(msg.contains("torsional") && msg.contains("hh-total"));
    }

    #[test]
    fn metadata_block() {
        let s = settings(Experiment::DensitySection, |c| c.n_points = Some(5));
        let text = run(&s, false).unwrap().render();
        assert!(text.starts_with("# experiment: density-section\n# version: phasemu "));
        assert!(text.contains("# config: {"));
        assert!(text.contains("\nradius,wigner,husimi,mu\n"));
        let again = RunConfig::from_text(&text).unwrap().resolve().unwrap();
        assert_eq!(again, s);
    }
}
