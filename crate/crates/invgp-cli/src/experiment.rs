//! Replicate orchestration: fits, metrics, timings and the CSV/JSON
//! output layer.
//!
//! One experiment = `replicates` independent datasets; each replicate
//! fits the exact posterior (optional, `O(n³)`) and one variational
//! posterior per requested scheme and inducing count. Replicates run in
//! parallel; rows are collected in replicate order so outputs are
//! bit-identical regardless of worker count. Timings go to a separate
//! file to keep the results CSV reproducible.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use invgp::error::{Error, Result};
use invgp::exact::{build_gram, exact_posterior_from_gram, Dataset, GramSet};
use invgp::metrics::{credible_band, mise, recommended_m};
use invgp::posterior::GaussianPosterior;
use invgp::spectral::{ForwardOperator, Point, PriorSpectrum, SobolevTruth, TruncationPolicy};
use invgp::variational::{
    empirical_scheme, fit_variational, kl_to_posterior, population_scheme, variational_posterior,
    SchemeKind,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::sim::{derive_seed, generate_data, SeedPurpose};
use crate::truth::make_truth;

/// One (replicate, method) result row.
#[derive(Debug, Clone, Serialize)]
pub struct RunCell {
    pub replicate: usize,
    /// `exact`, `population` or `empirical`.
    pub scheme: String,
    /// Inducing-variable count; 0 for the exact posterior.
    pub m: usize,
    pub mise: Option<f64>,
    pub sq_bias: Option<f64>,
    pub variance_mass: Option<f64>,
    /// KL gap to the exact posterior; present when the Gram set exists.
    pub kl: Option<f64>,
    /// Fraction of grid points where the band covers `f_0`.
    pub coverage: Option<f64>,
    /// Mean credible-band width over the grid.
    pub band_width: Option<f64>,
    pub seed: u64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingCell {
    pub replicate: usize,
    pub scheme: String,
    pub m: usize,
    pub fit_millis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub truncation: usize,
    pub truncation_tail_rel: f64,
    pub recommended_m: usize,
    pub warnings: Vec<String>,
    pub rows: Vec<RunCell>,
    #[serde(skip)]
    pub timings: Vec<TimingCell>,
}

/// Evaluation grid on the operator's parameter domain: uniform on the
/// interval, a sunflower layout on the disc.
pub fn eval_grid(op: &dyn ForwardOperator, size: usize) -> Vec<Point> {
    match op.domain_t() {
        invgp::spectral::Domain::UnitInterval => (0..size)
            .map(|k| Point::x(k as f64 / (size.max(2) - 1) as f64))
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..size)
                .map(|k| {
                    let r = (((k as f64) + 0.5) / size as f64).sqrt();
                    Point::polar(
                        r,
                        (k as f64 * golden).rem_euclid(2.0 * std::f64::consts::PI),
                    )
                })
                .collect()
        }
    }
}

/// Exact fit (Gram build + posterior) with wall-clock time in ms.
pub fn time_exact_fit(
    op: &Arc<dyn ForwardOperator>,
    prior: &PriorSpectrum,
    data: &Dataset,
) -> Result<(GramSet, GaussianPosterior, f64)> {
    let start = Instant::now();
    let gram = build_gram(op.as_ref(), prior, data)?;
    let post = exact_posterior_from_gram(op, prior, data, &gram)?;
    Ok((gram, post, start.elapsed().as_secs_f64() * 1e3))
}

/// Population-scheme fit with wall-clock time in ms. This path never
/// allocates an `n×n` matrix: it builds the `m×n` cross covariance, the
/// whitened `m×m` inner matrix, and the posterior reduction maps only.
pub fn time_population_fit(
    op: &Arc<dyn ForwardOperator>,
    prior: &PriorSpectrum,
    data: &Dataset,
    m: usize,
) -> Result<(GaussianPosterior, f64)> {
    let start = Instant::now();
    let scheme = population_scheme(op, prior, data, m)?;
    let params = fit_variational(&scheme, data)?;
    let post = variational_posterior(&scheme, &params, prior, op)?;
    Ok((post, start.elapsed().as_secs_f64() * 1e3))
}

fn clamp_m(m: usize, cap: usize, label: &str, warnings: &mut Vec<String>) -> usize {
    if m > cap {
        warnings.push(format!("{label}: m = {m} clamped to {cap}"));
        cap
    } else {
        m
    }
}

struct ReplicateOutput {
    rows: Vec<RunCell>,
    timings: Vec<TimingCell>,
}

#[allow(clippy::too_many_arguments)]
fn run_replicate(
    config: &ExperimentConfig,
    op: &Arc<dyn ForwardOperator>,
    prior: &PriorSpectrum,
    truth: &SobolevTruth,
    grid: &[Point],
    f0_on_grid: &[f64],
    replicate: usize,
) -> ReplicateOutput {
    let rep_seed = derive_seed(config.seed, replicate as u64, SeedPurpose::Replicate);
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let data = match generate_data(op.as_ref(), truth, config.n, config.sigma2, rep_seed) {
        Ok(d) => d,
        Err(e) => {
            rows.push(RunCell {
                replicate,
                scheme: "data".into(),
                m: 0,
                mise: None,
                sq_bias: None,
                variance_mass: None,
                kl: None,
                coverage: None,
                band_width: None,
                seed: rep_seed,
                status: format!("data generation failed: {e}"),
            });
            return ReplicateOutput { rows, timings };
        }
    };

    let scheme_kinds = config.scheme.kinds();
    let needs_gram = config.exact || scheme_kinds.contains(&SchemeKind::EmpiricalSpectral);

    let mut gram: Option<GramSet> = None;
    if config.exact {
        match time_exact_fit(op, prior, &data) {
            Ok((g, post, millis)) => {
                timings.push(TimingCell {
                    replicate,
                    scheme: "exact".into(),
                    m: 0,
                    fit_millis: millis,
                });
                rows.push(evaluate_cell(
                    replicate, "exact", 0, &post, None, truth, grid, f0_on_grid, config, rep_seed,
                ));
                gram = Some(g);
            }
            Err(e) => rows.push(failed_cell(replicate, "exact", 0, rep_seed, &e)),
        }
    } else if needs_gram {
        match build_gram(op.as_ref(), prior, &data) {
            Ok(g) => gram = Some(g),
            Err(e) => rows.push(failed_cell(replicate, "gram", 0, rep_seed, &e)),
        }
    }

    for kind in scheme_kinds {
        let label = kind.to_string();
        for &m_requested in &config.m_list {
            let mut local_warnings = Vec::new();
            let cap = match kind {
                SchemeKind::PopulationSpectral => prior.truncation(),
                SchemeKind::EmpiricalSpectral => config.n,
            };
            let m = clamp_m(m_requested, cap, &label, &mut local_warnings);
            let fitted = (|| -> Result<(GaussianPosterior, f64, Option<f64>)> {
                let start = Instant::now();
                let scheme = match kind {
                    SchemeKind::PopulationSpectral => population_scheme(op, prior, &data, m)?,
                    SchemeKind::EmpiricalSpectral => {
                        let g = gram.as_ref().ok_or_else(|| {
                            Error::Numerical("empirical scheme needs the Gram set".into())
                        })?;
                        empirical_scheme(op, prior, g, m)?
                    }
                };
                let params = fit_variational(&scheme, &data)?;
                let post = variational_posterior(&scheme, &params, prior, op)?;
                let millis = start.elapsed().as_secs_f64() * 1e3;
                let kl = match &gram {
                    Some(g) => Some(kl_to_posterior(&scheme, &data, g)?),
                    None => None,
                };
                Ok((post, millis, kl))
            })();
            match fitted {
                Ok((post, millis, kl)) => {
                    timings.push(TimingCell {
                        replicate,
                        scheme: label.clone(),
                        m,
                        fit_millis: millis,
                    });
                    let mut cell = evaluate_cell(
                        replicate, &label, m, &post, kl, truth, grid, f0_on_grid, config, rep_seed,
                    );
                    if !local_warnings.is_empty() {
                        cell.status = local_warnings.join("; ");
                    }
                    rows.push(cell);
                }
                Err(e) => rows.push(failed_cell(replicate, &label, m, rep_seed, &e)),
            }
        }
    }
    ReplicateOutput { rows, timings }
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    replicate: usize,
    scheme: &str,
    m: usize,
    post: &GaussianPosterior,
    kl: Option<f64>,
    truth: &SobolevTruth,
    grid: &[Point],
    f0_on_grid: &[f64],
    config: &ExperimentConfig,
    seed: u64,
) -> RunCell {
    let report = mise(post, truth);
    let band = credible_band(post, grid, config.band_level);
    let (mise_v, bias, var, status_m) = match &report {
        Ok(r) => (Some(r.mise), Some(r.sq_bias), Some(r.variance_mass), None),
        Err(e) => (None, None, None, Some(format!("mise failed: {e}"))),
    };
    let (coverage, width, status_b) = match &band {
        Ok(b) => (Some(b.coverage_of(f0_on_grid)), Some(b.mean_width()), None),
        Err(e) => (None, None, Some(format!("band failed: {e}"))),
    };
    let status = match (status_m, status_b) {
        (None, None) => "ok".to_string(),
        (a, b) => [a, b].into_iter().flatten().collect::<Vec<_>>().join("; "),
    };
    RunCell {
        replicate,
        scheme: scheme.to_string(),
        m,
        mise: mise_v,
        sq_bias: bias,
        variance_mass: var,
        kl,
        coverage,
        band_width: width,
        seed,
        status,
    }
}

fn failed_cell(replicate: usize, scheme: &str, m: usize, seed: u64, e: &Error) -> RunCell {
    RunCell {
        replicate,
        scheme: scheme.to_string(),
        m,
        mise: None,
        sq_bias: None,
        variance_mass: None,
        kl: None,
        coverage: None,
        band_width: None,
        seed,
        status: format!("failed: {e}"),
    }
}

/// Runs the full experiment pipeline for a config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let op = config.operator.build()?;
    let prior = config.build_prior(op.as_ref())?;
    let family = config.spectral_family(op.as_ref());
    let (_, tail_rel) = match config.truncation {
        Some(_) => (prior.truncation(), prior.tail_mass()),
        None => TruncationPolicy::default().choose_with_tail(op.as_ref(), &family),
    };
    let recipe = config.truth_recipe(op.as_ref())?;
    let truth = make_truth(&recipe, config.beta, op.as_ref(), prior.truncation())?;
    let grid = eval_grid(op.as_ref(), config.grid_size);
    let f0_on_grid: Vec<f64> = grid
        .iter()
        .map(|t| truth.series().eval(op.as_ref(), *t))
        .collect::<Result<_>>()?;

    let outputs: Vec<ReplicateOutput> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, &op, &prior, &truth, &grid, &f0_on_grid, r))
        .collect();

    let mut warnings = Vec::new();
    for &m in &config.m_list {
        if config
            .scheme
            .kinds()
            .contains(&SchemeKind::PopulationSpectral)
            && m > prior.truncation()
        {
            warnings.push(format!(
                "population: m = {m} exceeds J = {}, clamped",
                prior.truncation()
            ));
        }
        if config
            .scheme
            .kinds()
            .contains(&SchemeKind::EmpiricalSpectral)
            && m > config.n
        {
            warnings.push(format!(
                "empirical: m = {m} exceeds n = {}, clamped",
                config.n
            ));
        }
    }

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for out in outputs {
        rows.extend(out.rows);
        timings.extend(out.timings);
    }
    Ok(RunRecord {
        config: config.clone(),
        truncation: prior.truncation(),
        truncation_tail_rel: tail_rel,
        recommended_m: recommended_m(op.as_ref(), &prior, config.n.max(2)),
        warnings,
        rows,
        timings,
    })
}

fn fmt_opt(v: &Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

/// Writes `results.csv`, `timings.csv` and `manifest.json` into `dir`.
/// The results file is bit-identical across reruns of the same config;
/// timings are kept separate because they never are.
pub fn write_run_outputs(record: &RunRecord, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Parameter(format!("cannot create {}: {e}", dir.display())))?;
    let mut results = String::from(
        "replicate,scheme,m,mise,sq_bias,variance_mass,kl,coverage,band_width,seed,status\n",
    );
    for row in &record.rows {
        results.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.replicate,
            row.scheme,
            row.m,
            fmt_opt(&row.mise),
            fmt_opt(&row.sq_bias),
            fmt_opt(&row.variance_mass),
            fmt_opt(&row.kl),
            fmt_opt(&row.coverage),
            fmt_opt(&row.band_width),
            row.seed,
            row.status,
        ));
    }
    write_file(&dir.join("results.csv"), &results)?;

    let mut timings = String::from("replicate,scheme,m,fit_millis\n");
    for t in &record.timings {
        timings.push_str(&format!(
            "{},{},{},{}\n",
            t.replicate, t.scheme, t.m, t.fit_millis
        ));
    }
    write_file(&dir.join("timings.csv"), &timings)?;

    #[derive(Serialize)]
    struct Manifest<'a> {
        library_version: &'static str,
        truncation: usize,
        truncation_tail_rel: f64,
        recommended_m: usize,
        warnings: &'a [String],
        config: &'a ExperimentConfig,
    }
    let manifest = Manifest {
        library_version: env!("CARGO_PKG_VERSION"),
        truncation: record.truncation,
        truncation_tail_rel: record.truncation_tail_rel,
        recommended_m: record.recommended_m,
        warnings: &record.warnings,
        config: &record.config,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Parameter(format!("manifest serialization: {e}")))?;
    write_file(&dir.join("manifest.json"), &json)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Parameter(format!("cannot write {}: {e}", path.display())))
}

/// Credible-band data export for one fitted posterior: one line per grid
/// point with the truth alongside.
pub fn band_csv(
    post: &GaussianPosterior,
    truth: &SobolevTruth,
    grid: &[Point],
    level: f64,
    method: &str,
) -> Result<String> {
    let band = credible_band(post, grid, level)?;
    let op = post.operator().clone();
    let mut out = String::from("method,c0,c1,f0,mean,lower,upper\n");
    for (i, p) in grid.iter().enumerate() {
        let f0 = truth.series().eval(op.as_ref(), *p)?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            method, p.0, p.1, f0, band.mean[i], band.lower[i], band.upper[i]
        ));
    }
    Ok(out)
}
