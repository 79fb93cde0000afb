//! Command-line harness: `simulate`, `fit`, `experiment`, `phase-grid`
//! and `band`. Exit code 0 on success, 2 on configuration errors, 3 on
//! numerical failure inside `fit`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use invgp::error::Error;
use invgp::exact::build_gram;
use invgp::spectral::ForwardOperator;
use invgp::variational::SchemeKind;
use invgp_cli::config::{parse_config_file, ExperimentConfig};
use invgp_cli::experiment::{band_csv, eval_grid, run_experiment, write_run_outputs};
use invgp_cli::phase::phase_grid;
use invgp_cli::sim::{derive_seed, generate_data, SeedPurpose};
use invgp_cli::truth::make_truth;

#[derive(Parser)]
#[command(
    name = "invgp",
    about = "Gaussian-process posteriors for linear inverse regression: exact, variational, and the experiments around them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as CSV.
    Simulate(CommonArgs),
    /// One dataset, one fit per method; prints MISE and KL lines.
    Fit(CommonArgs),
    /// Full replicate pipeline; writes results.csv, timings.csv and
    /// manifest.json.
    Experiment(CommonArgs),
    /// Log MISE ratio grid over (n, m) with the threshold curve.
    PhaseGrid(PhaseArgs),
    /// Credible-band data export for each fitted method.
    Band(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key=value config file; CLI flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// volterra | heat | radon
    #[arg(long)]
    operator: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated inducing-variable counts, e.g. "3,6,12".
    #[arg(long)]
    m: Option<String>,
    /// Truth smoothness β.
    #[arg(long)]
    beta: Option<f64>,
    /// Prior decay exponent α (defaults to β for mild, 0 for severe).
    #[arg(long)]
    alpha: Option<f64>,
    /// Prior exponential scale ξ (severe case).
    #[arg(long)]
    xi: Option<f64>,
    /// Heat diffusion time.
    #[arg(long = "T")]
    diffusion_time: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma2: Option<f64>,
    /// population | empirical | both
    #[arg(long)]
    scheme: Option<String>,
    /// on | off — fit the exact posterior alongside.
    #[arg(long)]
    exact: Option<String>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// Credible-band level.
    #[arg(long)]
    level: Option<f64>,
    /// Series truncation J (default: tail-mass policy).
    #[arg(long)]
    truncation: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated sample sizes, e.g. "200,500,1000,2000".
    #[arg(long = "n-list")]
    n_list: Option<String>,
}

impl CommonArgs {
    fn cli_pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs = Vec::new();
        if let Some(v) = &self.operator {
            pairs.push(("operator", v.clone()));
        }
        if let Some(v) = self.diffusion_time {
            pairs.push(("T", v.to_string()));
        }
        if let Some(v) = self.n {
            pairs.push(("n", v.to_string()));
        }
        if let Some(v) = &self.m {
            pairs.push(("m", v.clone()));
        }
        if let Some(v) = self.beta {
            pairs.push(("beta", v.to_string()));
        }
        if let Some(v) = self.alpha {
            pairs.push(("alpha", v.to_string()));
        }
        if let Some(v) = self.xi {
            pairs.push(("xi", v.to_string()));
        }
        if let Some(v) = self.reps {
            pairs.push(("reps", v.to_string()));
        }
        if let Some(v) = self.seed {
            pairs.push(("seed", v.to_string()));
        }
        if let Some(v) = self.sigma2 {
            pairs.push(("sigma2", v.to_string()));
        }
        if let Some(v) = &self.scheme {
            pairs.push(("scheme", v.clone()));
        }
        if let Some(v) = &self.exact {
            pairs.push(("exact", v.clone()));
        }
        if let Some(v) = self.grid_size {
            pairs.push(("grid_size", v.to_string()));
        }
        if let Some(v) = self.level {
            pairs.push(("level", v.to_string()));
        }
        if let Some(v) = self.truncation {
            pairs.push(("truncation", v.to_string()));
        }
        if let Some(v) = &self.out {
            pairs.push(("out", v.display().to_string()));
        }
        pairs
    }

    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut config = ExperimentConfig::default();
        let cli_pairs = self.cli_pairs();
        if let Some(path) = &self.config {
            let file_pairs = parse_config_file(path)?;
            let cli_keys: Vec<&str> = cli_pairs.iter().map(|(k, _)| *k).collect();
            // apply T after operator so a heat override keeps its time
            let mut ordered: Vec<(&String, &String)> = file_pairs.iter().collect();
            ordered.sort_by_key(|(k, _)| (k.as_str() == "T", k.to_string()));
            let filtered: BTreeMap<String, String> = ordered
                .into_iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            config.apply_pairs(&filtered, &cli_keys)?;
        }
        for (k, v) in &cli_pairs {
            config.apply_pair(k, v)?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn exit_code_for(e: &Error) -> ExitCode {
    match e {
        Error::Numerical(_) => ExitCode::from(3),
        _ => ExitCode::from(2),
    }
}

fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("invgp-out"))
}

fn cmd_simulate(args: &CommonArgs) -> Result<(), Error> {
    let config = args.resolve()?;
    let op = config.operator.build()?;
    let prior = config.build_prior(op.as_ref())?;
    let recipe = config.truth_recipe(op.as_ref())?;
    let truth = make_truth(&recipe, config.beta, op.as_ref(), prior.truncation())?;
    let seed = derive_seed(config.seed, 0, SeedPurpose::Replicate);
    let data = generate_data(op.as_ref(), &truth, config.n, config.sigma2, seed)?;
    let dir = out_dir(&config);
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::Parameter(format!("cannot create {}: {e}", dir.display())))?;
    let mut csv = String::from("x0,x1,y\n");
    for (x, y) in data.x().iter().zip(data.y().iter()) {
        csv.push_str(&format!("{},{},{}\n", x.0, x.1, y));
    }
    let path = dir.join("data.csv");
    std::fs::write(&path, csv)
        .map_err(|e| Error::Parameter(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {} observations to {}", config.n, path.display());
    Ok(())
}

fn cmd_fit(args: &CommonArgs) -> Result<(), Error> {
    let mut config = args.resolve()?;
    config.replicates = 1;
    let record = run_experiment(&config)?;
    let mut failure: Option<String> = None;
    for row in &record.rows {
        let kl = row
            .kl
            .map(|v| format!("{v:.6e}"))
            .unwrap_or_else(|| "-".into());
        let mise = row
            .mise
            .map(|v| format!("{v:.6e}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<12} m={:<5} mise={} kl={} ({})",
            row.scheme, row.m, mise, kl, row.status
        );
        if row.status.starts_with("failed") {
            failure = Some(row.status.clone());
        }
    }
    if let Some(f) = failure {
        return Err(Error::Numerical(f));
    }
    Ok(())
}

fn cmd_experiment(args: &CommonArgs) -> Result<(), Error> {
    let config = args.resolve()?;
    let record = run_experiment(&config)?;
    let dir = out_dir(&config);
    write_run_outputs(&record, &dir)?;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "experiment done: {} rows (J = {}, recommended m = {}) -> {}",
        record.rows.len(),
        record.truncation,
        record.recommended_m,
        dir.display()
    );
    Ok(())
}

fn cmd_phase_grid(args: &PhaseArgs) -> Result<(), Error> {
    let config = args.common.resolve()?;
    let n_list: Vec<usize> = match &args.n_list {
        Some(spec) => spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parameter(format!("bad n-list entry {s:?}")))
            })
            .collect::<Result<_, _>>()?,
        None => vec![config.n],
    };
    let op = config.operator.build()?;
    let prior = config.build_prior(op.as_ref())?;
    let recipe = config.truth_recipe(op.as_ref())?;
    let truth = make_truth(&recipe, config.beta, op.as_ref(), prior.truncation())?;
    let grid = phase_grid(
        &op,
        &prior,
        &truth,
        &n_list,
        &config.m_list,
        config.replicates,
        config.sigma2,
        config.seed,
    )?;
    let dir = out_dir(&config);
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::Parameter(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join("phase_grid.csv");
    std::fs::write(&path, grid.to_csv())
        .map_err(|e| Error::Parameter(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote phase grid to {}", path.display());
    Ok(())
}

fn cmd_band(args: &CommonArgs) -> Result<(), Error> {
    let config = args.resolve()?;
    let op: Arc<dyn ForwardOperator> = config.operator.build()?;
    let prior = config.build_prior(op.as_ref())?;
    let recipe = config.truth_recipe(op.as_ref())?;
    let truth = make_truth(&recipe, config.beta, op.as_ref(), prior.truncation())?;
    let seed = derive_seed(config.seed, 0, SeedPurpose::Replicate);
    let data = generate_data(op.as_ref(), &truth, config.n, config.sigma2, seed)?;
    let grid = eval_grid(op.as_ref(), config.grid_size);
    let mut out = String::new();
    if config.exact {
        let gram = build_gram(op.as_ref(), &prior, &data)?;
        let post = invgp::exact::exact_posterior_from_gram(&op, &prior, &data, &gram)?;
        out.push_str(&band_csv(&post, &truth, &grid, config.band_level, "exact")?);
        for kind in config.scheme.kinds() {
            for &m in &config.m_list {
                let post = fit_one(&op, &prior, &data, Some(&gram), kind, m)?;
                let label = format!("{kind}-m{m}");
                out.push_str(&band_csv(&post, &truth, &grid, config.band_level, &label)?);
            }
        }
    } else {
        for kind in config.scheme.kinds() {
            for &m in &config.m_list {
                if kind == SchemeKind::EmpiricalSpectral {
                    return Err(Error::Parameter(
                        "empirical scheme needs --exact on (it eigendecomposes the Gram matrix)"
                            .into(),
                    ));
                }
                let post = fit_one(&op, &prior, &data, None, kind, m)?;
                let label = format!("{kind}-m{m}");
                out.push_str(&band_csv(&post, &truth, &grid, config.band_level, &label)?);
            }
        }
    }
    let dir = out_dir(&config);
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::Parameter(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join("bands.csv");
    // drop the duplicated headers of concatenated sections
    let mut lines = out.lines();
    let header = lines.next().unwrap_or_default();
    let body: Vec<&str> = lines.filter(|l| *l != header).collect();
    std::fs::write(&path, format!("{header}\n{}\n", body.join("\n")))
        .map_err(|e| Error::Parameter(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote bands to {}", path.display());
    Ok(())
}

fn fit_one(
    op: &Arc<dyn ForwardOperator>,
    prior: &invgp::spectral::PriorSpectrum,
    data: &invgp::exact::Dataset,
    gram: Option<&invgp::exact::GramSet>,
    kind: SchemeKind,
    m: usize,
) -> Result<invgp::posterior::GaussianPosterior, Error> {
    let scheme = match kind {
        SchemeKind::PopulationSpectral => {
            invgp::variational::population_scheme(op, prior, data, m.min(prior.truncation()))?
        }
        SchemeKind::EmpiricalSpectral => {
            let g =
                gram.ok_or_else(|| Error::Parameter("empirical scheme needs a Gram set".into()))?;
            invgp::variational::empirical_scheme(op, prior, g, m.min(data.len()))?
        }
    };
    let params = invgp::variational::fit_variational(&scheme, data)?;
    invgp::variational::variational_posterior(&scheme, &params, prior, op)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::PhaseGrid(args) => cmd_phase_grid(args),
        Command::Band(args) => cmd_band(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
