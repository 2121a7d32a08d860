//! Command line front end: synthetic data generation, model fitting,
//! loading evaluation, full sweeps, and data-file validation.
//!
//! Exit codes: 0 on success, 1 for validation problems (bad flags, bad
//! files, inconsistent shapes), 2 for numerical failures.

mod config;
mod experiment;
mod io;

use clap::{Args, Parser, Subcommand};
use config::{parse_method, parse_mode, parse_model, parse_whitening, ExperimentConfig};
use io::{write_dense_csv, write_string, DataFormat, IoError};
use std::path::PathBuf;
use std::process::ExitCode;

use cca_core::pipeline::{fit, FitConfig};

#[derive(Parser)]
#[command(name = "cca", version, about = "Moment matching for multi-view factor models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted instance and one sampled panel per view.
    Synth(SynthArgs),
    /// Estimate shared factor loadings from a pair of views.
    Fit(FitArgs),
    /// Score recovered loadings against reference loadings.
    Eval(EvalArgs),
    /// Run a full (method, delta, N, trial) sweep on synthetic data.
    Experiment(ExperimentArgs),
    /// Parse and validate a pair of data files, reporting their shapes.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// dcca or ncca
    #[arg(long, default_value = "dcca")]
    model: String,
    /// dirichlet or fixed2d (discrete models)
    #[arg(long, default_value = "dirichlet")]
    mode: String,
    #[arg(long, default_value_t = 20)]
    m1: usize,
    #[arg(long, default_value_t = 20)]
    m2: usize,
    #[arg(long = "K", default_value_t = 10)]
    k: usize,
    #[arg(long = "K1", default_value_t = 20)]
    k1: usize,
    #[arg(long = "K2", default_value_t = 20)]
    k2: usize,
    #[arg(long, default_value_t = 0.3)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    c1: f64,
    #[arg(long, default_value_t = 0.1)]
    c2: f64,
    #[arg(long, default_value_t = 1000.0)]
    ls: f64,
    #[arg(long, default_value_t = 1000.0)]
    ln: f64,
    /// Number of samples.
    #[arg(long = "N", default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    x1: PathBuf,
    #[arg(long)]
    x2: PathBuf,
    /// dense-csv or docword-triplets
    #[arg(long, default_value = "dense-csv")]
    format: String,
    /// Variable count of view 1 (docword-triplets only).
    #[arg(long)]
    m1: Option<usize>,
    /// Variable count of view 2 (docword-triplets only).
    #[arg(long)]
    m2: Option<usize>,
    /// dcca, ncca or mcca
    #[arg(long)]
    model: String,
    /// cumulant, gencov or spectral
    #[arg(long, default_value = "gencov")]
    method: String,
    /// Shared factor count.
    #[arg(long = "K")]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// exact or randomized
    #[arg(long, default_value = "exact")]
    whitening: String,
    #[arg(long, default_value_t = 100)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    d1_hat: PathBuf,
    #[arg(long)]
    d2_hat: PathBuf,
    #[arg(long)]
    d1: PathBuf,
    #[arg(long)]
    d2: PathBuf,
    /// Allow per-column sign flips when matching.
    #[arg(long, default_value_t = false)]
    sign: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key=value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Comma separated list: cumulant, gencov, spectral.
    #[arg(long)]
    method: Option<String>,
    #[arg(long = "K")]
    k: Option<usize>,
    /// Comma separated delta grid.
    #[arg(long)]
    delta: Option<String>,
    /// Comma separated sample-size grid.
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    whitening: Option<String>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long = "K1")]
    k1: Option<usize>,
    #[arg(long = "K2")]
    k2: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    ls: Option<f64>,
    #[arg(long)]
    ln: Option<f64>,
    #[arg(long)]
    sign: Option<bool>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    x1: PathBuf,
    #[arg(long)]
    x2: PathBuf,
    /// dense-csv or docword-triplets
    #[arg(long, default_value = "dense-csv")]
    format: String,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
}

enum CliError {
    Validation(String),
    Numerical(String),
}

impl From<cca_core::Error> for CliError {
    fn from(e: cca_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<String> for CliError {
    fn from(m: String) -> Self {
        CliError::Validation(m)
    }
}

type CliResult<T> = Result<T, CliError>;

fn parse_format(s: &str) -> CliResult<DataFormat> {
    s.parse::<DataFormat>().map_err(CliError::Validation)
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let mut cfg = ExperimentConfig {
        model: parse_model(&args.model)?,
        mode: parse_mode(&args.mode)?,
        m1: args.m1,
        m2: args.m2,
        k: args.k,
        k1: args.k1,
        k2: args.k2,
        c: args.c,
        c1: args.c1,
        c2: args.c2,
        ls: args.ls,
        ln: args.ln,
        seed: args.seed,
        ..ExperimentConfig::default()
    };
    cfg.out = args.out.clone();
    let instance = experiment::build_instance(&cfg)?;
    let panels = match &instance {
        experiment::Instance::Discrete(i) => {
            cca_core::synthetic::sample_discrete(i, args.n, args.seed)?
        }
        experiment::Instance::Continuous(i) => {
            cca_core::synthetic::sample_continuous(i, args.n, args.seed)?
        }
    };
    let dir = &args.out;
    write_dense_csv(&dir.join("x1.csv"), &panels.x1.to_dense())?;
    write_dense_csv(&dir.join("x2.csv"), &panels.x2.to_dense())?;
    let (d1, d2) = instance.shared_loadings();
    write_dense_csv(&dir.join("d1.csv"), d1)?;
    write_dense_csv(&dir.join("d2.csv"), d2)?;
    let (f1, f2, b, b1, b2) = match &instance {
        experiment::Instance::Discrete(i) => (&i.f1, &i.f2, i.b, i.b1, i.b2),
        experiment::Instance::Continuous(i) => (&i.f1, &i.f2, i.b, i.b1, i.b2),
    };
    write_dense_csv(&dir.join("f1.csv"), f1)?;
    write_dense_csv(&dir.join("f2.csv"), f2)?;
    let meta = serde_json::json!({
        "model": args.model,
        "mode": args.mode,
        "m1": args.m1, "m2": args.m2,
        "K": args.k, "K1": args.k1, "K2": args.k2,
        "c": args.c, "c1": args.c1, "c2": args.c2,
        "ls": args.ls, "ln": args.ln,
        "b": b, "b1": b1, "b2": b2,
        "N": args.n, "seed": args.seed,
    });
    write_string(&dir.join("instance.json"), &format!("{:#}\n", meta))?;
    println!(
        "wrote instance ({} x {} and {} x {}, N = {}) to {}",
        d1.nrows(),
        args.k,
        d2.nrows(),
        args.k,
        args.n,
        dir.display()
    );
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let format = parse_format(&args.format)?;
    let (x1, x2) = io::read_view_pair(&args.x1, &args.x2, format, args.m1, args.m2)?;
    let config = FitConfig {
        model: parse_model(&args.model)?,
        method: parse_method(&args.method)?,
        k: args.k,
        delta: args.delta,
        max_sweeps: args.max_sweeps,
        tol: args.tol,
        seed: args.seed,
        whitening: parse_whitening(&args.whitening)?,
    };
    let result = fit(&x1, &x2, &config)?;
    let dir = &args.out;
    write_dense_csv(&dir.join("d1_hat.csv"), &result.loadings.d1)?;
    write_dense_csv(&dir.join("d2_hat.csv"), &result.loadings.d2)?;
    let diag = serde_json::to_string_pretty(&result.diagnostics)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_string(&dir.join("diagnostics.json"), &format!("{diag}\n"))?;
    println!(
        "fit {} x {} and {} x {} loadings to {} (sweeps {}, off {:.3e})",
        result.loadings.d1.nrows(),
        args.k,
        result.loadings.d2.nrows(),
        args.k,
        dir.display(),
        result.diagnostics.sweeps,
        result.diagnostics.final_off
    );
    if result.diagnostics.degenerate_targets {
        eprintln!("warning: all targets look Gaussian; loadings are not identified");
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let d1_hat = io::read_dense_csv(&args.d1_hat)?;
    let d2_hat = io::read_dense_csv(&args.d2_hat)?;
    let d1 = io::read_dense_csv(&args.d1)?;
    let d2 = io::read_dense_csv(&args.d2)?;
    let matched = cca_core::eval::stacked_l1_error(&d1_hat, &d2_hat, &d1, &d2, args.sign)?;
    let report = serde_json::json!({
        "err1": matched.error,
        "permutation": matched.permutation,
        "signs": matched.signs,
    });
    println!("{:#}", report);
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let mut set = |key: &str, value: Option<String>| -> Result<(), String> {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
        Ok(())
    };
    set("model", args.model.clone())?;
    set("methods", args.method.clone())?;
    set("k", args.k.map(|v| v.to_string()))?;
    set("delta_grid", args.delta.clone())?;
    set("n_grid", args.n_grid.clone())?;
    set("trials", args.trials.map(|v| v.to_string()))?;
    set("seed", args.seed.map(|v| v.to_string()))?;
    set("whitening", args.whitening.clone())?;
    set("max_sweeps", args.max_sweeps.map(|v| v.to_string()))?;
    set("tol", args.tol.map(|v| v.to_string()))?;
    set("mode", args.mode.clone())?;
    set("m1", args.m1.map(|v| v.to_string()))?;
    set("m2", args.m2.map(|v| v.to_string()))?;
    set("k1", args.k1.map(|v| v.to_string()))?;
    set("k2", args.k2.map(|v| v.to_string()))?;
    set("c", args.c.map(|v| v.to_string()))?;
    set("c1", args.c1.map(|v| v.to_string()))?;
    set("c2", args.c2.map(|v| v.to_string()))?;
    set("ls", args.ls.map(|v| v.to_string()))?;
    set("ln", args.ln.map(|v| v.to_string()))?;
    set("sign", args.sign.map(|v| v.to_string()))?;
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    let records = experiment::run_experiment(&cfg)?;
    let results = experiment::render_results_csv(&records);
    let summary = experiment::render_summary_csv(&records);
    write_string(&cfg.out.join("results.csv"), &results)?;
    write_string(&cfg.out.join("summary.csv"), &summary)?;
    let failures = records.iter().filter(|r| r.status != "ok").count();
    println!(
        "{} cells ({} failed) written to {}",
        records.len(),
        failures,
        cfg.out.display()
    );
    print!("{summary}");
    Ok(())
}

fn cmd_ingest(args: &IngestArgs) -> CliResult<()> {
    let format = parse_format(&args.format)?;
    let (x1, x2) = io::read_view_pair(&args.x1, &args.x2, format, args.m1, args.m2)?;
    let report = serde_json::json!({
        "m1": x1.nvars(),
        "m2": x2.nvars(),
        "N": x1.nsamples(),
        "sum_abs1": x1.sum_abs(),
        "sum_abs2": x2.sum_abs(),
    });
    println!("{:#}", report);
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Ingest(args) => cmd_ingest(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
