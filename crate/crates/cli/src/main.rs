use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ergoflow::lab::{self, ExperimentConfig, LawSpec, OutputFormat};
use ergoflow::stable_ml::constants;
use ergoflow::Error;

#[derive(Parser)]
#[command(name = "ergoflow", version, about = "Reproducible experiments on heavy-tailed renewal flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the constant table for one alpha as JSON.
    Constants {
        #[arg(long)]
        alpha: f64,
    },
    /// List the registered experiments with their targets.
    List,
    /// Run one experiment.
    Run(Box<RunArgs>),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment name; may also come from the config file.
    experiment: Option<String>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Gap law as `name[:param]` or a JSON descriptor.
    #[arg(long)]
    law: Option<String>,
    /// Time horizon T, step count n or log-scale horizon, per experiment.
    #[arg(long, alias = "n", value_parser = parse_number)]
    horizon: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    paths: Option<usize>,
    /// Master seed; falls back to ERGOFLOW_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    workers: Option<usize>,
    #[arg(long, value_parser = parse_number)]
    n_samples: Option<f64>,
    /// Moment order.
    #[arg(long)]
    p: Option<f64>,
    /// Renewal shift state for visit counts.
    #[arg(long)]
    state: Option<u64>,
    /// Substeps per unit time for coupled paths.
    #[arg(long, value_parser = parse_count)]
    substeps: Option<usize>,
    /// Quadrature points per unit log time for Cesàro distances.
    #[arg(long, value_parser = parse_count)]
    density: Option<usize>,
    /// Increment used by horocycle-decay.
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Compare with the registered target and exit 1 on failure.
    #[arg(long)]
    check: bool,
    /// Relative tolerance for `--check` in place of the z threshold.
    #[arg(long)]
    tol: Option<f64>,
    /// File collecting per-path results; completed paths are skipped on rerun.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("'{s}' is not a number: {e}"))
}

fn parse_count(s: &str) -> Result<usize, String> {
    let x = parse_number(s)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= usize::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(format!("'{s}' is not a nonnegative integer"))
    }
}

fn law_spec(s: &str) -> LawSpec {
    match serde_json::from_str(s) {
        Ok(d) if s.trim_start().starts_with('{') => LawSpec::Full(d),
        _ => LawSpec::Short(s.to_string()),
    }
}

fn run(args: RunArgs) -> Result<bool, Error> {
    let file = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    let flags = ExperimentConfig {
        experiment: args.experiment.unwrap_or_default(),
        alpha: args.alpha,
        law: args.law.as_deref().map(law_spec),
        horizon: args.horizon,
        paths: args.paths,
        seed: args.seed,
        workers: args.workers,
        n_samples: args.n_samples,
        p: args.p,
        state: args.state,
        substeps: args.substeps,
        density: args.density,
        shift: args.shift,
        tol: args.tol,
        check: args.check.then_some(true),
        format: args.format.map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }),
        out: args.out,
        checkpoint: args.checkpoint,
    };
    let mut config = file.merged(flags);
    if config.experiment.is_empty() {
        return Err(Error::Config("no experiment given".into()));
    }
    if config.seed.is_none() {
        if let Ok(s) = std::env::var("ERGOFLOW_SEED") {
            let seed = s.trim().parse().map_err(|_| Error::Config(format!("ERGOFLOW_SEED='{s}' is not a u64")))?;
            config.seed = Some(seed);
        }
    }
    let out = lab::run(&config)?;
    let format = config.format.unwrap_or_default();
    if let Some(text) = lab::emit_results(&out, format, config.out.as_deref())? {
        print!("{text}");
    }
    if let Some(check) = &out.check {
        eprintln!("check {}: {}", if check.passed { "passed" } else { "failed" }, check.detail);
        return Ok(check.passed);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Constants { alpha } => constants(alpha).and_then(|t| {
            println!("{}", serde_json::to_string_pretty(&t).map_err(Error::from)?);
            Ok(true)
        }),
        Command::List => {
            for e in lab::list_experiments() {
                println!("{:<20} target: {:<40} {}", e.name, e.target, e.summary);
            }
            Ok(true)
        }
        Command::Run(args) => run(*args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Config(_) | Error::Domain(_) | Error::NotInDomainOfAttraction(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
