use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpa_cli::{parse_config, run, write_csv, CliError};

/// Environment variable capping the number of worker threads.
const THREADS_ENV: &str = "FPA_THREADS";

#[derive(Parser)]
#[command(
    name = "fpa",
    version,
    about = "Error-probability experiments for detector-array PPM links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write its CSV.
    Run {
        config: PathBuf,
        /// Overrides the `seed` key.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the `trials` key.
        #[arg(long)]
        trials: Option<u64>,
        /// Overrides the `output_path` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn execute(config: PathBuf, seed: Option<u64>, trials: Option<u64>, out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(&config).map_err(|source| CliError::Io {
        path: config.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(trials) = trials {
        if trials == 0 {
            return Err(CliError::Config {
                path: "--trials".into(),
                message: "must be at least 1".into(),
            });
        }
        cfg.trials = trials;
        if let Some(cap) = cfg.max_trials {
            cfg.max_trials = Some(cap.max(trials));
        }
    }
    let path = out
        .or_else(|| cfg.output_path.clone())
        .ok_or_else(|| CliError::Config {
            path: "output_path".into(),
            message: "missing key (or pass --out)".into(),
        })?;
    let table = run(&cfg)?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    write_csv(&path, &table)?;
    Ok(path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
        } => match execute(config, seed, trials, out) {
            Ok(path) => {
                println!("{}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
