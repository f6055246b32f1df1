//! `keygraph` command-line front end.

mod commands;
mod config;
mod format;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Infeasible, but with a partial report still worth writing.
    #[error("infeasible: {0}")]
    InfeasibleWithOutput(String, String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) | CliError::InfeasibleWithOutput(..) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "keygraph",
    version,
    about = "Heterogeneous random key graph experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count; overrides the config.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output path; overrides the config. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Affects speed only, never results.
    #[arg(long, global = true, env = "KEYGRAPH_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Exact edge probabilities, isolation moments and bounds.
    Probe,
    /// Minimal ring sizes along a scaling preset, with the condition report.
    Dimension,
    /// Zero-one law table over (n, c) cells.
    Sweep,
    /// Node-capture attack estimates.
    Resilience,
    /// One sampled graph in line-oriented text form.
    DumpGraph,
}

fn run(cli: &Cli) -> Result<(String, Option<PathBuf>), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.experiment.master_seed = Some(seed);
    }
    if let Some(trials) = cli.trials {
        config.experiment.trials = Some(trials);
    }
    if cli.out.is_some() {
        config.output.path = cli.out.clone();
    }
    let out_path = config.output.path.clone();
    let text = match cli.command {
        Command::Probe => commands::probe(&config)?,
        Command::Dimension => match commands::dimension(&config) {
            Err(CliError::InfeasibleWithOutput(msg, partial)) => {
                emit(&partial, out_path.as_ref())?;
                return Err(CliError::Infeasible(msg));
            }
            other => other?,
        },
        Command::Sweep => {
            let (body, trailer) = commands::sweep(&config)?;
            body + &trailer
        }
        Command::Resilience => commands::resilience(&config)?,
        Command::DumpGraph => commands::dump_graph(&config)?,
    };
    Ok((text, out_path))
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io)?;
            stdout.flush().map_err(io)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|(text, path)| emit(&text, path.as_ref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("keygraph: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
