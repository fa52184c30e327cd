use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dualtake_cli::{run, CliError, Command, Options};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "DUALTAKE_THREADS";

#[derive(Parser)]
#[command(name = "dualtake", version, about = "Cross-domain takeover prediction workbench")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the cohort seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace existing artifacts.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize the cohort's session files.
    Generate(Common),
    /// Turn sessions into the windowed feature table.
    Extract(Common),
    /// Fit the forest, MLP and TrAdaBoost models on all windows.
    Train(Common),
    /// Run the grouped cross-domain comparison.
    Evaluate(Common),
    /// Render the summary and plot tables of an evaluation.
    Report(Common),
    /// Write the feature-layout manifest.
    Manifest(Common),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Generate(c) => (Command::Generate, c),
        Cmd::Extract(c) => (Command::Extract, c),
        Cmd::Train(c) => (Command::Train, c),
        Cmd::Evaluate(c) => (Command::Evaluate, c),
        Cmd::Report(c) => (Command::Report, c),
        Cmd::Manifest(c) => (Command::Manifest, c),
    };
    let opts = Options { config: common.config, out: common.out, seed: common.seed, overwrite: common.overwrite };
    match configure_threads().and_then(|()| run(command, &opts)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dualtake: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
