//! `tunnelkit` command-line front end.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tunnelkit::Engine;

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "tunnelkit", version, about = "Transmission, resonances, phase times and I-V curves of 1D double barriers")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Restrict to one engine: analytic, numeric or wkb.
    #[arg(long, global = true)]
    engine: Option<String>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission at one energy with every applicable engine.
    Transmit {
        /// Energy in eV.
        #[arg(allow_negative_numbers = true)]
        energy: f64,
    },
    /// Transmission curve per engine over the configured grid.
    Sweep,
    /// Resonance peaks with their widths.
    Resonances,
    /// Compare two engines on the same grid.
    Compare { a: String, b: String },
    /// Group delay along the configured axis.
    Time,
    /// Tsu-Esaki current density versus bias.
    Iv,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Transmit { .. } => "transmit",
            Command::Sweep => "sweep",
            Command::Resonances => "resonances",
            Command::Compare { .. } => "compare",
            Command::Time => "time",
            Command::Iv => "iv",
        }
    }
}

fn parse_engine(s: &str) -> Result<Engine, CliError> {
    s.parse::<Engine>().map_err(CliError::from)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let config = RunConfig::parse(&text)?;
    let engine = cli.engine.as_deref().map(parse_engine).transpose()?;
    let dir = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let plot = config.output.plot;
    let mut ctx = Context {
        config,
        engine,
        out: OutputDir::create(&dir)?,
        plot,
    };
    match &cli.command {
        Command::Transmit { energy } => commands::transmit(&mut ctx, *energy),
        Command::Sweep => commands::sweep_cmd(&mut ctx),
        Command::Resonances => commands::resonances(&mut ctx),
        Command::Compare { a, b } => commands::compare_cmd(&mut ctx, parse_engine(a)?, parse_engine(b)?),
        Command::Time => commands::time(&mut ctx),
        Command::Iv => commands::iv(&mut ctx),
    }
    .and_then(|_| commands::finish(&mut ctx, cli.command.name(), &text))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads;
    let result = match threads {
        Some(0) => Err(CliError::Validation("--threads must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(CliError::Validation(format!("thread pool: {e}"))),
        },
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
