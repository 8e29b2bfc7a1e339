use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use toda_ist::pipeline::{run, Mode, RunConfig};
use toda_ist::{Stage, TodaError};

/// Solve the Toda lattice with steplike initial data by inverse scattering.
#[derive(Parser, Debug)]
#[command(name = "toda-ist", version)]
struct Cli {
    /// TOML run configuration.
    config: PathBuf,

    /// Override the configured mode.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,

    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Suppress progress lines.
    #[arg(long)]
    quiet: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: TodaError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = RunConfig::load(&cli.config)
        .map_err(|e| e.at(Stage::Config))
        .and_then(|mut config| {
            if let Some(mode) = cli.mode {
                config.mode = mode;
            }
            if let Some(out) = cli.out {
                config.output_dir = out;
            }
            run(&config).map(|_| config)
        });
    match result {
        Ok(config) => {
            if !cli.quiet {
                eprintln!("{} finished; output in {}", config.mode, config.output_dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
