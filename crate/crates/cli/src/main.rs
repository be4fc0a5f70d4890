//! `dcs`: surface reconstruction from compressively sampled gradients.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 when the
//! computation itself fails (numerical failure, or every sweep cell failed).

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{ReconstructArgs, SurfaceFormat, SweepArgs};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "dcs", version, about = "Surface reconstruction from compressively sampled gradient fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grid-search (lambda, delta) for every configured surface and noise model.
    Sweep {
        /// JSON config; the built-in default is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        /// Worker threads (default: number of logical CPUs).
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reconstruct one surface with fixed hyperparameters.
    Reconstruct {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "reconstruct-out")]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write one of the built-in synthetic surfaces to a file.
    GenSurface {
        /// ramp_peak, sphere or peak_valley.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 32)]
        rows: usize,
        #[arg(long, default_value_t = 32)]
        cols: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default config with every field filled in.
    PrintDefaultConfig {
        /// sweep or reconstruct.
        #[arg(long, default_value = "sweep")]
        kind: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pgm,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            workers,
            seed,
        } => commands::sweep(SweepArgs {
            config,
            out,
            workers,
            seed,
        }),
        Command::Reconstruct { config, out, seed } => commands::reconstruct(ReconstructArgs { config, out, seed }),
        Command::GenSurface {
            kind,
            rows,
            cols,
            format,
            out,
        } => {
            let format = match format {
                Format::Csv => SurfaceFormat::Csv,
                Format::Pgm => SurfaceFormat::Pgm,
            };
            commands::gen_surface_file(&kind, rows, cols, format, &out)
        }
        Command::PrintDefaultConfig { kind } => {
            print!("{}", commands::default_config(&kind)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
