//! Command-line front end. Each subcommand writes its CSV files plus a
//! `manifest.json` into `--out` (default `results/<command>`).

mod commands;
pub mod csv_io;
pub mod manifest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::convnets::Kernel;

pub use csv_io::{emit_csv, format_number, parse_table, render_csv, Cell, Table};
pub use manifest::{emit_manifest, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "relu-dc", version, about = "Frequency-domain experiments on the ReLU activation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtoKind {
    Dif,
    Avg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the first N Taylor coefficients of √(1+g).
    Coeffs {
        #[arg(long)]
        n: usize,
        /// Also write coeffs.csv and manifest.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated-series approximation of relu on a harmonic stack.
    Approx {
        #[arg(long, default_value_t = 5.0)]
        f0: f64,
        #[arg(long, default_value_t = 4)]
        harmonics: usize,
        #[arg(long, default_value_t = 1024.0)]
        fs: f64,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = 50)]
        terms: usize,
        #[arg(long, default_value_t = 1e-4)]
        prescale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-layer spectra of a fixed-kernel conv/relu stack.
    Proto {
        #[arg(long, value_enum)]
        kind: ProtoKind,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 8)]
        avg_len: usize,
        #[arg(long, default_value_t = 1024.0)]
        fs: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heart-rate tone and first harmonic through a pooled averaging stack.
    HeartDemo {
        #[arg(long, default_value_t = 1.2)]
        hr: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train relu, linear and linear-with-offset nets and compare them.
    TrainCompare {
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 300)]
        train_per_class: usize,
        #[arg(long, default_value_t = 100)]
        test_per_class: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify tones by the DC of an untrained two-tap filter.
    ZeroTrain {
        /// Two taps, e.g. `0.6,0.4`; random from --seed when absent.
        #[arg(long, value_parser = parse_kernel_arg)]
        kernel: Option<Kernel>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32.0)]
        duration: f64,
        #[arg(long, default_value_t = 300)]
        calib_per_class: usize,
        #[arg(long, default_value_t = 100)]
        test_per_class: usize,
        /// Random kernels in the initialization sweep.
        #[arg(long, default_value_t = 100)]
        sweep: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kernel_arg(s: &str) -> std::result::Result<Kernel, String> {
    s.parse::<Kernel>().map_err(|e| e.to_string())
}

/// Parses argv (without the program name) into a command.
pub fn parse_args(argv: &[String]) -> std::result::Result<Command, clap::Error> {
    let full = std::iter::once("relu-dc".to_string()).chain(argv.iter().cloned());
    Cli::try_parse_from(full).map(|c| c.command)
}

/// Runs with the process's stdout and stderr.
pub fn run(argv: &[String]) -> i32 {
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Exit code 0 on success, 1 on a runtime error, 2 on a usage error.
pub fn run_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let command = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match commands::execute(command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.name());
            1
        }
    }
}
