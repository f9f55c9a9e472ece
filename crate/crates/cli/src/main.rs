//! `opm`: structural matrices, harness checks, quadrature and simulation
//! for the q-Wiener, (α,q)-OU and Poisson processes.
//!
//! Exit codes: 0 when every check passes, 1 when one fails, 2 for usage or
//! configuration errors.

mod commands;
mod config;
mod report;
mod verify;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{KernelArgs, Output, StructuralCheck};
use config::{CommonArgs, Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "opm", version, about = "Markov processes with polynomial conditional moments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Structural matrix V_n(t), with semigroup and independence checks.
    Structural {
        #[arg(long, value_enum, default_value = "semigroup")]
        check: StructuralCheck,
    },
    /// Orthogonality of the martingale polynomials (V^-1 M V^-T diagonal).
    OpmCheck,
    /// Harness parameters, the recursive system and the E(X_t^2 | X_s, X_u) coefficients.
    Harness {
        /// JSON object with arrays a, a_hat, b, b_hat, c, c_hat.
        #[arg(long)]
        sequences: Option<PathBuf>,
    },
    /// Only the coefficients A..F at --stu (default 1,2,4).
    QhCoeffs {
        #[arg(long)]
        sequences: Option<PathBuf>,
    },
    /// Truncated kernel expansion against the closed transition ratio.
    Kernel {
        #[arg(long, default_value_t = 0.3)]
        rho: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        y: f64,
    },
    /// Sample paths; `--format csv` gives rows `path_id,time,value`.
    Simulate {
        #[arg(long, default_value = "0.5,1,2")]
        times: String,
    },
    /// Every symbolic and quadrature suite, plus Monte Carlo with --mc.
    VerifyAll {
        #[arg(long)]
        mc: bool,
    },
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<Output, CliError> {
    match &cli.command {
        Command::Structural { check } => commands::structural(cfg, *check),
        Command::OpmCheck => commands::opm(cfg),
        Command::Harness { sequences } => commands::harness(cfg, sequences.as_deref(), true),
        Command::QhCoeffs { sequences } => commands::harness(cfg, sequences.as_deref(), false),
        Command::Kernel { rho, y } => commands::kernel(cfg, &KernelArgs { rho: *rho, y: *y }),
        Command::Simulate { times } => commands::simulate(cfg, times),
        Command::VerifyAll { mc } => verify::verify_all(cfg, *mc),
    }
}

fn render(out: &Output, format: Format) -> String {
    match format {
        Format::Json => out.report.to_json(),
        Format::Csv => out.csv.clone().unwrap_or_else(|| out.report.checks_csv()),
        Format::Pretty => {
            let mut s = String::new();
            for line in &out.text {
                s.push_str(line);
                s.push('\n');
            }
            s.push_str(&out.report.pretty_checks());
            s
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::from_args(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let start = Instant::now();
    let mut out = match run(&cli, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    out.report.timing_ms = start.elapsed().as_millis() as u64;
    let text = render(&out, cfg.format());
    let written = match &cfg.output {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    if out.report.failed() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
