use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qdot::cli::{run, Command, RunConfig, Scan};
use qdot::spectra::PolarizationConfig;
use qdot::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Levels,
    Transitions,
    Spectrum,
    Fit,
    Assign,
}

/// Exciton and biexciton levels, transitions and polarized spectra of a quantum dot.
#[derive(Debug, Parser)]
#[command(name = "qdot", version)]
struct Args {
    command: Cmd,
    /// Model parameters JSON (defaults when omitted).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Spectral range lo:hi:step in meV.
    #[arg(long)]
    scan: Option<String>,
    /// Polarization configuration such as HV(H); repeatable.
    #[arg(long = "config")]
    configs: Vec<String>,
    /// Monitored emission line; selects PLE instead of PL.
    #[arg(long)]
    monitor: Option<String>,
    /// Assignment tolerance in meV.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Fit both lateral lengths of each carrier independently.
    #[arg(long)]
    free_lengths: bool,
    /// Measured lines CSV (energy_meV, polarization, weight, hint).
    #[arg(long)]
    measured: Option<PathBuf>,
}

fn config(args: Args) -> qdot::Result<RunConfig> {
    let command = match args.command {
        Cmd::Levels => Command::Levels,
        Cmd::Transitions => Command::Transitions,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Fit => Command::Fit,
        Cmd::Assign => Command::Assign,
    };
    if let Some(t) = args.tolerance {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {t}")));
        }
    }
    Ok(RunConfig {
        command,
        params: args.params,
        out: args.out,
        scan: args.scan.as_deref().map(str::parse::<Scan>).transpose()?,
        configs: args
            .configs
            .iter()
            .map(|c| c.parse::<PolarizationConfig>())
            .collect::<qdot::Result<_>>()?,
        monitor: args.monitor,
        tolerance: args.tolerance,
        free_lengths: args.free_lengths,
        measured: args.measured,
    })
}

fn report(e: &Error) -> ExitCode {
    let msg = e.to_string().replace(['\n', '\r'], " ");
    eprintln!("error[{}]: {msg}", e.kind());
    match e {
        Error::Numeric { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim();
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
        Err(e) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let cfg = match config(args) {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    match run(&cfg) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
