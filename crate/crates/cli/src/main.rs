//! `qrad`: quantum-illumination radar and JTWPA sweeps to CSV.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config error, 3 partial sweep
//! failure, 4 numerical failure.

mod commands;
mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Output};
use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "qrad", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical and TMSV error probabilities over one scenario variable.
    QiError(Args),
    /// Idler power against flux-bias current for several pump powers.
    BiasSweep(Args),
    /// Pump-on/pump-off gain against pump power, both pumping regimes.
    GainSweep(Args),
    /// Mode count, transmit power and end-to-end error for a source bandwidth.
    Link(Args),
    /// Phase-conjugate receiver simulation against the closed-form bound.
    Montecarlo(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of grid points of the command's sweep.
    #[arg(long)]
    points: Option<usize>,
}

impl Command {
    fn args(&self) -> &Args {
        match self {
            Command::QiError(a)
            | Command::BiasSweep(a)
            | Command::GainSweep(a)
            | Command::Link(a)
            | Command::Montecarlo(a) => a,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::QiError(_) => "qi-error",
            Command::BiasSweep(_) => "bias-sweep",
            Command::GainSweep(_) => "gain-sweep",
            Command::Link(_) => "link",
            Command::Montecarlo(_) => "montecarlo",
        }
    }
}

fn load(cmd: &Command) -> Result<RunConfig, ConfigError> {
    let args = cmd.args();
    let text = fs::read_to_string(&args.config).map_err(|e| ConfigError {
        field: String::new(),
        message: format!("cannot read {}: {e}", args.config.display()),
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(n) = args.points {
        if n == 0 {
            return Err(ConfigError {
                field: "--points".into(),
                message: "must be at least 1".into(),
            });
        }
        match cmd {
            Command::BiasSweep(_) => cfg.bias_sweep.points = n,
            Command::GainSweep(_) => cfg.gain_sweep.points = n,
            _ => match cfg.sweep.as_mut() {
                Some(sw) => sw.points = n,
                None => {
                    return Err(ConfigError {
                        field: "--points".into(),
                        message: "needs a [sweep] section in the config".into(),
                    })
                }
            },
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: &Command, cfg: &RunConfig) -> Result<Output, Failure> {
    match cmd {
        Command::QiError(_) => commands::qi_error(cfg),
        Command::BiasSweep(_) => commands::bias_sweep(cfg),
        Command::GainSweep(_) => commands::gain_sweep(cfg),
        Command::Link(_) => commands::link(cfg),
        Command::Montecarlo(_) => commands::montecarlo(cfg),
    }
}

/// Writes next to the target and renames into place.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = cli.command;
    let cfg = match load(&cmd) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qrad {}: invalid config: {e}", cmd.name());
            return ExitCode::from(2);
        }
    };
    let mut output = match run(&cmd, &cfg) {
        Ok(o) => o,
        Err(Failure::Config(e)) => {
            eprintln!("qrad {}: invalid config: {e}", cmd.name());
            return ExitCode::from(2);
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("qrad {}: numerical failure: {msg}", cmd.name());
            return ExitCode::from(4);
        }
    };

    output
        .result
        .set_meta("command", cmd.name())
        .set_meta("config_hash", cfg.hash())
        .set_meta(
            "seed",
            cfg.seed
                .map_or_else(|| "none".to_string(), |s| s.to_string()),
        )
        .set_meta("version", env!("CARGO_PKG_VERSION"));
    let csv = output.result.to_csv();

    let target = cmd.args().out.clone().or_else(|| cfg.output.clone());
    match &target {
        Some(path) => {
            if let Err(e) = write_atomic(path, &csv) {
                eprintln!("qrad {}: cannot write {}: {e}", cmd.name(), path.display());
                return ExitCode::from(1);
            }
            eprintln!(
                "qrad {}: {} -> {}",
                cmd.name(),
                output.summary,
                path.display()
            );
        }
        None => {
            if io::stdout().lock().write_all(csv.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            eprintln!("qrad {}: {}", cmd.name(), output.summary);
        }
    }
    if let Some(msg) = output.partial {
        eprintln!("qrad {}: partial sweep failure: {msg}", cmd.name());
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
