//! `fanodiag` command-line front end.

mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CommandKind;
use crate::config::{BathKind, Format, Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "fanodiag", version, about = "Exact diagonalization of a damped harmonic oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: GlobalOpts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// |L_R(ω)|² and its A, B, C weighted forms for one or more damping rates.
    Lineshape {
        /// Comma-separated damping rates to sweep.
        #[arg(long, value_delimiter = ',')]
        gammas: Vec<f64>,
    },
    /// Coefficients of â(t) and the commutator sum rule.
    Evolve,
    /// Mean position for bare and shifted reservoir states against the classical solution.
    MeanQ,
    /// Validity report for the rotating-wave reduction.
    RwaCheck,
    /// Classical ensemble statistics for a discretized bath.
    Langevin,
    /// Continuum coefficients against exact diagonalization of a discrete bath.
    OracleCompare,
    /// Residuals of the long-time integral identities.
    AppendixB,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    omega0: Option<f64>,
    /// Cutoff frequency, or `inf`.
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    #[arg(long, global = true)]
    kt: Option<f64>,
    /// Spectral density shape.
    #[arg(long, global = true, value_enum)]
    bath: Option<BathKind>,
    /// Include the counter-term (`--counter-term=false` to drop it).
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    counter_term: Option<bool>,
    /// Use the rotating-wave coupling.
    #[arg(long, global = true)]
    rwa: bool,
    /// Use the infinite-cutoff limit.
    #[arg(long, global = true)]
    limit: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Ensemble size.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Number of bath modes.
    #[arg(long, global = true)]
    modes: Option<usize>,
    #[arg(long, global = true)]
    t_max: Option<f64>,
    #[arg(long, global = true)]
    t_points: Option<usize>,
    /// Output file; defaults to `$FANODIAG_OUT_DIR/<command>.<format>` or stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also write an SVG plot to this path.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    #[arg(long, global = true, env = "FANODIAG_OUT_DIR", hide_env_values = true)]
    out_dir: Option<PathBuf>,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (kind, gammas) = match cli.command {
        Command::Lineshape { gammas } => (CommandKind::Lineshape, gammas),
        Command::Evolve => (CommandKind::Evolve, vec![]),
        Command::MeanQ => (CommandKind::MeanQ, vec![]),
        Command::RwaCheck => (CommandKind::RwaCheck, vec![]),
        Command::Langevin => (CommandKind::Langevin, vec![]),
        Command::OracleCompare => (CommandKind::OracleCompare, vec![]),
        Command::AppendixB => (CommandKind::AppendixB, vec![]),
    };
    let o = cli.opts;
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        gamma: o.gamma,
        omega0: o.omega0,
        cutoff: o.cutoff,
        kt: o.kt,
        bath: o.bath,
        counter_term: o.counter_term,
        rwa: o.rwa,
        limit: o.limit,
        seed: o.seed,
        samples: o.samples,
        modes: o.modes,
        t_max: o.t_max,
        t_points: o.t_points,
        gammas,
        format: o.format,
        out: o.out,
        svg: o.svg,
    });
    let report = commands::run(kind, &cfg)?;
    let format = cfg.output.format;
    let text = report.render(format);
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let target = cfg
        .output
        .path
        .clone()
        .or_else(|| o.out_dir.map(|d| d.join(format!("{}.{ext}", kind.name()))));
    match target {
        Some(path) => write_file(&path, &text)?,
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(CliError::Numerical(format!("cannot write output: {e}")))
                }
                _ => {}
            }
        }
    }
    if let Some(svg) = &cfg.output.svg {
        write_file(svg, &report.to_svg())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
