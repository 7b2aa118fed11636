use std::path::PathBuf;
use std::process::ExitCode;

use arcscat::{commands, CliError, Outcome, RunConfig};
use clap::{Parser, Subcommand};

/// Forward and inverse scattering by sound-soft cracks.
#[derive(Parser, Debug)]
#[command(name = "arcscat", version)]
struct Cli {
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic far-field data for the truth cracks.
    Synth,
    /// Reconstruct cracks from far-field data.
    Invert {
        /// Use central differences instead of the analytic Jacobian.
        #[arg(long)]
        fd_jacobian: bool,
        /// Build the initial guess from the sampling indicator when the config has none.
        #[arg(long)]
        init_from_dsm: bool,
        /// Far-field CSV files (default: those listed in the output manifest).
        data: Vec<PathBuf>,
    },
    /// Direct sampling indicator and extracted initial segments.
    Dsm {
        /// Far-field CSV files (default: those listed in the output manifest).
        data: Vec<PathBuf>,
    },
    /// Low-frequency asymptotics table and profile grid.
    LowfreqCheck,
    /// Compare analytic and finite-difference Jacobian columns.
    Gradcheck,
}

const FD_STEP: f64 = 1e-5;

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    if let Command::Invert { fd_jacobian, init_from_dsm, .. } = &cli.command {
        if *fd_jacobian && cfg.newton.fd_step.is_none() {
            cfg.newton.fd_step = Some(FD_STEP);
        }
        cfg.init_from_dsm |= *init_from_dsm;
    }
    let out = cli.out.clone().or_else(|| cfg.output.clone().map(PathBuf::from)).unwrap_or_else(|| "out".into());
    match &cli.command {
        Command::Synth => {
            for path in commands::synth(&cfg, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Invert { data, .. } => {
            let (state, outcome) = commands::invert(&cfg, &out, data)?;
            println!("J_r = {:.6e}, p = {}, target missed: {}", state.j_r, state.p, state.target_missed);
            return Ok(outcome);
        }
        Command::Dsm { data } => {
            for path in commands::dsm(&cfg, &out, data)? {
                println!("{}", path.display());
            }
        }
        Command::LowfreqCheck => {
            for (k, _, e) in commands::lowfreq_check(&cfg, &out)? {
                println!("k = {k:e}: e(k) = {e:.6e}");
            }
        }
        Command::Gradcheck => {
            let rows = commands::gradcheck(&cfg, &out)?;
            let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
            println!("{} columns, largest relative error {worst:.3e}", rows.len());
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
