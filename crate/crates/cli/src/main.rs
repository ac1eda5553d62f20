//! `zoll`: runs the numerical experiments from a config file and writes CSV.
//!
//! Exit codes: 0 success, 2 invalid input or config, 3 numerical failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use config::{invalid, Config, ValidationError};

#[derive(Parser)]
#[command(name = "zoll", version, about = "Numerical experiments on Zoll surfaces")]
struct Cli {
    /// Config file: `key = value` lines, or a flat JSON object.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` entries, applied as if they were in the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory for the CSV file.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// RNG seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample one closed geodesic.
    Geodesic,
    /// Radon transform of the potential over random geodesics.
    Radon,
    /// Critical geodesics of the Radon transform.
    Crit,
    /// Caustic times along one geodesic.
    Caustic,
    /// Subprincipal invariant q0 from the equator to the meridian.
    Q0,
    /// Band invariants of the potential on clusters.
    Band,
    /// Smallest level spacing near energy 1/2.
    Gaps,
    /// Transport of geodesic states by the perturbed evolution.
    Transport,
    /// Loschmidt echo of a two-geodesic superposition.
    Echo,
    /// Structural self-checks.
    Verify,
}

/// Seed used when neither `--seed` nor the config sets one.
const DEFAULT_SEED: u64 = 7;

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for kv in &cli.sets {
        let (k, v) = kv.split_once('=').ok_or_else(|| invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim().to_string())?;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(invalid("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.u64_opt("seed")?.unwrap_or(DEFAULT_SEED),
    };
    let digest = cfg.digest(seed);
    let ctx = Ctx { cfg, seed };
    let mut failed = 0;
    let csv = match cli.command {
        Command::Geodesic => commands::geodesic(&ctx)?,
        Command::Radon => commands::radon(&ctx)?,
        Command::Crit => commands::crit(&ctx)?,
        Command::Caustic => commands::caustic(&ctx)?,
        Command::Q0 => commands::q0(&ctx)?,
        Command::Band => commands::band(&ctx)?,
        Command::Gaps => commands::gaps(&ctx)?,
        Command::Transport => commands::transport(&ctx)?,
        Command::Echo => commands::echo(&ctx)?,
        Command::Verify => {
            let (csv, f) = commands::verify(&ctx)?;
            failed = f;
            csv
        }
    };
    let path = csv.write(&cli.out, &digest)?;
    println!("wrote {} ({} rows)", path.display(), csv.len());
    if failed > 0 {
        anyhow::bail!("{failed} verification checks failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ValidationError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
