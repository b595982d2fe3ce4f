mod analyze;
mod args;
mod config;
mod output;
mod recon;
mod repro;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{ensure, Result};
use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

#[derive(Parser, Debug)]
#[command(name = "psart", version, about = "Algebraic CT reconstruction and pSART convergence analysis")]
struct Cli {
    /// JSON file with default values for the subcommand's flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if absent
    #[arg(long, global = true, default_value = "psart-out")]
    out: PathBuf,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rasterize the head phantom or emit the two-pixel object
    Phantom(recon::PhantomArgs),
    /// Simulate noiseless polyenergetic projections of an attenuation map
    Simulate(recon::SimulateArgs),
    /// Run ART, SART, pART or pSART on a sinogram
    Reconstruct(recon::ReconstructArgs),
    /// Estimate the spectral radius of T or J_F by power iteration
    Specrad(analyze::SpecradArgs),
    /// Map ρ(J_F) and pSART convergence over a grid of two-pixel objects
    Convmap(analyze::ConvmapArgs),
    /// Check the SART weight-matrix lemmas on random positive matrices
    VerifyLemmas(analyze::LemmaArgs),
    /// Regenerate a figure or table
    Repro(repro::ReproArgs),
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    ensure!(n >= 1, "threads: must be at least 1");
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| anyhow::anyhow!("threads: {e}"))?;
    Ok(())
}

/// Returns whether the command's own checks passed.
fn execute(cli: &Cli) -> Result<bool> {
    configure_threads(cli.threads)?;
    let file: Option<Map<String, Value>> = cli.config.as_deref().map(config::load).transpose()?;
    let file = file.as_ref();
    let out = &cli.out;
    match &cli.command {
        Command::Phantom(a) => recon::phantom(&config::resolve(a, file)?, out)?,
        Command::Simulate(a) => recon::simulate(&config::resolve(a, file)?, out)?,
        Command::Reconstruct(a) => recon::reconstruct(&config::resolve(a, file)?, out)?,
        Command::Specrad(a) => analyze::specrad(&config::resolve(a, file)?, out)?,
        Command::Convmap(a) => analyze::convmap(&config::resolve(a, file)?, out)?,
        Command::VerifyLemmas(a) => return analyze::verify_lemmas(&config::resolve(a, file)?, out),
        Command::Repro(a) => repro::repro(&config::resolve(a, file)?, out)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
