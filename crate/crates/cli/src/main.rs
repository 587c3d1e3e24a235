//! `groundbound`: lower bounds on lattice ground-state energies from the
//! moment relaxation.
//!
//! Exit codes: 0 converged, 2 iteration limit reached, 1 error, 64 usage.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use groundbound::solver::Termination;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "groundbound",
    version,
    about = "Certified lower bounds on ground-state energies"
)]
struct Cli {
    /// JSON configuration with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,

    #[command(flatten)]
    run: RunConfig,
}

const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let file = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_USAGE);
            }
        },
        None => RunConfig::default(),
    };
    let cfg = match file.overlay(&cli.run).resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}\n\nFor more information, try '--help'.");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run::run(&cfg) {
        Ok(r) if r.termination == Termination::Converged => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("warning: iteration limit reached before convergence");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
