use clap::Parser;
use kdvm_core::config::parse_config;
use kdvm_core::runner::run;
use kdvm_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Half-line m-th order KdV solver suite: linear and nonlinear solves, reference finite
/// differences, elimination constants, and estimate audits.
#[derive(Parser, Debug)]
#[command(name = "kdvm", version)]
struct Args {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for all sampling; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kdvm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text)?;
    if let Some(out) = &args.out {
        config.output = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let outcome = run(&config)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}
