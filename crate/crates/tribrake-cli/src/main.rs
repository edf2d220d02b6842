use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use tribrake_cli::{execute, ConfigError, RunConfig, Subcommand};

/// Brake orbits and syzygies of the planar three-body problem.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// JSON run configuration (optional for verify-all)
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// override the seed in the config
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match (&args.config, args.command) {
        (Some(p), _) => RunConfig::load(p),
        (None, Subcommand::VerifyAll) => Ok(RunConfig::default()),
        (None, _) => Err(ConfigError::Invalid { field: "--config", msg: "required for this subcommand".into() }),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    match execute(args.command, &cfg, &args.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
