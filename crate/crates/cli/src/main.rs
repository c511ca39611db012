use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use flatlab_cli::{execute, Experiment, Invocation, BUDGET_ENV, EXIT_OK};

/// Experiments on random flats in SL_n(R)/SO(n) modulo SL_n(Z).
#[derive(Parser, Debug)]
#[command(name = "flatlab", version)]
struct Args {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::from(EXIT_OK as u8);
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(flatlab_cli::EXIT_PRECONDITION as u8);
        }
    };
    let inv = Invocation { experiment: args.experiment, config: args.config, seed: args.seed, threads: args.threads };
    let budget = std::env::var(BUDGET_ENV).ok();
    match execute(&inv, budget.as_deref()) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("flatlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
