//! Command-line runner: `flatlab <experiment> --config <path> [--seed N] [--threads N]`.
//!
//! Exit status 0 on success, 2 on a precondition or model error (nothing is written), 3 when the
//! enumeration budget runs out. FLATLAB_BUDGET overrides the configured budget.

pub mod config;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};
use std::time::Instant;

use flatlab_experiments::ExperimentError;
use flatlab_reduction::ReductionOptions;

use crate::config::Config;
use crate::output::{write_run, ManifestInfo};
use crate::run::Context;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const BUDGET_ENV: &str = "FLATLAB_BUDGET";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Experiment(ExperimentError),
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_budget() {
            CliError::Budget(e.to_string())
        } else {
            CliError::Experiment(e)
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Budget(_) => EXIT_BUDGET,
            _ => EXIT_PRECONDITION,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Tail,
    Moment,
    Heatmap,
    Sphere,
    Lmr,
    Subdiv,
    Dehn,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Tail => "tail",
            Experiment::Moment => "moment",
            Experiment::Heatmap => "heatmap",
            Experiment::Sphere => "sphere",
            Experiment::Lmr => "lmr",
            Experiment::Subdiv => "subdiv",
            Experiment::Dehn => "dehn",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invocation {
    pub experiment: Experiment,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Budget from the environment value when set, else from the config, else the library default.
pub fn resolve_budget(env: Option<&str>, config: &Config) -> Result<u64, CliError> {
    match env {
        Some(v) => match v.trim().parse::<u64>() {
            Ok(b) if b > 0 => Ok(b),
            _ => Err(CliError::Config(format!("{BUDGET_ENV} = {v:?} is not a positive integer"))),
        },
        None => Ok(config.budget.unwrap_or(ReductionOptions::default().budget)),
    }
}

/// Runs one invocation and writes its outputs; returns the path of the manifest.
pub fn execute(inv: &Invocation, budget_env: Option<&str>) -> Result<PathBuf, CliError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&inv.config).map_err(|e| CliError::Io(format!("{}: {e}", inv.config.display())))?;
    let config = Config::parse(&text)?;
    let mut opts = ReductionOptions { budget: resolve_budget(budget_env, &config)?, ..ReductionOptions::default() };
    if let Some(cap) = config.candidate_cap {
        opts.candidate_cap = cap;
    }
    if !(0.0..=1.0).contains(&config.max_excluded_fraction) {
        return Err(CliError::Precondition("max_excluded_fraction must lie in [0, 1]".into()));
    }
    let threads = match inv.threads {
        Some(0) => return Err(CliError::Precondition("--threads must be positive".into())),
        Some(t) => t,
        None => rayon::current_num_threads(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let ctx = Context { config: &config, seed: inv.seed.unwrap_or(config.seed), opts };
    let out = pool.install(|| run::run(inv.experiment, &ctx))?;
    let dir = resolve_dir(&inv.config, &config.output_dir);
    let info = ManifestInfo {
        experiment: inv.experiment.name(),
        config_text: &text,
        seed: ctx.seed,
        threads,
        budget: opts.budget,
        wall_time: start.elapsed().as_secs_f64(),
    };
    write_run(&dir, &info, &out)?;
    Ok(dir.join("manifest.json"))
}

/// A relative output directory is taken relative to the config file.
fn resolve_dir(config_path: &Path, dir: &Path) -> PathBuf {
    if dir.is_absolute() {
        return dir.to_path_buf();
    }
    config_path.parent().map(|p| p.join(dir)).unwrap_or_else(|| dir.to_path_buf())
}
