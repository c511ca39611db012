//! Run configuration, read from TOML. Unknown keys anywhere are rejected.

use std::path::PathBuf;

use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Group rank n of SL_n; experiments fixed to n = 3 reject other values.
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Node budget of each short-vector enumeration.
    pub budget: Option<u64>,
    pub candidate_cap: Option<usize>,
    /// Thick radius; defaults to the Siegel-core value for n.
    pub r0: Option<f64>,
    /// Runs dropping a larger share of samples to the budget exit with code 3.
    #[serde(default = "default_excluded_fraction")]
    pub max_excluded_fraction: f64,
    pub tail: Option<TailConfig>,
    pub moment: Option<MomentConfig>,
    pub heatmap: Option<HeatmapConfig>,
    pub sphere: Option<SphereConfig>,
    pub lmr: Option<LmrConfig>,
    pub subdiv: Option<SubdivConfig>,
    pub dehn: Option<DehnConfig>,
}

fn default_excluded_fraction() -> f64 {
    0.01
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub a_norm: f64,
    pub samples: usize,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    /// Basepoint h = exp(diag(R, 0, …, −R)/√2).
    #[serde(default)]
    pub depth: f64,
}

fn default_s_grid() -> Vec<f64> {
    (0..=14).map(|k| 0.5 + 0.25 * k as f64).collect()
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MomentConfig {
    pub b: f64,
    pub a_norms: Vec<f64>,
    pub samples: usize,
    #[serde(default)]
    pub depth: f64,
    /// Basepoint depths for the fit of the plateau threshold; skipped when empty.
    #[serde(default)]
    pub calibration_depths: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Identity,
    Random,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HeatmapConfig {
    #[serde(default = "default_frame")]
    pub frame: FrameKind,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_frame() -> FrameKind {
    FrameKind::Identity
}
fn default_rho() -> f64 {
    1.0
}
fn default_half_width() -> f64 {
    12.0
}
fn default_resolution() -> usize {
    256
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    #[serde(default = "default_sphere_depths")]
    pub depths: Vec<f64>,
    #[serde(default = "default_sphere_samples")]
    pub samples_on_sphere: usize,
    /// Radius factor; when absent it is 2·b′ from a moment calibration in n = 3.
    pub c: Option<f64>,
    #[serde(default = "default_sphere_b")]
    pub b: f64,
    #[serde(default = "default_calibration_samples")]
    pub calibration_samples: usize,
}

fn default_sphere_depths() -> Vec<f64> {
    vec![8.0, 16.0, 32.0, 64.0]
}
fn default_sphere_samples() -> usize {
    64
}
fn default_sphere_b() -> f64 {
    0.5
}
fn default_calibration_samples() -> usize {
    1000
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LmrConfig {
    #[serde(default = "default_distances")]
    pub distances: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_resamples")]
    pub max_resamples: u32,
    /// Also write every sample of every path.
    #[serde(default)]
    pub write_paths: bool,
}

fn default_distances() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0]
}
fn default_runs() -> usize {
    50
}
fn default_resamples() -> u32 {
    flatlab_experiments::lmr::DEFAULT_RESAMPLES
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SubdivConfig {
    pub level: u32,
    /// Cells are listed only when there are at most this many.
    #[serde(default = "default_list_limit")]
    pub list_limit: u64,
}

fn default_list_limit() -> u64 {
    100_000
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FlatKind {
    Closed,
    Random,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DehnConfig {
    #[serde(default = "default_loop_scales")]
    pub loop_scales: Vec<i64>,
    #[serde(default = "default_flat")]
    pub flat: FlatKind,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

fn default_loop_scales() -> Vec<i64> {
    vec![15, 31, 63]
}
fn default_flat() -> FlatKind {
    FlatKind::Random
}
fn default_attempts() -> usize {
    flatlab_experiments::dehn::DEFAULT_ATTEMPTS
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}
