//! Run configurations. Every file carries `schema_version` and unknown keys are rejected.

use std::path::{Path, PathBuf};

use fluorotraj::contextual::Observable;
use fluorotraj::correlators::Variable;
use fluorotraj::mlp::BvpOptions;
use fluorotraj::sme::{OperatorSet, OutcomeSampler};
use fluorotraj::trajectory::FinalCondition;
use fluorotraj::{BlochState, MeasurementParams, Scheme};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub trait RunConfig: Serialize + DeserializeOwned {
    fn schema_version(&self) -> u32;
    fn set_seed(&mut self, seed: u64);
    /// Makes relative paths absolute with respect to the config file's directory.
    fn resolve_paths(&mut self, _base: &Path) {}
}

pub fn load<C: RunConfig>(path: &Path) -> Result<C, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: C = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if cfg.schema_version() != SCHEMA_VERSION {
        return Err(CliError::Config(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", cfg.schema_version())));
    }
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

fn default_clip() -> f64 {
    fluorotraj::trajectory::SdeOptions::default().clip_tolerance
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub params: MeasurementParams,
    pub initial: BlochState,
    pub scheme: Scheme,
    pub n_steps: usize,
    pub n_trajectories: usize,
    /// Member `k` uses seed `seed + k`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_clip")]
    pub clip_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum EnsembleSource {
    Generate(EnsembleSpec),
    Files { csv: PathBuf, manifest: PathBuf },
}

impl EnsembleSource {
    fn set_seed(&mut self, seed: u64) {
        if let EnsembleSource::Generate(spec) = self {
            spec.seed = seed;
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let EnsembleSource::Files { csv, manifest } = self {
            *csv = base.join(&*csv);
            *manifest = base.join(&*manifest);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub ensemble: EnsembleSpec,
}

impl RunConfig for SimulateConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn set_seed(&mut self, seed: u64) {
        self.ensemble.seed = seed;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostselectSpec {
    pub target: FinalCondition,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageConfig {
    pub schema_version: u32,
    pub ensemble: EnsembleSource,
    /// Restrict to members ending near a target and extract their most probable path.
    #[serde(default)]
    pub postselect: Option<PostselectSpec>,
}

impl RunConfig for AverageConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn set_seed(&mut self, seed: u64) {
        self.ensemble.set_seed(seed);
    }

    fn resolve_paths(&mut self, base: &Path) {
        self.ensemble.resolve_paths(base);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub h: f64,
    pub segments: Option<usize>,
    pub tol: f64,
    pub max_iterations: usize,
    pub max_restarts: usize,
    pub initial_momenta: [f64; 3],
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = BvpOptions::default();
        Self {
            h: o.h,
            segments: o.segments,
            tol: o.tol,
            max_iterations: o.max_iterations,
            max_restarts: o.max_restarts,
            initial_momenta: o.initial_momenta,
        }
    }
}

impl SolverSpec {
    pub fn options(&self, seed: u64) -> BvpOptions {
        BvpOptions {
            h: self.h,
            segments: self.segments,
            tol: self.tol,
            max_iterations: self.max_iterations,
            max_restarts: self.max_restarts,
            initial_momenta: self.initial_momenta,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub schema_version: u32,
    pub params: MeasurementParams,
    pub initial: BlochState,
    pub target: FinalCondition,
    pub duration: f64,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Seed for perturbed restart guesses.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig for MlpConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

fn one() -> f64 {
    1.0
}

fn default_h() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealPathSpec {
    pub theta0: f64,
    pub thetaf: f64,
    /// Omitted: follow the zero-energy line, whose duration is fixed by the endpoints.
    #[serde(default)]
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitSpec {
    pub energies: Vec<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub n_theta: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpIdealConfig {
    pub schema_version: u32,
    #[serde(default = "one")]
    pub gamma1: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub paths: Vec<IdealPathSpec>,
    #[serde(default)]
    pub portrait: Option<PortraitSpec>,
}

impl RunConfig for MlpIdealConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn set_seed(&mut self, _seed: u64) {}
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateConfig {
    pub schema_version: u32,
    pub ensemble: EnsembleSource,
    pub pairs: Vec<[Variable; 2]>,
    pub times: TimeGrid,
    /// Agreement threshold in standard errors.
    #[serde(default = "three")]
    pub k_se: f64,
}

impl RunConfig for CorrelateConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn set_seed(&mut self, seed: u64) {
        self.ensemble.set_seed(seed);
    }

    fn resolve_paths(&mut self, base: &Path) {
        self.ensemble.resolve_paths(base);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum OperatorSpec {
    Fluorescence {
        gamma1: f64,
        #[serde(default)]
        gamma_phi: f64,
        eta: f64,
    },
    Explicit(OperatorSet),
}

/// Complex numbers are written as `[re, im]`; matrices are row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum StateSpec {
    Bloch(BlochState),
    Pure(Vec<[f64; 2]>),
    Density { dim: usize, entries: Vec<[f64; 2]> },
}

fn one_trajectory() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmeConfig {
    pub schema_version: u32,
    pub operators: OperatorSpec,
    pub initial: StateSpec,
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default = "one_trajectory")]
    pub n_trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "exact_sampler")]
    pub sampler: OutcomeSampler,
    /// Also run the qubit trajectory engine and compare final ensemble means.
    #[serde(default)]
    pub compare_bloch: bool,
}

fn exact_sampler() -> OutcomeSampler {
    OutcomeSampler::Exact
}

impl RunConfig for SmeConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

fn default_targets() -> Vec<Observable> {
    vec![Observable::SigmaX, Observable::SigmaY, Observable::SigmaZ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    pub schema_version: u32,
    pub state: BlochState,
    pub epsilon: f64,
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_targets")]
    pub targets: Vec<Observable>,
}

impl RunConfig for CvConfig {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}
