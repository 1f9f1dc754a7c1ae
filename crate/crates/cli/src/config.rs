use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use gridfold::cep::CepConfig;
use gridfold::reduction::{ReductionConfig, ReductionMode};
use gridfold::solver::{ExternalSolver, MilpSolver, OracleSolver};
use gridfold::two_step::MappingStrategy;

/// Contents of a `--config` file. Every field is optional; explicit flags win.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub network: Option<PathBuf>,
    pub scenarios: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub solver_cmd: Option<String>,
    pub oracle: Option<bool>,
    pub stochastic: Option<bool>,
    pub reduction: Option<ReductionConfig>,
    pub cep: CepConfig,
    pub mapping: Option<MappingStrategy>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.cep.validate()?;
        Ok(cfg)
    }
}

/// Picks the flag value, else the config value, else fails naming the flag.
pub fn required<T: Clone>(flag: Option<T>, config: &Option<T>, name: &str) -> Result<T> {
    match flag.or_else(|| config.clone()) {
        Some(v) => Ok(v),
        None => bail!("--{name} is required (or set `{}` in the config file)", name.replace('-', "_")),
    }
}

pub fn existing(path: PathBuf) -> Result<PathBuf> {
    if !path.exists() {
        bail!("{} does not exist", path.display());
    }
    Ok(path)
}

/// Reduction settings from flags over the config file's `[reduction]` table.
pub fn reduction_config(
    distance_km: Option<f64>,
    mode: Option<ReductionMode>,
    tighten: bool,
    config: &RunConfig,
) -> Result<ReductionConfig> {
    let base = config.reduction;
    let distance_km = required(distance_km, &base.map(|b| b.distance_km), "distance-km")?;
    let mode = mode.or(base.map(|b| b.mode)).unwrap_or(ReductionMode::Full);
    let cfg = ReductionConfig {
        distance_km,
        mode,
        tighten: tighten || base.is_some_and(|b| b.tighten),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub enum Backend {
    Oracle(OracleSolver),
    External(ExternalSolver),
}

impl Backend {
    /// `--oracle` first, then the command template from the flag, the config
    /// file or the environment. With none of these the oracle is used.
    pub fn select(oracle: bool, cmd: Option<String>, config: &RunConfig) -> Result<Self> {
        if oracle || config.oracle == Some(true) {
            return Ok(Self::Oracle(OracleSolver::default()));
        }
        if let Some(cmd) = cmd.or_else(|| config.solver_cmd.clone()) {
            return Ok(Self::External(ExternalSolver::new(cmd)?));
        }
        match ExternalSolver::from_env() {
            Some(s) => Ok(Self::External(s?)),
            None => {
                log::info!("no solver command configured; using the internal oracle");
                Ok(Self::Oracle(OracleSolver::default()))
            }
        }
    }

    pub fn solver(&self) -> &dyn MilpSolver {
        match self {
            Self::Oracle(s) => s,
            Self::External(s) => s,
        }
    }
}

/// Sizes the global thread pool: `jobs`, else one less than the core count.
pub fn init_pool(jobs: Option<usize>) -> Result<usize> {
    let n = jobs.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get().saturating_sub(1))
            .unwrap_or(1)
    });
    let n = n.max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("setting up the worker pool")?;
    Ok(n)
}
