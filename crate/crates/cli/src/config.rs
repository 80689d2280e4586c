use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use topofront::fem2d::{Grid, ProblemSpec};
use topofront::metamodel::ANCHOR_VF;
use topofront::pareto::{vf_grid, RefineConfig};
use topofront::simp::{OptimizerConfig, NOISE_SEED};

use crate::error::{CliError, CliResult};

/// Environment variable that overrides the cache directory.
pub const CACHE_ENV: &str = "TOPOFRONT_CACHE";

/// A preset name or a full problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    Preset(String),
    Inline(ProblemSpec),
}

impl Default for ProblemRef {
    fn default() -> Self {
        ProblemRef::Preset("mbb".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub vf_min: f64,
    pub vf_max: f64,
    pub points: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { vf_min: 0.02, vf_max: 1.0, points: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSpec {
    pub rounds: usize,
    pub min_threshold: f64,
    pub drop_threshold: f64,
    pub stop_improvement: f64,
}

impl Default for RefineSpec {
    fn default() -> Self {
        let d = RefineConfig::default();
        Self {
            rounds: d.rounds,
            min_threshold: d.min_threshold,
            drop_threshold: d.drop_threshold,
            stop_improvement: d.stop_improvement,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub cache_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

/// Everything a run depends on. Loaded from JSON; missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemRef,
    /// Overrides the resolution of a preset, `[nelx, nely]`.
    pub grid: Option<[usize; 2]>,
    pub optimizer: OptimizerConfig,
    pub sweep: SweepSpec,
    pub refine: RefineSpec,
    pub anchor_vf: f64,
    pub paths: Paths,
    /// Seed of the noise start design.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemRef::default(),
            grid: None,
            optimizer: OptimizerConfig::default(),
            sweep: SweepSpec::default(),
            refine: RefineSpec::default(),
            anchor_vf: ANCHOR_VF,
            paths: Paths::default(),
            seed: NOISE_SEED,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn problem(&self) -> CliResult<ProblemSpec> {
        let p = match (&self.problem, self.grid) {
            (ProblemRef::Preset(name), None) => ProblemSpec::preset(name)?,
            (ProblemRef::Preset(name), Some([nx, ny])) => ProblemSpec::preset_with_grid(name, Grid::new(nx, ny)?)?,
            (ProblemRef::Inline(p), None) => p.clone(),
            (ProblemRef::Inline(_), Some(_)) => {
                return Err(CliError::Config("`grid` only applies to preset problems".into()))
            }
        };
        Ok(p)
    }

    pub fn vfs(&self) -> CliResult<Vec<f64>> {
        Ok(vf_grid(self.sweep.vf_min, self.sweep.vf_max, self.sweep.points)?)
    }

    pub fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            rounds: self.refine.rounds,
            min_threshold: self.refine.min_threshold,
            drop_threshold: self.refine.drop_threshold,
            stop_improvement: self.refine.stop_improvement,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Flag, then environment, then config file, then `<output_dir>/cache`.
    pub fn cache_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| self.paths.cache_dir.clone())
            .unwrap_or_else(|| self.output_dir().join("cache"))
    }
}
