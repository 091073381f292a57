use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pauc_core::data::{self, generate_synthetic};
use pauc_core::solver::BestIterate;
use pauc_core::{Dataset, Formulation, MinVars, ObjectiveConfig, ScorerKind, ScorerParams, SolverConfig, SplitSpec};
use serde::{Deserialize, Serialize};

use crate::UsageError;

pub const SEED_ENV: &str = "PAUC_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default = "default_label_col")]
        label_col: String,
    },
    Synthetic {
        n: usize,
        imbalance: f64,
        dims: usize,
        separation: f64,
    },
}

fn default_label_col() -> String {
    "label".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    /// Hidden layer widths; ignored for the linear scorer.
    #[serde(default)]
    pub hidden: Vec<usize>,
}

impl ScorerSpec {
    pub fn build(&self, input_dims: usize, seed: u64) -> Result<ScorerParams> {
        let mut dims = vec![input_dims];
        if self.kind == ScorerKind::Mlp {
            dims.extend(&self.hidden);
        }
        dims.push(1);
        Ok(ScorerParams::init(self.kind, dims, seed)?)
    }
}

/// Everything a `train` or `sweep` run needs. `seed` drives the synthetic
/// generator, the split, scorer initialisation and minibatch sampling; the
/// seeds embedded in `split` and `solver` are overwritten by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSource,
    #[serde(default)]
    pub split: SplitSpec,
    pub scorer: ScorerSpec,
    pub objective: ObjectiveConfig,
    pub solver: SolverConfig,
    /// Total minibatch size. When set, it is divided between the classes in
    /// proportion to the training prior and replaces `solver.batch_pos` and
    /// `solver.batch_neg`.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic {
                n: 2000,
                imbalance: 0.1,
                dims: 2,
                separation: 4.0,
            },
            split: SplitSpec::default(),
            scorer: ScorerSpec {
                kind: ScorerKind::Linear,
                hidden: Vec::new(),
            },
            objective: ObjectiveConfig::opauc(Formulation::Surrogate, 0.3),
            solver: SolverConfig::default(),
            batch_size: Some(256),
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
    }

    /// Config from `path` (or defaults), then the environment seed, then
    /// the explicit flag seed.
    pub fn resolve(path: Option<&Path>, flag_seed: Option<u64>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(seed) = env_seed()? {
            cfg.seed = seed;
        }
        if let Some(seed) = flag_seed {
            cfg.seed = seed;
        }
        cfg.split.seed = cfg.seed;
        cfg.solver.seed = cfg.seed;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            self.objective.validate(),
            self.solver.validate(),
        ];
        for c in checks {
            c.map_err(|e| UsageError(e.to_string()))?;
        }
        if self.batch_size == Some(0) {
            return Err(UsageError("batch_size must be positive".into()).into());
        }
        if let DataSource::Csv { path, .. } = &self.data {
            if !path.exists() {
                return Err(UsageError(format!("data file {} does not exist", path.display())).into());
            }
        }
        Ok(())
    }

    pub fn load_data(&self) -> Result<Dataset> {
        Ok(match &self.data {
            DataSource::Csv { path, label_col } => {
                data::load_csv(path, label_col).with_context(|| format!("loading {}", path.display()))?
            }
            DataSource::Synthetic {
                n,
                imbalance,
                dims,
                separation,
            } => generate_synthetic(*n, *imbalance, *dims, *separation, self.seed)?,
        })
    }

    /// Solver settings with the class split of `batch_size` for `train`.
    pub fn solver_for(&self, train: &Dataset) -> SolverConfig {
        let mut cfg = self.solver.clone();
        if let Some(total) = self.batch_size {
            let (p, n) = pauc_core::solver::batch_sizes_for_prior(total, train);
            cfg.batch_pos = p.min(train.n_pos());
            cfg.batch_neg = n.min(train.n_neg());
        }
        cfg
    }
}

pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| UsageError(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")).into()),
        Err(_) => Ok(None),
    }
}

/// Final iterate of a training run plus the best validation iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub objective: ObjectiveConfig,
    pub min_vars: MinVars,
    pub gamma: f64,
    pub best: Option<BestIterate>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing checkpoint {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.data = DataSource::Csv {
            path: "x.csv".into(),
            label_col: "y".into(),
        };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn mlp_spec_builds_hidden_layers() {
        let spec = ScorerSpec {
            kind: ScorerKind::Mlp,
            hidden: vec![8, 4],
        };
        let p = spec.build(3, 0).unwrap();
        assert_eq!(p.num_params(), (3 * 8 + 8) + (8 * 4 + 4) + (4 + 1));
    }
}
