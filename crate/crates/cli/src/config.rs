use std::path::{Path, PathBuf};

use adequacy::surrogate::{GbtParams, RegressorParams, SurrogateParams};
use adequacy::{Architecture, NominalCosts, SystemConfig};
use mlmc::seed::derive_seed;
use mlmc::{Budget, Metric, MlmcConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Everything one command needs. Missing sections and fields take the
/// defaults below; `system` defaults to the reference system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub training: TrainingConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::reference(),
            training: TrainingConfig::default(),
            run: RunConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Low-margin days mined for training.
    pub n_days: usize,
    /// Independently mined days for the holdout RMSE.
    pub holdout_days: usize,
    pub seed: u64,
    pub theta: f64,
    pub gbt: GbtParams,
    pub regressor: RegressorParams,
    /// Accuracy study: train sizes subsampled from a pool of
    /// `study_pool_days`, each scored on `study_test_days` separate days.
    pub study_sizes: Vec<usize>,
    pub study_repeats: usize,
    pub study_pool_days: usize,
    pub study_test_days: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let p = SurrogateParams::default();
        Self {
            n_days: 5000,
            holdout_days: 1000,
            seed: 1,
            theta: p.theta,
            gbt: p.gbt,
            regressor: p.regressor,
            study_sizes: vec![500, 1000, 5000],
            study_repeats: 20,
            study_pool_days: 10_000,
            study_test_days: 4000,
        }
    }
}

impl TrainingConfig {
    pub fn surrogate_params(&self) -> SurrogateParams {
        SurrogateParams { gbt: self.gbt.clone(), regressor: self.regressor.clone(), theta: self.theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    #[default]
    WallClock,
    /// Costs come from per-level nominal costs, so runs are reproducible.
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub architecture: Architecture,
    /// Seconds per run, wall-clock or nominal.
    pub budget: f64,
    pub budget_mode: BudgetMode,
    pub exploratory_n: u64,
    pub target_metric: Metric,
    pub reuse_exploration: bool,
    pub repeats: usize,
    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
    /// Overrides of the per-level nominal cost in seconds, keyed by level name.
    pub nominal_costs: NominalCosts,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            architecture: "Exact|HGB+Gre|HGB+SVR|Avg".parse().expect("valid architecture"),
            budget: 60.0,
            budget_mode: BudgetMode::WallClock,
            exploratory_n: 500,
            target_metric: Metric::Eens,
            reuse_exploration: true,
            repeats: 1,
            seed: 0,
            workers: 0,
            nominal_costs: NominalCosts::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(CliError::Config(format!("run.budget must be positive, got {}", self.budget)));
        }
        if self.exploratory_n < 2 {
            return Err(CliError::Config("run.exploratory_n must be at least 2".into()));
        }
        if self.repeats == 0 {
            return Err(CliError::Config("run.repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Engine configuration for repeat `r`.
    pub fn mlmc_config(&self, r: usize) -> MlmcConfig {
        let budget = match self.budget_mode {
            BudgetMode::WallClock => Budget::WallClock(self.budget),
            BudgetMode::Nominal => Budget::Nominal(self.budget),
        };
        MlmcConfig {
            budget,
            exploratory_n: self.exploratory_n,
            target: self.target_metric,
            reuse_exploration: self.reuse_exploration,
            seed: derive_seed(self.seed, r as u64),
            workers: self.workers,
            ..MlmcConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        self.system.validate()?;
        self.run.validate()?;
        if self.training.n_days == 0 {
            return Err(CliError::Config("training.n_days must be at least 1".into()));
        }
        Ok(())
    }

    /// Reseed every random stream from one value.
    pub fn apply_seed(&mut self, seed: u64) {
        self.system.demand.seed = derive_seed(seed, 1);
        self.system.wind.seed = derive_seed(seed, 2);
        self.training.seed = derive_seed(seed, 3);
        self.run.seed = derive_seed(seed, 4);
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Identity of a system: the hash of its canonical JSON form.
pub fn system_hash(system: &SystemConfig) -> String {
    sha256_hex(serde_json::to_string(system).expect("system config serializes").as_bytes())
}
