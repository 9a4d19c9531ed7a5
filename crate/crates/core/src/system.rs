//! A configured test system: libraries, thermal fleet, storage and the
//! derived quantities every level stack needs.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use mlmc::OutcomeVector;
use serde::{Deserialize, Serialize};

use crate::architecture::{Architecture, LevelKind};
use crate::dispatch::{
    analytic_avg_risk, average_profile, build_copt, AvgProfile, Copt, NominalProfile, StorageFleet, StorageUnit,
};
use crate::error::{AdequacyError, Result};
use crate::levels::Level;
use crate::scenario::{DemandParams, GeneratorGroup, ScenarioGenerator, TraceLibrary, WindParams};
use crate::surrogate::SurrogateModel;

/// Omitted fields take their reference values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub fleet: Vec<GeneratorGroup>,
    pub demand: DemandParams,
    pub wind: WindParams,
    pub storage: Vec<StorageUnit>,
    pub nominal_profile: NominalProfile,
    /// Days scanned before day mining may give up on a too-reliable system.
    pub mining_probe_days: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl SystemConfig {
    /// The shipped reference system: 30 thermal units, 10 GW of wind and 27
    /// storage units.
    pub fn reference() -> Self {
        let group =
            |count, capacity| GeneratorGroup { count, capacity, fail_rate: 1.0 / 950.0, repair_rate: 1.0 / 50.0 };
        let storage = (0..27)
            .map(|k| {
                let power = [50.0, 100.0, 150.0][k % 3];
                let hours = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.0][k % 9];
                StorageUnit { power, energy: power * hours }
            })
            .collect();
        Self {
            fleet: vec![group(10, 1200.0), group(10, 800.0), group(10, 500.0)],
            demand: DemandParams {
                traces: 20,
                peak_mw: 26_500.0,
                daily_shape: vec![
                    0.66, 0.63, 0.61, 0.60, 0.61, 0.65, 0.73, 0.83, 0.88, 0.89, 0.89, 0.88, 0.87, 0.86, 0.85, 0.87,
                    0.93, 1.00, 0.99, 0.95, 0.90, 0.83, 0.76, 0.70,
                ],
                seasonal_amplitude: 0.15,
                peak_day: 15.0,
                weekend_factor: 0.92,
                daily_noise_sigma: 0.04,
                daily_noise_persistence: 0.8,
                hourly_noise_sigma: 0.01,
                seed: 11,
            },
            wind: WindParams {
                traces: 20,
                capacity_mw: 10_000.0,
                mean_capacity_factor: 0.32,
                persistence: 0.97,
                latent_sigma: 1.2,
                seasonal_amplitude: 0.4,
                peak_day: 15.0,
                seed: 12,
            },
            storage,
            nominal_profile: NominalProfile::Demand,
            mining_probe_days: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fleet.iter().map(|g| g.count).sum::<usize>() == 0 {
            return Err(AdequacyError::Config("thermal fleet is empty".into()));
        }
        GeneratorGroup::expand(&self.fleet)?;
        self.demand.validate()?;
        self.wind.validate()?;
        StorageFleet::new(self.storage.clone())?;
        Ok(())
    }
}

/// Per-level nominal costs in seconds, keyed by level name.
pub type NominalCosts = BTreeMap<String, f64>;

pub struct System {
    pub config: SystemConfig,
    pub generator: ScenarioGenerator,
    pub storage: Arc<StorageFleet>,
    pub profile: Arc<AvgProfile>,
    pub copt: Copt,
    analytic: OnceLock<OutcomeVector>,
}

impl System {
    /// Generate the libraries from the config and assemble the system.
    pub fn build(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let demand = config.demand.generate()?;
        let wind = config.wind.generate()?;
        Self::from_libraries(config, demand, wind)
    }

    pub fn from_libraries(config: SystemConfig, demand: TraceLibrary, wind: TraceLibrary) -> Result<Self> {
        config.validate()?;
        let units = GeneratorGroup::expand(&config.fleet)?;
        let storage = Arc::new(StorageFleet::new(config.storage.clone())?);
        let nominal = config.nominal_profile.compute(&demand, &wind);
        let profile = Arc::new(average_profile(&storage, nominal)?);
        let copt = build_copt(&units);
        let generator = ScenarioGenerator::new(Arc::new(demand), Arc::new(wind), units)?;
        Ok(Self { config, generator, storage, profile, copt, analytic: OnceLock::new() })
    }

    /// Exact expectation of the Avg level.
    pub fn analytic_avg(&self) -> Result<OutcomeVector> {
        if let Some(v) = self.analytic.get() {
            return Ok(*v);
        }
        let v = analytic_avg_risk(&self.copt, self.generator.demand(), self.generator.wind(), &self.profile)?;
        Ok(*self.analytic.get_or_init(|| v))
    }

    pub fn level(&self, kind: LevelKind, surrogate: Option<&Arc<SurrogateModel>>) -> Result<Level> {
        let need = || {
            surrogate
                .cloned()
                .ok_or_else(|| AdequacyError::Config(format!("level {kind} needs a trained surrogate model")))
        };
        Ok(match kind {
            LevelKind::Exact => Level::exact(self.storage.clone()),
            LevelKind::Greedy => Level::greedy(self.storage.clone()),
            LevelKind::Average => Level::average(self.profile.clone()),
            LevelKind::HgbGreedy => Level::hgb_greedy(need()?, self.storage.clone()),
            LevelKind::HgbRegressor => Level::hgb_regressor(need()?),
        })
    }

    /// Bottom-to-top stack for `arch` and the analytic bottom value when the
    /// bottom level is Avg.
    pub fn stack(
        &self,
        arch: &Architecture,
        surrogate: Option<&Arc<SurrogateModel>>,
        costs: &NominalCosts,
    ) -> Result<(Vec<Level>, Option<OutcomeVector>)> {
        let levels = arch
            .bottom_to_top()
            .into_iter()
            .map(|k| {
                let level = self.level(k, surrogate)?;
                Ok(match costs.get(k.name()) {
                    Some(&c) => level.with_nominal_cost(c),
                    None => level,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let bottom = if arch.avg_bottom() { Some(self.analytic_avg()?) } else { None };
        Ok((levels, bottom))
    }
}
