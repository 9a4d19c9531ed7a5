//! Annual net generation margin scenarios and low-margin day mining.

use std::sync::Arc;

use mlmc::seed::{derive_seed, mix64};
use mlmc::{Fingerprint, ScenarioSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generation::{sample_generation_trace, GeneratingUnit};
use super::library::TraceLibrary;
use super::{DAYS_PER_YEAR, HOURS_PER_DAY, HOURS_PER_YEAR};
use crate::error::{AdequacyError, Result};

/// Component traces behind a margin trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub generation: Vec<f64>,
    pub wind: Vec<f64>,
    pub demand: Vec<f64>,
}

/// One sampled year of hourly net generation margin.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub demand_index: usize,
    pub wind_index: usize,
    pub margin: Vec<f64>,
    pub components: Option<Components>,
}

impl Scenario {
    /// Wrap an externally built margin trace.
    pub fn from_margin(seed: u64, margin: Vec<f64>) -> Self {
        Self { seed, demand_index: 0, wind_index: 0, margin, components: None }
    }

    pub fn day(&self, day: usize) -> &[f64] {
        &self.margin[day * HOURS_PER_DAY..(day + 1) * HOURS_PER_DAY]
    }

    pub fn days(&self) -> impl Iterator<Item = &[f64]> {
        self.margin.chunks_exact(HOURS_PER_DAY)
    }
}

impl Fingerprint for Scenario {
    fn fingerprint(&self) -> u64 {
        mix64(mix64(self.seed ^ (self.demand_index as u64) << 32) ^ self.wind_index as u64)
    }
}

/// A midnight-aligned 24-hour margin frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DayMargins {
    pub scenario_seed: u64,
    pub day: usize,
    pub margin: [f64; HOURS_PER_DAY],
}

impl DayMargins {
    pub fn min(&self) -> f64 {
        self.margin.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Draws scenarios from a demand library, a wind library and a thermal fleet.
#[derive(Debug, Clone)]
pub struct ScenarioGenerator {
    demand: Arc<TraceLibrary>,
    wind: Arc<TraceLibrary>,
    fleet: Arc<[GeneratingUnit]>,
    retain_components: bool,
    nominal_cost: f64,
}

impl ScenarioGenerator {
    pub fn new(demand: Arc<TraceLibrary>, wind: Arc<TraceLibrary>, fleet: Vec<GeneratingUnit>) -> Result<Self> {
        if demand.is_empty() {
            return Err(AdequacyError::EmptyLibrary("demand"));
        }
        if wind.is_empty() {
            return Err(AdequacyError::EmptyLibrary("wind"));
        }
        for unit in &fleet {
            unit.validate()?;
        }
        Ok(Self { demand, wind, fleet: fleet.into(), retain_components: false, nominal_cost: 0.0 })
    }

    pub fn retain_components(mut self, retain: bool) -> Self {
        self.retain_components = retain;
        self
    }

    /// Advisory seconds per draw, used by nominal budgets.
    pub fn with_nominal_cost(mut self, seconds: f64) -> Self {
        self.nominal_cost = seconds;
        self
    }

    pub fn demand(&self) -> &TraceLibrary {
        &self.demand
    }

    pub fn wind(&self) -> &TraceLibrary {
        &self.wind
    }

    pub fn fleet(&self) -> &[GeneratingUnit] {
        &self.fleet
    }

    pub fn installed_capacity(&self) -> f64 {
        self.fleet.iter().map(|u| u.capacity).sum()
    }

    /// Sample one year: library traces drawn uniformly, outages sampled fresh.
    pub fn sample(&self, seed: u64) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let demand_index = rng.random_range(0..self.demand.len());
        let wind_index = rng.random_range(0..self.wind.len());
        let generation = sample_generation_trace(&self.fleet, HOURS_PER_YEAR, &mut rng);
        let d = self.demand.get(demand_index);
        let w = self.wind.get(wind_index);
        let margin = generation.iter().zip(w).zip(d).map(|((g, w), d)| g + w - d).collect();
        let components =
            self.retain_components.then(|| Components { generation, wind: w.to_vec(), demand: d.to_vec() });
        Scenario { seed, demand_index, wind_index, margin, components }
    }

    /// Collect `count` days whose minimum margin is negative.
    ///
    /// Scenarios are drawn with seeds `derive_seed(seed, k)` for k = 0, 1, ...
    /// and scanned day by day in order. Fails once `probe_days` days have been
    /// scanned at an acceptance rate below 1e-6.
    pub fn sample_low_margin_days(&self, count: usize, seed: u64, probe_days: usize) -> Result<Vec<DayMargins>> {
        if count == 0 {
            return Err(AdequacyError::Config("day mining needs count >= 1".into()));
        }
        let mut out = Vec::with_capacity(count);
        let mut probed = 0usize;
        for k in 0.. {
            let scenario = self.sample(derive_seed(seed, k));
            for (day, frame) in scenario.days().enumerate() {
                probed += 1;
                if frame.iter().any(|&m| m < 0.0) {
                    out.push(DayMargins {
                        scenario_seed: scenario.seed,
                        day,
                        margin: frame.try_into().expect("24-hour frame"),
                    });
                    if out.len() == count {
                        return Ok(out);
                    }
                }
            }
            if probed >= probe_days && (out.len() as f64) < 1e-6 * probed as f64 {
                return Err(AdequacyError::TooReliable { accepted: out.len(), probed });
            }
        }
        unreachable!("scenario counter exhausted")
    }

    /// Fraction of days with negative minimum margin over `scenarios` draws.
    pub fn shortfall_day_rate(&self, scenarios: u64, seed: u64) -> f64 {
        let hits: usize = (0..scenarios)
            .map(|k| self.sample(derive_seed(seed, k)).days().filter(|f| f.iter().any(|&m| m < 0.0)).count())
            .sum();
        hits as f64 / (scenarios as usize * DAYS_PER_YEAR) as f64
    }
}

impl ScenarioSource for ScenarioGenerator {
    type Scenario = Scenario;

    fn draw(&self, seed: u64) -> Scenario {
        self.sample(seed)
    }

    fn nominal_cost(&self) -> f64 {
        self.nominal_cost
    }
}
