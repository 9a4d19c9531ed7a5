//! Level models over annual margin scenarios.

use std::sync::Arc;

use mlmc::{LevelModel, ModelError, OutcomeVector};

use crate::architecture::LevelKind;
use crate::dispatch::{dispatch_metrics, AvgProfile, Policy, StorageFleet};
use crate::scenario::Scenario;
use crate::surrogate::{EnsPart, SurrogateModel};

#[derive(Debug, Clone)]
enum Inner {
    Dispatch { policy: Policy, fleet: Arc<StorageFleet> },
    Average(Arc<AvgProfile>),
    Surrogate { model: Arc<SurrogateModel>, greedy: Option<Arc<StorageFleet>> },
}

/// One model of the stack, shareable across sampling workers.
#[derive(Debug, Clone)]
pub struct Level {
    kind: LevelKind,
    inner: Inner,
    nominal_cost: f64,
}

impl Level {
    pub fn exact(fleet: Arc<StorageFleet>) -> Self {
        Self { kind: LevelKind::Exact, inner: Inner::Dispatch { policy: Policy::Exact, fleet }, nominal_cost: 1e-3 }
    }

    pub fn greedy(fleet: Arc<StorageFleet>) -> Self {
        Self { kind: LevelKind::Greedy, inner: Inner::Dispatch { policy: Policy::Greedy, fleet }, nominal_cost: 1e-4 }
    }

    pub fn average(profile: Arc<AvgProfile>) -> Self {
        Self { kind: LevelKind::Average, inner: Inner::Average(profile), nominal_cost: 2e-5 }
    }

    /// LOL from the tree model; ENS from greedy dispatch on flagged days.
    pub fn hgb_greedy(model: Arc<SurrogateModel>, fleet: Arc<StorageFleet>) -> Self {
        Self { kind: LevelKind::HgbGreedy, inner: Inner::Surrogate { model, greedy: Some(fleet) }, nominal_cost: 3e-5 }
    }

    /// LOL from the tree model; ENS from the kernel regressor on flagged days.
    pub fn hgb_regressor(model: Arc<SurrogateModel>) -> Self {
        Self { kind: LevelKind::HgbRegressor, inner: Inner::Surrogate { model, greedy: None }, nominal_cost: 3e-5 }
    }

    pub fn with_nominal_cost(mut self, seconds: f64) -> Self {
        self.nominal_cost = seconds;
        self
    }

    pub fn kind(&self) -> LevelKind {
        self.kind
    }

    pub fn outcome(&self, margin: &[f64]) -> OutcomeVector {
        match &self.inner {
            Inner::Dispatch { policy, fleet } => dispatch_metrics(*policy, margin, fleet, None),
            Inner::Average(profile) => profile.metrics(margin),
            Inner::Surrogate { model, greedy } => {
                let part = match greedy {
                    Some(fleet) => EnsPart::Greedy(fleet),
                    None => EnsPart::Regressor,
                };
                model.predict_year(margin, part)
            }
        }
    }
}

impl LevelModel<Scenario> for Level {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn evaluate(&self, scenario: &Scenario) -> Result<OutcomeVector, ModelError> {
        let out = self.outcome(&scenario.margin);
        if out.lol_hours.is_finite() && out.ens_energy.is_finite() {
            Ok(out)
        } else {
            Err(ModelError::new(format!("{} produced a non-finite outcome {out:?}", self.kind)))
        }
    }

    fn nominal_cost(&self) -> f64 {
        self.nominal_cost
    }
}
