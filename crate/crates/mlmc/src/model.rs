use crate::outcome::OutcomeVector;

/// Failure raised by a level model while evaluating a scenario.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ModelError(pub String);

impl ModelError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

/// Identity of a sampled scenario; two evaluations sharing a fingerprint saw
/// the same random state.
pub trait Fingerprint {
    fn fingerprint(&self) -> u64;
}

/// One model of the level stack.
///
/// Evaluation must be a deterministic function of the scenario. Models are
/// shared immutably across sampling workers.
pub trait LevelModel<S>: Send + Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, scenario: &S) -> Result<OutcomeVector, ModelError>;

    /// Advisory per-evaluation cost in seconds, used by the nominal budget mode.
    fn nominal_cost(&self) -> f64 {
        1e-4
    }
}

/// Produces scenarios as a pure function of a 64-bit seed.
pub trait ScenarioSource: Sync {
    type Scenario: Fingerprint + Send;

    fn draw(&self, seed: u64) -> Self::Scenario;

    /// Advisory cost of one draw in seconds, used by the nominal budget mode.
    fn nominal_cost(&self) -> f64 {
        0.0
    }
}

impl<S, M: LevelModel<S> + ?Sized> LevelModel<S> for std::sync::Arc<M> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn evaluate(&self, scenario: &S) -> Result<OutcomeVector, ModelError> {
        (**self).evaluate(scenario)
    }

    fn nominal_cost(&self) -> f64 {
        (**self).nominal_cost()
    }
}

impl<S, M: LevelModel<S> + ?Sized> LevelModel<S> for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn evaluate(&self, scenario: &S) -> Result<OutcomeVector, ModelError> {
        (**self).evaluate(scenario)
    }

    fn nominal_cost(&self) -> f64 {
        (**self).nominal_cost()
    }
}
