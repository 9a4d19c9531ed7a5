use std::time::Instant;

use mlmc::OutcomeVector;
use serde::{Deserialize, Serialize};

use super::features::{clip_day, Normalizer};
use super::gbt::{GbtModel, GbtParams};
use super::regressor::{EnsRegressor, RegressorParams};
use super::training::{Provenance, TrainingSet};
use crate::dispatch::{dispatch_metrics, Policy, StorageFleet};
use crate::error::{AdequacyError, Result};
use crate::scenario::HOURS_PER_DAY;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateParams {
    pub gbt: GbtParams,
    pub regressor: RegressorParams,
    /// Predicted daily LOL hours above which a day is treated as curtailed.
    pub theta: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        Self { gbt: GbtParams::default(), regressor: RegressorParams::default(), theta: 0.5 }
    }
}

/// Seconds spent fitting each learner.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitTimings {
    pub gbt: f64,
    pub regressor: f64,
}

/// How a day flagged as curtailed gets its energy not served.
#[derive(Debug, Clone, Copy)]
pub enum EnsPart<'a> {
    Regressor,
    Greedy(&'a StorageFleet),
}

/// Daily LOL and ENS predictors summed over the days of a year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub format_version: u32,
    pub provenance: Provenance,
    pub theta: f64,
    pub normalizer: Normalizer,
    pub lol: GbtModel,
    pub ens: EnsRegressor,
}

impl SurrogateModel {
    pub fn train(ts: &TrainingSet, params: &SurrogateParams) -> Result<(Self, FitTimings)> {
        if ts.len() < 2 {
            return Err(AdequacyError::Config(format!("training set has {} days, need at least 2", ts.len())));
        }
        let normalizer = Normalizer::fit(&ts.features());
        let x: Vec<_> = ts.days.iter().map(|d| normalizer.transform(&d.features)).collect();
        let lol_labels: Vec<f64> = ts.days.iter().map(|d| d.lol).collect();
        let start = Instant::now();
        let lol = GbtModel::train(&x, &lol_labels, &params.gbt)?;
        let gbt = start.elapsed().as_secs_f64();

        let (cx, cy): (Vec<_>, Vec<f64>) =
            ts.days.iter().zip(&x).filter(|(d, _)| d.curtailed()).map(|(d, x)| (*x, d.ens)).unzip();
        let start = Instant::now();
        let ens = EnsRegressor::train(&cx, &cy, &params.regressor)?;
        let regressor = start.elapsed().as_secs_f64();
        let model = Self {
            format_version: MODEL_FORMAT_VERSION,
            provenance: ts.provenance.clone(),
            theta: params.theta,
            normalizer,
            lol,
            ens,
        };
        Ok((model, FitTimings { gbt, regressor }))
    }

    /// Daily LOL prediction in [0, 24] for normalized features.
    pub fn predict_lol(&self, x: &[f64]) -> f64 {
        self.lol.predict(x).clamp(0.0, HOURS_PER_DAY as f64)
    }

    /// Daily ENS regression, floored at zero, for normalized features.
    pub fn predict_ens(&self, x: &[f64]) -> f64 {
        self.ens.predict(x).max(0.0)
    }

    /// Predictions for one day of raw margins. Days without a shortfall hour
    /// are curtailment-free under every policy and return zero.
    pub fn predict_day(&self, margin: &[f64], part: EnsPart<'_>) -> OutcomeVector {
        if margin.iter().all(|&m| m >= 0.0) {
            return OutcomeVector::ZERO;
        }
        let x = self.normalizer.transform(&clip_day(margin));
        let lol = self.predict_lol(&x);
        let ens = if lol > self.theta {
            match part {
                EnsPart::Regressor => self.predict_ens(&x),
                EnsPart::Greedy(fleet) => dispatch_metrics(Policy::Greedy, margin, fleet, None).ens_energy,
            }
        } else {
            0.0
        };
        OutcomeVector::new(lol, ens)
    }

    /// Sum of daily predictions over midnight-aligned days.
    pub fn predict_year(&self, margin: &[f64], part: EnsPart<'_>) -> OutcomeVector {
        margin.chunks_exact(HOURS_PER_DAY).map(|d| self.predict_day(d, part)).fold(OutcomeVector::ZERO, |a, b| a + b)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| AdequacyError::Config(format!("serializing surrogate: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| AdequacyError::Config(format!("parsing surrogate: {e}")))?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if version != Some(MODEL_FORMAT_VERSION as u64) {
            return Err(AdequacyError::Config(format!(
                "surrogate format version {version:?}, expected {MODEL_FORMAT_VERSION}"
            )));
        }
        serde_json::from_value(value).map_err(|e| AdequacyError::Config(format!("parsing surrogate: {e}")))
    }
}
