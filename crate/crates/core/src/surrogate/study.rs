//! Repeated-subsampling accuracy study of the daily learners.

use mlmc::seed::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::Normalizer;
use super::gbt::GbtModel;
use super::model::SurrogateParams;
use super::regressor::EnsRegressor;
use super::training::TrainingSet;
use crate::error::{AdequacyError, Result};

pub fn rmse(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(AdequacyError::LengthMismatch { left: predictions.len(), right: labels.len() });
    }
    if labels.is_empty() {
        return Err(AdequacyError::Config("RMSE of an empty set".into()));
    }
    let sse: f64 = predictions.iter().zip(labels).map(|(p, l)| (p - l).powi(2)).sum();
    Ok((sse / labels.len() as f64).sqrt())
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Self { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub train_size: usize,
    pub repeats: usize,
    /// Daily LOL error over all test days, hours.
    pub lol_rmse: MeanSe,
    /// Daily ENS error over curtailed test days, MWh.
    pub ens_rmse: MeanSe,
}

/// Holdout errors of both learners trained on `train`.
pub fn holdout_rmse(train: &TrainingSet, test: &TrainingSet, params: &SurrogateParams) -> Result<(f64, f64)> {
    let norm = Normalizer::fit(&train.features());
    let x: Vec<_> = train.days.iter().map(|d| norm.transform(&d.features)).collect();
    let y: Vec<f64> = train.days.iter().map(|d| d.lol).collect();
    let gbt = GbtModel::train(&x, &y, &params.gbt)?;
    let (pred, labels): (Vec<f64>, Vec<f64>) =
        test.days.iter().map(|d| (gbt.predict(&norm.transform(&d.features)).clamp(0.0, 24.0), d.lol)).unzip();
    let lol = rmse(&pred, &labels)?;

    let (cx, cy): (Vec<_>, Vec<f64>) =
        train.days.iter().zip(&x).filter(|(d, _)| d.curtailed()).map(|(d, x)| (*x, d.ens)).unzip();
    let reg = EnsRegressor::train(&cx, &cy, &params.regressor)?;
    let (pred, labels): (Vec<f64>, Vec<f64>) = test
        .days
        .iter()
        .filter(|d| d.curtailed())
        .map(|d| (reg.predict(&norm.transform(&d.features)).max(0.0), d.ens))
        .unzip();
    let ens = rmse(&pred, &labels)?;
    Ok((lol, ens))
}

/// For each train size, train on `repeats` random subsets of `pool` drawn
/// without replacement and evaluate on `test`.
pub fn accuracy_study(
    pool: &TrainingSet,
    test: &TrainingSet,
    sizes: &[usize],
    repeats: usize,
    params: &SurrogateParams,
    seed: u64,
) -> Result<Vec<StudyRow>> {
    sizes
        .iter()
        .map(|&size| {
            if size > pool.len() {
                return Err(AdequacyError::Config(format!("train size {size} exceeds pool of {}", pool.len())));
            }
            let mut lol = Vec::with_capacity(repeats);
            let mut ens = Vec::with_capacity(repeats);
            for r in 0..repeats {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, ((size as u64) << 20) | r as u64));
                let idx = rand::seq::index::sample(&mut rng, pool.len(), size);
                let (l, e) = holdout_rmse(&pool.subset(idx), test, params)?;
                lol.push(l);
                ens.push(e);
            }
            Ok(StudyRow { train_size: size, repeats, lol_rmse: MeanSe::of(&lol), ens_rmse: MeanSe::of(&ens) })
        })
        .collect()
}
