//! Learned daily predictors of loss-of-load hours and energy not served, and
//! their use as annual level models.

mod features;
mod gbt;
mod model;
mod regressor;
mod study;
mod training;

pub use features::{clip_day, extract_day_frames, DayFeatures, Normalizer, FEATURE_CLIP_MW};
pub use gbt::{GbtModel, GbtParams, Node, Tree};
pub use model::{EnsPart, FitTimings, SurrogateModel, SurrogateParams, MODEL_FORMAT_VERSION};
pub use regressor::{EnsRegressor, RegressorKind, RegressorParams};
pub use study::{accuracy_study, holdout_rmse, rmse, MeanSe, StudyRow};
pub use training::{build_training_set, label_day, LabeledDay, Provenance, TrainingSet};
