use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, HOURS_PER_DAY};

/// Margins above this carry no information about curtailment.
pub const FEATURE_CLIP_MW: f64 = 1.0;

pub type DayFeatures = [f64; HOURS_PER_DAY];

/// Clip a day of hourly margins from above.
pub fn clip_day(margin: &[f64]) -> DayFeatures {
    std::array::from_fn(|h| margin[h].min(FEATURE_CLIP_MW))
}

/// Clipped (not yet normalized) features of every day in the year.
pub fn extract_day_frames(scenario: &Scenario) -> Vec<DayFeatures> {
    scenario.days().map(clip_day).collect()
}

/// Per-feature affine map to zero mean and unit variance on the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: DayFeatures,
    pub scale: DayFeatures,
}

impl Normalizer {
    pub fn identity() -> Self {
        Self { mean: [0.0; HOURS_PER_DAY], scale: [1.0; HOURS_PER_DAY] }
    }

    /// Fit on clipped features. Constant features get unit scale.
    pub fn fit(frames: &[DayFeatures]) -> Self {
        if frames.is_empty() {
            return Self::identity();
        }
        let n = frames.len() as f64;
        let mean: DayFeatures = std::array::from_fn(|h| frames.iter().map(|f| f[h]).sum::<f64>() / n);
        let scale = std::array::from_fn(|h| {
            let var = frames.iter().map(|f| (f[h] - mean[h]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        });
        Self { mean, scale }
    }

    pub fn transform(&self, frame: &DayFeatures) -> DayFeatures {
        std::array::from_fn(|h| (frame[h] - self.mean[h]) / self.scale[h])
    }
}
