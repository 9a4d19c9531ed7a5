use serde::{Deserialize, Serialize};

/// Speed `q² / (t σ²)` of an estimator, or a flag when the variance is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Speed {
    Finite(f64),
    /// Zero estimator variance: the estimate is exact.
    Infinite,
}

impl Speed {
    pub fn value(&self) -> f64 {
        match self {
            Speed::Finite(v) => *v,
            Speed::Infinite => f64::INFINITY,
        }
    }

    /// Asymptotic speedup of `self` over `baseline`.
    pub fn speedup_over(&self, baseline: &Speed) -> Option<f64> {
        match (self, baseline) {
            (Speed::Finite(a), Speed::Finite(b)) if *b > 0.0 => Some(a / b),
            _ => None,
        }
    }
}

/// Speed measure of an estimate `q_hat` computed in `total_time` seconds with
/// estimator variance `variance`.
pub fn speed_measure(q_hat: f64, total_time: f64, variance: f64) -> Speed {
    if variance <= 0.0 {
        return Speed::Infinite;
    }
    Speed::Finite(q_hat * q_hat / (total_time * variance))
}
