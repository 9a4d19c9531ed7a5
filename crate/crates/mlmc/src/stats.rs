//! Streaming moments for level-pair samples.
//!
//! Welford updates with Chan's pairwise merge so per-worker accumulators can be
//! combined into the same result as a single pass.

use serde::{Deserialize, Serialize};

use crate::outcome::{Metric, OutcomeVector};

/// First and second moments of one metric on one level pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairMoments {
    pub mean_y: f64,
    pub m2_y: f64,
    pub mean_hi: f64,
    pub mean_lo: f64,
    pub m2_hi: f64,
    pub m2_lo: f64,
    /// Sum of cross deviations between the high and low outputs.
    pub co_moment: f64,
}

impl PairMoments {
    fn push(&mut self, n: f64, hi: f64, lo: f64) {
        let y = hi - lo;

        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.m2_y += dy * (y - self.mean_y);

        let dhi = hi - self.mean_hi;
        self.mean_hi += dhi / n;
        self.m2_hi += dhi * (hi - self.mean_hi);

        let dlo = lo - self.mean_lo;
        self.mean_lo += dlo / n;
        self.m2_lo += dlo * (lo - self.mean_lo);

        self.co_moment += dhi * (lo - self.mean_lo);
    }

    fn merge(&self, na: f64, other: &PairMoments, nb: f64) -> PairMoments {
        let n = na + nb;
        let w = na * nb / n;
        let dy = other.mean_y - self.mean_y;
        let dhi = other.mean_hi - self.mean_hi;
        let dlo = other.mean_lo - self.mean_lo;
        PairMoments {
            mean_y: self.mean_y + dy * nb / n,
            m2_y: self.m2_y + other.m2_y + dy * dy * w,
            mean_hi: self.mean_hi + dhi * nb / n,
            mean_lo: self.mean_lo + dlo * nb / n,
            m2_hi: self.m2_hi + other.m2_hi + dhi * dhi * w,
            m2_lo: self.m2_lo + other.m2_lo + dlo * dlo * w,
            co_moment: self.co_moment + other.co_moment + dhi * dlo * w,
        }
    }
}

/// Running statistics of one level pair across both metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub n: u64,
    pub moments: [PairMoments; 2],
    /// Mean wall-clock cost of one coupled sample, seconds.
    pub mean_cost: f64,
}

impl LevelStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, hi: OutcomeVector, lo: OutcomeVector, cost: f64) {
        self.n += 1;
        let n = self.n as f64;
        let (hi, lo) = (hi.as_array(), lo.as_array());
        for (k, m) in self.moments.iter_mut().enumerate() {
            m.push(n, hi[k], lo[k]);
        }
        self.mean_cost += (cost - self.mean_cost) / n;
    }

    /// Combine two accumulators; equals the statistics of the concatenated streams.
    pub fn merge(&self, other: &LevelStats) -> LevelStats {
        if self.n == 0 {
            return other.clone();
        }
        if other.n == 0 {
            return self.clone();
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        LevelStats {
            n: self.n + other.n,
            moments: [
                self.moments[0].merge(na, &other.moments[0], nb),
                self.moments[1].merge(na, &other.moments[1], nb),
            ],
            mean_cost: self.mean_cost + (other.mean_cost - self.mean_cost) * nb / n,
        }
    }

    pub fn metric(&self, metric: Metric) -> &PairMoments {
        &self.moments[metric.index()]
    }

    pub fn mean_y(&self, metric: Metric) -> f64 {
        self.metric(metric).mean_y
    }

    /// Unbiased sample variance of the level difference; zero below two samples.
    pub fn var_y(&self, metric: Metric) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.metric(metric).m2_y / (self.n - 1) as f64).max(0.0)
    }

    pub fn sigma_y(&self, metric: Metric) -> f64 {
        self.var_y(metric).sqrt()
    }

    /// Sample correlation between the paired outputs, `None` when either side
    /// has zero spread.
    pub fn correlation(&self, metric: Metric) -> Option<f64> {
        let m = self.metric(metric);
        if self.n < 2 || m.m2_hi <= 0.0 || m.m2_lo <= 0.0 {
            return None;
        }
        Some((m.co_moment / (m.m2_hi * m.m2_lo).sqrt()).clamp(-1.0, 1.0))
    }

    /// Contribution of this level to the estimator variance, `var_y / n`.
    pub fn estimator_variance(&self, metric: Metric) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.metric(metric).m2_y / ((self.n - 1) as f64 * self.n as f64)
    }
}
