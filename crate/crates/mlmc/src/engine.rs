//! Coupled level-pair sampling and the two-phase MLMC driver.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::optimal_allocation;
use crate::error::MlmcError;
use crate::model::{Fingerprint, LevelModel, ModelError, ScenarioSource};
use crate::outcome::{Metric, OutcomeVector};
use crate::seed::sample_seed;
use crate::speed::{speed_measure, Speed};
use crate::stats::LevelStats;

/// One coupled evaluation of adjacent levels on a shared scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPairSample {
    pub y: OutcomeVector,
    pub x_hi: OutcomeVector,
    pub x_lo: OutcomeVector,
    /// Wall time of both model evaluations, seconds.
    pub cost: f64,
    pub fingerprint: u64,
}

/// Evaluate `hi` and (when present) `lo` on the same scenario.
///
/// The bottom level passes `lo = None`, in which case the low output is zero.
pub fn sample_level_pair<S, H, L>(
    level: usize,
    hi: &H,
    lo: Option<&L>,
    scenario: &S,
) -> Result<LevelPairSample, MlmcError>
where
    S: Fingerprint,
    H: LevelModel<S> + ?Sized,
    L: LevelModel<S> + ?Sized,
{
    let wrap = |name: &str, source: ModelError| MlmcError::Model {
        level,
        model: name.to_string(),
        source,
        partial: Vec::new(),
    };
    let start = Instant::now();
    let x_hi = hi.evaluate(scenario).map_err(|e| wrap(hi.name(), e))?;
    let x_lo = match lo {
        Some(lo) => lo.evaluate(scenario).map_err(|e| wrap(lo.name(), e))?,
        None => OutcomeVector::ZERO,
    };
    Ok(LevelPairSample {
        y: x_hi - x_lo,
        x_hi,
        x_lo,
        cost: start.elapsed().as_secs_f64(),
        fingerprint: scenario.fingerprint(),
    })
}

/// How the computational budget is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "seconds", rename_all = "snake_case")]
pub enum Budget {
    /// Wall-clock seconds; level costs are measured during exploration.
    WallClock(f64),
    /// Seconds of nominal cost; level costs come from the models' cost hints,
    /// which makes the allocation (and therefore the run) deterministic.
    Nominal(f64),
}

impl Budget {
    pub fn seconds(&self) -> f64 {
        match self {
            Budget::WallClock(s) | Budget::Nominal(s) => *s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmcConfig {
    pub budget: Budget,
    pub exploratory_n: u64,
    /// Metric whose variance drives the allocation.
    pub target: Metric,
    /// Merge exploration samples into the final statistics.
    pub reuse_exploration: bool,
    pub min_samples: u64,
    /// Weight of the newest cost observation in the smoothed per-pair cost.
    pub cost_smoothing: f64,
    pub seed: u64,
    /// Worker threads; 0 means all available cores.
    pub workers: usize,
    /// Samples per work item. Fixed so results do not depend on `workers`.
    pub chunk_size: u64,
}

impl Default for MlmcConfig {
    fn default() -> Self {
        Self {
            budget: Budget::WallClock(60.0),
            exploratory_n: 500,
            target: Metric::Eens,
            reuse_exploration: true,
            min_samples: 2,
            cost_smoothing: 0.05,
            seed: 0,
            workers: 0,
            chunk_size: 16,
        }
    }
}

/// Per-level part of an estimate. Level 0 is the bottom of the stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub name: String,
    /// Coupled samples drawn on this level (0 for an analytic bottom).
    pub n: u64,
    pub analytic: bool,
    /// Smoothed cost of one coupled sample, seconds (nominal in nominal mode).
    pub tau: f64,
    pub stats: LevelStats,
    /// Estimated contribution `r_l` of this level.
    pub contribution: OutcomeVector,
}

impl LevelEstimate {
    pub fn sigma_y(&self, metric: Metric) -> f64 {
        if self.analytic {
            0.0
        } else {
            self.stats.sigma_y(metric)
        }
    }

    pub fn correlation(&self, metric: Metric) -> Option<f64> {
        if self.analytic {
            None
        } else {
            self.stats.correlation(metric)
        }
    }

    pub fn estimator_variance(&self, metric: Metric) -> f64 {
        if self.analytic {
            0.0
        } else {
            self.stats.estimator_variance(metric)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub metric: Metric,
    pub q_hat: f64,
    pub std_error: f64,
    pub speed: Speed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmcEstimate {
    pub levels: Vec<LevelEstimate>,
    pub metrics: [MetricEstimate; 2],
    pub target: Metric,
    /// Wall-clock time of the whole run, seconds.
    pub total_time: f64,
    pub analytic_bottom: bool,
    /// The budget ran out during exploration; only exploration samples were used.
    pub exploratory_only: bool,
}

impl MlmcEstimate {
    pub fn metric(&self, metric: Metric) -> &MetricEstimate {
        &self.metrics[metric.index()]
    }

    pub fn q_hat(&self, metric: Metric) -> f64 {
        self.metric(metric).q_hat
    }

    pub fn std_error(&self, metric: Metric) -> f64 {
        self.metric(metric).std_error
    }

    pub fn variance(&self, metric: Metric) -> f64 {
        self.levels.iter().map(|l| l.estimator_variance(metric)).sum()
    }

    pub fn contributions(&self, metric: Metric) -> Vec<f64> {
        self.levels.iter().map(|l| l.contribution.get(metric)).collect()
    }

    pub fn allocation(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.n).collect()
    }

    pub fn correlations(&self, metric: Metric) -> Vec<Option<f64>> {
        self.levels.iter().map(|l| l.correlation(metric)).collect()
    }

    /// Estimate as an outcome vector of both metrics.
    pub fn value(&self) -> OutcomeVector {
        OutcomeVector::new(self.q_hat(Metric::Lole), self.q_hat(Metric::Eens))
    }
}

/// Run the two-phase estimator: an exploratory batch on every sampled level,
/// then the remaining budget split by [`optimal_allocation`] for `config.target`.
///
/// `stack` is ordered bottom to top. When `analytic_bottom` is given it is the
/// exact expectation of the bottom model, which is then never sampled.
pub fn run_mlmc<Src, M>(
    stack: &[M],
    source: &Src,
    analytic_bottom: Option<OutcomeVector>,
    config: &MlmcConfig,
) -> Result<MlmcEstimate, MlmcError>
where
    Src: ScenarioSource,
    M: LevelModel<Src::Scenario>,
{
    validate_stack(stack)?;
    if config.exploratory_n < 2 {
        return Err(MlmcError::InvalidInput(format!("exploratory_n must be at least 2, got {}", config.exploratory_n)));
    }
    if !(config.budget.seconds() > 0.0) {
        return Err(MlmcError::InvalidInput("budget must be positive".into()));
    }
    let start = Instant::now();
    let pool = build_pool(config.workers)?;
    let sampled = sampled_levels(stack.len(), analytic_bottom.is_some());
    let mut sampler = Sampler::new(stack, source, config, &pool, stack.len());

    let n0 = config.exploratory_n;
    for &l in &sampled {
        sampler.sample(l, 0, n0)?;
    }

    let taus: Vec<f64> = sampled.iter().map(|&l| sampler.tau(l, config)).collect();
    let remaining = match config.budget {
        Budget::WallClock(b) => b - start.elapsed().as_secs_f64(),
        Budget::Nominal(b) => b - taus.iter().map(|t| t * n0 as f64).sum::<f64>(),
    };

    let mut exploratory_only = false;
    if sampled.is_empty() {
        // Nothing to sample: the analytic bottom is the whole estimate.
    } else if remaining <= 0.0 {
        exploratory_only = true;
    } else {
        let sigmas = allocation_sigmas(&sampled, &sampler.stats, config.target);
        let extra = optimal_allocation(&sigmas, &taus, remaining, config.min_samples)?;
        if !config.reuse_exploration {
            for &l in &sampled {
                sampler.stats[l] = LevelStats::new();
            }
        }
        for (&l, &n) in sampled.iter().zip(&extra) {
            sampler.sample(l, n0, n)?;
        }
    }

    let taus_full: Vec<f64> =
        (0..stack.len()).map(|l| if sampled.contains(&l) { sampler.tau(l, config) } else { 0.0 }).collect();
    Ok(assemble(
        stack,
        sampler.stats,
        taus_full,
        analytic_bottom,
        start.elapsed().as_secs_f64(),
        config.target,
        exploratory_only,
    ))
}

/// Sample a fixed number of coupled pairs per level (entries for an analytic
/// bottom are ignored).
pub fn run_fixed<Src, M>(
    stack: &[M],
    source: &Src,
    analytic_bottom: Option<OutcomeVector>,
    counts: &[u64],
    seed: u64,
    workers: usize,
) -> Result<MlmcEstimate, MlmcError>
where
    Src: ScenarioSource,
    M: LevelModel<Src::Scenario>,
{
    validate_stack(stack)?;
    if counts.len() != stack.len() {
        return Err(MlmcError::InvalidInput(format!("{} sample counts for {} levels", counts.len(), stack.len())));
    }
    let start = Instant::now();
    let config = MlmcConfig { seed, workers, ..MlmcConfig::default() };
    let pool = build_pool(workers)?;
    let sampled = sampled_levels(stack.len(), analytic_bottom.is_some());
    let mut sampler = Sampler::new(stack, source, &config, &pool, stack.len());
    for &l in &sampled {
        sampler.sample(l, 0, counts[l])?;
    }
    let taus: Vec<f64> =
        (0..stack.len()).map(|l| if sampled.contains(&l) { sampler.tau(l, &config) } else { 0.0 }).collect();
    Ok(assemble(stack, sampler.stats, taus, analytic_bottom, start.elapsed().as_secs_f64(), config.target, false))
}

fn validate_stack<M>(stack: &[M]) -> Result<(), MlmcError> {
    if stack.is_empty() {
        return Err(MlmcError::InvalidInput("level stack is empty".into()));
    }
    Ok(())
}

fn sampled_levels(len: usize, analytic_bottom: bool) -> Vec<usize> {
    let first = usize::from(analytic_bottom);
    (first..len).collect()
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool, MlmcError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| MlmcError::Pool(e.to_string()))
}

/// Standard deviations used for the allocation. Falls back to the other
/// metric, then to equal weights, when exploration saw no variability.
fn allocation_sigmas(sampled: &[usize], stats: &[LevelStats], target: Metric) -> Vec<f64> {
    for metric in [target, target.other()] {
        let sigmas: Vec<f64> = sampled.iter().map(|&l| stats[l].sigma_y(metric)).collect();
        if sigmas.iter().any(|s| *s > 0.0) {
            return sigmas;
        }
    }
    vec![1.0; sampled.len()]
}

fn assemble<S, M: LevelModel<S>>(
    stack: &[M],
    stats: Vec<LevelStats>,
    taus: Vec<f64>,
    analytic_bottom: Option<OutcomeVector>,
    total_time: f64,
    target: Metric,
    exploratory_only: bool,
) -> MlmcEstimate {
    let levels: Vec<LevelEstimate> = stats
        .into_iter()
        .zip(taus)
        .enumerate()
        .map(|(l, (stats, tau))| {
            let analytic = l == 0 && analytic_bottom.is_some();
            let contribution = match (analytic, analytic_bottom) {
                (true, Some(v)) => v,
                _ => OutcomeVector::new(stats.mean_y(Metric::Lole), stats.mean_y(Metric::Eens)),
            };
            LevelEstimate { name: stack[l].name().to_string(), n: stats.n, analytic, tau, stats, contribution }
        })
        .collect();
    let metric_estimate = |metric: Metric| {
        let q_hat = levels.iter().fold(0.0, |acc, l| acc + l.contribution.get(metric));
        let variance: f64 = levels.iter().map(|l| l.estimator_variance(metric)).sum();
        MetricEstimate { metric, q_hat, std_error: variance.sqrt(), speed: speed_measure(q_hat, total_time, variance) }
    };
    MlmcEstimate {
        metrics: [metric_estimate(Metric::Lole), metric_estimate(Metric::Eens)],
        levels,
        target,
        total_time,
        analytic_bottom: analytic_bottom.is_some(),
        exploratory_only,
    }
}

struct Sampler<'a, Src: ScenarioSource, M> {
    stack: &'a [M],
    source: &'a Src,
    pool: &'a rayon::ThreadPool,
    seed: u64,
    chunk: u64,
    stats: Vec<LevelStats>,
    costs: Vec<Vec<f64>>,
}

impl<'a, Src, M> Sampler<'a, Src, M>
where
    Src: ScenarioSource,
    M: LevelModel<Src::Scenario>,
{
    fn new(stack: &'a [M], source: &'a Src, config: &MlmcConfig, pool: &'a rayon::ThreadPool, levels: usize) -> Self {
        Self {
            stack,
            source,
            pool,
            seed: config.seed,
            chunk: config.chunk_size.max(1),
            stats: vec![LevelStats::new(); levels],
            costs: vec![Vec::new(); levels],
        }
    }

    /// Draw samples `first..first + count` on `level` and merge them in order.
    fn sample(&mut self, level: usize, first: u64, count: u64) -> Result<(), MlmcError> {
        if count == 0 {
            return Ok(());
        }
        let hi = &self.stack[level];
        let lo = level.checked_sub(1).map(|l| &self.stack[l]);
        let (source, seed, chunk) = (self.source, self.seed, self.chunk);
        let chunks: Vec<u64> = (first..first + count).step_by(chunk as usize).collect();
        let end = first + count;
        let results: Vec<Result<(LevelStats, Vec<f64>), MlmcError>> = self.pool.install(|| {
            chunks
                .par_iter()
                .map(|&c0| {
                    let mut stats = LevelStats::new();
                    let mut costs = Vec::with_capacity(chunk as usize);
                    for i in c0..(c0 + chunk).min(end) {
                        let t0 = Instant::now();
                        let scenario = source.draw(sample_seed(seed, level, i));
                        let draw = t0.elapsed().as_secs_f64();
                        let s = sample_level_pair(level, hi, lo, &scenario)?;
                        let cost = draw + s.cost;
                        stats.push(s.x_hi, s.x_lo, cost);
                        costs.push(cost);
                    }
                    Ok((stats, costs))
                })
                .collect()
        });
        for r in results {
            match r {
                Ok((stats, costs)) => {
                    self.stats[level] = self.stats[level].merge(&stats);
                    self.costs[level].extend(costs);
                }
                Err(MlmcError::Model { level, model, source, .. }) => {
                    return Err(MlmcError::Model { level, model, source, partial: self.stats.clone() });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Per-pair cost used for allocation.
    fn tau(&self, level: usize, config: &MlmcConfig) -> f64 {
        match config.budget {
            Budget::Nominal(_) => {
                let lo = level.checked_sub(1).map_or(0.0, |l| self.stack[l].nominal_cost());
                (self.stack[level].nominal_cost() + lo + self.source.nominal_cost()).max(f64::MIN_POSITIVE)
            }
            Budget::WallClock(_) => smoothed_cost(&self.costs[level], config.cost_smoothing),
        }
    }
}

/// Exponentially weighted mean of the cost observations, newest weighted most.
fn smoothed_cost(costs: &[f64], alpha: f64) -> f64 {
    let alpha = alpha.clamp(1e-6, 1.0);
    let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
    for c in costs.iter().rev() {
        num += w * c;
        den += w;
        w *= 1.0 - alpha;
        if w < 1e-12 {
            break;
        }
    }
    if den > 0.0 {
        (num / den).max(1e-9)
    } else {
        1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_weights_recent_costs() {
        let c = smoothed_cost(&[1.0, 1.0, 1.0, 5.0], 0.5);
        // weights 1, 0.5, 0.25, 0.125 from newest
        let expect = (5.0 + 0.5 + 0.25 + 0.125) / 1.875;
        assert!((c - expect).abs() < 1e-12);
        assert!((smoothed_cost(&[2.0; 10], 0.05) - 2.0).abs() < 1e-12);
    }
}
