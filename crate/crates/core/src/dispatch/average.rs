//! Aggregate peak-shaving offset and its exact risk under outage convolution.
//!
//! The whole fleet is treated as one unit with power `p` and energy `e`. The
//! daily offset `s` minimizes `sum_t (d_t + s_t)^2` subject to `|s_t| <= p`,
//! `sum_t s_t = 0` and a state of charge that stays within an interval of
//! width `e` over the day, i.e. `|C_j - C_i| <= e` for all cumulative sums
//! `C_k = s_1 + ... + s_k`, `0 <= i < j <= 24`.

use mlmc::OutcomeVector;
use serde::{Deserialize, Serialize};

use super::copt::Copt;
use super::metrics::{accumulate, CURTAILMENT_THRESHOLD_MW};
use super::storage::StorageFleet;
use crate::error::{AdequacyError, Result};
use crate::scenario::{TraceLibrary, HOURS_PER_DAY};

const KKT_TOLERANCE: f64 = 1e-6;
const SOLVER_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 200_000;

/// Which mean daily profile the offset shaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NominalProfile {
    #[default]
    Demand,
    NetDemand,
}

impl NominalProfile {
    pub fn compute(self, demand: &TraceLibrary, wind: &TraceLibrary) -> [f64; HOURS_PER_DAY] {
        let d = demand.mean_daily_profile();
        match self {
            Self::Demand => d,
            Self::NetDemand => {
                let w = wind.mean_daily_profile();
                std::array::from_fn(|h| d[h] - w[h])
            }
        }
    }
}

/// Repeating daily storage load offset (charging positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgProfile {
    pub nominal: [f64; HOURS_PER_DAY],
    pub offset: [f64; HOURS_PER_DAY],
}

impl AvgProfile {
    pub fn zero() -> Self {
        Self { nominal: [0.0; HOURS_PER_DAY], offset: [0.0; HOURS_PER_DAY] }
    }

    /// Risk of the margin trace with the offset applied hour by hour.
    pub fn metrics(&self, margin: &[f64]) -> OutcomeVector {
        let mut out = OutcomeVector::ZERO;
        for hours in margin.chunks(HOURS_PER_DAY) {
            for (m, s) in hours.iter().zip(&self.offset) {
                accumulate(&mut out, (s - m).max(0.0));
            }
        }
        out
    }
}

pub fn average_profile(fleet: &StorageFleet, nominal: [f64; HOURS_PER_DAY]) -> Result<AvgProfile> {
    let offset = peak_shave(&nominal, fleet.total_power(), fleet.total_energy())?;
    Ok(AvgProfile { nominal, offset })
}

/// A constraint `sign * sum(s[lo..hi]) <= rhs`; `rhs = None` marks the
/// energy-neutrality equality.
struct Row {
    lo: usize,
    hi: usize,
    sign: f64,
    rhs: Option<f64>,
}

impl Row {
    fn dot(&self, s: &[f64]) -> f64 {
        self.sign * s[self.lo..self.hi].iter().sum::<f64>()
    }

    fn violation(&self, s: &[f64]) -> f64 {
        self.dot(s) - self.rhs.unwrap_or(0.0)
    }
}

fn peak_shave(nominal: &[f64; HOURS_PER_DAY], power: f64, energy: f64) -> Result<[f64; HOURS_PER_DAY]> {
    let n = HOURS_PER_DAY;
    let mean = nominal.iter().sum::<f64>() / n as f64;
    let spread = nominal.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max);
    if power <= 0.0 || energy <= 0.0 || spread == 0.0 {
        return Ok([0.0; HOURS_PER_DAY]);
    }
    // Solve in units where the profile deviation is O(1).
    let scale = spread;
    let y: Vec<f64> = nominal.iter().map(|d| (d - mean) / scale).collect();
    let (p, e) = (power / scale, energy / scale);

    let mut rows = vec![Row { lo: 0, hi: n, sign: 1.0, rhs: None }];
    for t in 0..n {
        for sign in [1.0, -1.0] {
            rows.push(Row { lo: t, hi: t + 1, sign, rhs: Some(p) });
        }
    }
    for i in 0..n {
        for j in i + 1..=n {
            for sign in [1.0, -1.0] {
                rows.push(Row { lo: i, hi: j, sign, rhs: Some(e) });
            }
        }
    }

    // Hildreth's dual coordinate ascent: s = -y - A^T lambda.
    let mut lambda = vec![0.0; rows.len()];
    let mut s: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut residual = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        for (row, l) in rows.iter().zip(lambda.iter_mut()) {
            let step = row.violation(&s) / (row.hi - row.lo) as f64;
            let next = if row.rhs.is_some() { (*l + step).max(0.0) } else { *l + step };
            let delta = next - *l;
            if delta != 0.0 {
                *l = next;
                s[row.lo..row.hi].iter_mut().for_each(|v| *v -= delta * row.sign);
            }
        }
        if sweep % 50 == 49 {
            residual = kkt_residual(&rows, &lambda, &y, &mut s);
            if residual < SOLVER_TOLERANCE {
                break;
            }
        }
    }
    residual = residual.min(kkt_residual(&rows, &lambda, &y, &mut s));
    if residual >= KKT_TOLERANCE {
        return Err(AdequacyError::QpNotConverged(residual));
    }
    Ok(std::array::from_fn(|t| s[t] * scale))
}

/// Recompute `s` from the multipliers and return the largest primal
/// infeasibility or complementary slackness violation.
fn kkt_residual(rows: &[Row], lambda: &[f64], y: &[f64], s: &mut [f64]) -> f64 {
    for (v, yv) in s.iter_mut().zip(y) {
        *v = -yv;
    }
    for (row, &l) in rows.iter().zip(lambda) {
        if l != 0.0 {
            s[row.lo..row.hi].iter_mut().for_each(|v| *v -= l * row.sign);
        }
    }
    rows.iter()
        .zip(lambda)
        .map(|(row, &l)| {
            let v = row.violation(s);
            match row.rhs {
                None => v.abs(),
                Some(_) => v.max(0.0).max((l * v).abs()),
            }
        })
        .fold(0.0, f64::max)
}

/// Expected risk of the offset model over all library pairs, with conventional
/// capacity distributed as `copt` in every hour.
pub fn analytic_avg_risk(
    copt: &Copt,
    demand: &TraceLibrary,
    wind: &TraceLibrary,
    profile: &AvgProfile,
) -> Result<OutcomeVector> {
    if demand.is_empty() {
        return Err(AdequacyError::EmptyLibrary("demand"));
    }
    if wind.is_empty() {
        return Err(AdequacyError::EmptyLibrary("wind"));
    }
    let mut lole = 0.0;
    let mut eens = 0.0;
    let mut load = Vec::new();
    for d in &demand.traces {
        for w in &wind.traces {
            load.clear();
            load.extend(d.iter().zip(w).enumerate().map(|(t, (d, w))| d - w + profile.offset[t % HOURS_PER_DAY]));
            for &g in &load {
                let (p, e) = copt.shortfall_below(g, g - CURTAILMENT_THRESHOLD_MW);
                lole += p;
                eens += e;
            }
        }
    }
    let pairs = (demand.len() * wind.len()) as f64;
    Ok(OutcomeVector::new(lole / pairs, eens / pairs))
}
