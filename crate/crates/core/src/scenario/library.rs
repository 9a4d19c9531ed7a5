//! Finite libraries of annual demand and wind traces.
//!
//! Demand: a daily shape modulated by a seasonal sinusoid and a weekend factor,
//! times lognormal noise (a persistent day-level factor and an hourly factor),
//! rescaled so each trace peaks at the configured demand. Wind: a seasonal
//! latent AR(1) process squashed through a logistic into a capacity factor,
//! with the offset fitted so the library mean hits the target capacity factor.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DAYS_PER_YEAR, HOURS_PER_DAY, HOURS_PER_YEAR};
use crate::error::{AdequacyError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandParams {
    pub traces: usize,
    pub peak_mw: f64,
    /// Relative demand per hour of day (24 values).
    pub daily_shape: Vec<f64>,
    /// Relative amplitude of the annual cycle, peaking at `peak_day`.
    pub seasonal_amplitude: f64,
    pub peak_day: f64,
    pub weekend_factor: f64,
    pub daily_noise_sigma: f64,
    pub daily_noise_persistence: f64,
    pub hourly_noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindParams {
    pub traces: usize,
    pub capacity_mw: f64,
    pub mean_capacity_factor: f64,
    /// Hourly AR(1) coefficient of the latent process.
    pub persistence: f64,
    /// Stationary standard deviation of the latent process.
    pub latent_sigma: f64,
    /// Latent-space amplitude of the annual cycle (windier around `peak_day`).
    pub seasonal_amplitude: f64,
    pub peak_day: f64,
    pub seed: u64,
}

/// Named annual hourly traces, one per library entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLibrary {
    pub ids: Vec<String>,
    pub traces: Vec<Vec<f64>>,
}

impl TraceLibrary {
    pub fn new(ids: Vec<String>, traces: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != traces.len() {
            return Err(AdequacyError::LengthMismatch { left: ids.len(), right: traces.len() });
        }
        if traces.is_empty() {
            return Err(AdequacyError::EmptyLibrary("trace library"));
        }
        for (id, t) in ids.iter().zip(&traces) {
            if t.len() != HOURS_PER_YEAR {
                return Err(AdequacyError::Config(format!(
                    "trace {id} has {} hours, expected {HOURS_PER_YEAR}",
                    t.len()
                )));
            }
            if let Some(v) = t.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(AdequacyError::Config(format!("trace {id} has invalid value {v}")));
            }
        }
        Ok(Self { ids, traces })
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.traces[i]
    }

    pub fn max(&self) -> f64 {
        self.traces.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self.traces.iter().map(|t| t.iter().sum::<f64>()).sum();
        total / (self.len() * HOURS_PER_YEAR) as f64
    }

    /// Mean value per hour of day over all traces and days.
    pub fn mean_daily_profile(&self) -> [f64; HOURS_PER_DAY] {
        let mut profile = [0.0; HOURS_PER_DAY];
        for t in &self.traces {
            for (i, v) in t.iter().enumerate() {
                profile[i % HOURS_PER_DAY] += v;
            }
        }
        let n = (self.len() * DAYS_PER_YEAR) as f64;
        profile.map(|p| p / n)
    }

    /// Write as CSV: one column per trace, header row of trace ids.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| AdequacyError::format(path, e))?;
        w.write_record(&self.ids).map_err(|e| AdequacyError::format(path, e))?;
        let mut row = Vec::with_capacity(self.len());
        for h in 0..HOURS_PER_YEAR {
            row.clear();
            row.extend(self.traces.iter().map(|t| t[h].to_string()));
            w.write_record(&row).map_err(|e| AdequacyError::format(path, e))?;
        }
        w.flush().map_err(|e| AdequacyError::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| AdequacyError::format(path, e))?;
        let ids: Vec<String> =
            r.headers().map_err(|e| AdequacyError::format(path, e))?.iter().map(str::to_string).collect();
        let mut traces = vec![Vec::with_capacity(HOURS_PER_YEAR); ids.len()];
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| AdequacyError::format(path, e))?;
            for (col, field) in record.iter().enumerate() {
                let v: f64 =
                    field.parse().map_err(|e| AdequacyError::format(path, format!("row {}: {e}", line + 2)))?;
                traces[col].push(v);
            }
        }
        Self::new(ids, traces).map_err(|e| AdequacyError::format(path, e))
    }
}

impl DemandParams {
    pub fn validate(&self) -> Result<()> {
        if self.traces == 0 {
            return Err(AdequacyError::Config("demand library needs at least one trace".into()));
        }
        if self.daily_shape.len() != HOURS_PER_DAY || self.daily_shape.iter().any(|v| !(*v > 0.0)) {
            return Err(AdequacyError::Config("daily_shape needs 24 positive values".into()));
        }
        if !(self.peak_mw >= 0.0) {
            return Err(AdequacyError::Config("peak_mw must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.daily_noise_persistence) {
            return Err(AdequacyError::Config("daily_noise_persistence must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<TraceLibrary> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let phi = self.daily_noise_persistence;
        let innov = (1.0 - phi * phi).sqrt() * self.daily_noise_sigma;
        let mut ids = Vec::with_capacity(self.traces);
        let mut traces = Vec::with_capacity(self.traces);
        for k in 0..self.traces {
            let mut z: f64 = self.daily_noise_sigma * gauss(&mut rng);
            let mut trace = Vec::with_capacity(HOURS_PER_YEAR);
            for day in 0..DAYS_PER_YEAR {
                if day > 0 {
                    let e = gauss(&mut rng);
                    z = phi * z + innov * e;
                }
                let season = 1.0 + self.seasonal_amplitude * (2.0 * PI * (day as f64 - self.peak_day) / 365.0).cos();
                let week = if day % 7 >= 5 { self.weekend_factor } else { 1.0 };
                for h in 0..HOURS_PER_DAY {
                    let e = gauss(&mut rng);
                    let noise = (z + self.hourly_noise_sigma * e).exp();
                    trace.push(self.daily_shape[h] * season * week * noise);
                }
            }
            let peak = trace.iter().copied().fold(0.0, f64::max);
            for v in trace.iter_mut() {
                *v *= self.peak_mw / peak;
            }
            ids.push(format!("demand_{k}"));
            traces.push(trace);
        }
        TraceLibrary::new(ids, traces)
    }
}

impl WindParams {
    pub fn validate(&self) -> Result<()> {
        if self.traces == 0 {
            return Err(AdequacyError::Config("wind library needs at least one trace".into()));
        }
        if !(self.capacity_mw >= 0.0) {
            return Err(AdequacyError::Config("wind capacity must be nonnegative".into()));
        }
        if !(self.mean_capacity_factor > 0.0 && self.mean_capacity_factor < 1.0) {
            return Err(AdequacyError::Config("mean_capacity_factor must be in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return Err(AdequacyError::Config("wind persistence must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<TraceLibrary> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let phi = self.persistence;
        let innov = (1.0 - phi * phi).sqrt() * self.latent_sigma;
        let latent: Vec<Vec<f64>> = (0..self.traces)
            .map(|_| {
                let mut x: f64 = self.latent_sigma * gauss(&mut rng);
                (0..HOURS_PER_YEAR)
                    .map(|t| {
                        if t > 0 {
                            let e = gauss(&mut rng);
                            x = phi * x + innov * e;
                        }
                        let day = (t / HOURS_PER_DAY) as f64;
                        x + self.seasonal_amplitude * (2.0 * PI * (day - self.peak_day) / 365.0).cos()
                    })
                    .collect()
            })
            .collect();
        let offset = fit_offset(&latent, self.mean_capacity_factor);
        let ids = (0..self.traces).map(|k| format!("wind_{k}")).collect();
        let traces =
            latent.iter().map(|x| x.iter().map(|v| self.capacity_mw * logistic(v + offset)).collect()).collect();
        TraceLibrary::new(ids, traces)
    }
}

fn gauss<R: rand::Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Offset `b` with mean(logistic(x + b)) equal to `target` over the library.
fn fit_offset(latent: &[Vec<f64>], target: f64) -> f64 {
    let n = latent.iter().map(Vec::len).sum::<usize>() as f64;
    let mean_cf = |b: f64| latent.iter().flatten().map(|x| logistic(x + b)).sum::<f64>() / n;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_cf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_demand() -> DemandParams {
        DemandParams {
            traces: 3,
            peak_mw: 1000.0,
            daily_shape: vec![1.0; 24],
            seasonal_amplitude: 0.1,
            peak_day: 15.0,
            weekend_factor: 0.9,
            daily_noise_sigma: 0.05,
            daily_noise_persistence: 0.7,
            hourly_noise_sigma: 0.01,
            seed: 4,
        }
    }

    #[test]
    fn demand_traces_peak_at_target() {
        let lib = small_demand().generate().unwrap();
        assert_eq!(lib.len(), 3);
        for t in &lib.traces {
            assert_eq!(t.len(), HOURS_PER_YEAR);
            let peak = t.iter().copied().fold(0.0, f64::max);
            assert!((peak - 1000.0).abs() < 1e-9);
            assert!(t.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn wind_mean_capacity_factor_is_fitted() {
        let p = WindParams {
            traces: 4,
            capacity_mw: 10_000.0,
            mean_capacity_factor: 0.3,
            persistence: 0.95,
            latent_sigma: 1.5,
            seasonal_amplitude: 0.3,
            peak_day: 15.0,
            seed: 9,
        };
        let lib = p.generate().unwrap();
        assert!((lib.mean() / 10_000.0 - 0.3).abs() < 1e-6);
        assert!(lib.traces.iter().flatten().all(|v| (0.0..=10_000.0).contains(v)));
    }

    #[test]
    fn rejects_bad_libraries() {
        assert!(TraceLibrary::new(vec![], vec![]).is_err());
        assert!(TraceLibrary::new(vec!["a".into()], vec![vec![1.0; 10]]).is_err());
        assert!(TraceLibrary::new(vec!["a".into()], vec![vec![-1.0; HOURS_PER_YEAR]]).is_err());
        let mut p = small_demand();
        p.daily_shape.pop();
        assert!(p.generate().is_err());
    }
}
