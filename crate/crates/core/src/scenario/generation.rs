use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{AdequacyError, Result};

/// Thermal unit with exponential up and down times.
///
/// `fail_rate` and `repair_rate` are transition rates per hour of a two-state
/// continuous-time Markov chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratingUnit {
    pub capacity: f64,
    pub fail_rate: f64,
    pub repair_rate: f64,
}

impl GeneratingUnit {
    pub fn new(capacity: f64, fail_rate: f64, repair_rate: f64) -> Result<Self> {
        let unit = Self { capacity, fail_rate, repair_rate };
        unit.validate()?;
        Ok(unit)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > 0.0) || !self.capacity.is_finite() {
            return Err(AdequacyError::Config(format!("unit capacity must be positive, got {}", self.capacity)));
        }
        if !(self.fail_rate >= 0.0) || !self.fail_rate.is_finite() {
            return Err(AdequacyError::Config(format!("fail rate must be nonnegative, got {}", self.fail_rate)));
        }
        if !(self.repair_rate > 0.0) || !self.repair_rate.is_finite() {
            return Err(AdequacyError::Config(format!("repair rate must be positive, got {}", self.repair_rate)));
        }
        Ok(())
    }

    /// Stationary availability `μ / (λ + μ)`.
    pub fn availability(&self) -> f64 {
        self.repair_rate / (self.fail_rate + self.repair_rate)
    }
}

/// `count` identical units, the unit of fleet configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorGroup {
    pub count: usize,
    pub capacity: f64,
    pub fail_rate: f64,
    pub repair_rate: f64,
}

impl GeneratorGroup {
    pub fn expand(groups: &[GeneratorGroup]) -> Result<Vec<GeneratingUnit>> {
        let mut units = Vec::new();
        for g in groups {
            let unit = GeneratingUnit::new(g.capacity, g.fail_rate, g.repair_rate)?;
            units.extend(std::iter::repeat_n(unit, g.count));
        }
        Ok(units)
    }
}

/// Available conventional capacity for each of `hours` hours.
///
/// Each unit starts in its stationary state and alternates exponential up and
/// down periods; hour `t` sees the state at time `t`.
pub fn sample_generation_trace<R: Rng + ?Sized>(fleet: &[GeneratingUnit], hours: usize, rng: &mut R) -> Vec<f64> {
    let installed: f64 = fleet.iter().map(|u| u.capacity).sum();
    let mut trace = vec![installed; hours];
    for unit in fleet {
        let mut up = rng.random::<f64>() < unit.availability();
        let mut t = 0.0_f64;
        let repair = Exp::new(unit.repair_rate).expect("validated repair rate");
        let fail = (unit.fail_rate > 0.0).then(|| Exp::new(unit.fail_rate).expect("validated fail rate"));
        while t < hours as f64 {
            let stay = if up {
                match &fail {
                    Some(d) => d.sample(rng),
                    None => f64::INFINITY,
                }
            } else {
                repair.sample(rng)
            };
            let end = t + stay;
            if !up {
                let first = t.ceil() as usize;
                let last = end.ceil().min(hours as f64) as usize;
                for g in trace.iter_mut().take(last).skip(first) {
                    *g -= unit.capacity;
                }
            }
            t = end;
            up = !up;
        }
    }
    // Integer-valued capacities subtract exactly; snap away any drift otherwise.
    for g in trace.iter_mut() {
        if g.abs() < 1e-9 {
            *g = 0.0;
        }
    }
    trace
}
