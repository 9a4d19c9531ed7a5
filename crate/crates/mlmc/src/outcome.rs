use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Risk metric tracked by the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    /// Loss of load expectation, hours per year.
    Lole,
    /// Expected energy not served, MWh per year.
    Eens,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Lole, Metric::Eens];

    pub fn index(self) -> usize {
        match self {
            Metric::Lole => 0,
            Metric::Eens => 1,
        }
    }

    pub fn other(self) -> Metric {
        match self {
            Metric::Lole => Metric::Eens,
            Metric::Eens => Metric::Lole,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Lole => f.write_str("LOLE"),
            Metric::Eens => f.write_str("EENS"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "LOLE" => Ok(Metric::Lole),
            "EENS" => Ok(Metric::Eens),
            other => Err(format!("unknown metric '{other}' (expected LOLE or EENS)")),
        }
    }
}

/// Annual loss-of-load hours and energy not served of one sampled year.
///
/// Differences of two outcomes (level-pair samples) reuse the same type, in
/// which case the components may be negative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeVector {
    pub lol_hours: f64,
    pub ens_energy: f64,
}

impl OutcomeVector {
    pub const ZERO: OutcomeVector = OutcomeVector { lol_hours: 0.0, ens_energy: 0.0 };

    pub fn new(lol_hours: f64, ens_energy: f64) -> Self {
        Self { lol_hours, ens_energy }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Lole => self.lol_hours,
            Metric::Eens => self.ens_energy,
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.lol_hours, self.ens_energy]
    }

    pub fn from_array(values: [f64; 2]) -> Self {
        Self::new(values[0], values[1])
    }
}

impl Add for OutcomeVector {
    type Output = OutcomeVector;

    fn add(self, rhs: OutcomeVector) -> OutcomeVector {
        OutcomeVector::new(self.lol_hours + rhs.lol_hours, self.ens_energy + rhs.ens_energy)
    }
}

impl Sub for OutcomeVector {
    type Output = OutcomeVector;

    fn sub(self, rhs: OutcomeVector) -> OutcomeVector {
        OutcomeVector::new(self.lol_hours - rhs.lol_hours, self.ens_energy - rhs.ens_energy)
    }
}
