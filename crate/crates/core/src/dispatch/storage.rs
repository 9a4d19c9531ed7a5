use serde::{Deserialize, Serialize};

use crate::error::{AdequacyError, Result};

/// A lossless storage unit with symmetric charge and discharge power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageUnit {
    /// MW
    pub power: f64,
    /// MWh
    pub energy: f64,
}

impl StorageUnit {
    pub fn new(power: f64, energy: f64) -> Result<Self> {
        let unit = Self { power, energy };
        unit.validate()?;
        Ok(unit)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0 && self.power.is_finite() && self.energy > 0.0 && self.energy.is_finite()) {
            return Err(AdequacyError::Config(format!(
                "storage unit needs positive finite power and energy, got p={} e={}",
                self.power, self.energy
            )));
        }
        Ok(())
    }

    /// Hours of full-power discharge from full.
    pub fn time_to_go(&self) -> f64 {
        self.energy / self.power
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StorageFleet {
    pub units: Vec<StorageUnit>,
}

impl StorageFleet {
    pub fn new(units: Vec<StorageUnit>) -> Result<Self> {
        for u in &units {
            u.validate()?;
        }
        Ok(Self { units })
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.units.iter().map(|u| u.power).sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.units.iter().map(|u| u.energy).sum()
    }

    pub fn full_soc(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.energy).collect()
    }
}
