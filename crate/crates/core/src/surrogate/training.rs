use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::features::{clip_day, DayFeatures, Normalizer};
use crate::dispatch::{dispatch_metrics, Policy, StorageFleet};
use crate::error::{AdequacyError, Result};
use crate::scenario::{ScenarioGenerator, HOURS_PER_DAY};

/// Where a training set came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDay {
    /// Clipped, not normalized.
    pub features: DayFeatures,
    pub lol: f64,
    pub ens: f64,
}

impl LabeledDay {
    pub fn curtailed(&self) -> bool {
        self.lol > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub days: Vec<LabeledDay>,
    pub provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    days: usize,
    provenance: Provenance,
    normalizer: Normalizer,
}

/// Label a day of margins with the exact policy from a full fleet.
pub fn label_day(margin: &[f64], storage: &StorageFleet) -> LabeledDay {
    let out = dispatch_metrics(Policy::Exact, margin, storage, None);
    LabeledDay { features: clip_day(margin), lol: out.lol_hours, ens: out.ens_energy }
}

/// Mine `n_days` shortfall days and label each in isolation.
pub fn build_training_set(
    generator: &ScenarioGenerator,
    storage: &StorageFleet,
    n_days: usize,
    provenance: Provenance,
    probe_days: usize,
) -> Result<TrainingSet> {
    let mined = generator.sample_low_margin_days(n_days, provenance.seed, probe_days)?;
    let days = mined.iter().map(|d| label_day(&d.margin, storage)).collect();
    Ok(TrainingSet { days, provenance })
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn features(&self) -> Vec<DayFeatures> {
        self.days.iter().map(|d| d.features).collect()
    }

    pub fn subset(&self, indices: impl IntoIterator<Item = usize>) -> Self {
        Self { days: indices.into_iter().map(|i| self.days[i].clone()).collect(), provenance: self.provenance.clone() }
    }

    pub fn curtailed(&self) -> Self {
        Self {
            days: self.days.iter().filter(|d| d.curtailed()).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("meta.json")
    }

    /// CSV with one row per day (24 clipped margins, lol, ens), plus a JSON
    /// sidecar with provenance and the fitted normalizer.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| AdequacyError::format(path, e))?;
        let mut header: Vec<String> = (0..HOURS_PER_DAY).map(|h| format!("m{h:02}")).collect();
        header.extend(["lol_label".into(), "ens_label".into()]);
        w.write_record(&header).map_err(|e| AdequacyError::format(path, e))?;
        for d in &self.days {
            let row = d.features.iter().chain([&d.lol, &d.ens]).map(f64::to_string);
            w.write_record(row).map_err(|e| AdequacyError::format(path, e))?;
        }
        w.flush().map_err(|e| AdequacyError::io(path, e))?;
        let sidecar = Sidecar {
            days: self.len(),
            provenance: self.provenance.clone(),
            normalizer: Normalizer::fit(&self.features()),
        };
        let meta = Self::sidecar_path(path);
        let text = serde_json::to_string_pretty(&sidecar).map_err(|e| AdequacyError::format(&meta, e))?;
        std::fs::write(&meta, text).map_err(|e| AdequacyError::io(&meta, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let meta = Self::sidecar_path(path);
        let text = std::fs::read_to_string(&meta).map_err(|e| AdequacyError::io(&meta, e))?;
        let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| AdequacyError::format(&meta, e))?;
        let mut r = csv::Reader::from_path(path).map_err(|e| AdequacyError::format(path, e))?;
        let mut days = Vec::with_capacity(sidecar.days);
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| AdequacyError::format(path, e))?;
            let values: Vec<f64> = rec
                .iter()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| AdequacyError::format(path, format!("row {}: {e}", line + 2)))?;
            if values.len() != HOURS_PER_DAY + 2 {
                return Err(AdequacyError::format(path, format!("row {}: {} columns", line + 2, values.len())));
            }
            days.push(LabeledDay {
                features: values[..HOURS_PER_DAY].try_into().expect("24 columns"),
                lol: values[HOURS_PER_DAY],
                ens: values[HOURS_PER_DAY + 1],
            });
        }
        if days.len() != sidecar.days {
            return Err(AdequacyError::format(path, format!("{} rows, sidecar says {}", days.len(), sidecar.days)));
        }
        Ok(Self { days, provenance: sidecar.provenance })
    }
}
