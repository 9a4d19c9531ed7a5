use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AdequacyError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelKind {
    Exact,
    #[serde(rename = "Gre")]
    Greedy,
    #[serde(rename = "Avg")]
    Average,
    #[serde(rename = "HGB+Gre")]
    HgbGreedy,
    #[serde(rename = "HGB+SVR")]
    HgbRegressor,
}

impl LevelKind {
    pub const ALL: [LevelKind; 5] = [Self::Exact, Self::Greedy, Self::Average, Self::HgbGreedy, Self::HgbRegressor];

    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "Exact",
            Self::Greedy => "Gre",
            Self::Average => "Avg",
            Self::HgbGreedy => "HGB+Gre",
            Self::HgbRegressor => "HGB+SVR",
        }
    }

    pub fn is_surrogate(self) -> bool {
        matches!(self, Self::HgbGreedy | Self::HgbRegressor)
    }
}

impl fmt::Display for LevelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LevelKind {
    type Err = AdequacyError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AdequacyError::UnknownLevel(s.trim().to_string()))
    }
}

/// A level stack written top first, e.g. `Exact|HGB+Gre|Avg`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    top_first: Vec<LevelKind>,
}

impl Architecture {
    pub fn new(top_first: Vec<LevelKind>) -> Result<Self> {
        let spec = top_first.iter().map(|k| k.name()).collect::<Vec<_>>().join("|");
        let fail = |reason: &str| Err(AdequacyError::Architecture { spec: spec.clone(), reason: reason.into() });
        match top_first.first() {
            None => return fail("no levels"),
            Some(LevelKind::Exact) => {}
            Some(_) => return fail("the top level must be Exact"),
        }
        if top_first[..top_first.len() - 1].contains(&LevelKind::Average) {
            return fail("Avg may only be the bottom level");
        }
        for (i, k) in top_first.iter().enumerate() {
            let repeated = top_first[..i].contains(k);
            let adjacent = i > 0 && top_first[i - 1] == *k;
            if repeated && !adjacent {
                return fail("a level may only repeat directly below itself");
            }
        }
        Ok(Self { top_first })
    }

    pub fn top_first(&self) -> &[LevelKind] {
        &self.top_first
    }

    pub fn bottom_to_top(&self) -> Vec<LevelKind> {
        self.top_first.iter().rev().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.top_first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.top_first.is_empty()
    }

    pub fn needs_surrogate(&self) -> bool {
        self.top_first.iter().any(|k| k.is_surrogate())
    }

    pub fn avg_bottom(&self) -> bool {
        self.top_first.last() == Some(&LevelKind::Average)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.top_first.iter().map(|k| k.name()).collect();
        f.write_str(&names.join("|"))
    }
}

impl FromStr for Architecture {
    type Err = AdequacyError;

    fn from_str(s: &str) -> Result<Self> {
        let levels = s.split('|').map(str::parse).collect::<Result<Vec<_>>>()?;
        Self::new(levels).map_err(|e| match e {
            AdequacyError::Architecture { reason, .. } => AdequacyError::Architecture { spec: s.to_string(), reason },
            other => other,
        })
    }
}

impl Serialize for Architecture {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Architecture {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
