//! Random annual net generation margin traces.

mod generation;
mod library;
mod margin;

pub use generation::{sample_generation_trace, GeneratingUnit, GeneratorGroup};
pub use library::{DemandParams, TraceLibrary, WindParams};
pub use margin::{Components, DayMargins, Scenario, ScenarioGenerator};

pub const HOURS_PER_DAY: usize = 24;
pub const DAYS_PER_YEAR: usize = 365;
pub const HOURS_PER_YEAR: usize = HOURS_PER_DAY * DAYS_PER_YEAR;
