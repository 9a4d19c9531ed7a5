//! Storage dispatch policies over a margin trace, curtailment metrics, the
//! daily peak-shaving offset and the capacity outage convolution.

mod average;
mod copt;
mod metrics;
mod policy;
mod storage;

pub use average::{analytic_avg_risk, average_profile, AvgProfile, NominalProfile};
pub use copt::{build_copt, Copt};
pub use metrics::{curtailment, risk_metrics, CURTAILMENT_THRESHOLD_MW};
pub use policy::{dispatch, dispatch_metrics, exact_dispatch, greedy_dispatch, DispatchResult, Policy};
pub use storage::{StorageFleet, StorageUnit};
