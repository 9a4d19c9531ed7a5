//! Resource adequacy assessment with storage: synthetic margin scenarios,
//! dispatch policies, learned surrogates and the level models that plug them
//! into a multilevel Monte Carlo estimator.

pub mod architecture;
pub mod dispatch;
pub mod error;
pub mod levels;
pub mod scenario;
pub mod surrogate;
pub mod system;

pub use architecture::{Architecture, LevelKind};
pub use error::{AdequacyError, Result};
pub use levels::Level;
pub use system::{NominalCosts, System, SystemConfig};
