//! Warning dissemination schemes.
//!
//! Both schemes share the `alertAccident` / `receive` / `finishWait`
//! message servers; `move` and `stop` are handled by the interpreter.

pub mod counting;
pub mod tlo;

pub use counting::{CThreshold, Counting, CountingParams, CountingVars};
pub use tlo::{Tlo, TloVars};

/// Watchdog period used when a scenario does not specify one.
pub const DEFAULT_THRESHOLD_WAITING: crate::Time = 2;
