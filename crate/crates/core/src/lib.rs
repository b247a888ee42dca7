//! Explicit-state model checking of warning-message dissemination in
//! vehicular ad-hoc networks.
//!
//! Vehicles are timed actors exchanging messages through bounded bags;
//! warnings travel by location-based broadcast. [`checker::explore`] walks
//! every interleaving of same-instant events and reports which vehicles end
//! up informed and how many hops it took.

pub mod actor;
pub mod checker;
pub mod error;
pub mod geometry;
pub mod report;
pub mod scenario;
pub mod schemes;
pub mod vanet;

/// Model time, in abstract integer units.
pub type Time = u64;

/// Grid coordinates used throughout the model.
pub type Coord = i64;

/// A vehicle position.
pub type Position = geometry::Point<Coord>;

pub use actor::{
    ActorId, Event, GlobalState, MessageBag, Payload, Scheme, SchemeVars, Server, TimedMessage,
};
pub use checker::{
    check_coverage, explore, hop_metrics, replay, sweep, Limits, PropertyReport, StateSpace,
    TerminalOutcome, TraceStep,
};
pub use error::{CheckError, ExecError, LimitKind, ScenarioError};
pub use geometry::{Kinematics, Point, RadioConfig};
pub use scenario::{Scenario, SchemeKind};
pub use schemes::{CThreshold, Counting, CountingParams, Tlo};
pub use vanet::World;
