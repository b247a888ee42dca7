use std::path::PathBuf;

use thiserror::Error;

use crate::actor::{ActorId, Server};
use crate::checker::{Stats, TraceStep};

/// Failure while executing a single event.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("message bag of actor {actor} overflowed (capacity {capacity})")]
    BagOverflow { actor: ActorId, capacity: usize },
    #[error("event for actor {actor} is not enabled")]
    NotEnabled { actor: ActorId },
    #[error("actor {actor} got a {server} message with the wrong payload")]
    MalformedMessage { actor: ActorId, server: Server },
    #[error("actor {actor}: {reason}")]
    Invariant {
        actor: ActorId,
        reason: &'static str,
    },
}

/// Which exploration limit was hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LimitKind {
    States,
    Time,
    WallClock,
}

impl std::fmt::Display for LimitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LimitKind::States => "states",
            LimitKind::Time => "time",
            LimitKind::WallClock => "wall-clock",
        })
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("{kind} limit exceeded after {} states", stats.states)]
    LimitExceeded { kind: LimitKind, stats: Stats },
    #[error("{source} (trace of {} steps attached)", trace.len())]
    Execution {
        source: ExecError,
        trace: Vec<TraceStep>,
    },
    #[error("no terminal state informs every reachable vehicle")]
    NoCoveringTerminal,
    #[error("sweep over thresholds requires the counting scheme")]
    SweepNeedsCounting,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
