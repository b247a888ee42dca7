//! Report files and CSV tables.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::checker::{self, CellResult, Limits, PropertyReport, Stats, SweepRow, TraceStep};
use crate::error::{CheckError, LimitKind};
use crate::scenario::{Scenario, SchemeKind};
use crate::schemes::{Counting, Tlo};

/// How a check run ended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum RunStatus {
    Complete,
    LimitExceeded {
        limit: LimitKind,
    },
    Failed {
        reason: String,
        trace: Vec<TraceStep>,
    },
}

/// Self-contained result of `check`: the scenario echo is enough to re-run it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub scenario: Scenario,
    pub limits: Limits,
    pub status: RunStatus,
    pub stats: Stats,
    pub properties: Option<PropertyReport>,
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The report with the wall-clock field zeroed, for comparing runs.
    pub fn without_timing(&self) -> Report {
        Report {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Explores a validated scenario with its configured scheme.
pub fn run_check(scenario: &Scenario, limits: &Limits, workers: usize) -> Report {
    let started = Instant::now();
    let world = scenario.world();
    let result = match scenario.scheme {
        SchemeKind::Counting => {
            let params = scenario
                .counting_params()
                .expect("validated counting scenario");
            checker::explore(&world, &Counting::new(params), limits, workers)
        }
        SchemeKind::Tlo => checker::explore(
            &world,
            &Tlo::new(scenario.params.threshold_waiting),
            limits,
            workers,
        ),
    };
    let (status, stats, properties) = match result {
        Ok(space) => {
            let props = checker::check_coverage(&space);
            (RunStatus::Complete, space.stats, Some(props))
        }
        Err(CheckError::LimitExceeded { kind, stats }) => {
            (RunStatus::LimitExceeded { limit: kind }, stats, None)
        }
        Err(CheckError::Execution { source, trace }) => (
            RunStatus::Failed {
                reason: source.to_string(),
                trace,
            },
            Stats::default(),
            None,
        ),
        Err(other) => (
            RunStatus::Failed {
                reason: other.to_string(),
                trace: Vec::new(),
            },
            Stats::default(),
            None,
        ),
    };
    Report {
        scenario: scenario.clone(),
        limits: *limits,
        status,
        stats,
        properties,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
}

pub const CSV_HEADER: &str =
    "range,c_threshold,hop_best,hop_worst,time_best,time_worst,states,transitions,starvation";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders sweep rows with a fixed header and LF line endings. Cells that
/// did not complete carry their partial counts and leave the metric and
/// starvation columns empty.
pub fn csv_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let (best, worst, tbest, tworst, states, transitions, starvation) = match &row.result {
            CellResult::Complete(p) => (
                opt(p.hop_best),
                opt(p.hop_worst),
                opt(p.time_best),
                opt(p.time_worst),
                p.state_count.to_string(),
                p.transition_count.to_string(),
                if p.full_coverage_always { "0" } else { "1" }.to_string(),
            ),
            CellResult::LimitExceeded { stats, .. } => (
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                stats.states.to_string(),
                stats.transitions.to_string(),
                String::new(),
            ),
            CellResult::Failed { .. } => Default::default(),
        };
        let _ = writeln!(
            out,
            "{},{},{best},{worst},{tbest},{tworst},{states},{transitions},{starvation}",
            row.range, row.c_threshold
        );
    }
    out
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> io::Result<()> {
    std::fs::write(path, csv_table(rows))
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}
