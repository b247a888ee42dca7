//! Breadth-first explicit-state exploration of every event interleaving.
//!
//! States are time-normalized and deduplicated on their canonical key. Each
//! BFS level is expanded in parallel and merged sequentially in frontier
//! order, so every reported number (and every witness) is the same for any
//! worker count.

use std::collections::BTreeSet;

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actor::{ActorId, Event, GlobalState, Payload, Scheme, Server};
use crate::error::{CheckError, ExecError, LimitKind};
use crate::schemes::{CThreshold, Counting, CountingParams};
use crate::vanet::World;
use crate::Time;

/// Exploration bounds and options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Limits {
    pub max_states: usize,
    /// Largest elapsed model time any explored state may reach.
    pub max_time: Option<Time>,
    #[serde(with = "opt_secs")]
    pub max_wall: Option<Duration>,
    /// Expand only one commuting receive where one is enabled instead of
    /// every enabled event. Terminal states are unaffected.
    #[serde(default = "yes")]
    pub reduce: bool,
}

fn yes() -> bool {
    true
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 5_000_000,
            max_time: None,
            max_wall: Some(Duration::from_secs(600)),
            reduce: true,
        }
    }
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(Duration::from_secs_f64))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub states: usize,
    /// Executed (state, event) pairs, including those that led to an
    /// already-visited state.
    pub transitions: usize,
    /// Number of BFS levels.
    pub depth: usize,
}

/// One executed event, as stored in witness traces and reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Elapsed model time at which the event fires.
    pub time: Time,
    pub actor: ActorId,
    pub server: Server,
    pub sender: ActorId,
    pub payload: Payload,
}

impl TraceStep {
    fn of(elapsed: Time, event: &Event) -> Self {
        TraceStep {
            time: elapsed,
            actor: event.actor,
            server: event.message.server,
            sender: event.message.sender,
            payload: event.message.payload,
        }
    }

    fn matches(&self, event: &Event) -> bool {
        self.actor == event.actor
            && self.server == event.message.server
            && self.sender == event.message.sender
            && self.payload == event.message.payload
    }
}

/// A distinct way the dissemination can end.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TerminalOutcome {
    pub informed: BTreeSet<ActorId>,
    pub max_hop: u32,
    /// Elapsed time of the last event that informed a vehicle.
    pub completion_time: Time,
    /// Shortest trace reaching this outcome.
    pub witness: Vec<TraceStep>,
}

impl TerminalOutcome {
    pub fn covers(&self, expected: &[bool]) -> bool {
        expected
            .iter()
            .enumerate()
            .all(|(i, &e)| !e || self.informed.contains(&ActorId(i as u16)))
    }
}

/// Result of a complete exploration.
#[derive(Clone, Debug)]
pub struct StateSpace {
    pub stats: Stats,
    /// Distinct terminal outcomes in discovery order (shortest witness first).
    pub terminals: Vec<TerminalOutcome>,
    /// Vehicles reachable from the accident vehicle in the range graph.
    pub expected: Vec<bool>,
}

/// Coverage and performance summary of one exploration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyReport {
    pub full_coverage_always: bool,
    pub starvation_witness: Option<Vec<TraceStep>>,
    /// Reachable vehicles left uninformed at the end of the witness.
    pub starved: Vec<ActorId>,
    pub hop_best: Option<u32>,
    pub hop_worst: Option<u32>,
    pub time_best: Option<Time>,
    pub time_worst: Option<Time>,
    pub state_count: usize,
    pub transition_count: usize,
    pub terminal_count: usize,
    pub starving_terminal_count: usize,
}

enum Successor<V> {
    /// Already visited before this chunk was expanded; only the transition
    /// is counted.
    Known,
    New(Vec<u8>, GlobalState<V>),
    Failed(ExecError),
}

enum Expansion<V> {
    Terminal,
    Successors(Vec<(Event, Successor<V>)>),
}

struct Node {
    parent: u32,
    step: Option<TraceStep>,
}

/// Frontier states expanded together before their successors are merged.
const CHUNK: usize = 2048;

fn expand<S: Scheme>(
    world: &World,
    scheme: &S,
    state: &GlobalState<S::Vars>,
    visited: &HashMap<Vec<u8>, u32>,
    reduce: bool,
) -> Expansion<S::Vars> {
    let mut events = state.enabled_events();
    if events.iter().all(|e| e.message.server == Server::Move) {
        return Expansion::Terminal;
    }
    if reduce {
        if let Some(e) = state.commuting_event(scheme) {
            events = vec![e];
        }
    }
    let mut buf = Vec::new();
    let succs = events
        .into_iter()
        .map(|e| {
            let succ = match state.execute(world, scheme, &e) {
                Ok(mut s) => {
                    s.normalize();
                    buf.clear();
                    s.encode_key(&mut buf);
                    if visited.contains_key(buf.as_slice()) {
                        Successor::Known
                    } else {
                        Successor::New(buf.clone(), s)
                    }
                }
                Err(err) => Successor::Failed(err),
            };
            (e, succ)
        })
        .collect();
    Expansion::Successors(succs)
}

fn trace_to(nodes: &[Node], mut at: u32) -> Vec<TraceStep> {
    let mut steps = Vec::new();
    while let Some(step) = nodes[at as usize].step {
        steps.push(step);
        at = nodes[at as usize].parent;
    }
    steps.reverse();
    steps
}

/// Explores every interleaving reachable from the world's initial state.
///
/// `workers` is the number of threads used to expand a BFS level; `1` runs
/// everything on the calling thread.
pub fn explore<S: Scheme>(
    world: &World,
    scheme: &S,
    limits: &Limits,
    workers: usize,
) -> Result<StateSpace, CheckError> {
    let started = Instant::now();
    let pool = if workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("failed to build worker pool"),
        )
    } else {
        None
    };

    let init = world
        .initial_state(scheme)
        .map_err(|source| CheckError::Execution {
            source,
            trace: Vec::new(),
        })?
        .normalized();

    let mut stats = Stats {
        states: 1,
        ..Stats::default()
    };
    let mut visited: HashMap<Vec<u8>, u32> = HashMap::default();
    visited.insert(init.canonical_key(), 0);
    let mut nodes = vec![Node {
        parent: 0,
        step: None,
    }];
    let mut frontier = vec![(0u32, init)];
    let mut terminals: Vec<TerminalOutcome> = Vec::new();
    let mut outcome_seen: HashSet<(BTreeSet<ActorId>, u32, Time)> = HashSet::default();

    while !frontier.is_empty() {
        if let Some(max) = limits.max_wall {
            if started.elapsed() > max {
                return Err(CheckError::LimitExceeded {
                    kind: LimitKind::WallClock,
                    stats,
                });
            }
        }
        let mut next = Vec::new();
        for chunk in frontier.chunks(CHUNK) {
            let expansions: Vec<Expansion<S::Vars>> = match &pool {
                Some(pool) => pool.install(|| {
                    chunk
                        .par_iter()
                        .map(|(_, s)| expand(world, scheme, s, &visited, limits.reduce))
                        .collect()
                }),
                None => chunk
                    .iter()
                    .map(|(_, s)| expand(world, scheme, s, &visited, limits.reduce))
                    .collect(),
            };
            for ((id, state), expansion) in chunk.iter().zip(expansions) {
                match expansion {
                    Expansion::Terminal => {
                        let informed: BTreeSet<ActorId> = state.informed().into_iter().collect();
                        let completion = state.monitor.last_informed.unwrap_or(0);
                        let key = (informed, state.monitor.max_hop, completion);
                        if outcome_seen.insert(key.clone()) {
                            terminals.push(TerminalOutcome {
                                informed: key.0,
                                max_hop: key.1,
                                completion_time: key.2,
                                witness: trace_to(&nodes, *id),
                            });
                        }
                    }
                    Expansion::Successors(succs) => {
                        for (event, succ) in succs {
                            stats.transitions += 1;
                            let step = TraceStep::of(state.monitor.elapsed, &event);
                            let (key, succ) = match succ {
                                Successor::Known => continue,
                                Successor::New(key, succ) => (key, succ),
                                Successor::Failed(source) => {
                                    let mut trace = trace_to(&nodes, *id);
                                    trace.push(step);
                                    return Err(CheckError::Execution { source, trace });
                                }
                            };
                            if visited.contains_key(&key) {
                                continue;
                            }
                            if limits.max_time.is_some_and(|t| succ.monitor.elapsed > t) {
                                return Err(CheckError::LimitExceeded {
                                    kind: LimitKind::Time,
                                    stats,
                                });
                            }
                            if stats.states >= limits.max_states {
                                return Err(CheckError::LimitExceeded {
                                    kind: LimitKind::States,
                                    stats,
                                });
                            }
                            let new_id = nodes.len() as u32;
                            visited.insert(key, new_id);
                            nodes.push(Node {
                                parent: *id,
                                step: Some(step),
                            });
                            stats.states += 1;
                            next.push((new_id, succ));
                        }
                    }
                }
            }
            if let Some(max) = limits.max_wall {
                if started.elapsed() > max {
                    return Err(CheckError::LimitExceeded {
                        kind: LimitKind::WallClock,
                        stats,
                    });
                }
            }
        }
        stats.depth += 1;
        frontier = next;
    }

    Ok(StateSpace {
        stats,
        terminals,
        expected: world.reachable_from_accident(),
    })
}

/// Evaluates coverage and hop/time metrics over a finished exploration.
pub fn check_coverage(space: &StateSpace) -> PropertyReport {
    let starving: Vec<&TerminalOutcome> = space
        .terminals
        .iter()
        .filter(|t| !t.covers(&space.expected))
        .collect();
    let witness = starving.iter().min_by_key(|t| t.witness.len()).copied();
    let metrics = coverage_metrics(space);
    PropertyReport {
        full_coverage_always: starving.is_empty(),
        starvation_witness: witness.map(|t| t.witness.clone()),
        starved: witness
            .map(|t| {
                space
                    .expected
                    .iter()
                    .enumerate()
                    .filter(|&(i, &e)| e && !t.informed.contains(&ActorId(i as u16)))
                    .map(|(i, _)| ActorId(i as u16))
                    .collect()
            })
            .unwrap_or_default(),
        hop_best: metrics.map(|m| m.0),
        hop_worst: metrics.map(|m| m.1),
        time_best: metrics.map(|m| m.2),
        time_worst: metrics.map(|m| m.3),
        state_count: space.stats.states,
        transition_count: space.stats.transitions,
        terminal_count: space.terminals.len(),
        starving_terminal_count: starving.len(),
    }
}

fn coverage_metrics(space: &StateSpace) -> Option<(u32, u32, Time, Time)> {
    let covering: Vec<&TerminalOutcome> = space
        .terminals
        .iter()
        .filter(|t| t.covers(&space.expected))
        .collect();
    if covering.is_empty() {
        return None;
    }
    let hops = covering.iter().map(|t| t.max_hop);
    let times = covering.iter().map(|t| t.completion_time);
    Some((
        hops.clone().min().unwrap(),
        hops.max().unwrap(),
        times.clone().min().unwrap(),
        times.max().unwrap(),
    ))
}

/// Best and worst hop counts over terminals that inform every reachable
/// vehicle.
pub fn hop_metrics(space: &StateSpace) -> Result<(u32, u32), CheckError> {
    coverage_metrics(space)
        .map(|(best, worst, _, _)| (best, worst))
        .ok_or(CheckError::NoCoveringTerminal)
}

/// Outcome of one sweep cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "status")]
pub enum CellResult {
    Complete(PropertyReport),
    LimitExceeded { kind: LimitKind, stats: Stats },
    Failed { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub range: i64,
    pub c_threshold: CThreshold,
    pub result: CellResult,
}

/// Runs the counting scheme once per `(range, threshold)` grid point.
/// Cells that fail are recorded and the sweep continues.
pub fn sweep(
    world: &World,
    base: CountingParams,
    grid: &[(i64, CThreshold)],
    limits: &Limits,
    workers: usize,
) -> Vec<SweepRow> {
    grid.iter()
        .map(|&(range, c_threshold)| {
            let result = match crate::geometry::RadioConfig::new(range) {
                None => CellResult::Failed {
                    reason: format!("range {range} is not positive"),
                },
                Some(radio) => {
                    let world = World {
                        radio,
                        ..world.clone()
                    };
                    let scheme = Counting::new(CountingParams {
                        c_threshold,
                        ..base
                    });
                    match explore(&world, &scheme, limits, workers) {
                        Ok(space) => CellResult::Complete(check_coverage(&space)),
                        Err(CheckError::LimitExceeded { kind, stats }) => {
                            CellResult::LimitExceeded { kind, stats }
                        }
                        Err(e) => CellResult::Failed {
                            reason: e.to_string(),
                        },
                    }
                }
            };
            SweepRow {
                range,
                c_threshold,
                result,
            }
        })
        .collect()
}

/// Why a trace could not be replayed.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("step {index}: no enabled event matches {step:?}")]
    NoMatchingEvent { index: usize, step: TraceStep },
    #[error("step {index}: event fires at {actual}, trace says {expected}")]
    WrongTime {
        index: usize,
        expected: Time,
        actual: Time,
    },
    #[error("step {index}: {source}")]
    Execution { index: usize, source: ExecError },
}

/// Re-executes `trace` from the initial state, returning every intermediate
/// state (initial state first).
pub fn replay<S: Scheme>(
    world: &World,
    scheme: &S,
    trace: &[TraceStep],
) -> Result<Vec<GlobalState<S::Vars>>, ReplayError> {
    let mut state = world
        .initial_state(scheme)
        .map_err(|source| ReplayError::Execution { index: 0, source })?;
    let mut states = vec![state.clone()];
    for (index, step) in trace.iter().enumerate() {
        if state.monitor.elapsed != step.time {
            return Err(ReplayError::WrongTime {
                index,
                expected: step.time,
                actual: state.monitor.elapsed,
            });
        }
        let event = state
            .enabled_events()
            .into_iter()
            .find(|e| step.matches(e))
            .ok_or(ReplayError::NoMatchingEvent { index, step: *step })?;
        state = state
            .execute(world, scheme, &event)
            .map_err(|source| ReplayError::Execution { index, source })?;
        states.push(state.clone());
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Kinematics, RadioConfig};
    use crate::schemes::Tlo;
    use crate::vanet::VehicleSpec;
    use crate::Position;

    fn world(points: &[(i64, i64)], range: i64) -> World {
        World {
            radio: RadioConfig::new(range).unwrap(),
            vehicles: points
                .iter()
                .map(|&(x, y)| VehicleSpec {
                    start: Position::new(x, y),
                    kinematics: Kinematics::default(),
                })
                .collect(),
            accident: ActorId(0),
            movement: false,
            bag_capacity: 5,
        }
    }

    fn counting(c_threshold: CThreshold) -> Counting {
        Counting::new(CountingParams {
            c_threshold,
            threshold_waiting: 2,
        })
    }

    fn ids(v: &[u16]) -> BTreeSet<ActorId> {
        v.iter().map(|&i| ActorId(i)).collect()
    }

    #[test]
    fn lone_accident_vehicle() {
        let space = explore(
            &world(&[(0, 0)], 3),
            &counting(CThreshold::Finite(2)),
            &Limits::default(),
            1,
        )
        .unwrap();
        assert!((2..=3).contains(&space.stats.states));
        assert_eq!(space.terminals.len(), 1);
        assert_eq!(space.terminals[0].informed, ids(&[0]));
        assert_eq!(space.terminals[0].max_hop, 1);
    }

    #[test]
    fn flood_covers_the_connected_component() {
        let w = world(&[(0, 0), (3, 0), (6, 0), (6, 3), (30, 30)], 4);
        let space = explore(&w, &counting(CThreshold::Unbounded), &Limits::default(), 1).unwrap();
        let report = check_coverage(&space);
        assert!(report.full_coverage_always);
        assert!(report.starvation_witness.is_none());
        for t in &space.terminals {
            assert_eq!(t.informed, ids(&[0, 1, 2, 3]));
        }
    }

    #[test]
    fn threshold_one_suppresses_in_some_interleaving() {
        // with K = 1 every watchdog sees counter >= 1, so only A ever broadcasts
        let w = world(&[(0, 0), (2, 0), (2, 1), (5, 0)], 4);
        let space = explore(&w, &counting(CThreshold::Finite(1)), &Limits::default(), 1).unwrap();
        let report = check_coverage(&space);
        assert!(!report.full_coverage_always);
        assert_eq!(report.starved, vec![ActorId(3)]);
    }

    #[test]
    fn tlo_waiter_is_acknowledged_by_the_farthest_forward() {
        // B (1,0) waits for C (3,0); C's forward acknowledges B and reaches D (6,0)
        let w = world(&[(0, 0), (1, 0), (3, 0), (6, 0)], 4);
        let space = explore(&w, &Tlo::new(2), &Limits::default(), 1).unwrap();
        assert!(check_coverage(&space).full_coverage_always);
    }

    #[test]
    fn hop_metrics_without_covering_terminal_is_an_error() {
        let w = world(&[(0, 0), (2, 0), (2, 1), (5, 0)], 4);
        let space = explore(&w, &counting(CThreshold::Finite(1)), &Limits::default(), 1).unwrap();
        assert!(matches!(
            hop_metrics(&space),
            Err(CheckError::NoCoveringTerminal)
        ));
        let report = check_coverage(&space);
        assert_eq!((report.hop_best, report.hop_worst), (None, None));
    }

    #[test]
    fn state_limit_reports_partial_counts() {
        let w = world(&[(0, 0), (1, 0), (2, 0), (3, 0)], 4);
        let limits = Limits {
            max_states: 3,
            ..Limits::default()
        };
        match explore(&w, &counting(CThreshold::Unbounded), &limits, 1) {
            Err(CheckError::LimitExceeded {
                kind: LimitKind::States,
                stats,
            }) => assert_eq!(stats.states, 3),
            other => panic!("expected state limit, got {other:?}"),
        }
    }

    #[test]
    fn time_limit_bounds_elapsed_time() {
        let w = world(&[(0, 0), (3, 0), (6, 0)], 4);
        let limits = Limits {
            max_time: Some(1),
            ..Limits::default()
        };
        assert!(matches!(
            explore(&w, &counting(CThreshold::Unbounded), &limits, 1),
            Err(CheckError::LimitExceeded {
                kind: LimitKind::Time,
                ..
            })
        ));
    }

    #[test]
    fn bag_overflow_aborts_with_trace() {
        let mut w = world(&[(0, 0), (0, 0), (0, 0)], 2);
        w.bag_capacity = 1;
        let limits = Limits {
            reduce: false,
            ..Limits::default()
        };
        match explore(&w, &counting(CThreshold::Unbounded), &limits, 1) {
            Err(CheckError::Execution {
                source: ExecError::BagOverflow { capacity: 1, .. },
                trace,
            }) => {
                assert!(!trace.is_empty());
                assert_eq!(trace[0].server, Server::AlertAccident);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn empty_grid_gives_empty_sweep() {
        let w = world(&[(0, 0), (3, 0)], 4);
        let base = CountingParams {
            c_threshold: CThreshold::Finite(2),
            threshold_waiting: 2,
        };
        assert!(sweep(&w, base, &[], &Limits::default(), 1).is_empty());
    }

    #[test]
    fn single_cell_sweep_matches_direct_exploration() {
        let w = world(&[(0, 0), (2, 0), (2, 1), (5, 0), (7, 1)], 9);
        let base = CountingParams {
            c_threshold: CThreshold::Finite(6),
            threshold_waiting: 2,
        };
        let rows = sweep(
            &w,
            base,
            &[(3, CThreshold::Finite(2))],
            &Limits::default(),
            1,
        );
        let direct = World {
            radio: RadioConfig::new(3).unwrap(),
            ..w.clone()
        };
        let space = explore(
            &direct,
            &counting(CThreshold::Finite(2)),
            &Limits::default(),
            1,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].result, CellResult::Complete(check_coverage(&space)));
    }

    #[test]
    fn non_positive_range_cell_fails_and_sweep_continues() {
        let w = world(&[(0, 0)], 4);
        let base = CountingParams {
            c_threshold: CThreshold::Finite(2),
            threshold_waiting: 2,
        };
        let rows = sweep(
            &w,
            base,
            &[(0, CThreshold::Finite(2)), (1, CThreshold::Finite(2))],
            &Limits::default(),
            1,
        );
        assert!(matches!(rows[0].result, CellResult::Failed { .. }));
        assert!(matches!(rows[1].result, CellResult::Complete(_)));
    }

    #[test]
    fn replay_rejects_a_foreign_step() {
        let w = world(&[(0, 0), (3, 0)], 4);
        let step = TraceStep {
            time: 0,
            actor: ActorId(1),
            server: Server::Receive,
            sender: ActorId(0),
            payload: Payload::Empty,
        };
        assert!(matches!(
            replay(&w, &counting(CThreshold::Finite(2)), &[step]),
            Err(ReplayError::NoMatchingEvent { index: 0, .. })
        ));
    }
}
