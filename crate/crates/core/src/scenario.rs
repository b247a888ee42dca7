//! Scenario files.
//!
//! A scenario is a JSON document describing vehicle placement, radio range,
//! the scheme and its parameters. Loading validates every invariant so the
//! rest of the crate can index vehicles without further checks.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actor::ActorId;
use crate::error::ScenarioError;
use crate::geometry::{Kinematics, Point, RadioConfig, COORD_LIMIT};
use crate::schemes::{CThreshold, CountingParams, DEFAULT_THRESHOLD_WAITING};
use crate::vanet::{VehicleSpec, World};
use crate::Time;

/// Message bag size used when a scenario does not set one.
pub const DEFAULT_BAG_CAPACITY: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Counting,
    Tlo,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Counting => "counting",
            SchemeKind::Tlo => "tlo",
        })
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "counting" => Ok(SchemeKind::Counting),
            "tlo" => Ok(SchemeKind::Tlo),
            other => Err(format!(
                "unknown scheme {other:?} (expected counting or tlo)"
            )),
        }
    }
}

fn default_direction() -> [i64; 2] {
    [1, 0]
}

fn default_latency() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VehicleEntry {
    pub id: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub x: i64,
    pub y: i64,
    #[serde(default = "default_direction")]
    pub direction: [i64; 2],
    #[serde(default)]
    pub speed: i64,
    #[serde(default = "default_latency")]
    pub latency: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SchemeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_threshold: Option<CThreshold>,
    pub threshold_waiting: Time,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            c_threshold: None,
            threshold_waiting: DEFAULT_THRESHOLD_WAITING,
        }
    }
}

fn default_capacity() -> usize {
    DEFAULT_BAG_CAPACITY
}

fn is_default_capacity(c: &usize) -> bool {
    *c == DEFAULT_BAG_CAPACITY
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Free-form documentation: where the coordinates come from and which
    /// relations between vehicles they were chosen to satisfy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Known mismatches between this reconstruction and the figures it
    /// reconstructs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discrepancies: Vec<String>,
    #[serde(default)]
    pub reconstructed: bool,
    pub vehicles: Vec<VehicleEntry>,
    pub accident_vehicle: u16,
    pub radio: RadioConfig,
    pub scheme: SchemeKind,
    #[serde(default)]
    pub params: SchemeParams,
    #[serde(default)]
    pub movement_enabled: bool,
    #[serde(
        default = "default_capacity",
        skip_serializing_if = "is_default_capacity"
    )]
    pub bag_capacity: usize,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            reason: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.vehicles.is_empty() {
            return Err(ScenarioError::invalid(
                "vehicles",
                "at least one vehicle is required",
            ));
        }
        if self.vehicles.len() > u16::MAX as usize {
            return Err(ScenarioError::invalid("vehicles", "too many vehicles"));
        }
        let mut ids = BTreeSet::new();
        for v in &self.vehicles {
            if !ids.insert(v.id) {
                return Err(ScenarioError::invalid(
                    "vehicles.id",
                    format!("duplicate vehicle id {}", v.id),
                ));
            }
            if v.x.abs() > COORD_LIMIT || v.y.abs() > COORD_LIMIT {
                return Err(ScenarioError::invalid(
                    "vehicles.x/y",
                    format!(
                        "vehicle {} lies outside |coordinate| <= {COORD_LIMIT}",
                        v.id
                    ),
                ));
            }
            if v.direction.iter().any(|c| c.abs() > 1) {
                return Err(ScenarioError::invalid(
                    "vehicles.direction",
                    format!("vehicle {}: direction components must be in -1..=1", v.id),
                ));
            }
            if v.speed < 0 {
                return Err(ScenarioError::invalid(
                    "vehicles.speed",
                    format!("vehicle {}: negative speed", v.id),
                ));
            }
            if v.latency == 0 {
                return Err(ScenarioError::invalid(
                    "vehicles.latency",
                    format!("vehicle {}: latency must be >= 1", v.id),
                ));
            }
        }
        let n = self.vehicles.len() as u16;
        if ids.iter().copied().ne(0..n) {
            return Err(ScenarioError::invalid(
                "vehicles.id",
                format!("ids must be exactly 0..{n}"),
            ));
        }
        if !ids.contains(&self.accident_vehicle) {
            return Err(ScenarioError::invalid(
                "accidentVehicle",
                format!("no vehicle with id {}", self.accident_vehicle),
            ));
        }
        if self.radio.range <= 0 {
            return Err(ScenarioError::invalid("radio.range", "must be positive"));
        }
        if self.radio.range > 2 * COORD_LIMIT {
            return Err(ScenarioError::invalid(
                "radio.range",
                "exceeds the coordinate range",
            ));
        }
        if self.params.threshold_waiting == 0 {
            return Err(ScenarioError::invalid(
                "params.thresholdWaiting",
                "must be at least 1",
            ));
        }
        if self.scheme == SchemeKind::Counting && self.params.c_threshold.is_none() {
            return Err(ScenarioError::invalid(
                "params.cThreshold",
                "required by the counting scheme",
            ));
        }
        if self.bag_capacity == 0 {
            return Err(ScenarioError::invalid("bagCapacity", "must be positive"));
        }
        Ok(())
    }

    /// The static world for the checker. Assumes a validated scenario.
    pub fn world(&self) -> World {
        let mut vehicles: Vec<&VehicleEntry> = self.vehicles.iter().collect();
        vehicles.sort_by_key(|v| v.id);
        World {
            radio: self.radio,
            vehicles: vehicles
                .into_iter()
                .map(|v| VehicleSpec {
                    start: Point::new(v.x, v.y),
                    kinematics: Kinematics {
                        direction: Point::new(v.direction[0], v.direction[1]),
                        speed: v.speed,
                        latency: v.latency,
                    },
                })
                .collect(),
            accident: ActorId(self.accident_vehicle),
            movement: self.movement_enabled,
            bag_capacity: self.bag_capacity,
        }
    }

    /// Counting parameters; `None` when no threshold is configured.
    pub fn counting_params(&self) -> Option<CountingParams> {
        self.params.c_threshold.map(|c_threshold| CountingParams {
            c_threshold,
            threshold_waiting: self.params.threshold_waiting,
        })
    }

    /// Human-readable name of a vehicle.
    pub fn label(&self, id: ActorId) -> String {
        self.vehicles
            .iter()
            .find(|v| v.id == id.0)
            .and_then(|v| v.label.clone())
            .unwrap_or_else(|| id.0.to_string())
    }

    pub fn id_of(&self, label: &str) -> Option<ActorId> {
        self.vehicles
            .iter()
            .find(|v| v.label.as_deref() == Some(label))
            .map(|v| ActorId(v.id))
    }

    /// Sub-scenario with at most `n` vehicles: the accident vehicle plus the
    /// vehicles closest to it in breadth-first order over the range graph
    /// (unreachable vehicles last), renumbered densely.
    pub fn restrict(&self, n: usize) -> Scenario {
        let world = self.world();
        let count = world.len();
        let mut order = Vec::with_capacity(count);
        let mut seen = vec![false; count];
        let mut queue = VecDeque::from([world.accident.index()]);
        seen[world.accident.index()] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for (v, seen) in seen.iter_mut().enumerate() {
                if !*seen
                    && world.vehicles[u]
                        .start
                        .within(world.vehicles[v].start, world.radio.range)
                {
                    *seen = true;
                    queue.push_back(v);
                }
            }
        }
        order.extend((0..count).filter(|&v| !seen[v]));
        let mut keep: Vec<usize> = order.into_iter().take(n.max(1)).collect();
        keep.sort_unstable();

        let mut sub = self.clone();
        sub.name = format!("{}_first{}", self.name, keep.len());
        sub.vehicles = keep
            .iter()
            .enumerate()
            .map(|(new_id, &old)| {
                let src = self
                    .vehicles
                    .iter()
                    .find(|v| v.id as usize == old)
                    .expect("dense ids");
                VehicleEntry {
                    id: new_id as u16,
                    ..src.clone()
                }
            })
            .collect();
        sub.accident_vehicle = keep
            .iter()
            .position(|&o| o == world.accident.index())
            .expect("accident kept") as u16;
        sub.discrepancies.clear();
        sub.notes = vec![format!(
            "Sub-scenario of {}: the accident vehicle and the {} vehicles nearest to it in breadth-first order over the range graph, renumbered.",
            self.name,
            keep.len() - 1
        )];
        sub
    }
}
