//! The vehicular network: static world description, location-based
//! broadcast, the farthest-receiver predicate and periodic movement.

use std::collections::VecDeque;

use crate::actor::{
    ActorId, ActorState, Context, GlobalState, MessageBag, Monitor, Payload, Scheme, SchemeVars,
    Server, TimedMessage,
};
use crate::error::ExecError;
use crate::geometry::{Kinematics, RadioConfig};
use crate::{Position, Time};

/// Static part of a vehicle's description.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VehicleSpec {
    pub start: Position,
    pub kinematics: Kinematics,
}

/// Everything that stays fixed during exploration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct World {
    pub radio: RadioConfig,
    pub vehicles: Vec<VehicleSpec>,
    pub accident: ActorId,
    pub movement: bool,
    pub bag_capacity: usize,
}

impl World {
    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    /// Initial state: the accident vehicle holds `alertAccident` at time 0;
    /// with movement enabled every other vehicle holds its first `move`.
    pub fn initial_state<S: Scheme>(&self, scheme: &S) -> Result<GlobalState<S::Vars>, ExecError> {
        let mut state = GlobalState {
            now: 0,
            actors: self
                .vehicles
                .iter()
                .map(|v| ActorState {
                    pos: v.start,
                    stopped: false,
                    vars: scheme.initial_vars(),
                    bag: MessageBag::new(self.bag_capacity),
                })
                .collect(),
            monitor: Monitor::default(),
        };
        for i in 0..self.vehicles.len() {
            let id = ActorId(i as u16);
            let server = if id == self.accident {
                Server::AlertAccident
            } else if self.movement {
                Server::Move
            } else {
                continue;
            };
            state.enqueue(TimedMessage {
                arrival: 0,
                server,
                sender: id,
                payload: Payload::Empty,
                target: id,
            })?;
        }
        Ok(state)
    }

    /// Vehicles connected to the accident vehicle in the range graph over
    /// the starting positions.
    pub fn reachable_from_accident(&self) -> Vec<bool> {
        let n = self.vehicles.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.accident.index()]);
        seen[self.accident.index()] = true;
        while let Some(u) = queue.pop_front() {
            for (v, seen) in seen.iter_mut().enumerate() {
                if !*seen
                    && self.vehicles[u]
                        .start
                        .within(self.vehicles[v].start, self.radio.range)
                {
                    *seen = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

/// Whether two positions are within radio range of each other.
pub fn in_range(a: Position, b: Position, radio: RadioConfig) -> bool {
    a.squared_distance(b) < radio.range_sq()
}

/// Receivers of a broadcast from `origin`, sender included, in actor order.
pub fn receivers<V>(
    state: &GlobalState<V>,
    radio: RadioConfig,
    origin: Position,
) -> impl Iterator<Item = ActorId> + '_ {
    state
        .actors
        .iter()
        .enumerate()
        .filter(move |(_, a)| in_range(origin, a.pos, radio))
        .map(|(i, _)| ActorId(i as u16))
}

/// Enqueues a `receive` carrying `hop` and the sender's position into the
/// bag of every vehicle in range of `sender`, the sender itself included.
pub fn broadcast<V: SchemeVars>(
    state: &mut GlobalState<V>,
    world: &World,
    sender: ActorId,
    hop: u32,
) -> Result<(), ExecError> {
    let origin = state.actors[sender.index()].pos;
    let targets: Vec<ActorId> = receivers(state, world.radio, origin).collect();
    for target in targets {
        state.enqueue(TimedMessage {
            arrival: state.now,
            server: Server::Receive,
            sender,
            payload: Payload::Warning { hop, origin },
            target,
        })?;
    }
    state.monitor.max_hop = state.monitor.max_hop.max(hop);
    Ok(())
}

/// Whether `candidate` is a farthest in-range receiver of a broadcast sent
/// from `origin`. Ties are all farthest.
pub fn is_tlo<V>(
    state: &GlobalState<V>,
    world: &World,
    candidate: ActorId,
    origin: Position,
) -> bool {
    is_tlo_below(state, world, candidate, origin, None)
}

/// [`is_tlo`] restricted to receivers whose squared distance from `origin`
/// is strictly below `below`. Used when a previous election went silent.
pub fn is_tlo_below<V>(
    state: &GlobalState<V>,
    world: &World,
    candidate: ActorId,
    origin: Position,
    below: Option<i64>,
) -> bool {
    let mine = state.actors[candidate.index()].pos.squared_distance(origin);
    farthest_distance(state, world, origin, below).is_none_or(|d| d <= mine)
}

/// Largest squared distance from `origin` among eligible receivers.
pub fn farthest_distance<V>(
    state: &GlobalState<V>,
    world: &World,
    origin: Position,
    below: Option<i64>,
) -> Option<i64> {
    let range_sq = world.radio.range_sq();
    state
        .actors
        .iter()
        .map(|a| a.pos.squared_distance(origin))
        .filter(|&d| d < range_sq && below.is_none_or(|b| d < b))
        .max()
}

/// `move` handler: advance by one step and reschedule, unless stopped.
pub(crate) fn step_move<V: SchemeVars>(cx: &mut Context<'_, V>) -> Result<(), ExecError> {
    let me = cx.me();
    if cx.state().actors[me.index()].stopped {
        return Ok(());
    }
    let kin = cx.world().vehicles[me.index()].kinematics;
    cx.advance_position(kin.direction * kin.speed);
    cx.send_self(Server::Move, Payload::Empty, kin.latency as Time)
}
