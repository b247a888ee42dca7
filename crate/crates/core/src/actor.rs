//! Timed actor semantics.
//!
//! Every vehicle is an actor with a bounded, unordered message bag. A message
//! carries an arrival time; only messages whose arrival time equals the
//! smallest pending arrival time are enabled, and every enabled message is a
//! separate event (including several enabled messages in the same bag).
//! Executing an event runs the corresponding message server to completion and
//! then lets time jump to the next pending arrival.

use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::ExecError;
use crate::vanet::{self, World};
use crate::{Position, Time};

/// Index of an actor inside a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(pub u16);

impl ActorId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Message servers of a vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Server {
    AlertAccident,
    Receive,
    FinishWait,
    Move,
    Stop,
}

impl Server {
    fn tag(self) -> u8 {
        match self {
            Server::AlertAccident => 0,
            Server::Receive => 1,
            Server::FinishWait => 2,
            Server::Move => 3,
            Server::Stop => 4,
        }
    }
}

impl fmt::Display for Server {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Server::AlertAccident => "alertAccident",
            Server::Receive => "receive",
            Server::FinishWait => "finishWait",
            Server::Move => "move",
            Server::Stop => "stop",
        };
        f.write_str(s)
    }
}

/// Message arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Payload {
    Empty,
    /// A warning as delivered by `receive`.
    Warning {
        hop: u32,
        origin: Position,
    },
    /// A watchdog that remembers which broadcast it guards. `below` bounds
    /// the squared distance of the candidates still eligible for election.
    Watchdog {
        origin: Position,
        below: Option<i64>,
    },
}

impl Payload {
    fn encode(&self, out: &mut Vec<u8>) {
        match *self {
            Payload::Empty => out.push(0),
            Payload::Warning { hop, origin } => {
                out.push(1);
                out.extend_from_slice(&hop.to_le_bytes());
                encode_pos(origin, out);
            }
            Payload::Watchdog { origin, below } => {
                out.push(2);
                encode_pos(origin, out);
                match below {
                    None => out.push(0),
                    Some(b) => {
                        out.push(1);
                        out.extend_from_slice(&b.to_le_bytes());
                    }
                }
            }
        }
    }
}

/// A pending message.
///
/// Field order matters: the derived `Ord` is the canonical order of bag
/// entries, i.e. by arrival time, server, sender and payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimedMessage {
    pub arrival: Time,
    pub server: Server,
    pub sender: ActorId,
    pub payload: Payload,
    pub target: ActorId,
}

/// Bounded multiset of pending messages, stored in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MessageBag {
    entries: SmallVec<[TimedMessage; 4]>,
    capacity: usize,
}

impl MessageBag {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "bag capacity must be positive");
        MessageBag {
            entries: SmallVec::new(),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TimedMessage] {
        &self.entries
    }

    /// Inserts keeping canonical order; fails when the bag is full.
    pub fn insert(&mut self, msg: TimedMessage) -> Result<(), ExecError> {
        if self.entries.len() >= self.capacity {
            return Err(ExecError::BagOverflow {
                actor: msg.target,
                capacity: self.capacity,
            });
        }
        let at = self.entries.partition_point(|m| m <= &msg);
        self.entries.insert(at, msg);
        Ok(())
    }

    /// Removes one copy of `msg`. Returns false if it was not present.
    pub fn remove(&mut self, msg: &TimedMessage) -> bool {
        match self.entries.binary_search(msg) {
            Ok(i) => {
                self.entries.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    pub fn earliest(&self) -> Option<Time> {
        self.entries.first().map(|m| m.arrival)
    }
}

/// Scheme-specific per-vehicle variables.
pub trait SchemeVars: Clone + Eq + Hash + fmt::Debug + Send + Sync {
    /// Whether the vehicle has learned about the accident.
    fn is_aware(&self) -> bool;

    /// Appends an injective encoding of the variables.
    fn encode(&self, out: &mut Vec<u8>);

    /// Shifts variables that hold absolute times. Neither bundled scheme has
    /// any, hence the no-op default.
    fn shift_time_back(&mut self, _delta: Time) {}
}

/// One vehicle: position, movement flag, scheme variables, message bag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActorState<V> {
    pub pos: Position,
    pub stopped: bool,
    pub vars: V,
    pub bag: MessageBag,
}

/// Observer variables maintained by the interpreter, not by any handler.
///
/// They are part of the state so that deduplication never merges two paths
/// whose outcomes differ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monitor {
    /// Time elapsed since the initial state.
    pub elapsed: Time,
    /// Largest hop number broadcast so far.
    pub max_hop: u32,
    /// Elapsed time of the last event that made a vehicle aware.
    pub last_informed: Option<Time>,
}

/// Global state: current time, all actors and the monitor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GlobalState<V> {
    pub now: Time,
    pub actors: Vec<ActorState<V>>,
    pub monitor: Monitor,
}

/// An enabled message together with the actor that will handle it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub actor: ActorId,
    pub message: TimedMessage,
}

/// Message-server bodies of a dissemination scheme.
///
/// Handlers must be deterministic: all nondeterminism comes from the order
/// in which enabled events are executed.
pub trait Scheme: Sync {
    type Vars: SchemeVars;

    fn name(&self) -> &'static str;

    fn initial_vars(&self) -> Self::Vars;

    fn alert_accident(&self, cx: &mut Context<'_, Self::Vars>) -> Result<(), ExecError>;

    fn receive(
        &self,
        cx: &mut Context<'_, Self::Vars>,
        hop: u32,
        origin: Position,
    ) -> Result<(), ExecError>;

    fn finish_wait(
        &self,
        cx: &mut Context<'_, Self::Vars>,
        payload: Payload,
    ) -> Result<(), ExecError>;

    /// Whether a `receive` handled in this variable state only makes
    /// order-insensitive updates to the receiver and sends nothing.
    fn receive_commutes(&self, _vars: &Self::Vars) -> bool {
        false
    }
}

/// What a message-server body may observe and do.
pub struct Context<'a, V> {
    world: &'a World,
    state: &'a mut GlobalState<V>,
    me: ActorId,
}

impl<'a, V: SchemeVars> Context<'a, V> {
    pub fn me(&self) -> ActorId {
        self.me
    }

    pub fn now(&self) -> Time {
        self.state.now
    }

    pub fn world(&self) -> &World {
        self.world
    }

    pub fn state(&self) -> &GlobalState<V> {
        self.state
    }

    pub fn position(&self) -> Position {
        self.state.actors[self.me.index()].pos
    }

    pub fn vars(&self) -> &V {
        &self.state.actors[self.me.index()].vars
    }

    pub fn vars_mut(&mut self) -> &mut V {
        &mut self.state.actors[self.me.index()].vars
    }

    pub(crate) fn advance_position(&mut self, step: Position) {
        let a = &mut self.state.actors[self.me.index()];
        a.pos = a.pos + step;
    }

    /// Stops this vehicle; pending `move` messages become no-ops.
    pub fn stop(&mut self) {
        self.state.actors[self.me.index()].stopped = true;
    }

    /// Sends a message to this actor, arriving `delay` time units from now.
    pub fn send_self(
        &mut self,
        server: Server,
        payload: Payload,
        delay: Time,
    ) -> Result<(), ExecError> {
        let msg = TimedMessage {
            arrival: self.state.now + delay,
            server,
            sender: self.me,
            payload,
            target: self.me,
        };
        self.state.enqueue(msg)
    }

    /// Location-based broadcast of a warning with the given hop number.
    pub fn broadcast(&mut self, hop: u32) -> Result<(), ExecError> {
        vanet::broadcast(self.state, self.world, self.me, hop)
    }

    /// Whether this vehicle is a farthest receiver of a broadcast sent from
    /// `origin`, ignoring receivers at squared distance `>= below`.
    pub fn is_tlo(&self, origin: Position, below: Option<i64>) -> bool {
        vanet::is_tlo_below(self.state, self.world, self.me, origin, below)
    }
}

impl<V: SchemeVars> GlobalState<V> {
    /// Adds `msg` to its target's bag.
    pub fn enqueue(&mut self, msg: TimedMessage) -> Result<(), ExecError> {
        debug_assert!(msg.arrival >= self.now, "message arrives in the past");
        self.actors[msg.target.index()].bag.insert(msg)
    }

    /// Smallest pending arrival time, if any message is pending.
    pub fn next_arrival(&self) -> Option<Time> {
        self.actors.iter().filter_map(|a| a.bag.earliest()).min()
    }

    /// All events at the minimal pending time, in actor order and then in
    /// canonical message order. Identical copies of a message in one bag
    /// yield a single event.
    pub fn enabled_events(&self) -> Vec<Event> {
        let Some(t) = self.next_arrival() else {
            return Vec::new();
        };
        let mut events = Vec::new();
        for (i, actor) in self.actors.iter().enumerate() {
            let mut prev: Option<&TimedMessage> = None;
            for m in actor.bag.entries().iter().take_while(|m| m.arrival == t) {
                if prev != Some(m) {
                    events.push(Event {
                        actor: ActorId(i as u16),
                        message: *m,
                    });
                }
                prev = Some(m);
            }
        }
        events
    }

    /// An enabled `receive` that commutes with every other event of the
    /// current instant: its actor has nothing but receives pending now and
    /// its variables make the handler order-insensitive.
    pub fn commuting_event<S: Scheme<Vars = V>>(&self, scheme: &S) -> Option<Event> {
        let t = self.next_arrival()?;
        self.actors.iter().enumerate().find_map(|(i, actor)| {
            let pending = actor.bag.entries();
            let now = &pending[..pending.partition_point(|m| m.arrival == t)];
            let first = now.first()?;
            (now.iter().all(|m| m.server == Server::Receive)
                && scheme.receive_commutes(&actor.vars))
            .then_some(Event {
                actor: ActorId(i as u16),
                message: *first,
            })
        })
    }

    /// Whether only `move` messages are enabled (or nothing at all). Such a
    /// state is terminal as far as dissemination is concerned.
    pub fn is_quiescent(&self) -> bool {
        self.enabled_events()
            .iter()
            .all(|e| e.message.server == Server::Move)
    }

    /// Runs one event to completion and returns the successor state.
    pub fn execute<S>(&self, world: &World, scheme: &S, event: &Event) -> Result<Self, ExecError>
    where
        S: Scheme<Vars = V>,
    {
        let msg = event.message;
        if msg.arrival != self.now || msg.target != event.actor {
            return Err(ExecError::NotEnabled { actor: event.actor });
        }
        let mut next = self.clone();
        if !next.actors[event.actor.index()].bag.remove(&msg) {
            return Err(ExecError::NotEnabled { actor: event.actor });
        }
        let was_aware = next.actors[event.actor.index()].vars.is_aware();
        {
            let mut cx = Context {
                world,
                state: &mut next,
                me: event.actor,
            };
            match (msg.server, msg.payload) {
                (Server::AlertAccident, _) => scheme.alert_accident(&mut cx)?,
                (Server::Receive, Payload::Warning { hop, origin }) => {
                    scheme.receive(&mut cx, hop, origin)?
                }
                (Server::FinishWait, payload) => scheme.finish_wait(&mut cx, payload)?,
                (Server::Move, _) => vanet::step_move(&mut cx)?,
                (Server::Stop, _) => cx.stop(),
                (server, _) => {
                    return Err(ExecError::MalformedMessage {
                        actor: event.actor,
                        server,
                    })
                }
            }
        }
        if !was_aware && next.actors[event.actor.index()].vars.is_aware() {
            next.monitor.last_informed = Some(next.monitor.elapsed);
        }
        if let Some(t) = next.next_arrival() {
            debug_assert!(t >= next.now);
            next.monitor.elapsed += t - next.now;
            next.now = t;
        }
        Ok(next)
    }

    /// Translates `now` and every pending arrival by `k` time units.
    pub fn shifted(&self, k: Time) -> Self {
        let mut s = self.clone();
        s.now += k;
        for a in &mut s.actors {
            for m in &mut a.bag.entries {
                m.arrival += k;
            }
        }
        s
    }

    /// Shifts time so that `now == 0`.
    pub fn normalized(&self) -> Self {
        let mut s = self.clone();
        s.normalize();
        s
    }

    pub fn normalize(&mut self) {
        let delta = self.now;
        if delta == 0 {
            return;
        }
        self.now = 0;
        for a in &mut self.actors {
            for m in &mut a.bag.entries {
                m.arrival -= delta;
            }
            a.vars.shift_time_back(delta);
        }
    }

    /// Injective byte encoding of the state. Bags are already held in
    /// canonical order, so insertion order never shows up in the key.
    pub fn canonical_key(&self) -> Vec<u8> {
        let size: usize = self.actors.iter().map(|a| 40 + 40 * a.bag.len()).sum();
        let mut out = Vec::with_capacity(32 + size);
        self.encode_key(&mut out);
        out
    }

    /// Appends the canonical key to `out`.
    pub fn encode_key(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.now.to_le_bytes());
        out.extend_from_slice(&self.monitor.elapsed.to_le_bytes());
        out.extend_from_slice(&self.monitor.max_hop.to_le_bytes());
        match self.monitor.last_informed {
            None => out.push(0),
            Some(t) => {
                out.push(1);
                out.extend_from_slice(&t.to_le_bytes());
            }
        }
        for a in &self.actors {
            encode_pos(a.pos, out);
            out.push(a.stopped as u8);
            a.vars.encode(out);
            out.extend_from_slice(&(a.bag.len() as u32).to_le_bytes());
            for m in a.bag.entries() {
                out.extend_from_slice(&m.arrival.to_le_bytes());
                out.push(m.server.tag());
                out.extend_from_slice(&m.sender.0.to_le_bytes());
                m.payload.encode(out);
            }
        }
    }

    /// Set of aware vehicles.
    pub fn informed(&self) -> Vec<ActorId> {
        self.actors
            .iter()
            .enumerate()
            .filter(|(_, a)| a.vars.is_aware())
            .map(|(i, _)| ActorId(i as u16))
            .collect()
    }
}

fn encode_pos(p: Position, out: &mut Vec<u8>) {
    out.extend_from_slice(&p.x.to_le_bytes());
    out.extend_from_slice(&p.y.to_le_bytes());
}
