//! Independent enumerator of interleavings and the hop-rule checker shared
//! by the integration tests.
//!
//! The enumerator walks the interleaving tree depth first. It never
//! normalizes time, never builds canonical keys and never reduces; it only
//! caches the outcome set of a subtree, keyed on the raw state, which is
//! exactly the union the plain tree walk would compute below that state.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::rc::Rc;

use wmd_core::checker::TerminalOutcome;
use wmd_core::{
    ActorId, Event, ExecError, GlobalState, Payload, Scheme, SchemeVars, Server, Time, World,
};

pub type Outcome = (BTreeSet<ActorId>, u32, Time);
pub type Outcomes = BTreeSet<Outcome>;

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn is_terminal<V: SchemeVars>(state: &GlobalState<V>) -> bool {
    state
        .enabled_events()
        .iter()
        .all(|e| e.message.server == Server::Move)
}

pub fn outcome<V: SchemeVars>(state: &GlobalState<V>) -> Outcome {
    (
        state.informed().into_iter().collect(),
        state.monitor.max_hop,
        state.monitor.last_informed.unwrap_or(0),
    )
}

pub fn outcomes(terminals: &[TerminalOutcome]) -> Outcomes {
    terminals
        .iter()
        .map(|t| (t.informed.clone(), t.max_hop, t.completion_time))
        .collect()
}

/// Terminal outcomes of every path, enumerated one path at a time. `None`
/// once more than `budget` paths have been walked.
pub fn tree_walk<S: Scheme>(
    world: &World,
    scheme: &S,
    budget: u64,
) -> Option<Result<Outcomes, ExecError>> {
    fn walk<S: Scheme>(
        world: &World,
        scheme: &S,
        state: GlobalState<S::Vars>,
        out: &mut Outcomes,
        budget: &mut u64,
    ) -> Option<Result<(), ExecError>> {
        if is_terminal(&state) {
            *budget = budget.checked_sub(1)?;
            out.insert(outcome(&state));
            return Some(Ok(()));
        }
        for e in state.enabled_events() {
            match state.execute(world, scheme, &e) {
                Ok(next) => {
                    if let Err(err) = walk(world, scheme, next, out, budget)? {
                        return Some(Err(err));
                    }
                }
                Err(err) => return Some(Err(err)),
            }
        }
        Some(Ok(()))
    }
    let init = match world.initial_state(scheme) {
        Ok(s) => s,
        Err(e) => return Some(Err(e)),
    };
    let mut out = Outcomes::new();
    let mut budget = budget;
    walk(world, scheme, init, &mut out, &mut budget).map(|r| r.map(|()| out))
}

/// Terminal outcomes of every path, with subtree results cached on the raw
/// state. Fails if any path hits an execution error.
pub fn brute_force<S: Scheme>(world: &World, scheme: &S) -> Result<Outcomes, ExecError> {
    fn walk<S: Scheme>(
        world: &World,
        scheme: &S,
        state: GlobalState<S::Vars>,
        memo: &mut HashMap<GlobalState<S::Vars>, Rc<Outcomes>>,
    ) -> Result<Rc<Outcomes>, ExecError> {
        if let Some(known) = memo.get(&state) {
            return Ok(known.clone());
        }
        let result = if is_terminal(&state) {
            Rc::new(Outcomes::from([outcome(&state)]))
        } else {
            let mut out = Outcomes::new();
            for e in state.enabled_events() {
                out.extend(
                    walk(world, scheme, state.execute(world, scheme, &e)?, memo)?
                        .iter()
                        .cloned(),
                );
            }
            Rc::new(out)
        };
        memo.insert(state, result.clone());
        Ok(result)
    }
    let mut memo = HashMap::new();
    let out = walk(world, scheme, world.initial_state(scheme)?, &mut memo)?;
    Ok((*out).clone())
}

/// Checks that every broadcast carries the hop the scheme promises: one more
/// than the first copy heard (`first_copy`, counting) or than the largest
/// hop heard (TLO). The accident vehicle starts at hop 1.
pub struct HopRule {
    first_copy: bool,
    first: Vec<Option<u32>>,
    largest: Vec<u32>,
}

impl HopRule {
    pub fn new(vehicles: usize, first_copy: bool) -> Self {
        HopRule {
            first_copy,
            first: vec![None; vehicles],
            largest: vec![0; vehicles],
        }
    }

    pub fn observe<V: SchemeVars>(
        &mut self,
        before: &GlobalState<V>,
        e: &Event,
        after: &GlobalState<V>,
    ) -> Result<(), String> {
        if after.now < before.now {
            return Err(format!(
                "time went from {} back to {}",
                before.now, after.now
            ));
        }
        let a = e.actor.index();
        if let (Server::Receive, Payload::Warning { hop, .. }) =
            (e.message.server, e.message.payload)
        {
            self.first[a].get_or_insert(hop);
            self.largest[a] = self.largest[a].max(hop);
        }
        let sent = |s: &GlobalState<V>| -> Vec<u32> {
            s.actors
                .iter()
                .flat_map(|x| x.bag.entries())
                .filter(|m| m.server == Server::Receive && m.sender == e.actor)
                .filter_map(|m| match m.payload {
                    Payload::Warning { hop, .. } => Some(hop),
                    _ => None,
                })
                .collect()
        };
        // every broadcast reaches its sender, so it shows up as a new copy from `a`
        let consumed =
            (e.message.server == Server::Receive && e.message.sender == e.actor) as usize;
        let (old, new) = (sent(before), sent(after));
        if new.len() + consumed <= old.len() {
            return Ok(());
        }
        let hop = *new.iter().max().expect("broadcast copies");
        let expected = if e.message.server == Server::AlertAccident {
            Some(1)
        } else if self.first_copy {
            self.first[a].map(|h| h + 1)
        } else {
            Some(self.largest[a] + 1)
        };
        if Some(hop) == expected {
            Ok(())
        } else {
            Err(format!(
                "vehicle {} broadcast hop {hop}, expected {expected:?}",
                e.actor
            ))
        }
    }
}
