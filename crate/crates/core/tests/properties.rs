//! Checker-level properties on random small worlds.

use std::collections::BTreeSet;

mod common;

use proptest::prelude::*;

use common::{outcomes, HopRule};

use wmd_core::vanet::VehicleSpec;
use wmd_core::{
    check_coverage, explore, replay, ActorId, CThreshold, Counting, CountingParams, GlobalState,
    Kinematics, Limits, Position, RadioConfig, Scheme, Tlo, World,
};

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
        bag_capacity: 32,
    }
}

fn counting(c_threshold: CThreshold) -> Counting {
    Counting::new(CountingParams {
        c_threshold,
        threshold_waiting: 2,
    })
}

fn arb_points(max: usize) -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((0i64..8, 0i64..4), 1..=max)
}

fn arb_threshold() -> impl Strategy<Value = CThreshold> {
    prop_oneof![
        (1u32..4).prop_map(CThreshold::Finite),
        Just(CThreshold::Unbounded)
    ]
}

fn unreduced() -> Limits {
    Limits {
        reduce: false,
        ..Limits::default()
    }
}

/// Executes events picked by `choices` until quiescence, checking the hop
/// rule of every broadcast on the way.
fn walk_checking_hops<S: Scheme>(
    w: &World,
    scheme: &S,
    choices: &[usize],
    first_copy: bool,
) -> Result<GlobalState<S::Vars>, TestCaseError> {
    let mut rule = HopRule::new(w.len(), first_copy);
    let mut state = w.initial_state(scheme).unwrap();
    for i in 0.. {
        let events = state.enabled_events();
        if events.is_empty() {
            break;
        }
        let e = events[choices.get(i).copied().unwrap_or(0) % events.len()];
        let next = state.execute(w, scheme, &e).unwrap();
        rule.observe(&state, &e, &next)
            .map_err(TestCaseError::fail)?;
        state = next;
    }
    Ok(state)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn flood_informs_exactly_the_connected_component(points in arb_points(5), range in 1i64..5) {
        let w = world(&points, range);
        let space = explore(&w, &counting(CThreshold::Unbounded), &Limits::default(), 1).unwrap();
        let expected: BTreeSet<ActorId> = w.reachable_from_accident().iter().enumerate().filter(|(_, &r)| r).map(|(i, _)| ActorId(i as u16)).collect();
        prop_assert!(check_coverage(&space).full_coverage_always);
        for t in &space.terminals {
            prop_assert_eq!(&t.informed, &expected);
        }
    }

    #[test]
    fn counting_broadcast_hop_follows_first_copy(points in arb_points(5), range in 1i64..5, k in arb_threshold(), choices in prop::collection::vec(any::<usize>(), 0..64)) {
        let w = world(&points, range);
        walk_checking_hops(&w, &counting(k), &choices, true)?;
    }

    #[test]
    fn tlo_broadcast_hop_follows_largest_hop_heard(points in arb_points(5), range in 1i64..5, choices in prop::collection::vec(any::<usize>(), 0..64)) {
        let w = world(&points, range);
        walk_checking_hops(&w, &Tlo::new(2), &choices, false)?;
    }

    #[test]
    fn random_runs_end_in_explored_outcomes(points in arb_points(4), range in 1i64..5, k in arb_threshold(), choices in prop::collection::vec(any::<usize>(), 0..64)) {
        let w = world(&points, range);
        let scheme = counting(k);
        let last = walk_checking_hops(&w, &scheme, &choices, true)?;
        let outcome = (last.informed().into_iter().collect::<BTreeSet<_>>(), last.monitor.max_hop, last.monitor.last_informed.unwrap_or(0));
        for reduce in [false, true] {
            let space = explore(&w, &scheme, &Limits { reduce, ..Limits::default() }, 1).unwrap();
            prop_assert!(outcomes(&space.terminals).contains(&outcome));
        }
    }

    #[test]
    fn reduction_preserves_terminal_outcomes(points in arb_points(4), range in 1i64..5, k in arb_threshold()) {
        let w = world(&points, range);
        let full = explore(&w, &counting(k), &unreduced(), 1).unwrap();
        let reduced = explore(&w, &counting(k), &Limits::default(), 1).unwrap();
        prop_assert_eq!(outcomes(&full.terminals), outcomes(&reduced.terminals));
        prop_assert!(reduced.stats.states <= full.stats.states);
        let full = explore(&w, &Tlo::new(2), &unreduced(), 1).unwrap();
        let reduced = explore(&w, &Tlo::new(2), &Limits::default(), 1).unwrap();
        prop_assert_eq!(outcomes(&full.terminals), outcomes(&reduced.terminals));
    }

    #[test]
    fn witnesses_replay_to_their_outcome(points in arb_points(4), range in 1i64..5, k in arb_threshold(), reduce in any::<bool>()) {
        let w = world(&points, range);
        let scheme = counting(k);
        let space = explore(&w, &scheme, &Limits { reduce, ..Limits::default() }, 1).unwrap();
        for t in &space.terminals {
            let states = replay(&w, &scheme, &t.witness).unwrap();
            let last = states.last().unwrap();
            prop_assert!(last.is_quiescent());
            prop_assert_eq!(&last.informed().into_iter().collect::<BTreeSet<_>>(), &t.informed);
            prop_assert_eq!(last.monitor.max_hop, t.max_hop);
        }
        let report = check_coverage(&space);
        prop_assert_eq!(report.starvation_witness.is_some(), !report.full_coverage_always);
        if let (Some(best), Some(worst)) = (report.hop_best, report.hop_worst) {
            prop_assert!(best <= worst);
        }
    }

    #[test]
    fn replaying_a_trace_is_deterministic(points in arb_points(5), range in 1i64..5) {
        let w = world(&points, range);
        let space = explore(&w, &Tlo::new(2), &Limits::default(), 1).unwrap();
        for t in &space.terminals {
            let a: Vec<Vec<u8>> = replay(&w, &Tlo::new(2), &t.witness).unwrap().iter().map(|s| s.canonical_key()).collect();
            let b: Vec<Vec<u8>> = replay(&w, &Tlo::new(2), &t.witness).unwrap().iter().map(|s| s.canonical_key()).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn worker_count_does_not_change_results(points in arb_points(5), range in 1i64..5, k in arb_threshold()) {
        let w = world(&points, range);
        let one = check_coverage(&explore(&w, &counting(k), &Limits::default(), 1).unwrap());
        let four = check_coverage(&explore(&w, &counting(k), &Limits::default(), 4).unwrap());
        prop_assert_eq!(one, four);
    }

    #[test]
    fn enlarging_range_never_shrinks_the_expected_set(points in arb_points(8), range in 1i64..6) {
        let small = world(&points, range).reachable_from_accident();
        let large = world(&points, range + 1).reachable_from_accident();
        for (s, l) in small.iter().zip(&large) {
            prop_assert!(!s || *l);
        }
    }
}

#[test]
fn threshold_one_with_an_extra_copy_suppresses() {
    // B hears A and C before its watchdog; with K = 1 it never forwards to D
    let w = world(&[(0, 0), (2, 0), (1, 1), (5, 0)], 4);
    let space = explore(&w, &counting(CThreshold::Finite(1)), &unreduced(), 1).unwrap();
    assert!(space
        .terminals
        .iter()
        .any(|t| !t.informed.contains(&ActorId(3))));
}

#[test]
fn disconnected_vehicle_is_not_reported_as_starved() {
    let w = world(&[(0, 0), (2, 0), (40, 40)], 4);
    let report = check_coverage(
        &explore(&w, &counting(CThreshold::Finite(2)), &Limits::default(), 1).unwrap(),
    );
    assert!(report.full_coverage_always);
    assert!(report.starved.is_empty());
}
