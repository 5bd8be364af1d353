use std::fs;
use std::path::Path;

use ariel_core::backbone::{elect, BackboneTimeouts, IatGuard, PeerStatus};
use ariel_core::lang::compile;
use ariel_core::rcode::Role;
use ariel_core::simnet::{Scenario, Timed, World};
use proptest::prelude::*;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn ams_world(sc: Scenario) -> World {
    let loader = |n: &str| fs::read_to_string(Path::new(FIXTURES).join(n)).ok();
    let src = fs::read_to_string(Path::new(FIXTURES).join("ams.ariel")).unwrap();
    let out = compile(&src, "ams.ariel", &loader, false);
    World::new(out.program.unwrap(), out.bundle.unwrap(), sc).unwrap()
}

#[test]
fn highest_alive_node_manages() {
    use PeerStatus::*;
    let view = [Alive, Alive, Alive, Alive];
    assert_eq!(elect(&view, 3), Role::Manager);
    assert_eq!(elect(&view, 2), Role::Assistant);
    let view = [Alive, Alive, Suspected, Removed];
    assert_eq!(elect(&view, 1), Role::Manager);
    assert_eq!(elect(&view, 0), Role::Assistant);
    assert_eq!(elect(&[Removed, Removed], 0), Role::Manager);
    assert_eq!(elect(&[Alive, ComponentDown], 0), Role::Manager);
}

#[test]
fn iat_guard_trips_on_a_stuck_flag() {
    let mut g = IatGuard::new(2);
    let mut flag = false;
    assert!(!g.check(&mut flag));
    assert!(flag);
    flag = false;
    assert!(!g.check(&mut flag));
    assert!(g.check(&mut flag));
    assert!(g.check(&mut flag));
    assert_eq!((g.checks, g.trips), (4, 2));
}

#[test]
fn default_timeouts_are_ordered() {
    let t = BackboneTimeouts::default();
    assert!(t.validate().is_ok());
    assert!(BackboneTimeouts { taia_recv: t.taia_send, ..t }.validate().is_err());
    assert!(BackboneTimeouts { mia_recv: 1, ..t }.validate().is_err());
    assert!(BackboneTimeouts { ia_set: t.ia_clear, ..t }.validate().is_err());
    assert!(BackboneTimeouts { teif: 0, ..t }.validate().is_err());
}

#[test]
fn stuck_component_is_reported_by_its_guard() {
    let sc = Scenario { seed: 4, until: 10_000_000, events: vec![(3_000_000, Timed::CrashBackbone(2))], ..Scenario::default() };
    let mut w = ams_world(sc);
    w.run();
    let trips: Vec<_> = w.trace().iter().filter(|e| e.event == "trip").collect();
    assert!(!trips.is_empty());
    assert!(trips.iter().all(|e| e.node == Some(2) && e.time > 3_000_000));
    assert!(w.node_up(2));
    let v = w.view(3).unwrap();
    assert_ne!(v[2], PeerStatus::Alive);
    assert_eq!(w.managers().into_iter().filter(|&n| n != 2).collect::<Vec<_>>(), vec![0]);
}

#[test]
fn assistant_crash_is_detected_by_the_manager() {
    let sc = Scenario { seed: 8, until: 10_000_000, events: vec![(2_000_000, Timed::CrashNode(1))], ..Scenario::default() };
    let mut w = ams_world(sc);
    w.run();
    let removed = w.trace().iter().find(|e| e.event == "remove" && e.node == Some(0)).unwrap();
    assert_eq!(removed.details, "node 1 crashed");
    let t = BackboneTimeouts::default();
    assert!(removed.time - 2_000_000 <= t.taia_recv + t.teif + 3_000);
    assert_eq!(w.managers(), vec![0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_single_crash_leaves_one_manager(seed in 0u64..1000, victim in 0u32..4, at in 1_000_000u64..4_000_000) {
        let sc = Scenario { seed, until: 12_000_000, events: vec![(at, Timed::CrashNode(victim))], ..Scenario::default() };
        let mut w = ams_world(sc);
        w.run();
        let live: Vec<u32> = w.managers().into_iter().filter(|&n| w.node_up(n)).collect();
        let want = if victim == 0 { 3 } else { 0 };
        prop_assert_eq!(live, vec![want]);
        prop_assert_eq!(w.trace().iter().filter(|e| e.event == "suspect").filter(|e| !e.details.ends_with(&victim.to_string())).count(), 0);
    }

    #[test]
    fn elected_manager_is_the_top_alive(bits in prop::collection::vec(any::<bool>(), 1..10)) {
        let view: Vec<PeerStatus> = bits.iter().map(|&b| if b { PeerStatus::Alive } else { PeerStatus::Removed }).collect();
        let managers: Vec<u32> = (0..view.len() as u32).filter(|&n| view[n as usize] == PeerStatus::Alive && elect(&view, n) == Role::Manager).collect();
        let top = (0..view.len() as u32).rev().find(|&n| view[n as usize] == PeerStatus::Alive);
        prop_assert_eq!(managers, top.into_iter().collect::<Vec<_>>());
    }
}
