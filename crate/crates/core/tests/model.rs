use std::collections::BTreeMap;

use ariel_core::model::codes::{self, source};
use ariel_core::model::{
    AlphaCounter, Assessment, Atom, Database, DbDelta, EntityRef, GroupDescriptor, Judgment, Lifecycle, ModelError, Notification, RemoveSelector, Status,
    TaskDescriptor, Topology,
};
use proptest::prelude::*;

fn topology() -> Topology {
    let mut t = Topology::new(3);
    for (id, node) in [(1, 0), (2, 1), (3, 2), (4, 2)] {
        t.add_task(TaskDescriptor { unique_id: id, name: format!("T{id}"), node, local_id: id }).unwrap();
    }
    t.add_group(GroupDescriptor { unique_id: 10, name: "L10".into(), members: vec![1, 2, 3] }).unwrap();
    t
}

fn db() -> Database {
    let mut alpha = BTreeMap::new();
    alpha.insert(1, (3.0, 0.4));
    Database::new(topology(), &alpha).unwrap()
}

fn err(task: u32, label: u64) -> Notification {
    Notification::error(codes::FAULT_DETECTED, EntityRef::task(task), source::WATCHDOG, label, label)
}

#[test]
fn topology_rejects_collisions() {
    let mut t = topology();
    let dup = TaskDescriptor { unique_id: 10, name: "x".into(), node: 0, local_id: 99 };
    assert_eq!(t.add_task(dup), Err(ModelError::DuplicateId(10)));
    let local = TaskDescriptor { unique_id: 20, name: "x".into(), node: 0, local_id: 1 };
    assert!(matches!(t.add_task(local), Err(ModelError::DuplicateLocalId { .. })));
    let far = TaskDescriptor { unique_id: 21, name: "x".into(), node: 3, local_id: 1 };
    assert!(matches!(t.add_task(far), Err(ModelError::NodeOutOfRange { .. })));
    assert_eq!(t.add_group(GroupDescriptor { unique_id: 30, name: "g".into(), members: vec![] }), Err(ModelError::EmptyGroup(30)));
    assert!(t.add_group(GroupDescriptor { unique_id: 31, name: "g".into(), members: vec![1, 1] }).is_err());
    assert!(t.add_group(GroupDescriptor { unique_id: 32, name: "g".into(), members: vec![77] }).is_err());
    assert_eq!(t.host_of(4), Some(2));
    assert_eq!(t.member_tasks(EntityRef::group(10)), vec![1, 2, 3]);
}

#[test]
fn alpha_crosses_threshold_after_three_consecutive_faults() {
    let mut a = AlphaCounter::new(3.0, 0.4).unwrap();
    assert_eq!(a.update(Judgment::Faulty, 1).unwrap(), Assessment::Transient);
    assert_eq!(a.update(Judgment::Faulty, 2).unwrap(), Assessment::Transient);
    assert_eq!(a.update(Judgment::Faulty, 3).unwrap(), Assessment::PermanentOrIntermittent);
    assert_eq!(a.value, 3.0);
}

#[test]
fn alpha_gap_counts_as_clean_judgments() {
    let mut a = AlphaCounter::new(3.0, 0.5).unwrap();
    a.update(Judgment::Faulty, 1).unwrap();
    a.update(Judgment::Faulty, 4).unwrap();
    assert!((a.value - (0.25 + 1.0)).abs() < 1e-12);
    assert!(matches!(a.update(Judgment::Faulty, 4), Err(ModelError::StaleLabel { .. })));
}

#[test]
fn alpha_rejects_bad_parameters() {
    assert!(AlphaCounter::new(0.0, 0.5).is_err());
    assert!(AlphaCounter::new(3.0, 1.5).is_err());
    assert!(AlphaCounter::new(f64::NAN, 0.5).is_err());
}

#[test]
fn error_notifications_mark_faulty() {
    let mut d = db();
    assert!(d.raise_event(err(2, 1)).unwrap());
    assert!(!d.raise_event(Notification::phase(EntityRef::task(2), 7, source::USER, 1, 0)).unwrap());
    assert!(d.query_atom(&Atom::Status(Status::Faulty, EntityRef::task(2))).unwrap().value == 1);
    assert_eq!(d.query_atom(&Atom::Phase(EntityRef::task(2))).unwrap().value, 7);
    assert_eq!(d.query_atom(&Atom::Errn(EntityRef::group(10))).unwrap().value, 1);
    assert_eq!(d.query_atom(&Atom::Errt(EntityRef::task(2))).unwrap().value, i64::from(codes::FAULT_DETECTED));
    assert!(matches!(d.raise_event(err(2, 1)), Err(ModelError::StaleLabel { .. })));
    assert!(d.raise_event(Notification::error(codes::FAULT_DETECTED, EntityRef::task(2), source::VOTER, 1, 5)).is_ok());
    assert!(matches!(d.query_atom(&Atom::Phase(EntityRef::node(1))), Err(ModelError::PhaseOnNonTask(_))));
    assert!(d.raise_event(err(99, 1)).is_err());
}

#[test]
fn group_status_lists_matching_members() {
    let mut d = db();
    d.raise_event(err(3, 1)).unwrap();
    let v = d.query_atom(&Atom::Status(Status::Faulty, EntityRef::group(10))).unwrap();
    assert_eq!(v.value, 1);
    assert_eq!(v.matches, vec![EntityRef::task(3)]);
    assert_eq!(v.universe.len(), 3);
}

#[test]
fn lifecycle_bookkeeping() {
    let mut d = db();
    d.raise_event(err(1, 1)).unwrap();
    d.apply_lifecycle(Lifecycle::Restart, EntityRef::task(1)).unwrap();
    let st = d.state(EntityRef::task(1)).unwrap();
    assert_eq!(st.restart_count, 1);
    assert!(st.reintegrated && st.running);
    d.apply_lifecycle(Lifecycle::Isolate, EntityRef::group(10)).unwrap();
    assert!(d.state(EntityRef::task(2)).unwrap().isolated);
    d.mark_dormant(4).unwrap();
    assert!(!d.state(EntityRef::task(4)).unwrap().started);
    assert!(!d.apply_delta(&DbDelta::Lifecycle(Lifecycle::Start, EntityRef::task(4))).unwrap());
    assert!(d.state(EntityRef::task(4)).unwrap().started);
}

#[test]
fn deadlock_needs_both_partners() {
    let mut d = db();
    let mut a = Notification::error(codes::DEADLOCK, EntityRef::task(1), source::USER, 1, 0);
    a.args = vec![2];
    d.raise_event(a).unwrap();
    let q = Atom::Deadlocked(EntityRef::task(1), EntityRef::task(2));
    assert_eq!(d.query_atom(&q).unwrap().value, 0);
    let mut b = Notification::error(codes::DEADLOCK, EntityRef::task(2), source::USER, 1, 0);
    b.args = vec![1];
    d.raise_event(b).unwrap();
    assert_eq!(d.query_atom(&q).unwrap().value, 1);
}

#[test]
fn remove_any_keeps_alpha() {
    let mut d = db();
    d.raise_event(err(1, 1)).unwrap();
    d.remove(RemoveSelector::Any, EntityRef::task(1)).unwrap();
    let st = d.state(EntityRef::task(1)).unwrap();
    assert!(!st.faulty());
    assert_eq!(st.alpha.as_ref().unwrap().value, 1.0);
}

#[test]
fn status_names_round_trip() {
    for s in Status::ALL {
        assert_eq!(Status::from_name(s.name()), Some(s));
        assert_eq!(Status::from_code(s.code()), Some(s));
    }
}

fn judgment() -> impl Strategy<Value = Judgment> {
    prop_oneof![Just(Judgment::Ok), Just(Judgment::Faulty)]
}

proptest! {
    #[test]
    fn gap_update_equals_explicit_replay(steps in prop::collection::vec((judgment(), 1u64..6), 1..60), k in 0.0f64..=1.0) {
        let mut gapped = AlphaCounter::new(3.0, k).unwrap();
        let mut explicit = AlphaCounter::new(3.0, k).unwrap();
        let mut label = 0;
        for (j, gap) in steps {
            label += gap;
            gapped.update(j, label).unwrap();
            for _ in 1..gap {
                explicit.apply(Judgment::Ok);
            }
            explicit.apply(j);
            prop_assert!((gapped.value - explicit.value).abs() <= 1e-12 * explicit.value.max(1.0));
        }
    }

    #[test]
    fn persistent_fault_diverges(threshold in 0.5f64..20.0, k in 0.0f64..=1.0) {
        let mut a = AlphaCounter::new(threshold, k).unwrap();
        let limit = (10.0 * threshold).ceil() as u64;
        let mut crossed = false;
        for l in 1..=limit {
            a.update(Judgment::Faulty, l).unwrap();
            prop_assert_eq!(a.value, l as f64);
            crossed |= a.assessment() == Assessment::PermanentOrIntermittent;
        }
        prop_assert!(crossed);
    }

    #[test]
    fn success_streak_decays(start in 1u32..50, k in 0.0f64..0.99, eps in 1e-9f64..1e-1) {
        let mut a = AlphaCounter::new(1e9, k).unwrap();
        for _ in 0..start {
            a.apply(Judgment::Faulty);
        }
        let mut n = 0;
        while a.value >= eps {
            let before = a.value;
            a.apply(Judgment::Ok);
            prop_assert!(a.value <= before);
            n += 1;
            prop_assert!(n < 100_000);
        }
    }

    #[test]
    fn burst_never_regresses(prefix in prop::collection::vec(judgment(), 0..20), burst in 1usize..15) {
        let mut a = AlphaCounter::new(3.0, 0.4).unwrap();
        for j in prefix {
            a.apply(j);
        }
        let mut seen_permanent = false;
        for _ in 0..burst {
            a.apply(Judgment::Faulty);
            let s = a.assessment();
            prop_assert!(!(seen_permanent && s == Assessment::Transient));
            seen_permanent |= s == Assessment::PermanentOrIntermittent;
        }
    }

    #[test]
    fn remove_any_restores_clean_state(task in 1u32..5, label in 1u64..100, condition in 100i32..108) {
        let mut d = db();
        let e = EntityRef::task(task);
        let faulty = d.query_atom(&Atom::Status(Status::Faulty, e)).unwrap();
        let errn = d.query_atom(&Atom::Errn(e)).unwrap();
        d.raise_event(Notification::error(condition, e, source::INJECTOR, label, 0)).unwrap();
        prop_assert_eq!(d.query_atom(&Atom::Errn(e)).unwrap().value, errn.value + 1);
        d.remove(RemoveSelector::Any, e).unwrap();
        prop_assert_eq!(d.query_atom(&Atom::Status(Status::Faulty, e)).unwrap(), faulty);
        prop_assert_eq!(d.query_atom(&Atom::Errn(e)).unwrap(), errn);
    }
}
