use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ariel_core::lang::compile;
use ariel_core::model::codes::{self, source};
use ariel_core::model::{Database, EntityRef, Notification, RemoveSelector};
use ariel_core::rcode::{execute, ActionRequest, ActionVerb, EntityOperand, Opcode, Outcome, RcodeProgram, Triplet, Vm, VmError};
use ariel_core::lang::ConfigBundle;
use proptest::prelude::*;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn build(name: &str) -> (RcodeProgram, ConfigBundle) {
    let loader = |n: &str| fs::read_to_string(Path::new(FIXTURES).join(n)).ok();
    let src = fs::read_to_string(Path::new(FIXTURES).join(name)).unwrap();
    let out = compile(&src, name, &loader, false);
    (out.program.unwrap(), out.bundle.unwrap())
}

fn fresh(b: &ConfigBundle) -> Database {
    Database::new(b.topology.clone(), &b.alpha).unwrap()
}

fn run_collect(p: &RcodeProgram, db: &Database) -> (Vec<ActionRequest>, ariel_core::rcode::ActionLog) {
    let mut seen = Vec::new();
    let mut sink = |r: &ActionRequest| seen.push(r.clone());
    let log = execute(p, db, &mut sink).unwrap();
    (seen, log)
}

fn send(value: i64, task: u32) -> ActionRequest {
    ActionRequest { verb: ActionVerb::Send { value }, targets: vec![EntityRef::task(task)] }
}

#[test]
fn failed_voter_triggers_the_reference_actions() {
    let (p, b) = build("voter.ariel");
    let mut db = fresh(&b);
    db.raise_event(Notification::phase(EntityRef::task(0), 9999, source::USER, 1, 0)).unwrap();
    let (seen, log) = run_collect(&p, &db);
    let want = vec![
        ActionRequest { verb: ActionVerb::Stop, targets: vec![EntityRef::task(0)] },
        send(18, 3),
        send(0, 3),
        send(3, 1),
        send(3, 2),
    ];
    assert_eq!(log.actions, want);
    assert_eq!(seen, want);
    assert_eq!(log.outcome, Outcome::Halted);
    let texts: Vec<String> = log.trace.iter().map(|t| t.to_string()).collect();
    assert!(texts.contains(&"5\tSTORE-PHASE: stored phase of task 0, i.e., 9999.".to_string()), "{texts:?}");
    assert!(texts.iter().any(|t| t.starts_with("7\tConditional GOTO, unfulfilled")));
}

#[test]
fn false_guard_emits_nothing() {
    let (p, b) = build("voter.ariel");
    let mut db = fresh(&b);
    db.raise_event(Notification::phase(EntityRef::task(0), 3, source::USER, 1, 0)).unwrap();
    let (seen, log) = run_collect(&p, &db);
    assert!(seen.is_empty());
    assert!(log.actions.is_empty());
    assert!(log.trace.iter().any(|t| t.text == "Conditional GOTO, fulfilled, 17."));
}

#[test]
fn transient_branch_selection() {
    let (p, b) = build("tmr_alpha.ariel");
    let mut db = fresh(&b);
    db.raise_event(Notification::error(codes::VOTE_MINORITY, EntityRef::task(0), source::VOTER, 1, 0)).unwrap();
    let (_, log) = run_collect(&p, &db);
    assert_eq!(log.actions[0].verb, ActionVerb::Restart);
    for l in 2..=3 {
        db.raise_event(Notification::error(codes::VOTE_MINORITY, EntityRef::task(0), source::VOTER, l, 0)).unwrap();
    }
    let (_, log) = run_collect(&p, &db);
    assert_eq!(log.actions[0].verb, ActionVerb::Stop);
    assert_eq!(log.actions[1], send(10, 3));
}

#[test]
fn group_operands_expand_to_matches() {
    let (p, b) = build("elif_groups.ariel");
    let mut db = fresh(&b);
    db.raise_event(Notification::error(codes::FAULT_DETECTED, EntityRef::task(2), source::USER, 1, 0)).unwrap();
    db.apply_lifecycle(ariel_core::model::Lifecycle::Stop, EntityRef::task(4)).unwrap();
    let (_, log) = run_collect(&p, &db);
    assert_eq!(log.actions[0], ActionRequest { verb: ActionVerb::Isolate, targets: vec![EntityRef::task(2)] });
    assert_eq!(log.actions[1].verb, ActionVerb::Start);
    assert_eq!(log.actions[2], ActionRequest { verb: ActionVerb::Remove(RemoveSelector::Any), targets: vec![EntityRef::group(10)] });
    assert_eq!(log.actions.len(), 3);
}

#[test]
fn else_branch_runs_when_no_guard_holds() {
    let (p, b) = build("elif_groups.ariel");
    let mut db = fresh(&b);
    let mut a = Notification::error(codes::DEADLOCK, EntityRef::task(1), source::USER, 1, 0);
    a.args = vec![2];
    db.raise_event(a).unwrap();
    let mut c = Notification::error(codes::DEADLOCK, EntityRef::task(2), source::USER, 1, 0);
    c.args = vec![1];
    db.raise_event(c).unwrap();
    let mut sink = |_: &ActionRequest| {};
    let first = execute(&p, &db, &mut sink).unwrap();
    assert_eq!(first.actions[0].verb, ActionVerb::Restart);

    let mut quiet = fresh(&b);
    let mut vm = Vm::new();
    let log = vm.run(&p, &quiet, &mut sink).unwrap();
    assert_eq!(log.outcome, Outcome::Halted);
    assert_eq!(log.actions[0], ActionRequest { verb: ActionVerb::Reboot, targets: vec![EntityRef::node(2)] });
    assert_eq!(log.actions[1].verb, ActionVerb::Send { value: 5 });
    quiet.apply_lifecycle(ariel_core::model::Lifecycle::Restart, EntityRef::task(1)).unwrap();
    let log = execute(&p, &quiet, &mut sink).unwrap();
    assert_eq!(log.actions.last().unwrap().verb, ActionVerb::Enable);
}

#[test]
fn pause_suspends_and_resumes() {
    let (opn1, opn2) = EntityOperand::literal(EntityRef::task(1)).encode();
    let p = RcodeProgram {
        triplets: vec![
            Triplet::new(Opcode::Pause, 40, -1),
            Triplet::new(Opcode::Push, 7, -1),
            Triplet::new(Opcode::Send, opn1, opn2),
            Triplet::halt(),
        ],
    };
    let (_, b) = build("elif_groups.ariel");
    let db = fresh(&b);
    let mut sink = |_: &ActionRequest| {};
    let mut vm = Vm::new();
    let first = vm.run(&p, &db, &mut sink).unwrap();
    assert_eq!(first.outcome, Outcome::Paused { ticks: 40 });
    assert!(first.actions.iter().all(|a| matches!(a.verb, ActionVerb::Pause { .. })));
    let second = vm.run(&p, &db, &mut sink).unwrap();
    assert_eq!(second.outcome, Outcome::Halted);
    assert_eq!(second.actions.last().unwrap().verb, ActionVerb::Send { value: 7 });
}

#[test]
fn malformed_programs_fail_cleanly() {
    let (_, b) = build("voter.ariel");
    let db = fresh(&b);
    let mut sink = |_: &ActionRequest| {};
    let no_halt = RcodeProgram { triplets: vec![Triplet::new(Opcode::If, -1, -1)] };
    assert_eq!(execute(&no_halt, &db, &mut sink).unwrap_err(), VmError::NoHalt);
    let underflow = RcodeProgram { triplets: vec![Triplet::new(Opcode::Compare, 1, 0), Triplet::halt()] };
    assert!(matches!(execute(&underflow, &db, &mut sink), Err(VmError::StackUnderflow { .. })));
    let jump = RcodeProgram { triplets: vec![Triplet::new(Opcode::Push, 0, -1), Triplet::new(Opcode::False, 99, -1), Triplet::halt()] };
    assert!(matches!(execute(&jump, &db, &mut sink), Err(VmError::BadJump { .. })));
    let unbalanced = RcodeProgram { triplets: vec![Triplet::new(Opcode::Fi, -1, -1), Triplet::halt()] };
    assert!(matches!(execute(&unbalanced, &db, &mut sink), Err(VmError::Unbalanced { .. })));
    let unknown = RcodeProgram { triplets: vec![Triplet::new(Opcode::from_code(77), -1, -1), Triplet::halt()] };
    assert!(matches!(execute(&unknown, &db, &mut sink), Err(VmError::UnknownOpcode { .. })));
}

fn random_db(b: &ConfigBundle, events: &[(u32, i32, i64)]) -> Database {
    let mut db = fresh(b);
    let tasks: Vec<u32> = b.topology.tasks.keys().copied().collect();
    for (k, &(t, cond, phase)) in events.iter().enumerate() {
        let task = tasks[t as usize % tasks.len()];
        let n = if cond < 100 {
            Notification::phase(EntityRef::task(task), phase, source::USER, k as u64 + 1, k as u64)
        } else {
            Notification::error(cond, EntityRef::task(task), source::INJECTOR, k as u64 + 1, k as u64)
        };
        db.raise_event(n).unwrap();
    }
    db
}

fn event() -> impl Strategy<Value = (u32, i32, i64)> {
    (0u32..8, prop_oneof![Just(1), 100i32..108], prop_oneof![Just(9999i64), 0i64..4])
}

proptest! {
    #[test]
    fn execution_is_a_pure_function_of_the_snapshot(pick in 0usize..5, events in prop::collection::vec(event(), 0..12)) {
        let name = ["voter.ariel", "tmr_simple.ariel", "tmr_alpha.ariel", "tmr_spare.ariel", "elif_groups.ariel"][pick];
        let (p, b) = build(name);
        let db = random_db(&b, &events);
        let before = db.clone();
        let mut drop_all = |_: &ActionRequest| {};
        let mut vm = Vm::new();
        let mut a = vm.run(&p, &db, &mut drop_all).unwrap();
        while let Outcome::Paused { .. } = a.outcome {
            a = vm.run(&p, &db, &mut drop_all).unwrap();
        }
        let (seen, b2) = run_collect(&p, &db);
        prop_assert_eq!(&db, &before);
        if !b2.actions.iter().any(|x| matches!(x.verb, ActionVerb::Pause { .. })) {
            prop_assert_eq!(&a, &b2);
        }
        prop_assert_eq!(seen, b2.actions);
    }

    #[test]
    fn only_failed_versions_are_replaced(phases in prop::collection::vec(prop_oneof![Just(9999i64), 0i64..5], 3)) {
        let (p, b) = build("tmr_simple.ariel");
        let mut db = fresh(&b);
        for (t, &ph) in phases.iter().enumerate() {
            db.raise_event(Notification::phase(EntityRef::task(t as u32), ph, source::USER, 1, 0)).unwrap();
        }
        let (_, log) = run_collect(&p, &db);
        let stopped: Vec<u32> = log.actions.iter().filter(|a| a.verb == ActionVerb::Stop).map(|a| a.targets[0].id).collect();
        let failed: Vec<u32> = (0..3).filter(|&t| phases[t as usize] == 9999).collect();
        prop_assert_eq!(stopped, failed.clone());
        prop_assert_eq!(log.actions.len(), failed.len() * 5);
    }
}

#[test]
fn alpha_bundle_is_applied() {
    let (_, b) = build("tmr_alpha.ariel");
    let db = fresh(&b);
    assert!(db.state(EntityRef::task(0)).unwrap().alpha.is_some());
    assert!(db.state(EntityRef::task(1)).unwrap().alpha.is_none());
    let none: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    assert!(Database::new(b.topology.clone(), &none).is_ok());
}
