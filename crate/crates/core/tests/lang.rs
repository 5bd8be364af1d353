use std::fs;
use std::path::Path;

use ariel_core::lang::{self, compile, CompileOutput};
use ariel_core::rcode::{decode, encode, render_listing, Opcode, RcodeProgram};
use proptest::prelude::*;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn load(name: &str) -> String {
    fs::read_to_string(Path::new(FIXTURES).join(name)).unwrap()
}

fn compile_src(src: &str, name: &str) -> CompileOutput {
    let loader = |n: &str| fs::read_to_string(Path::new(FIXTURES).join(n)).ok();
    compile(src, name, &loader, false)
}

fn compile_fixture(name: &str) -> CompileOutput {
    compile_src(&load(name), name)
}

fn corpus() -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(FIXTURES)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".ariel"))
        .collect();
    names.sort();
    names
}

fn good_corpus() -> Vec<String> {
    corpus().into_iter().filter(|n| compile_fixture(n).ok()).collect()
}

#[test]
fn voter_script_compiles_to_reference_listing() {
    let out = compile_fixture("voter.ariel");
    assert_eq!(out.error_count(), 0, "{:?}", out.diagnostics);
    let p = out.program.unwrap();
    let names: Vec<String> = p.opcodes().into_iter().filter(|o| *o != Opcode::SetRole).map(|o| o.mnemonic()).collect();
    let mut want = vec!["IF", "STORE_PHASE", "COMPARE", "FALSE", "STOP"];
    for _ in 0..4 {
        want.extend(["PUSH", "SEND"]);
    }
    want.extend(["FI", "ANEW_OA_OBJECTS", "STOP"]);
    assert_eq!(names, want);
    assert!(p.triplets.last().unwrap().is_halt());
    let false_at = p.opcodes().iter().position(|o| *o == Opcode::False).unwrap();
    let fi_at = p.opcodes().iter().position(|o| *o == Opcode::Fi).unwrap();
    assert_eq!(p.triplets[false_at].opn1 as usize, fi_at);
    let pushes: Vec<i32> = p.triplets.iter().filter(|t| t.op == Opcode::Push).map(|t| t.opn1).collect();
    assert_eq!(pushes, vec![18, 0, 3, 3]);
}

#[test]
fn transcript_follows_session_format() {
    let loader = |n: &str| fs::read_to_string(Path::new(FIXTURES).join(n)).ok();
    let out = compile(&load("voter.ariel"), "test.ariel", &loader, true);
    assert_eq!(out.transcript[0], "Parsing file test.ariel...");
    assert!(out.transcript.iter().any(|l| l.contains("Including file 'my_definitions.h'")));
    assert!(out.transcript.iter().any(|l| l == "substituting {VOTER1} with 0"));
    assert!(out.transcript.iter().any(|l| l.trim() == "if-then-else: ok"));
    assert!(out.transcript.last().unwrap().starts_with("...done ("));
    let quiet = compile_fixture("voter.ariel");
    assert!(!quiet.transcript.iter().any(|l| l.starts_with("substituting")));
}

#[test]
fn phase_of_a_node_is_rejected() {
    let out = compile_fixture("phase_node.ariel");
    assert!(out.program.is_none());
    assert_eq!(out.error_count(), 1);
    assert!(out.diagnostics[0].message.contains("Can only use PHASE with tasks"));
    assert_eq!(out.diagnostics[0].line, 3);
    assert_eq!(out.transcript.last().unwrap(), "1 error detected --- output rejected.");
}

#[test]
fn stop_of_every_task_is_rejected() {
    let out = compile_fixture("stop_star.ariel");
    assert!(out.program.is_none());
    assert!(out.diagnostics.iter().any(|d| d.is_error() && d.message.contains("STOP TASK*")));
}

#[test]
fn other_semantic_errors() {
    let cases = [
        ("NPROCS = 2\nTASK 1 IS NODE 5, TASKID 1\n", "exceeds NPROCS"),
        ("NPROCS = 2\nDEFINE 0 = MANAGER\nDEFINE 1 = MANAGER\n", "more than one MANAGER"),
        ("NPROCS = 2\nTASK 1 IS NODE 0, TASKID 1\nTASK 2 IS NODE 0, TASKID 1\n", "used twice"),
        ("NPROCS = 2\nTASK 1 IS NODE 0, TASKID 1\nIF [ FAULTY T1 ]\nTHEN\n    REBOOT T1\nFI\n", "REBOOT with nodes"),
        ("NPROCS = 2\nTASK 1 IS NODE 0, TASKID 1\nIF [ FAULTY T1 ]\nTHEN\n    STOP T{NOPE}\nFI\n", "NOPE"),
        ("NPROCS = 2\nIF [ FAULTY T1\nTHEN\n    STOP T1\nFI\n", ""),
    ];
    for (src, needle) in cases {
        let out = compile_src(src, "case.ariel");
        assert!(out.program.is_none(), "accepted: {src}");
        assert!(out.diagnostics.iter().any(|d| d.is_error() && d.message.contains(needle)), "{src}: {:?}", out.diagnostics);
    }
}

#[test]
fn config_tables_cover_the_script() {
    let out = compile_fixture("tmr_spare.ariel");
    let b = out.bundle.unwrap();
    assert_eq!(b.topology.tasks.len(), 6);
    assert_eq!(b.nversions.len(), 1);
    let nv = &b.nversions[0];
    assert_eq!(nv.versions.iter().filter(|v| v.spare).count(), 1);
    assert_eq!(nv.on_success, Some(20));
    assert_eq!(nv.on_error, Some(30));
    assert!(out.diagnostics.iter().any(|d| !d.is_error() && d.message.contains("tmr_cmp")));
    let alpha = compile_fixture("tmr_alpha.ariel").bundle.unwrap();
    assert_eq!(alpha.alpha.get(&0), Some(&(3.0, 0.4)));
    let wd = compile_fixture("watchdog_and.ariel").bundle.unwrap();
    assert_eq!(wd.watchdogs.len(), 3);
    assert_eq!(wd.watchdogs[0].period, 100_000);
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    for name in good_corpus() {
        let a = compile_fixture(&name);
        let b = compile_fixture(&name);
        let fa = lang::artifact_files(a.program.as_ref().unwrap(), a.bundle.as_ref().unwrap(), "out").unwrap();
        let fb = lang::artifact_files(b.program.as_ref().unwrap(), b.bundle.as_ref().unwrap(), "out").unwrap();
        assert_eq!(fa, fb, "{name}");
        let files: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
        for want in ["out.rcode", "out.lst", "LogicalTable.csv", "TaskTable.csv", "Timeouts.csv", "Identifiers.csv", "AlphaTable.csv"] {
            assert!(files.contains(&want), "{name} lacks {want}");
        }
    }
}

#[test]
fn emit_writes_into_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = compile_fixture("voter.ariel");
    let msgs = lang::emit_artifacts(out.program.as_ref().unwrap(), out.bundle.as_ref().unwrap(), dir.path(), "test").unwrap();
    assert_eq!(msgs[0], "Output written in file test.rcode.");
    let bytes = fs::read(dir.path().join("test.rcode")).unwrap();
    assert_eq!(decode(&bytes).unwrap(), out.program.unwrap());
    assert!(fs::read_to_string(dir.path().join("test.lst")).unwrap().starts_with("line"));
}

#[test]
fn encoded_programs_round_trip() {
    for name in good_corpus() {
        let p = compile_fixture(&name).program.unwrap();
        assert_eq!(decode(&encode(&p)).unwrap(), p, "{name}");
    }
}

#[test]
fn decode_rejects_damage() {
    let p = compile_fixture("voter.ariel").program.unwrap();
    let bytes = encode(&p);
    assert!(decode(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode(&bad).is_err());
    assert!(decode(&[]).is_err());
}

/// Checks every conditional jump stays within its own section.
fn check_jumps(p: &RcodeProgram) {
    let ops = p.opcodes();
    let mut open = Vec::new();
    let mut fi_of = vec![None; ops.len()];
    let mut section_of = vec![None; ops.len()];
    for (pc, op) in ops.iter().enumerate() {
        match op {
            Opcode::If => open.push(pc),
            Opcode::Fi => {
                let start = open.pop().expect("FI without IF");
                fi_of[start] = Some(pc);
            }
            _ => {}
        }
        section_of[pc] = open.last().copied();
    }
    assert!(open.is_empty(), "unclosed IF");
    let mut nest = 0i32;
    for (pc, t) in p.triplets.iter().enumerate() {
        match t.op {
            Opcode::If => nest += 1,
            Opcode::Fi => nest -= 1,
            Opcode::False => {
                let target = t.opn1 as usize;
                assert!(target < p.len(), "jump out of program at {pc}");
                assert!(target > pc, "backward jump at {pc}");
                let sec = section_of[pc].expect("FALSE outside a section");
                let fi = fi_of[sec].unwrap();
                assert!(target <= fi, "jump at {pc} escapes its section");
                let landing = p.triplets[target].op;
                let after_skip = target >= 2 && p.triplets[target - 1].op == Opcode::False && p.triplets[target - 2].op == Opcode::Push;
                assert!(landing == Opcode::Fi || landing == Opcode::OaNew || after_skip, "jump at {pc} lands on {landing:?}");
            }
            _ => {}
        }
        assert!(nest >= 0);
    }
    assert_eq!(nest, 0);
    assert!(p.triplets.last().unwrap().is_halt());
}

#[test]
fn jumps_are_sane_for_corpus() {
    for name in good_corpus() {
        check_jumps(&compile_fixture(&name).program.unwrap());
    }
}

#[test]
fn elif_chain_listing() {
    let p = compile_fixture("elif_groups.ariel").program.unwrap();
    let listing = render_listing(&p);
    assert!(listing.contains("@1"));
    assert!(listing.contains("~1"));
    assert!(listing.contains("$1"));
    assert!(listing.contains("STORE_DEADLOCKED"));
    assert_eq!(p.opcodes().iter().filter(|o| **o == Opcode::If).count(), 3);
}

fn with_comments(src: &str, at: &[usize]) -> String {
    let mut lines: Vec<String> = src.lines().map(String::from).collect();
    for &k in at.iter().rev() {
        let k = k % (lines.len() + 1);
        lines.insert(k, "# inserted comment".into());
    }
    lines.join("\n") + "\n"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn comments_only_shift_line_numbers(pick in 0usize..64, at in prop::collection::vec(0usize..200, 1..6)) {
        let names = corpus();
        let name = &names[pick % names.len()];
        let src = load(name);
        let base = compile_src(&src, name);
        let mut at = at;
        at.sort_unstable();
        let moved = compile_src(&with_comments(&src, &at), name);
        prop_assert_eq!(&base.program, &moved.program);
        prop_assert_eq!(base.diagnostics.len(), moved.diagnostics.len());
        for (a, b) in base.diagnostics.iter().zip(&moved.diagnostics) {
            prop_assert_eq!(&a.message, &b.message);
            prop_assert!(b.line >= a.line);
        }
    }
}
