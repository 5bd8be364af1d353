//! Shared inputs for the benchmarks.

use ariel_core::lang::{compile, CompileOutput};
use ariel_core::simnet::{Scenario, World};

const VOTER: &str = include_str!("../../core/tests/fixtures/voter.ariel");
const VOTER_DEFS: &str = include_str!("../../core/tests/fixtures/my_definitions.h");
const TMR_SPARE: &str = include_str!("../../core/tests/fixtures/tmr_spare.ariel");
const TMR_DEFS: &str = include_str!("../../core/tests/fixtures/tmr_defs.h");
const AMS: &str = include_str!("../../core/tests/fixtures/ams.ariel");
const QUIET: &str = include_str!("../../core/tests/fixtures/quiet.scn");
const TMR_SPARE_SCN: &str = include_str!("../../core/tests/fixtures/tmr_spare.scn");

fn include(name: &str) -> Option<String> {
    match name {
        "my_definitions.h" => Some(VOTER_DEFS.to_string()),
        "tmr_defs.h" => Some(TMR_DEFS.to_string()),
        _ => None,
    }
}

pub fn compile_named(name: &str) -> CompileOutput {
    let src = match name {
        "voter" => VOTER,
        "tmr_spare" => TMR_SPARE,
        "ams" => AMS,
        _ => panic!("unknown script {name}"),
    };
    compile(src, name, &include, false)
}

pub fn voter_source() -> &'static str {
    VOTER
}

pub fn compile_source(src: &str) -> CompileOutput {
    compile(src, "bench.ariel", &include, false)
}

/// A script with `sections` independent guarded sections over `tasks` tasks.
pub fn synthetic_script(tasks: u32, sections: u32) -> String {
    let mut s = String::from("NPROCS = 4\nDEFINE 0 = MANAGER\nDEFINE 1-3 = ASSISTANTS\n");
    for t in 1..=tasks {
        s += &format!("TASK {t} IS NODE {}, TASKID {t}\n", t % 4);
    }
    for k in 0..sections {
        let a = k % tasks + 1;
        let b = (k + 1) % tasks + 1;
        s += &format!("IF [ FAULTY T{a} AND PHASE(T{b}) == {k} ]\nTHEN\n    RESTART T{a}\n    SEND {k} T{b}\nELSE\n    WARN T{b}\nFI\n");
    }
    s
}

/// Builds a world; `fixture` is either `quiet` (backbone only, 60 s) or `tmr_spare`.
pub fn world(fixture: &str) -> World {
    let (script, scn) = match fixture {
        "quiet" => ("ams", QUIET),
        "tmr_spare" => ("tmr_spare", TMR_SPARE_SCN),
        _ => panic!("unknown world {fixture}"),
    };
    let out = compile_named(script);
    let sc = Scenario::parse(scn).expect("fixture scenario");
    World::new(out.program.expect("fixture compiles"), out.bundle.expect("fixture bundle"), sc).expect("fixture world")
}

/// Deterministic deadlines in `[1, max)`.
pub fn deadlines(n: usize, max: u64) -> Vec<u64> {
    (0..n as u64).map(|i| 1 + (i.wrapping_mul(2_654_435_761) % (max - 1))).collect()
}
