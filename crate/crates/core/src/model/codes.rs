//! Well-known condition, source and phase codes carried by notifications.

/// A component reports its current phase in `args[0]`.
pub const PHASE_SET: i32 = 1;
/// Informational: a task was started.
pub const TASK_STARTED: i32 = 2;

/// Codes at or above this value are errors and trigger recovery.
pub const FIRST_ERROR: i32 = 100;
pub const FAULT_DETECTED: i32 = 100;
pub const DEADLINE_MISSED: i32 = 101;
pub const VOTE_MINORITY: i32 = 102;
pub const VOTE_NO_INPUT: i32 = 103;
pub const NODE_CRASHED: i32 = 104;
pub const COMPONENT_CRASHED: i32 = 105;
pub const REDUNDANCY_EXHAUSTED: i32 = 106;
/// `args[0]` holds the partner task.
pub const DEADLOCK: i32 = 107;

pub fn is_error(condition: i32) -> bool {
    condition >= FIRST_ERROR
}

pub fn condition_name(c: i32) -> &'static str {
    match c {
        PHASE_SET => "phase",
        TASK_STARTED => "started",
        FAULT_DETECTED => "fault",
        DEADLINE_MISSED => "deadline-missed",
        VOTE_MINORITY => "minority",
        VOTE_NO_INPUT => "no-input",
        NODE_CRASHED => "node-crash",
        COMPONENT_CRASHED => "component-crash",
        REDUNDANCY_EXHAUSTED => "redundancy-exhausted",
        DEADLOCK => "deadlock",
        _ => "other",
    }
}

pub mod source {
    pub const WATCHDOG: i32 = 1;
    pub const VOTER: i32 = 2;
    pub const BACKBONE: i32 = 3;
    pub const USER: i32 = 4;
    pub const INJECTOR: i32 = 5;
}

pub mod phase {
    pub const IDLE: i64 = 0;
    pub const EXCHANGING: i64 = 1;
    pub const VOTED: i64 = 2;
    /// Reported by a watchdog whose deadline passed.
    pub const EXPIRED: i64 = 1000;
    pub const HAS_FAILED: i64 = 9999;
}

/// First message a dormant spare must receive before taking a slot.
pub const WAKEUP: i64 = 10;
