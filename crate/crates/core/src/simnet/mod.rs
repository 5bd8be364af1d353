//! Discrete-event simulation of nodes, links, tasks and the backbone.
//!
//! A [`World`] is built from a compiled script and a [`Scenario`] and is
//! fully deterministic for a given seed.

mod scenario;
mod world;

pub use scenario::{parse_ticks, Block, HeartbeatStream, Partition, RoundSchedule, Scenario, ScenarioError, Timed};
pub use world::{SimClock, SimError, TaskRt, TraceEvent, WatchdogActor, World};
