//! Per-node backbone: mutual suspicion between manager and assistants,
//! election, database replication and recovery triggering.

mod component;
mod timeouts;

pub use component::{elect, BackboneComponent, BbMessage, DbSync, Effect, IatGuard, PeerStatus, TimerKind};
pub use timeouts::BackboneTimeouts;
