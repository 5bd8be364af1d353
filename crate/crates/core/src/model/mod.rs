//! Entities, notifications, the fault-tolerance database and alpha-count.

pub mod alpha;
pub mod codes;
pub mod db;
pub mod entity;

pub use alpha::{AlphaCounter, Assessment, Judgment};
pub use db::{Atom, AtomValue, Database, DbDelta, EntityState, Lifecycle, Notification, RemoveSelector, Status};
pub use entity::{EntityKind, EntityRef, GroupDescriptor, NodeId, TaskDescriptor, Ticks, Topology, UniqueId};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityRef),
    #[error("duplicate unique-id {0}")]
    DuplicateId(UniqueId),
    #[error("duplicate local id {local_id} on node {node}")]
    DuplicateLocalId { node: NodeId, local_id: u32 },
    #[error("node {node} out of range (nprocs = {nprocs})")]
    NodeOutOfRange { node: NodeId, nprocs: u32 },
    #[error("group {0} has no members")]
    EmptyGroup(UniqueId),
    #[error("group {group} lists task {member} twice")]
    DuplicateMember { group: UniqueId, member: UniqueId },
    #[error("label {label} does not follow {last}")]
    StaleLabel { label: u64, last: u64 },
    #[error("invalid alpha-count parameters: threshold {threshold}, factor {factor}")]
    BadAlphaParams { threshold: f64, factor: f64 },
    #[error("PHASE requires a task, got {0}")]
    PhaseOnNonTask(EntityRef),
}
