//! Distributed voting: algorithms, metrics and the replica organ with spares.

mod algo;
mod organ;

pub use algo::{vote, Algorithm, MetricFn, MetricRegistry, VoteOutcome, VoteParams};
pub use organ::{NVersionConfig, Organ, Reply, Slot, SlotState, SpareState, VersionSpec};

use crate::model::UniqueId;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VotingError {
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
    #[error("at least two non-spare versions are required, got {0}")]
    TooFewVersions(usize),
    #[error("version rank {0} used twice")]
    DuplicateRank(u32),
    #[error("task {0} listed twice")]
    DuplicateTask(UniqueId),
    #[error("no idle spare left in block {0}")]
    SpareExhausted(UniqueId),
    #[error("task {0} is not a spare")]
    NotASpare(UniqueId),
    #[error("spare {0} has not been woken")]
    NotWoken(UniqueId),
    #[error("task {0} holds no slot")]
    NotAMember(UniqueId),
    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("block {0} has no active member")]
    NoMembers(UniqueId),
}
