//! Building blocks for software fault tolerance in distributed applications.
//!
//! The crate covers the ARIEL configuration and recovery language and its
//! compiler, the recovery-code interpreter, a timeout manager, a replicated
//! backbone with a manager/assistant protocol, a discrete-event network
//! simulator, distributed voting, an analytical model of the voters' gossip
//! exchange and closed-form reliability models.

pub mod backbone;
pub mod gossip;
pub mod lang;
pub mod model;
pub mod rcode;
pub mod reliability;
pub mod simnet;
pub mod tom;
pub mod voting;

pub use model::{
    AlphaCounter, Assessment, Atom, Database, EntityKind, EntityRef, Notification, NodeId, Status, Ticks, Topology, UniqueId,
};
pub use rcode::{RcodeProgram, Triplet};
