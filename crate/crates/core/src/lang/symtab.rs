use std::collections::BTreeMap;

use super::ast::{FaultKind, Spanned};
use crate::backbone::BackboneTimeouts;
use crate::model::{EntityRef, GroupDescriptor, NodeId, TaskDescriptor, Ticks, UniqueId};
use crate::rcode::Role;
use crate::voting::NVersionConfig;

/// Version timeout used when a VERSION line gives none.
pub const DEFAULT_VERSION_TIMEOUT: Ticks = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WatchdogAction {
    WarnTask(UniqueId),
    WarnBackbone,
    Reboot,
    Restart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WatchdogConfig {
    pub watchdog_id: UniqueId,
    pub watched: Option<UniqueId>,
    pub period: Ticks,
    pub on_error: WatchdogAction,
    pub alpha: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectionSpec {
    pub fault: FaultKind,
    /// A node, or the task hit by a component fault.
    pub target: EntityRef,
    pub at: Ticks,
}

/// `TASK [a,b] IS MBOX [c,d], ALIAS [e,f]`, kept but not interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AliasDecl {
    pub task: UniqueId,
    pub mbox: i64,
    pub alias: i64,
}

/// Everything the configuration part of a script declares, with constants substituted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolTable {
    pub constants: BTreeMap<String, i64>,
    pub nprocs: u32,
    pub nprocs_declared: bool,
    /// Roles in declaration order.
    pub roles: Vec<Spanned<(NodeId, Role)>>,
    pub tasks: Vec<Spanned<TaskDescriptor>>,
    pub groups: Vec<Spanned<GroupDescriptor>>,
    pub aliases: Vec<AliasDecl>,
    pub timeouts: BackboneTimeouts,
    /// Timeouts the backbone model does not use.
    pub extra_timeouts: BTreeMap<String, i64>,
    pub numtasks: BTreeMap<NodeId, u32>,
    pub alpha: BTreeMap<UniqueId, (f64, f64)>,
    pub watchdogs: Vec<Spanned<WatchdogConfig>>,
    pub nversions: Vec<Spanned<NVersionConfig>>,
    pub injections: Vec<Spanned<InjectionSpec>>,
    /// Every node id mentioned, for the NPROCS coverage check.
    pub node_refs: Vec<Spanned<NodeId>>,
    /// Include and substitution messages, in order.
    pub trace: Vec<String>,
}

impl SymbolTable {
    pub fn task(&self, id: UniqueId) -> Option<&TaskDescriptor> {
        self.tasks.iter().map(|s| &s.item).find(|t| t.unique_id == id)
    }

    pub fn group(&self, id: UniqueId) -> Option<&GroupDescriptor> {
        self.groups.iter().map(|s| &s.item).find(|g| g.unique_id == id)
    }
}
