use std::collections::BTreeMap;
use std::fmt;

use super::ModelError;

/// Identifier shared by tasks and groups.
pub type UniqueId = u32;
pub type NodeId = u32;
/// Simulated time, one tick per microsecond.
pub type Ticks = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityKind {
    Node,
    Task,
    Group,
}

impl EntityKind {
    pub fn code(self) -> i32 {
        match self {
            EntityKind::Node => 0,
            EntityKind::Task => 1,
            EntityKind::Group => 2,
        }
    }

    pub fn from_code(c: i32) -> Option<Self> {
        match c {
            0 => Some(EntityKind::Node),
            1 => Some(EntityKind::Task),
            2 => Some(EntityKind::Group),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityRef {
    pub kind: EntityKind,
    pub id: u32,
}

impl EntityRef {
    pub fn node(id: NodeId) -> Self {
        EntityRef { kind: EntityKind::Node, id }
    }
    pub fn task(id: UniqueId) -> Self {
        EntityRef { kind: EntityKind::Task, id }
    }
    pub fn group(id: UniqueId) -> Self {
        EntityRef { kind: EntityKind::Group, id }
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            EntityKind::Node => "node",
            EntityKind::Task => "task",
            EntityKind::Group => "group",
        };
        write!(f, "{} {}", k, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskDescriptor {
    pub unique_id: UniqueId,
    pub name: String,
    pub node: NodeId,
    pub local_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDescriptor {
    pub unique_id: UniqueId,
    pub name: String,
    pub members: Vec<UniqueId>,
}

/// Static placement of tasks and groups over `nprocs` nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    pub nprocs: u32,
    pub tasks: BTreeMap<UniqueId, TaskDescriptor>,
    pub groups: BTreeMap<UniqueId, GroupDescriptor>,
}

impl Topology {
    pub fn new(nprocs: u32) -> Self {
        Topology { nprocs, ..Default::default() }
    }

    pub fn add_task(&mut self, t: TaskDescriptor) -> Result<(), ModelError> {
        if t.node >= self.nprocs {
            return Err(ModelError::NodeOutOfRange { node: t.node, nprocs: self.nprocs });
        }
        if self.tasks.contains_key(&t.unique_id) || self.groups.contains_key(&t.unique_id) {
            return Err(ModelError::DuplicateId(t.unique_id));
        }
        if self.tasks.values().any(|o| o.node == t.node && o.local_id == t.local_id) {
            return Err(ModelError::DuplicateLocalId { node: t.node, local_id: t.local_id });
        }
        self.tasks.insert(t.unique_id, t);
        Ok(())
    }

    pub fn add_group(&mut self, g: GroupDescriptor) -> Result<(), ModelError> {
        if self.tasks.contains_key(&g.unique_id) || self.groups.contains_key(&g.unique_id) {
            return Err(ModelError::DuplicateId(g.unique_id));
        }
        if g.members.is_empty() {
            return Err(ModelError::EmptyGroup(g.unique_id));
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &g.members {
            if !self.tasks.contains_key(m) {
                return Err(ModelError::UnknownEntity(EntityRef::task(*m)));
            }
            if !seen.insert(*m) {
                return Err(ModelError::DuplicateMember { group: g.unique_id, member: *m });
            }
        }
        self.groups.insert(g.unique_id, g);
        Ok(())
    }

    pub fn contains(&self, e: EntityRef) -> bool {
        match e.kind {
            EntityKind::Node => e.id < self.nprocs,
            EntityKind::Task => self.tasks.contains_key(&e.id),
            EntityKind::Group => self.groups.contains_key(&e.id),
        }
    }

    /// Tasks covered by `e`; a task maps to itself, a node to the tasks it hosts.
    pub fn member_tasks(&self, e: EntityRef) -> Vec<UniqueId> {
        match e.kind {
            EntityKind::Task => vec![e.id],
            EntityKind::Group => self.groups.get(&e.id).map(|g| g.members.clone()).unwrap_or_default(),
            EntityKind::Node => self.tasks.values().filter(|t| t.node == e.id).map(|t| t.unique_id).collect(),
        }
    }

    pub fn host_of(&self, task: UniqueId) -> Option<NodeId> {
        self.tasks.get(&task).map(|t| t.node)
    }

    /// Every entity of the given kind, in id order.
    pub fn all_of(&self, kind: EntityKind) -> Vec<EntityRef> {
        match kind {
            EntityKind::Node => (0..self.nprocs).map(EntityRef::node).collect(),
            EntityKind::Task => self.tasks.keys().map(|&i| EntityRef::task(i)).collect(),
            EntityKind::Group => self.groups.keys().map(|&i| EntityRef::group(i)).collect(),
        }
    }
}
