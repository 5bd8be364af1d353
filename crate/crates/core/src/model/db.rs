use std::collections::{BTreeMap, BTreeSet};

use super::alpha::{AlphaCounter, Assessment, Judgment};
use super::codes;
use super::entity::{EntityKind, EntityRef, Ticks, Topology, UniqueId};
use super::ModelError;

/// Structured report sent to the backbone by a detection tool.
#[derive(Debug, Clone, PartialEq)]
pub struct Notification {
    pub condition: i32,
    pub source_type: i32,
    pub subject: EntityRef,
    pub args: Vec<i64>,
    pub label: u64,
    pub sim_time: Ticks,
}

impl Notification {
    pub fn phase(subject: EntityRef, phase: i64, source_type: i32, label: u64, sim_time: Ticks) -> Self {
        Notification { condition: codes::PHASE_SET, source_type, subject, args: vec![phase], label, sim_time }
    }

    pub fn error(condition: i32, subject: EntityRef, source_type: i32, label: u64, sim_time: Ticks) -> Self {
        Notification { condition, source_type, subject, args: Vec::new(), label, sim_time }
    }

    pub fn is_error(&self) -> bool {
        codes::is_error(self.condition)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityState {
    pub phase: i64,
    pub error_list: Vec<Notification>,
    pub started: bool,
    pub running: bool,
    pub isolated: bool,
    pub restart_count: u32,
    pub reboot_count: u32,
    pub reintegrated: bool,
    pub deadlock_partner: Option<UniqueId>,
    pub alpha: Option<AlphaCounter>,
    /// Highest error label seen per source type.
    pub labels: BTreeMap<i32, u64>,
}

impl EntityState {
    fn fresh() -> Self {
        EntityState {
            phase: 0,
            error_list: Vec::new(),
            started: true,
            running: true,
            isolated: false,
            restart_count: 0,
            reboot_count: 0,
            reintegrated: false,
            deadlock_partner: None,
            alpha: None,
            labels: BTreeMap::new(),
        }
    }

    pub fn faulty(&self) -> bool {
        !self.error_list.is_empty()
    }

    pub fn assessment(&self) -> Option<Assessment> {
        self.alpha.as_ref().map(|a| a.assessment())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Faulty,
    Running,
    Rebooted,
    Started,
    Isolated,
    Restarted,
    Transient,
    Reintegrated,
}

impl Status {
    pub const ALL: [Status; 8] = [
        Status::Faulty,
        Status::Running,
        Status::Rebooted,
        Status::Started,
        Status::Isolated,
        Status::Restarted,
        Status::Transient,
        Status::Reintegrated,
    ];

    pub fn code(self) -> i32 {
        Status::ALL.iter().position(|s| *s == self).unwrap() as i32
    }

    pub fn from_code(c: i32) -> Option<Self> {
        usize::try_from(c).ok().and_then(|i| Status::ALL.get(i).copied())
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Faulty => "FAULTY",
            Status::Running => "RUNNING",
            Status::Rebooted => "REBOOTED",
            Status::Started => "STARTED",
            Status::Isolated => "ISOLATED",
            Status::Restarted => "RESTARTED",
            Status::Transient => "TRANSIENT",
            Status::Reintegrated => "REINTEGRATED",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Status::ALL.iter().copied().find(|st| st.name().eq_ignore_ascii_case(s))
    }
}

/// A guard atom as evaluated against the database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Status(Status, EntityRef),
    Phase(EntityRef),
    Errn(EntityRef),
    Errt(EntityRef),
    Deadlocked(EntityRef, EntityRef),
}

/// Value of an atom plus the entities that satisfy it.
///
/// For integer atoms `matches` lists the contributing entities; the caller
/// keeps or drops them once the comparison is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomValue {
    pub value: i64,
    pub matches: Vec<EntityRef>,
    pub universe: Vec<EntityRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemoveSelector {
    Phase,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifecycle {
    Stop,
    Start,
    Restart,
    Isolate,
    Enable,
    Reboot,
}

/// Replicable change to a database.
#[derive(Debug, Clone, PartialEq)]
pub enum DbDelta {
    Notify(Notification),
    Remove(RemoveSelector, EntityRef),
    Lifecycle(Lifecycle, EntityRef),
}

/// Per-entity state store shared by the backbone and the recovery interpreter.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub topology: Topology,
    pub states: BTreeMap<EntityRef, EntityState>,
    pub log: Vec<Notification>,
}

impl Database {
    pub fn new(topology: Topology, alpha: &BTreeMap<UniqueId, (f64, f64)>) -> Result<Self, ModelError> {
        let mut states = BTreeMap::new();
        for kind in [EntityKind::Node, EntityKind::Task, EntityKind::Group] {
            for e in topology.all_of(kind) {
                states.insert(e, EntityState::fresh());
            }
        }
        for (&task, &(threshold, factor)) in alpha {
            let st = states
                .get_mut(&EntityRef::task(task))
                .ok_or(ModelError::UnknownEntity(EntityRef::task(task)))?;
            st.alpha = Some(AlphaCounter::new(threshold, factor)?);
        }
        Ok(Database { topology, states, log: Vec::new() })
    }

    /// Marks a task as not yet started, as for a dormant spare.
    pub fn mark_dormant(&mut self, task: UniqueId) -> Result<(), ModelError> {
        let st = self.state_mut(EntityRef::task(task))?;
        st.started = false;
        st.running = false;
        Ok(())
    }

    pub fn state(&self, e: EntityRef) -> Result<&EntityState, ModelError> {
        self.states.get(&e).ok_or(ModelError::UnknownEntity(e))
    }

    fn state_mut(&mut self, e: EntityRef) -> Result<&mut EntityState, ModelError> {
        self.states.get_mut(&e).ok_or(ModelError::UnknownEntity(e))
    }

    /// Records a notification. Returns whether recovery is needed.
    pub fn raise_event(&mut self, n: Notification) -> Result<bool, ModelError> {
        let st = self.states.get_mut(&n.subject).ok_or(ModelError::UnknownEntity(n.subject))?;
        if !n.is_error() {
            match n.condition {
                codes::PHASE_SET => {
                    st.phase = n.args.first().copied().unwrap_or(0);
                }
                codes::TASK_STARTED => {
                    st.started = true;
                    st.running = true;
                }
                _ => {}
            }
            self.log.push(n);
            return Ok(false);
        }
        if let Some(&last) = st.labels.get(&n.source_type) {
            if n.label <= last {
                return Err(ModelError::StaleLabel { label: n.label, last });
            }
        }
        st.labels.insert(n.source_type, n.label);
        if let Some(a) = st.alpha.as_mut() {
            if a.last_label.is_none_or(|l| n.label > l) {
                a.update(Judgment::Faulty, n.label)?;
            } else {
                a.apply(Judgment::Faulty);
            }
        }
        if n.condition == codes::DEADLOCK {
            st.deadlock_partner = n.args.first().and_then(|&p| u32::try_from(p).ok());
        }
        st.running = false;
        st.reintegrated = false;
        st.error_list.push(n.clone());
        self.log.push(n);
        Ok(true)
    }

    fn leaf_entities(&self, e: EntityRef) -> Vec<EntityRef> {
        match e.kind {
            EntityKind::Group => self.topology.member_tasks(e).into_iter().map(EntityRef::task).collect(),
            _ => vec![e],
        }
    }

    fn status_of(&self, s: Status, e: EntityRef) -> Result<bool, ModelError> {
        let st = self.state(e)?;
        Ok(match s {
            Status::Faulty => st.faulty(),
            Status::Running => st.running,
            Status::Rebooted => st.reboot_count > 0,
            Status::Started => st.started,
            Status::Isolated => st.isolated,
            Status::Restarted => st.restart_count > 0,
            Status::Transient => st.faulty() && st.assessment() == Some(Assessment::Transient),
            Status::Reintegrated => st.reintegrated,
        })
    }

    pub fn query_atom(&self, atom: &Atom) -> Result<AtomValue, ModelError> {
        match *atom {
            Atom::Status(s, e) => {
                self.state(e)?;
                let universe = self.leaf_entities(e);
                let mut matches = Vec::new();
                for &m in &universe {
                    if self.status_of(s, m)? {
                        matches.push(m);
                    }
                }
                Ok(AtomValue { value: i64::from(!matches.is_empty()), matches, universe })
            }
            Atom::Phase(e) => {
                if e.kind != EntityKind::Task {
                    return Err(ModelError::PhaseOnNonTask(e));
                }
                let st = self.state(e)?;
                Ok(AtomValue { value: st.phase, matches: vec![e], universe: vec![e] })
            }
            Atom::Errn(e) => {
                self.state(e)?;
                let universe = self.leaf_entities(e);
                let mut total = 0i64;
                let mut matches = Vec::new();
                for &m in &universe {
                    let n = self.state(m)?.error_list.len() as i64;
                    if n > 0 {
                        matches.push(m);
                    }
                    total += n;
                }
                if e.kind != EntityKind::Group {
                    matches = vec![e];
                }
                Ok(AtomValue { value: total, matches, universe })
            }
            Atom::Errt(e) => {
                self.state(e)?;
                let universe = self.leaf_entities(e);
                let mut best: Option<&Notification> = None;
                let mut who = Vec::new();
                for &m in &universe {
                    if let Some(last) = self.state(m)?.error_list.last() {
                        if best.is_none_or(|b| last.sim_time >= b.sim_time) {
                            best = Some(last);
                            who = vec![m];
                        }
                    }
                }
                let value = best.map_or(0, |b| i64::from(b.condition));
                if e.kind != EntityKind::Group {
                    who = vec![e];
                }
                Ok(AtomValue { value, matches: who, universe })
            }
            Atom::Deadlocked(a, b) => {
                let sa = self.state(a)?;
                let sb = self.state(b)?;
                let yes = a.kind == EntityKind::Task
                    && b.kind == EntityKind::Task
                    && sa.deadlock_partner == Some(b.id)
                    && sb.deadlock_partner == Some(a.id);
                let matches = if yes { vec![a, b] } else { Vec::new() };
                Ok(AtomValue { value: i64::from(yes), matches, universe: vec![a, b] })
            }
        }
    }

    /// Resets phases; `Any` also purges pending errors. Alpha scores are kept.
    pub fn remove(&mut self, sel: RemoveSelector, e: EntityRef) -> Result<(), ModelError> {
        self.state(e)?;
        let mut targets = vec![e];
        if e.kind == EntityKind::Group {
            targets.extend(self.leaf_entities(e));
        }
        for t in targets {
            let st = self.state_mut(t)?;
            st.phase = 0;
            if sel == RemoveSelector::Any {
                st.error_list.clear();
                st.deadlock_partner = None;
            }
        }
        Ok(())
    }

    /// Applies the bookkeeping side of a recovery action.
    pub fn apply_lifecycle(&mut self, lc: Lifecycle, e: EntityRef) -> Result<(), ModelError> {
        self.state(e)?;
        let mut targets = vec![e];
        if e.kind == EntityKind::Group {
            targets.extend(self.leaf_entities(e));
        }
        for t in targets {
            let st = self.state_mut(t)?;
            let was_down = !st.running || st.faulty() || st.isolated;
            match lc {
                Lifecycle::Stop => st.running = false,
                Lifecycle::Isolate => {
                    st.isolated = true;
                    st.running = false;
                }
                Lifecycle::Start | Lifecycle::Enable => {
                    st.started = true;
                    st.running = true;
                    st.isolated = false;
                    st.reintegrated = was_down;
                }
                Lifecycle::Restart => {
                    st.restart_count += 1;
                    st.started = true;
                    st.running = true;
                    st.reintegrated = was_down;
                }
                Lifecycle::Reboot => {
                    st.reboot_count += 1;
                    st.running = true;
                    st.reintegrated = was_down;
                }
            }
        }
        Ok(())
    }

    pub fn apply_delta(&mut self, d: &DbDelta) -> Result<bool, ModelError> {
        match d {
            DbDelta::Notify(n) => self.raise_event(n.clone()),
            DbDelta::Remove(sel, e) => self.remove(*sel, *e).map(|_| false),
            DbDelta::Lifecycle(lc, e) => self.apply_lifecycle(*lc, *e).map(|_| false),
        }
    }

    /// Entities currently carrying at least one error.
    pub fn faulty_entities(&self) -> BTreeSet<EntityRef> {
        self.states.iter().filter(|(_, s)| s.faulty()).map(|(e, _)| *e).collect()
    }
}
