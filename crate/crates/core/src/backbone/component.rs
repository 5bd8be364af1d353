use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::codes::{self, source};
use crate::model::{Database, DbDelta, EntityKind, EntityRef, Lifecycle, ModelError, NodeId, Notification, Ticks};
use crate::rcode::vm::{ActionRequest, ActionVerb, Outcome, Vm};
use crate::rcode::{RcodeProgram, Role};
use crate::tom::{TimeoutId, TimeoutList};

use super::BackboneTimeouts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerStatus {
    Alive,
    Suspected,
    /// The node answers but its backbone component was reported dead by the remote IAT.
    ComponentDown,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TimerKind {
    MiaSend,
    TaiaSend,
    MiaRecv,
    TaiaRecv(NodeId),
    Teif(NodeId),
    IaClear,
    Resume,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DbSync {
    Full(Box<Database>),
    Delta(Vec<DbDelta>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BbMessage {
    /// Manager heartbeat carrying its view and any pending replica deltas.
    Mia { view: Vec<PeerStatus>, deltas: Vec<DbDelta> },
    Taia,
    Teif { subject: NodeId },
    Notify(Notification),
    DbSync(DbSync),
    Announce,
    Action(ActionRequest),
}

impl BbMessage {
    pub fn tag(&self) -> &'static str {
        match self {
            BbMessage::Mia { .. } => "MIA",
            BbMessage::Taia => "TAIA",
            BbMessage::Teif { .. } => "TEIF",
            BbMessage::Notify(_) => "NOTIFY",
            BbMessage::DbSync(_) => "DB_SYNC",
            BbMessage::Announce => "ANNOUNCE",
            BbMessage::Action(_) => "ACTION",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Send { to: NodeId, msg: BbMessage },
    Trace { event: String, details: String },
    /// Local part of a recovery action, carried out by the host.
    Execute(ActionRequest),
}

fn trace(event: &str, details: impl Into<String>) -> Effect {
    Effect::Trace { event: event.to_string(), details: details.into() }
}

/// Role the election rule assigns: manager iff `me` is the highest alive node.
pub fn elect(view: &[PeerStatus], me: NodeId) -> Role {
    match highest_alive(view, me) {
        Some(n) if n == me => Role::Manager,
        _ => Role::Assistant,
    }
}

fn highest_alive(view: &[PeerStatus], me: NodeId) -> Option<NodeId> {
    (0..view.len() as NodeId).rev().find(|&n| n == me || view[n as usize] == PeerStatus::Alive)
}

/// Local guard that checks the component's I'm-Alive flag.
#[derive(Debug, Clone, Default)]
pub struct IatGuard {
    pub node: NodeId,
    pub checks: u64,
    pub trips: u64,
}

impl IatGuard {
    pub fn new(node: NodeId) -> Self {
        IatGuard { node, checks: 0, trips: 0 }
    }

    /// One periodic check. Returns true when the flag was still set, i.e. the
    /// component failed to clear it since the previous check.
    pub fn check(&mut self, flag: &mut bool) -> bool {
        self.checks += 1;
        if *flag {
            self.trips += 1;
            true
        } else {
            *flag = true;
            false
        }
    }
}

fn lifecycle_of(v: &ActionVerb) -> Option<Lifecycle> {
    Some(match v {
        ActionVerb::Stop => Lifecycle::Stop,
        ActionVerb::Start => Lifecycle::Start,
        ActionVerb::Restart => Lifecycle::Restart,
        ActionVerb::Isolate => Lifecycle::Isolate,
        ActionVerb::Enable => Lifecycle::Enable,
        ActionVerb::Reboot => Lifecycle::Reboot,
        _ => return None,
    })
}

/// One node's backbone component.
#[derive(Debug, Clone)]
pub struct BackboneComponent {
    pub node: NodeId,
    pub role: Role,
    pub manager: Option<NodeId>,
    pub view: Vec<PeerStatus>,
    pub db: Database,
    pub timeouts: BackboneTimeouts,
    pub im_alive_flag: bool,
    pub recovery_queue: VecDeque<Notification>,
    pub recovering: bool,
    /// Completed recovery runs.
    pub vm_runs: u64,
    program: RcodeProgram,
    timers: TimeoutList<TimerKind>,
    timer_ids: BTreeMap<TimerKind, TimeoutId>,
    paused: Option<Vm>,
    pending_deltas: Vec<DbDelta>,
    /// Nodes owed a full replica once they report as our assistants.
    needs_sync: BTreeSet<NodeId>,
}

impl BackboneComponent {
    pub fn new(node: NodeId, nprocs: u32, role: Role, manager: Option<NodeId>, db: Database, timeouts: BackboneTimeouts, program: RcodeProgram) -> Self {
        BackboneComponent {
            node,
            role,
            manager,
            view: vec![PeerStatus::Alive; nprocs as usize],
            db,
            timeouts,
            im_alive_flag: false,
            recovery_queue: VecDeque::new(),
            recovering: false,
            vm_runs: 0,
            program,
            timers: TimeoutList::new(),
            timer_ids: BTreeMap::new(),
            paused: None,
            pending_deltas: Vec::new(),
            needs_sync: BTreeSet::new(),
        }
    }

    fn peers(&self) -> impl Iterator<Item = NodeId> + '_ {
        let me = self.node;
        (0..self.view.len() as NodeId).filter(move |&n| n != me)
    }

    fn arm(&mut self, kind: TimerKind, deadline: Ticks, cyclic: bool, now: Ticks) {
        self.disarm(kind);
        let id = self.timers.insert(deadline, cyclic, kind, now);
        self.timer_ids.insert(kind, id);
    }

    fn disarm(&mut self, kind: TimerKind) {
        if let Some(id) = self.timer_ids.remove(&kind) {
            self.timers.delete(id);
        }
    }

    pub fn is_armed(&self, kind: TimerKind) -> bool {
        self.timer_ids.contains_key(&kind)
    }

    /// Absolute time of the next pending timer.
    pub fn next_expiry(&self) -> Option<Ticks> {
        self.timers.next_expiry()
    }

    /// Boot-time setup: arms the heartbeat timers for the configured role.
    pub fn start(&mut self, now: Ticks) -> Vec<Effect> {
        let mut fx = Vec::new();
        self.arm(TimerKind::IaClear, self.timeouts.ia_clear as Ticks, true, now);
        match self.role {
            Role::Manager => self.become_manager(now, false, &mut fx),
            Role::Assistant => self.become_assistant(self.manager, now, &mut fx),
        }
        fx
    }

    /// Boot after a restart: the node joins as an assistant and greets everyone.
    pub fn restart(&mut self, now: Ticks) -> Vec<Effect> {
        self.role = Role::Assistant;
        self.manager = None;
        let mut fx = self.start(now);
        for p in self.peers().collect::<Vec<_>>() {
            fx.push(Effect::Send { to: p, msg: BbMessage::Taia });
        }
        fx.push(trace("boot", "restarted as assistant"));
        fx
    }

    fn become_manager(&mut self, now: Ticks, announce: bool, fx: &mut Vec<Effect>) {
        self.role = Role::Manager;
        self.manager = Some(self.node);
        self.disarm(TimerKind::TaiaSend);
        self.disarm(TimerKind::MiaRecv);
        self.arm(TimerKind::MiaSend, self.timeouts.mia_send as Ticks, true, now);
        for p in self.peers().collect::<Vec<_>>() {
            if self.view[p as usize] != PeerStatus::Removed {
                self.arm(TimerKind::TaiaRecv(p), self.timeouts.taia_recv as Ticks, false, now);
            }
            if announce {
                fx.push(Effect::Send { to: p, msg: BbMessage::Announce });
            }
        }
        if announce {
            fx.push(trace("role", "manager"));
        }
    }

    fn become_assistant(&mut self, manager: Option<NodeId>, now: Ticks, fx: &mut Vec<Effect>) {
        let was_manager = self.role == Role::Manager;
        self.role = Role::Assistant;
        self.manager = manager;
        self.disarm(TimerKind::MiaSend);
        for p in self.peers().collect::<Vec<_>>() {
            self.disarm(TimerKind::TaiaRecv(p));
            self.disarm(TimerKind::Teif(p));
        }
        self.recovery_queue.clear();
        self.arm(TimerKind::TaiaSend, self.timeouts.taia_send as Ticks, true, now);
        self.arm(TimerKind::MiaRecv, self.timeouts.mia_recv as Ticks, false, now);
        if was_manager {
            fx.push(trace("role", format!("assistant of {}", manager.map_or(-1, |m| m as i64))));
        }
    }

    /// Processes every timer that expired strictly before `now`.
    pub fn on_timers(&mut self, now: Ticks) -> Vec<Effect> {
        let mut fx = Vec::new();
        for f in self.timers.scan(now) {
            let still_armed = self.timer_ids.get(&f.payload) == Some(&f.id);
            if !still_armed {
                continue;
            }
            if !self.timers.contains(f.id) {
                self.timer_ids.remove(&f.payload);
            }
            self.handle_timeout(f.payload, now, &mut fx);
        }
        fx
    }

    fn handle_timeout(&mut self, kind: TimerKind, now: Ticks, fx: &mut Vec<Effect>) {
        match kind {
            TimerKind::MiaSend => {
                let deltas = std::mem::take(&mut self.pending_deltas);
                for p in self.peers().collect::<Vec<_>>() {
                    fx.push(Effect::Send { to: p, msg: BbMessage::Mia { view: self.view.clone(), deltas: deltas.clone() } });
                }
            }
            TimerKind::TaiaSend => {
                if let Some(m) = self.manager.filter(|&m| m != self.node) {
                    fx.push(Effect::Send { to: m, msg: BbMessage::Taia });
                }
            }
            TimerKind::MiaRecv => {
                if let Some(m) = self.manager.filter(|&m| m != self.node) {
                    if self.view[m as usize] == PeerStatus::Alive {
                        self.suspect(m, now, fx);
                    }
                } else if self.role == Role::Assistant {
                    self.elect_new(now, fx);
                }
            }
            TimerKind::TaiaRecv(p) => {
                if self.view[p as usize] == PeerStatus::Alive {
                    self.suspect(p, now, fx);
                }
            }
            TimerKind::Teif(p) => {
                if self.view[p as usize] == PeerStatus::Suspected {
                    self.view[p as usize] = PeerStatus::Removed;
                    self.disarm(TimerKind::TaiaRecv(p));
                    fx.push(trace("remove", format!("node {p} crashed")));
                    if self.role == Role::Manager {
                        self.verdict(codes::NODE_CRASHED, p, now, fx);
                    } else if self.manager == Some(p) {
                        let old = p;
                        self.elect_new(now, fx);
                        if self.role == Role::Manager {
                            self.verdict(codes::NODE_CRASHED, old, now, fx);
                        }
                    }
                }
            }
            TimerKind::IaClear => self.im_alive_flag = false,
            TimerKind::Resume => self.resume(now, fx),
        }
    }

    fn suspect(&mut self, p: NodeId, now: Ticks, fx: &mut Vec<Effect>) {
        self.view[p as usize] = PeerStatus::Suspected;
        self.arm(TimerKind::Teif(p), self.timeouts.teif as Ticks, false, now);
        fx.push(trace("suspect", format!("node {p}")));
    }

    fn elect_new(&mut self, now: Ticks, fx: &mut Vec<Effect>) {
        match elect(&self.view, self.node) {
            Role::Manager => self.become_manager(now, true, fx),
            Role::Assistant => {
                let m = highest_alive(&self.view, self.node);
                self.manager = m;
                self.arm(TimerKind::MiaRecv, self.timeouts.mia_recv as Ticks, false, now);
                fx.push(trace("elect", format!("manager {}", m.map_or(-1, |m| m as i64))));
            }
        }
    }

    fn verdict(&mut self, condition: i32, subject: NodeId, now: Ticks, fx: &mut Vec<Effect>) {
        let n = Notification::error(condition, EntityRef::node(subject), source::BACKBONE, now, now);
        fx.extend(self.raise_local(n, now));
    }

    /// Marks a peer as heard from, re-admitting it if it had been removed.
    fn heard(&mut self, p: NodeId, now: Ticks, fx: &mut Vec<Effect>) {
        let prev = self.view[p as usize];
        if prev != PeerStatus::Alive {
            self.view[p as usize] = PeerStatus::Alive;
            self.disarm(TimerKind::Teif(p));
            if prev == PeerStatus::Removed {
                fx.push(trace("readmit", format!("node {p}")));
                self.needs_sync.insert(p);
            }
        }
        if self.role == Role::Manager && p != self.node {
            self.arm(TimerKind::TaiaRecv(p), self.timeouts.taia_recv as Ticks, false, now);
        }
    }

    pub fn on_message(&mut self, now: Ticks, from: NodeId, msg: BbMessage) -> Vec<Effect> {
        let mut fx = Vec::new();
        if from as usize >= self.view.len() {
            fx.push(trace("reject", format!("{} from unknown node {from}", msg.tag())));
            return fx;
        }
        match msg {
            BbMessage::Mia { view, deltas } => {
                self.heard(from, now, &mut fx);
                self.manager_contact(from, now, &mut fx);
                if self.manager == Some(from) {
                    for (n, st) in view.iter().enumerate() {
                        let n = n as NodeId;
                        if n != self.node && n != from && n < self.view.len() as NodeId {
                            self.view[n as usize] = *st;
                        }
                    }
                    for d in &deltas {
                        let _ = self.db.apply_delta(d);
                    }
                }
            }
            BbMessage::Announce => {
                self.heard(from, now, &mut fx);
                self.manager_contact(from, now, &mut fx);
            }
            BbMessage::Taia => {
                self.heard(from, now, &mut fx);
                if self.role == Role::Manager && self.needs_sync.remove(&from) {
                    fx.push(Effect::Send { to: from, msg: BbMessage::DbSync(DbSync::Full(Box::new(self.db.clone()))) });
                }
            }
            BbMessage::Teif { subject } => {
                if subject != self.node && (subject as usize) < self.view.len() && self.view[subject as usize] != PeerStatus::ComponentDown {
                    self.view[subject as usize] = PeerStatus::ComponentDown;
                    self.disarm(TimerKind::Teif(subject));
                    self.disarm(TimerKind::TaiaRecv(subject));
                    fx.push(trace("component-down", format!("node {subject}")));
                    if self.manager == Some(subject) {
                        self.elect_new(now, &mut fx);
                    }
                    if self.role == Role::Manager {
                        self.verdict(codes::COMPONENT_CRASHED, subject, now, &mut fx);
                    }
                }
            }
            BbMessage::Notify(n) => match self.db.raise_event(n.clone()) {
                Ok(true) => {
                    if self.role == Role::Manager {
                        self.enqueue(n, now, &mut fx);
                    }
                }
                Ok(false) | Err(ModelError::StaleLabel { .. }) => {}
                Err(e) => fx.push(trace("notify-rejected", e.to_string())),
            },
            BbMessage::DbSync(DbSync::Full(db)) => {
                let trusted = self.manager.is_none_or(|m| m == from || self.view[m as usize] != PeerStatus::Alive);
                if trusted {
                    self.db = *db;
                }
            }
            BbMessage::DbSync(DbSync::Delta(ds)) => {
                for d in &ds {
                    let _ = self.db.apply_delta(d);
                }
            }
            BbMessage::Action(req) => fx.push(Effect::Execute(req)),
        }
        fx
    }

    fn manager_contact(&mut self, from: NodeId, now: Ticks, fx: &mut Vec<Effect>) {
        match self.role {
            Role::Manager => {
                if from < self.node {
                    self.needs_sync.insert(from);
                } else if from > self.node {
                    fx.push(trace("merge", format!("demoted in favour of node {from}")));
                    self.become_assistant(Some(from), now, fx);
                }
            }
            Role::Assistant => {
                let current_ok = self.manager.is_some_and(|m| m != from && self.view[m as usize] == PeerStatus::Alive);
                if self.manager == Some(from) {
                    self.arm(TimerKind::MiaRecv, self.timeouts.mia_recv as Ticks, false, now);
                } else if !current_ok || self.manager.is_some_and(|m| from > m) {
                    self.manager = Some(from);
                    self.arm(TimerKind::MiaRecv, self.timeouts.mia_recv as Ticks, false, now);
                    fx.push(trace("adopt", format!("manager {from}")));
                }
            }
        }
    }

    /// Records a locally detected notification and forwards it to the peers.
    pub fn raise_local(&mut self, n: Notification, now: Ticks) -> Vec<Effect> {
        let mut fx = Vec::new();
        match self.db.raise_event(n.clone()) {
            Ok(needs) => {
                for p in self.peers().collect::<Vec<_>>() {
                    if self.view[p as usize] != PeerStatus::Removed {
                        fx.push(Effect::Send { to: p, msg: BbMessage::Notify(n.clone()) });
                    }
                }
                if needs && self.role == Role::Manager {
                    self.enqueue(n, now, &mut fx);
                }
            }
            Err(ModelError::StaleLabel { .. }) => {}
            Err(e) => fx.push(trace("notify-rejected", e.to_string())),
        }
        fx
    }

    fn enqueue(&mut self, n: Notification, now: Ticks, fx: &mut Vec<Effect>) {
        self.recovery_queue.push_back(n);
        if !self.recovering {
            self.next_recovery(now, fx);
        }
    }

    fn next_recovery(&mut self, now: Ticks, fx: &mut Vec<Effect>) {
        while !self.recovering {
            let Some(n) = self.recovery_queue.front() else { return };
            fx.push(trace("recovery-start", format!("{} on {}", codes::condition_name(n.condition), n.subject)));
            self.recovering = true;
            self.paused = Some(Vm::new());
            self.resume(now, fx);
        }
    }

    fn resume(&mut self, now: Ticks, fx: &mut Vec<Effect>) {
        let Some(mut vm) = self.paused.take() else { return };
        let mut sink = |_: &ActionRequest| {};
        match vm.run(&self.program, &self.db, &mut sink) {
            Ok(log) => {
                for l in &log.trace {
                    fx.push(trace("vm", format!("{} {}", l.pc, l.text)));
                }
                for a in &log.actions {
                    self.apply_action(a, fx);
                }
                match log.outcome {
                    Outcome::Paused { ticks } => {
                        self.paused = Some(vm);
                        self.arm(TimerKind::Resume, ticks.max(1), false, now);
                        return;
                    }
                    Outcome::Halted => {}
                }
            }
            Err(e) => fx.push(trace("vm-abort", e.to_string())),
        }
        self.recovery_queue.pop_front();
        self.recovering = false;
        self.vm_runs += 1;
        fx.push(trace("recovery-end", format!("run {}", self.vm_runs)));
        self.next_recovery(now, fx);
    }

    fn host_of(&self, e: EntityRef) -> Vec<(NodeId, EntityRef)> {
        match e.kind {
            EntityKind::Node => vec![(e.id, e)],
            EntityKind::Task => self.db.topology.host_of(e.id).map(|h| vec![(h, e)]).unwrap_or_default(),
            EntityKind::Group => self
                .db
                .topology
                .member_tasks(e)
                .into_iter()
                .filter_map(|t| self.db.topology.host_of(t).map(|h| (h, EntityRef::task(t))))
                .collect(),
        }
    }

    fn apply_action(&mut self, a: &ActionRequest, fx: &mut Vec<Effect>) {
        let mut deltas = Vec::new();
        if let Some(lc) = lifecycle_of(&a.verb) {
            for t in &a.targets {
                deltas.push(DbDelta::Lifecycle(lc, *t));
            }
        }
        if let ActionVerb::Remove(sel) = a.verb {
            for t in &a.targets {
                deltas.push(DbDelta::Remove(sel, *t));
            }
        }
        for d in &deltas {
            let _ = self.db.apply_delta(d);
        }
        self.pending_deltas.extend(deltas);
        if matches!(a.verb, ActionVerb::Remove(_) | ActionVerb::Pause { .. }) {
            return;
        }
        if let ActionVerb::Call { .. } = a.verb {
            fx.push(Effect::Execute(a.clone()));
            return;
        }
        let mut by_host: BTreeMap<NodeId, Vec<EntityRef>> = BTreeMap::new();
        for t in &a.targets {
            for (h, e) in self.host_of(*t) {
                by_host.entry(h).or_default().push(e);
            }
        }
        for (h, targets) in by_host {
            let req = ActionRequest { verb: a.verb.clone(), targets };
            if h == self.node {
                fx.push(Effect::Execute(req));
            } else {
                fx.push(Effect::Send { to: h, msg: BbMessage::Action(req) });
            }
        }
    }
}
