use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::scenario::{Scenario, Timed};
use crate::backbone::{BackboneComponent, BbMessage, Effect, IatGuard, PeerStatus};
use crate::lang::ast::FaultKind;
use crate::lang::{ConfigBundle, WatchdogAction, WatchdogConfig};
use crate::model::codes::{self, phase, source};
use crate::model::{Database, EntityKind, EntityRef, ModelError, NodeId, Notification, Ticks, UniqueId};
use crate::rcode::vm::{ActionRequest, ActionVerb};
use crate::rcode::{RcodeProgram, Role};
use crate::voting::{MetricRegistry, Organ, Reply, SpareState, VotingError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario refers to unknown {0}")]
    Unknown(String),
    #[error("metric '{name}' cannot be bound: {reason}")]
    Metric { name: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One line of the simulation trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: Ticks,
    pub node: Option<NodeId>,
    pub actor: String,
    pub event: String,
    pub details: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let node = self.node.map_or_else(|| "-".to_string(), |n| n.to_string());
        write!(f, "{}\t{}\t{}\t{}\t{}", self.time, node, self.actor, self.event, self.details)
    }
}

/// Per-node clock with a fixed drift factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SimClock {
    pub drift: Vec<f64>,
}

impl SimClock {
    pub fn local(&self, node: NodeId, global: Ticks) -> Ticks {
        let d = self.drift.get(node as usize).copied().unwrap_or(1.0);
        (global as f64 * d) as Ticks
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Bb(BbMessage),
    Heartbeat { from: UniqueId, to: UniqueId },
    Output { nv: usize, round: u64, task: UniqueId, value: f64 },
}

impl Payload {
    fn describe(&self) -> String {
        match self {
            Payload::Bb(m) => m.tag().to_string(),
            Payload::Heartbeat { from, to } => format!("HEARTBEAT T{from}->T{to}"),
            Payload::Output { round, task, .. } => format!("OUTPUT T{task} round {round}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Event {
    Wake { node: NodeId },
    IatCheck { node: NodeId, inc: u32 },
    Deliver { from: NodeId, to: NodeId, inc: u32, sent: Ticks, payload: Payload },
    Heartbeat { stream: usize },
    WatchdogCheck { wd: usize, epoch: u64 },
    Round { sched: usize, left: Option<u64> },
    RoundClose { nv: usize, round: u64 },
    Timed(Timed),
}

#[derive(Debug, Clone)]
struct NodeRt {
    up: bool,
    incarnation: u32,
    bb: Option<BackboneComponent>,
    bb_alive: bool,
    iat: IatGuard,
    iat_reported: bool,
    wake_at: Option<Ticks>,
}

/// Run-time state of a user task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRt {
    pub running: bool,
    pub crashed: bool,
    pub isolated: bool,
    pub mfault: bool,
    /// Messages received, as (time, text).
    pub inbox: Vec<(Ticks, String)>,
}

impl TaskRt {
    fn alive(&self) -> bool {
        self.running && !self.crashed && !self.isolated
    }
}

#[derive(Debug, Clone)]
pub struct WatchdogActor {
    pub config: WatchdogConfig,
    pub host: NodeId,
    pub last_heartbeat: Option<Ticks>,
    pub expired_count: u64,
    epoch: u64,
}

#[derive(Debug, Clone)]
struct RoundState {
    opened: Ticks,
    members: Vec<UniqueId>,
    values: BTreeMap<UniqueId, f64>,
}

#[derive(Debug, Clone)]
struct NvRt {
    organ: Organ,
    voter: NodeId,
    rounds: BTreeMap<u64, RoundState>,
    next_round: u64,
}

/// The simulated distributed system.
pub struct World {
    now: Ticks,
    seq: u64,
    queue: BTreeMap<(Ticks, u64), Event>,
    rng: ChaCha8Rng,
    scenario: Scenario,
    bundle: ConfigBundle,
    program: RcodeProgram,
    pub clock: SimClock,
    nodes: Vec<NodeRt>,
    tasks: BTreeMap<UniqueId, TaskRt>,
    watchdogs: Vec<WatchdogActor>,
    nvs: Vec<NvRt>,
    metrics: MetricRegistry,
    last_arrival: BTreeMap<(NodeId, NodeId), Ticks>,
    wakeup: i64,
    trace: Vec<TraceEvent>,
}

fn initial_db(bundle: &ConfigBundle) -> Result<Database, ModelError> {
    let mut db = Database::new(bundle.topology.clone(), &bundle.alpha)?;
    for nv in &bundle.nversions {
        for v in nv.versions.iter().filter(|v| v.spare) {
            db.mark_dormant(v.task)?;
        }
    }
    Ok(db)
}

fn verb_name(v: &ActionVerb) -> String {
    match v {
        ActionVerb::Stop => "stop".into(),
        ActionVerb::Start => "start".into(),
        ActionVerb::Restart => "restart".into(),
        ActionVerb::Isolate => "isolate".into(),
        ActionVerb::Enable => "enable".into(),
        ActionVerb::Reboot => "reboot".into(),
        ActionVerb::Send { value } => format!("send {value}"),
        ActionVerb::Warn { code } => format!("warn {code}"),
        ActionVerb::Remove(s) => format!("remove {s:?}").to_lowercase(),
        ActionVerb::Call { n, args } => format!("call {n} {args:?}"),
        ActionVerb::Pause { ticks } => format!("pause {ticks}"),
    }
}

impl World {
    pub fn new(program: RcodeProgram, bundle: ConfigBundle, scenario: Scenario) -> Result<World, SimError> {
        let nprocs = bundle.topology.nprocs;
        let db = initial_db(&bundle)?;
        let configured = bundle.manager();
        let mut nodes = Vec::new();
        for n in 0..nprocs {
            let role = match configured {
                Some(m) if m == n => Role::Manager,
                Some(_) => Role::Assistant,
                None if n + 1 == nprocs => Role::Manager,
                None => Role::Assistant,
            };
            let manager = configured.or(nprocs.checked_sub(1));
            let bb = BackboneComponent::new(n, nprocs, role, manager, db.clone(), bundle.timeouts, program.clone());
            nodes.push(NodeRt {
                up: true,
                incarnation: 0,
                bb: Some(bb),
                bb_alive: true,
                iat: IatGuard::new(n),
                iat_reported: false,
                wake_at: None,
            });
        }
        let spares: BTreeSet<UniqueId> = bundle.nversions.iter().flat_map(|nv| nv.versions.iter().filter(|v| v.spare).map(|v| v.task)).collect();
        let tasks = bundle
            .topology
            .tasks
            .keys()
            .map(|&t| (t, TaskRt { running: !spares.contains(&t), crashed: false, isolated: false, mfault: false, inbox: Vec::new() }))
            .collect();
        let mut watchdogs = Vec::new();
        for w in &bundle.watchdogs {
            let host = bundle.topology.host_of(w.watchdog_id).ok_or_else(|| SimError::Unknown(format!("watchdog task {}", w.watchdog_id)))?;
            watchdogs.push(WatchdogActor { config: w.clone(), host, last_heartbeat: None, expired_count: 0, epoch: 0 });
        }
        let mut metrics = MetricRegistry::default();
        for (name, builtin) in &scenario.metrics {
            let f = metrics.get(builtin).map_err(|e| SimError::Metric { name: name.clone(), reason: e.to_string() })?;
            metrics.register(name, move |a, b| f(a, b));
        }
        let mut nvs = Vec::new();
        for nv in &bundle.nversions {
            let voter = nv
                .on_success
                .and_then(|t| bundle.topology.host_of(t))
                .or_else(|| nv.versions.first().and_then(|v| bundle.topology.host_of(v.task)))
                .unwrap_or(0);
            nvs.push(NvRt { organ: Organ::new(nv.clone()), voter, rounds: BTreeMap::new(), next_round: 1 });
        }
        let mut drift = vec![1.0; nprocs as usize];
        for &(n, f) in &scenario.drift {
            match drift.get_mut(n as usize) {
                Some(d) => *d = f,
                None => return Err(SimError::Unknown(format!("node {n}"))),
            }
        }
        let wakeup = bundle.constants.get("WAKEUP").copied().unwrap_or(codes::WAKEUP);
        let mut w = World {
            now: 0,
            seq: 0,
            queue: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            scenario,
            bundle,
            program,
            clock: SimClock { drift },
            nodes,
            tasks,
            watchdogs,
            nvs,
            metrics,
            last_arrival: BTreeMap::new(),
            wakeup,
            trace: Vec::new(),
        };
        w.validate_scenario()?;
        w.boot();
        Ok(w)
    }

    fn validate_scenario(&self) -> Result<(), SimError> {
        let nprocs = self.nodes.len() as NodeId;
        let node_ok = |n: NodeId| n < nprocs;
        for p in &self.scenario.partitions {
            if let Some(n) = p.a.iter().chain(&p.b).find(|&&n| !node_ok(n)) {
                return Err(SimError::Unknown(format!("node {n}")));
            }
        }
        for h in &self.scenario.heartbeats {
            if !self.tasks.contains_key(&h.task) || !self.bundle.topology.contains(h.to) {
                return Err(SimError::Unknown(format!("heartbeat task {} or target {}", h.task, h.to)));
            }
        }
        for b in &self.scenario.blocks {
            if !self.tasks.contains_key(&b.task) {
                return Err(SimError::Unknown(format!("task {}", b.task)));
            }
        }
        for r in &self.scenario.rounds {
            if !self.nvs.iter().any(|nv| nv.organ.config.nv_id == r.nv) {
                return Err(SimError::Unknown(format!("n-version block {}", r.nv)));
            }
        }
        for (_, ev) in &self.scenario.events {
            match ev {
                Timed::CrashNode(n) | Timed::CrashBackbone(n) | Timed::RestartNode(n) if !node_ok(*n) => {
                    return Err(SimError::Unknown(format!("node {n}")))
                }
                Timed::Inject { target, .. } if !self.bundle.topology.contains(*target) => {
                    return Err(SimError::Unknown(format!("injection target {target}")))
                }
                Timed::Phase { task, .. } | Timed::Error { task, .. } if !self.tasks.contains_key(task) => {
                    return Err(SimError::Unknown(format!("task {task}")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn boot(&mut self) {
        for n in 0..self.nodes.len() as NodeId {
            let fx = self.nodes[n as usize].bb.as_mut().map(|bb| bb.start(0)).unwrap_or_default();
            self.effects(n, fx);
            self.reschedule_wake(n);
            self.schedule_iat(n);
        }
        for i in 0..self.scenario.heartbeats.len() {
            let t = self.scenario.heartbeats[i].from;
            self.schedule(t, Event::Heartbeat { stream: i });
        }
        for i in 0..self.scenario.rounds.len() {
            let r = &self.scenario.rounds[i];
            let (t, left) = (r.from, r.count);
            self.schedule(t, Event::Round { sched: i, left });
        }
        let injections: Vec<_> = self.bundle.injections.iter().map(|s| (s.at, Timed::Inject { fault: s.fault, target: s.target })).collect();
        let events: Vec<_> = injections.into_iter().chain(self.scenario.events.clone()).collect();
        for (t, ev) in events {
            self.schedule(t, Event::Timed(ev));
        }
    }

    fn schedule(&mut self, t: Ticks, ev: Event) {
        assert!(t >= self.now, "event scheduled in the past: {t} < {}", self.now);
        self.seq += 1;
        self.queue.insert((t, self.seq), ev);
    }

    fn log(&mut self, node: Option<NodeId>, actor: impl Into<String>, event: &str, details: impl Into<String>) {
        self.trace.push(TraceEvent { time: self.now, node, actor: actor.into(), event: event.to_string(), details: details.into() });
    }

    pub fn now(&self) -> Ticks {
        self.now
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    /// The trace rendered one LF-terminated line per event.
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn component(&self, node: NodeId) -> Option<&BackboneComponent> {
        self.nodes.get(node as usize).filter(|n| n.up && n.bb_alive).and_then(|n| n.bb.as_ref())
    }

    pub fn node_up(&self, node: NodeId) -> bool {
        self.nodes.get(node as usize).is_some_and(|n| n.up)
    }

    /// Nodes whose live component currently acts as manager.
    pub fn managers(&self) -> Vec<NodeId> {
        (0..self.nodes.len() as NodeId).filter(|&n| self.component(n).is_some_and(|c| c.role == Role::Manager)).collect()
    }

    pub fn task(&self, id: UniqueId) -> Option<&TaskRt> {
        self.tasks.get(&id)
    }

    pub fn organ(&self, nv_id: UniqueId) -> Option<&Organ> {
        self.nvs.iter().find(|n| n.organ.config.nv_id == nv_id).map(|n| &n.organ)
    }

    pub fn watchdogs(&self) -> &[WatchdogActor] {
        &self.watchdogs
    }

    /// Runs the scenario to its configured end.
    pub fn run(&mut self) -> &[TraceEvent] {
        let until = self.scenario.until;
        self.run_until(until)
    }

    /// Processes every event due at or before `t`.
    pub fn run_until(&mut self, t: Ticks) -> &[TraceEvent] {
        while let Some(entry) = self.queue.first_entry() {
            let (time, _) = *entry.key();
            if time > t {
                break;
            }
            let ev = entry.remove();
            assert!(time >= self.now, "event at past time");
            self.now = time;
            self.dispatch(ev);
        }
        self.now = self.now.max(t);
        &self.trace
    }

    fn dispatch(&mut self, ev: Event) {
        match ev {
            Event::Wake { node } => {
                let n = &mut self.nodes[node as usize];
                if n.wake_at != Some(self.now) {
                    return;
                }
                n.wake_at = None;
                if n.up && n.bb_alive {
                    let now = self.now;
                    let fx = n.bb.as_mut().map(|bb| bb.on_timers(now)).unwrap_or_default();
                    self.effects(node, fx);
                }
                self.reschedule_wake(node);
            }
            Event::IatCheck { node, inc } => self.iat_check(node, inc),
            Event::Deliver { from, to, inc, sent, payload } => self.deliver(from, to, inc, sent, payload),
            Event::Heartbeat { stream } => self.heartbeat(stream),
            Event::WatchdogCheck { wd, epoch } => self.watchdog_check(wd, epoch),
            Event::Round { sched, left } => self.open_round(sched, left),
            Event::RoundClose { nv, round } => self.close_round(nv, round),
            Event::Timed(t) => self.timed(t),
        }
    }

    fn reschedule_wake(&mut self, node: NodeId) {
        let n = &self.nodes[node as usize];
        if !n.up || !n.bb_alive {
            return;
        }
        let Some(exp) = n.bb.as_ref().and_then(|bb| bb.next_expiry()) else { return };
        let at = (exp + 1).max(self.now);
        if n.wake_at.is_none_or(|w| at < w) {
            self.nodes[node as usize].wake_at = Some(at);
            self.schedule(at, Event::Wake { node });
        }
    }

    fn schedule_iat(&mut self, node: NodeId) {
        let inc = self.nodes[node as usize].incarnation;
        let period = self.bundle.timeouts.ia_set.max(1) as Ticks;
        self.schedule(self.now + period, Event::IatCheck { node, inc });
    }

    fn iat_check(&mut self, node: NodeId, inc: u32) {
        let n = &mut self.nodes[node as usize];
        if !n.up || n.incarnation != inc {
            return;
        }
        let mut stuck = match n.bb.as_mut() {
            Some(bb) => n.iat.check(&mut bb.im_alive_flag),
            None => true,
        };
        if !n.bb_alive {
            stuck = true;
        }
        if stuck {
            let first = !n.iat_reported;
            n.iat_reported = true;
            if first {
                self.log(Some(node), "iat", "trip", format!("component on node {node} is not alive"));
            }
            for p in 0..self.nodes.len() as NodeId {
                if p != node {
                    self.send(node, p, Payload::Bb(BbMessage::Teif { subject: node }));
                }
            }
        }
        self.schedule_iat(node);
    }

    fn partitioned(&self, a: NodeId, b: NodeId, t: Ticks) -> bool {
        self.scenario.partitions.iter().any(|p| p.active(t) && p.splits(a, b))
    }

    /// Datagram send between nodes; loss is silent apart from the trace.
    fn send(&mut self, from: NodeId, to: NodeId, payload: Payload) {
        if !self.node_up(from) {
            return;
        }
        if from == to {
            let inc = self.nodes[to as usize].incarnation;
            self.schedule(self.now + 1, Event::Deliver { from, to, inc, sent: self.now, payload });
            return;
        }
        if self.scenario.omission > 0.0 && self.rng.gen_bool(self.scenario.omission) {
            self.log(Some(from), "net", "drop", format!("omission {} {from}->{to}", payload.describe()));
            return;
        }
        if self.partitioned(from, to, self.now) {
            self.log(Some(from), "net", "drop", format!("partition {} {from}->{to}", payload.describe()));
            return;
        }
        let j = self.scenario.jitter as i64;
        let jitter = if j > 0 { self.rng.gen_range(-j..=j) } else { 0 };
        let delay = (self.scenario.delay as i64 + jitter).max(1) as Ticks;
        let last = self.last_arrival.get(&(from, to)).copied().unwrap_or(0);
        let at = (self.now + delay).max(last);
        self.last_arrival.insert((from, to), at);
        let inc = self.nodes[to as usize].incarnation;
        self.schedule(at, Event::Deliver { from, to, inc, sent: self.now, payload });
    }

    fn deliver(&mut self, from: NodeId, to: NodeId, inc: u32, sent: Ticks, payload: Payload) {
        let n = &self.nodes[to as usize];
        if !n.up || n.incarnation != inc {
            return;
        }
        if from != to && self.partitioned(from, to, self.now) {
            self.log(Some(to), "net", "drop", format!("partition {} {from}->{to}", payload.describe()));
            return;
        }
        match payload {
            Payload::Bb(msg) => {
                if !n.bb_alive {
                    return;
                }
                self.log(Some(to), "net", "deliver", format!("{} {from}->{to} sent {sent}", msg.tag()));
                let now = self.now;
                let fx = self.nodes[to as usize].bb.as_mut().map(|bb| bb.on_message(now, from, msg)).unwrap_or_default();
                self.effects(to, fx);
                self.reschedule_wake(to);
            }
            Payload::Heartbeat { from: sender, to: task } => self.heartbeat_arrival(sender, task),
            Payload::Output { nv, round, task, value } => {
                let now = self.now;
                let rt = &mut self.nvs[nv];
                let Some(rs) = rt.rounds.get_mut(&round) else { return };
                if now <= rs.opened + rt.organ.timeout_of(task) {
                    rs.values.insert(task, value);
                }
            }
        }
    }

    fn effects(&mut self, node: NodeId, fx: Vec<Effect>) {
        for e in fx {
            match e {
                Effect::Send { to, msg } => {
                    if (to as usize) < self.nodes.len() {
                        self.send(node, to, Payload::Bb(msg));
                    }
                }
                Effect::Trace { event, details } => self.log(Some(node), "bb", &event, details),
                Effect::Execute(req) => self.execute(node, req),
            }
        }
    }

    /// Raises a notification through the backbone component of `node`.
    fn raise(&mut self, node: NodeId, n: Notification) {
        let nd = &self.nodes[node as usize];
        if !nd.up || !nd.bb_alive {
            return;
        }
        let now = self.now;
        let fx = self.nodes[node as usize].bb.as_mut().map(|bb| bb.raise_local(n, now)).unwrap_or_default();
        self.effects(node, fx);
        self.reschedule_wake(node);
    }

    fn host(&self, task: UniqueId) -> Option<NodeId> {
        self.bundle.topology.host_of(task)
    }

    fn task_alive(&self, task: UniqueId) -> bool {
        self.tasks.get(&task).is_some_and(|t| t.alive()) && self.host(task).is_some_and(|h| self.node_up(h))
    }

    fn post(&mut self, task: UniqueId, text: String) {
        let now = self.now;
        let host = self.host(task);
        if let Some(rt) = self.tasks.get_mut(&task) {
            if rt.isolated || rt.crashed {
                return;
            }
            rt.inbox.push((now, text.clone()));
            self.log(host, format!("task:{task}"), "recv", text);
        }
    }

    /// Carries out the local part of a recovery action on `node`.
    fn execute(&mut self, node: NodeId, req: ActionRequest) {
        for t in &req.targets {
            match t.kind {
                EntityKind::Node => {
                    self.log(Some(node), format!("node:{}", t.id), &verb_name(&req.verb), "");
                    if req.verb == ActionVerb::Reboot {
                        let hosted: Vec<UniqueId> = self.bundle.topology.tasks.values().filter(|d| d.node == t.id).map(|d| d.unique_id).collect();
                        for task in hosted {
                            if let Some(rt) = self.tasks.get_mut(&task) {
                                rt.crashed = false;
                                rt.running = true;
                            }
                        }
                    }
                }
                EntityKind::Group => {
                    for m in self.bundle.topology.member_tasks(*t) {
                        self.task_action(node, m, &req.verb);
                    }
                }
                EntityKind::Task => self.task_action(node, t.id, &req.verb),
            }
        }
    }

    fn task_action(&mut self, node: NodeId, task: UniqueId, verb: &ActionVerb) {
        let actor = format!("task:{task}");
        match verb {
            ActionVerb::Send { value } => {
                self.post(task, format!("SEND {value}"));
                self.spare_protocol(node, task, *value);
                return;
            }
            ActionVerb::Warn { code } => {
                self.post(task, format!("WARN {code}"));
                return;
            }
            ActionVerb::Call { .. } | ActionVerb::Pause { .. } | ActionVerb::Remove(_) => {
                self.log(Some(node), actor, &verb_name(verb), "");
                return;
            }
            _ => {}
        }
        let Some(rt) = self.tasks.get_mut(&task) else { return };
        match verb {
            ActionVerb::Stop => rt.running = false,
            ActionVerb::Start | ActionVerb::Restart | ActionVerb::Reboot => {
                rt.running = true;
                rt.crashed = false;
            }
            ActionVerb::Isolate => {
                rt.isolated = true;
                rt.running = false;
            }
            ActionVerb::Enable => rt.isolated = false,
            _ => {}
        }
        for nv in &mut self.nvs {
            match verb {
                ActionVerb::Stop | ActionVerb::Isolate => {
                    nv.organ.stop(task);
                }
                ActionVerb::Start | ActionVerb::Restart | ActionVerb::Enable => {
                    nv.organ.restart(task);
                }
                _ => {}
            }
        }
        self.log(Some(node), actor, &verb_name(verb), "");
    }

    /// Spare handling: a wakeup value wakes the spare, the next value names the slot it takes.
    fn spare_protocol(&mut self, node: NodeId, task: UniqueId, value: i64) {
        for i in 0..self.nvs.len() {
            let organ = &mut self.nvs[i].organ;
            let involved = organ.is_spare(task) || organ.is_member(task);
            if !involved {
                continue;
            }
            let nv_id = organ.config.nv_id;
            if value == self.wakeup {
                match organ.wake(task) {
                    Ok(()) => {
                        if let Some(rt) = self.tasks.get_mut(&task) {
                            rt.running = true;
                        }
                        self.log(Some(node), format!("nv:{nv_id}"), "wake", format!("spare T{task}"));
                    }
                    Err(VotingError::SpareExhausted(_)) => {
                        let to = organ.config.on_error;
                        self.log(Some(node), format!("nv:{nv_id}"), "on-error", format!("spares exhausted, to {}", to.map_or("none".into(), |t| format!("T{t}"))));
                        if let Some(t) = to {
                            self.post(t, format!("ERROR nv {nv_id}: spares exhausted"));
                        }
                    }
                    Err(e) => self.log(Some(node), format!("nv:{nv_id}"), "reject", e.to_string()),
                }
            } else if organ.spare_state(task) == Some(SpareState::Woken) {
                let Ok(replaced) = u32::try_from(value) else { continue };
                match organ.take_slot(task, replaced) {
                    Ok(slot) => self.log(Some(node), format!("nv:{nv_id}"), "switch-in", format!("T{task} replaces T{replaced} in slot {slot}")),
                    Err(e) => self.log(Some(node), format!("nv:{nv_id}"), "reject", e.to_string()),
                }
            }
        }
    }

    fn heartbeat(&mut self, stream: usize) {
        let hb = self.scenario.heartbeats[stream].clone();
        if hb.until.is_some_and(|u| self.now > u) {
            return;
        }
        let next = self.now + hb.every;
        if hb.until.is_none_or(|u| next <= u) {
            self.schedule(next, Event::Heartbeat { stream });
        }
        if !self.task_alive(hb.task) {
            return;
        }
        let Some(from) = self.host(hb.task) else { return };
        self.log(Some(from), format!("task:{}", hb.task), "heartbeat", format!("to {}", hb.to));
        let targets = match hb.to.kind {
            EntityKind::Task => vec![hb.to.id],
            EntityKind::Group => self.bundle.topology.member_tasks(hb.to),
            EntityKind::Node => Vec::new(),
        };
        for t in targets {
            if let Some(h) = self.host(t) {
                self.send(from, h, Payload::Heartbeat { from: hb.task, to: t });
            }
        }
    }

    fn heartbeat_arrival(&mut self, sender: UniqueId, task: UniqueId) {
        let now = self.now;
        if self.scenario.blocks.iter().any(|b| b.task == task && b.covers(now)) {
            return;
        }
        if !self.tasks.get(&task).is_some_and(|t| !t.crashed && !t.isolated) {
            return;
        }
        let Some(i) = self.watchdogs.iter().position(|w| w.config.watchdog_id == task) else {
            self.post(task, format!("HEARTBEAT from T{sender}"));
            return;
        };
        let w = &mut self.watchdogs[i];
        if w.config.watched.is_some_and(|x| x != sender) {
            return;
        }
        w.last_heartbeat = Some(now);
        w.epoch += 1;
        let (epoch, at) = (w.epoch, now + w.config.period + 1);
        self.schedule(at, Event::WatchdogCheck { wd: i, epoch });
    }

    fn watchdog_check(&mut self, wd: usize, epoch: u64) {
        let w = &self.watchdogs[wd];
        if w.epoch != epoch || !self.task_alive(w.config.watchdog_id) {
            return;
        }
        let now = self.now;
        let id = w.config.watchdog_id;
        let host = w.host;
        let period = w.config.period.max(1);
        let watched = w.config.watched;
        let action = w.config.on_error;
        self.watchdogs[wd].expired_count += 1;
        self.log(Some(host), format!("wd:{id}"), "expire", format!("missed heartbeat, period {period}"));
        let subject = EntityRef::task(watched.unwrap_or(id));
        match action {
            WatchdogAction::WarnBackbone => {
                let label = now / period;
                let value = self.corrupt_phase(id, phase::EXPIRED);
                self.raise(host, Notification::phase(EntityRef::task(id), value, source::WATCHDOG, label, now));
                self.raise(host, Notification::error(codes::DEADLINE_MISSED, subject, source::WATCHDOG, label, now));
            }
            WatchdogAction::WarnTask(t) => {
                self.post(t, format!("WARN {} from watchdog T{id}", codes::DEADLINE_MISSED));
            }
            WatchdogAction::Reboot => {
                self.execute(host, ActionRequest { verb: ActionVerb::Reboot, targets: vec![EntityRef::node(host)] });
            }
            WatchdogAction::Restart => {
                self.execute(host, ActionRequest { verb: ActionVerb::Restart, targets: vec![subject] });
            }
        }
    }

    /// A pending value fault replaces the next reported phase with a wrong one.
    fn corrupt_phase(&mut self, task: UniqueId, value: i64) -> i64 {
        match self.tasks.get_mut(&task) {
            Some(rt) if rt.mfault => {
                rt.mfault = false;
                value + self.rng.gen_range(1..1000)
            }
            _ => value,
        }
    }

    fn open_round(&mut self, sched: usize, left: Option<u64>) {
        let r = self.scenario.rounds[sched].clone();
        if left == Some(0) {
            return;
        }
        let left = left.map(|l| l - 1);
        if left != Some(0) {
            self.schedule(self.now + r.every, Event::Round { sched, left });
        }
        let Some(nv) = self.nvs.iter().position(|n| n.organ.config.nv_id == r.nv) else { return };
        let round = self.nvs[nv].next_round;
        self.nvs[nv].next_round += 1;
        let members = self.nvs[nv].organ.active_members();
        let voter = self.nvs[nv].voter;
        let opened = self.now;
        self.nvs[nv].rounds.insert(round, RoundState { opened, members: members.clone(), values: BTreeMap::new() });
        self.log(Some(voter), format!("nv:{}", r.nv), "round", format!("{round} members {members:?}"));
        let mut longest = 0;
        for &m in &members {
            longest = longest.max(self.nvs[nv].organ.timeout_of(m));
            if !self.task_alive(m) {
                continue;
            }
            let mut value = round as f64;
            if let Some(rt) = self.tasks.get_mut(&m) {
                if rt.mfault {
                    rt.mfault = false;
                    value += f64::from(self.rng.gen_range(1000..2000u32));
                }
            }
            let host = self.host(m).unwrap_or(voter);
            self.send(host, voter, Payload::Output { nv, round, task: m, value });
        }
        self.schedule(opened + longest + 1, Event::RoundClose { nv, round });
    }

    fn close_round(&mut self, nv: usize, round: u64) {
        let Some(rs) = self.nvs[nv].rounds.remove(&round) else { return };
        let voter = self.nvs[nv].voter;
        if !self.node_up(voter) {
            return;
        }
        let organ = &self.nvs[nv].organ;
        let nv_id = organ.config.nv_id;
        let members = organ.active_members();
        let values: Vec<Option<f64>> = members.iter().map(|m| rs.values.get(m).copied()).collect();
        let actor = format!("nv:{nv_id}");
        let (reply, out) = match organ.serve(&values, &self.metrics) {
            Ok(r) => r,
            Err(e) => {
                self.log(Some(voter), actor, "vote-error", e.to_string());
                return;
            }
        };
        let shown: Vec<String> = members.iter().zip(&values).map(|(m, v)| format!("T{m}={}", v.map_or("-".into(), |v| v.to_string()))).collect();
        self.log(Some(voter), actor.clone(), "vote", format!("round {round} {}", shown.join(" ")));
        let now = self.now;
        for &i in &out.minority {
            let n = Notification::error(codes::VOTE_MINORITY, EntityRef::task(members[i]), source::VOTER, round, now);
            self.raise(voter, n);
        }
        for &i in &out.missing {
            if rs.members.contains(&members[i]) {
                let n = Notification::error(codes::VOTE_NO_INPUT, EntityRef::task(members[i]), source::VOTER, round, now);
                self.raise(voter, n);
            }
        }
        match reply {
            Reply::Success { to, from, value } => {
                self.log(Some(voter), actor, "success", format!("round {round} value {value} from T{from}"));
                if let Some(t) = to {
                    self.post(t, format!("RESULT {value} round {round}"));
                }
            }
            Reply::Failure { to, from } => {
                self.log(Some(voter), actor, "failure", format!("round {round} no consensus, from T{from}"));
                if let Some(t) = to {
                    self.post(t, format!("ERROR nv {nv_id}: no consensus in round {round}"));
                }
            }
        }
    }

    fn timed(&mut self, t: Timed) {
        match t {
            Timed::CrashNode(n) => self.crash_node(n),
            Timed::CrashBackbone(n) => {
                if self.node_up(n) {
                    self.nodes[n as usize].bb_alive = false;
                    self.log(Some(n), "sim", "crash", "backbone component");
                }
            }
            Timed::RestartNode(n) => self.restart_node(n),
            Timed::Inject { fault, target } => self.inject(fault, target),
            Timed::Phase { task, value } => {
                let Some(h) = self.host(task) else { return };
                if !self.task_alive(task) {
                    return;
                }
                let value = self.corrupt_phase(task, value);
                self.log(Some(h), format!("task:{task}"), "phase", value.to_string());
                let now = self.now;
                self.raise(h, Notification::phase(EntityRef::task(task), value, source::USER, now, now));
            }
            Timed::Error { task, code } => {
                let Some(h) = self.host(task) else { return };
                self.log(Some(h), format!("task:{task}"), "error", codes::condition_name(code));
                let now = self.now;
                self.raise(h, Notification::error(code, EntityRef::task(task), source::USER, now, now));
            }
        }
    }

    fn crash_node(&mut self, n: NodeId) {
        if !self.node_up(n) {
            return;
        }
        self.log(Some(n), "sim", "crash", format!("node {n}"));
        let nd = &mut self.nodes[n as usize];
        nd.up = false;
        nd.incarnation += 1;
        nd.bb = None;
        nd.wake_at = None;
    }

    fn restart_node(&mut self, n: NodeId) {
        if self.node_up(n) {
            return;
        }
        let db = match initial_db(&self.bundle) {
            Ok(db) => db,
            Err(e) => {
                self.log(Some(n), "sim", "restart-failed", e.to_string());
                return;
            }
        };
        let nprocs = self.nodes.len() as u32;
        let mut bb = BackboneComponent::new(n, nprocs, Role::Assistant, None, db, self.bundle.timeouts, self.program.clone());
        let now = self.now;
        let fx = bb.restart(now);
        let nd = &mut self.nodes[n as usize];
        nd.up = true;
        nd.incarnation += 1;
        nd.bb = Some(bb);
        nd.bb_alive = true;
        nd.iat_reported = false;
        nd.wake_at = None;
        self.log(Some(n), "sim", "restart", format!("node {n}"));
        let hosted: Vec<UniqueId> = self.bundle.topology.tasks.values().filter(|d| d.node == n).map(|d| d.unique_id).collect();
        for t in hosted {
            if let Some(rt) = self.tasks.get_mut(&t) {
                rt.crashed = false;
            }
        }
        self.effects(n, fx);
        self.reschedule_wake(n);
        self.schedule_iat(n);
    }

    fn inject(&mut self, fault: FaultKind, target: EntityRef) {
        let node = match target.kind {
            EntityKind::Node => Some(target.id),
            _ => self.host(target.id),
        };
        let kind = match fault {
            FaultKind::Benign => "bfault",
            FaultKind::Malicious => "mfault",
        };
        self.log(node, "inject", kind, target.to_string());
        match (fault, target.kind) {
            (FaultKind::Benign, EntityKind::Node) => self.crash_node(target.id),
            (FaultKind::Benign, _) => {
                if let Some(rt) = self.tasks.get_mut(&target.id) {
                    rt.crashed = true;
                }
            }
            (FaultKind::Malicious, EntityKind::Node) => {
                for d in self.bundle.topology.tasks.values().filter(|d| d.node == target.id) {
                    if let Some(rt) = self.tasks.get_mut(&d.unique_id) {
                        rt.mfault = true;
                    }
                }
            }
            (FaultKind::Malicious, _) => {
                if let Some(rt) = self.tasks.get_mut(&target.id) {
                    rt.mfault = true;
                }
            }
        }
    }

    /// Statuses of every peer as seen from `node`, if its component is live.
    pub fn view(&self, node: NodeId) -> Option<&[PeerStatus]> {
        self.component(node).map(|c| c.view.as_slice())
    }
}
