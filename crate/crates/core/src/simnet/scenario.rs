use thiserror::Error;

use crate::lang::ast::FaultKind;
use crate::model::{EntityRef, NodeId, Ticks, UniqueId};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("scenario line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub from: Ticks,
    pub to: Ticks,
    pub a: Vec<NodeId>,
    pub b: Vec<NodeId>,
}

impl Partition {
    pub fn active(&self, t: Ticks) -> bool {
        self.from <= t && t < self.to
    }

    /// Whether the partition separates `x` from `y`.
    pub fn splits(&self, x: NodeId, y: NodeId) -> bool {
        (self.a.contains(&x) && self.b.contains(&y)) || (self.b.contains(&x) && self.a.contains(&y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeartbeatStream {
    pub task: UniqueId,
    pub to: EntityRef,
    pub every: Ticks,
    pub from: Ticks,
    pub until: Option<Ticks>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub task: UniqueId,
    pub from: Ticks,
    pub until: Option<Ticks>,
}

impl Block {
    pub fn covers(&self, t: Ticks) -> bool {
        t >= self.from && self.until.is_none_or(|u| t < u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundSchedule {
    pub nv: UniqueId,
    pub every: Ticks,
    pub from: Ticks,
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Timed {
    CrashNode(NodeId),
    CrashBackbone(NodeId),
    RestartNode(NodeId),
    Inject { fault: FaultKind, target: EntityRef },
    Phase { task: UniqueId, value: i64 },
    Error { task: UniqueId, code: i32 },
}

/// Everything a scenario file configures.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub until: Ticks,
    pub delay: Ticks,
    pub jitter: Ticks,
    pub omission: f64,
    pub partitions: Vec<Partition>,
    pub drift: Vec<(NodeId, f64)>,
    pub heartbeats: Vec<HeartbeatStream>,
    pub blocks: Vec<Block>,
    pub rounds: Vec<RoundSchedule>,
    pub events: Vec<(Ticks, Timed)>,
    /// Script metric names bound to built-in metrics.
    pub metrics: Vec<(String, String)>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 0,
            until: 1_000_000,
            delay: 1000,
            jitter: 500,
            omission: 0.0,
            partitions: Vec::new(),
            drift: Vec::new(),
            heartbeats: Vec::new(),
            blocks: Vec::new(),
            rounds: Vec::new(),
            events: Vec::new(),
            metrics: Vec::new(),
        }
    }
}

/// Reads `<int>[us|ms|s]` as ticks.
pub fn parse_ticks(s: &str) -> Option<Ticks> {
    let lower = s.to_ascii_lowercase();
    let (num, mul) = if let Some(n) = lower.strip_suffix("ms") {
        (n, 1000)
    } else if let Some(n) = lower.strip_suffix("us") {
        (n, 1)
    } else if let Some(n) = lower.strip_suffix('s') {
        (n, 1_000_000)
    } else {
        (lower.as_str(), 1)
    };
    num.replace('_', "").parse::<u64>().ok().map(|v| v * mul)
}

fn entity(kind: &str, id: u32) -> Option<EntityRef> {
    match kind {
        "node" => Some(EntityRef::node(id)),
        "task" | "component" => Some(EntityRef::task(id)),
        "logical" | "group" => Some(EntityRef::group(id)),
        _ => None,
    }
}

fn nodes(s: &str) -> Option<Vec<NodeId>> {
    s.split(',').filter(|p| !p.is_empty()).map(|p| p.trim().parse().ok()).collect()
}

struct Words<'a> {
    w: Vec<&'a str>,
    i: usize,
    line: usize,
}

impl<'a> Words<'a> {
    fn err<T>(&self, m: impl Into<String>) -> Result<T, ScenarioError> {
        Err(ScenarioError { line: self.line, message: m.into() })
    }

    fn next(&mut self, what: &str) -> Result<&'a str, ScenarioError> {
        match self.w.get(self.i) {
            Some(s) => {
                self.i += 1;
                Ok(s)
            }
            None => self.err(format!("expected {what}")),
        }
    }

    fn keyword(&mut self, k: &str) -> Result<(), ScenarioError> {
        let w = self.next(k)?;
        if w.eq_ignore_ascii_case(k) {
            Ok(())
        } else {
            self.err(format!("expected '{k}', found '{w}'"))
        }
    }

    fn ticks(&mut self, what: &str) -> Result<Ticks, ScenarioError> {
        let w = self.next(what)?;
        parse_ticks(w).map_or_else(|| self.err(format!("bad {what} '{w}'")), Ok)
    }

    fn int<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ScenarioError> {
        let w = self.next(what)?;
        w.parse().map_or_else(|_| self.err(format!("bad {what} '{w}'")), Ok)
    }

    fn optional(&mut self, k: &str) -> bool {
        if self.w.get(self.i).is_some_and(|w| w.eq_ignore_ascii_case(k)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn done(&self) -> Result<(), ScenarioError> {
        match self.w.get(self.i) {
            Some(w) => self.err(format!("unexpected '{w}'")),
            None => Ok(()),
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut sc = Scenario::default();
        for (k, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut w = Words { w: body.split_whitespace().collect(), i: 0, line: k + 1 };
            let cmd = w.next("command")?.to_ascii_lowercase();
            match cmd.as_str() {
                "seed" => sc.seed = w.int("seed")?,
                "until" => sc.until = w.ticks("time")?,
                "delay" => {
                    sc.delay = w.ticks("delay")?;
                    if w.i < w.w.len() {
                        sc.jitter = w.ticks("jitter")?;
                    }
                    if sc.jitter >= sc.delay {
                        return w.err("jitter must be smaller than the base delay");
                    }
                }
                "omission" => {
                    let p: f64 = w.int("probability")?;
                    if !(0.0..=1.0).contains(&p) {
                        return w.err("omission probability must be in [0,1]");
                    }
                    sc.omission = p;
                }
                "partition" => {
                    let from = w.ticks("start")?;
                    let to = w.ticks("end")?;
                    let spec = w.next("node sets")?;
                    let Some((a, b)) = spec.split_once('|') else { return w.err("expected A|B") };
                    let (Some(a), Some(b)) = (nodes(a), nodes(b)) else { return w.err("bad node list") };
                    if to <= from {
                        return w.err("partition ends before it starts");
                    }
                    sc.partitions.push(Partition { from, to, a, b });
                }
                "drift" => {
                    let n = w.int("node")?;
                    let f: f64 = w.int("factor")?;
                    if f <= 0.0 {
                        return w.err("drift factor must be positive");
                    }
                    sc.drift.push((n, f));
                }
                "restart" | "crash" => {
                    let what = w.next("node or bb")?.to_ascii_lowercase();
                    let id = w.int("id")?;
                    w.keyword("at")?;
                    let t = w.ticks("time")?;
                    let ev = match (cmd.as_str(), what.as_str()) {
                        ("restart", "node") => Timed::RestartNode(id),
                        ("crash", "node") => Timed::CrashNode(id),
                        ("crash", "bb") => Timed::CrashBackbone(id),
                        _ => return w.err(format!("cannot {cmd} '{what}'")),
                    };
                    sc.events.push((t, ev));
                }
                "heartbeat" => {
                    let task = w.int("task")?;
                    w.keyword("to")?;
                    let kind = w.next("entity kind")?.to_ascii_lowercase();
                    let id = w.int("id")?;
                    let Some(to) = entity(&kind, id) else { return w.err(format!("bad entity kind '{kind}'")) };
                    w.keyword("every")?;
                    let every = w.ticks("period")?;
                    if every == 0 {
                        return w.err("period must be positive");
                    }
                    let from = if w.optional("from") { w.ticks("start")? } else { every };
                    let until = if w.optional("until") { Some(w.ticks("end")?) } else { None };
                    sc.heartbeats.push(HeartbeatStream { task, to, every, from, until });
                }
                "block" => {
                    w.optional("task");
                    let task = w.int("task")?;
                    w.keyword("from")?;
                    let from = w.ticks("start")?;
                    let until = if w.optional("until") { Some(w.ticks("end")?) } else { None };
                    sc.blocks.push(Block { task, from, until });
                }
                "rounds" => {
                    let nv = w.int("n-version id")?;
                    w.keyword("every")?;
                    let every = w.ticks("period")?;
                    if every == 0 {
                        return w.err("period must be positive");
                    }
                    let from = if w.optional("from") { w.ticks("start")? } else { every };
                    let count = if w.optional("count") { Some(w.int("count")?) } else { None };
                    sc.rounds.push(RoundSchedule { nv, every, from, count });
                }
                "inject" => {
                    let fault = match w.next("fault")?.to_ascii_lowercase().as_str() {
                        "bfault" => FaultKind::Benign,
                        "mfault" => FaultKind::Malicious,
                        f => return w.err(format!("unknown fault '{f}'")),
                    };
                    let kind = w.next("target kind")?.to_ascii_lowercase();
                    let id = w.int("id")?;
                    let Some(target) = entity(&kind, id).filter(|e| e.kind != crate::model::EntityKind::Group) else {
                        return w.err(format!("bad target kind '{kind}'"));
                    };
                    w.keyword("at")?;
                    let t = w.ticks("time")?;
                    sc.events.push((t, Timed::Inject { fault, target }));
                }
                "phase" | "error" => {
                    w.optional("task");
                    let task = w.int("task")?;
                    let value: i64 = w.int("value")?;
                    w.keyword("at")?;
                    let t = w.ticks("time")?;
                    let ev = if cmd == "phase" {
                        Timed::Phase { task, value }
                    } else {
                        let code = i32::try_from(value).map_err(|_| ScenarioError { line: k + 1, message: "code out of range".into() })?;
                        Timed::Error { task, code }
                    };
                    sc.events.push((t, ev));
                }
                "metric" => {
                    let name = w.next("metric name")?.trim_matches('"').to_string();
                    let builtin = w.next("built-in metric")?.to_string();
                    sc.metrics.push((name, builtin));
                }
                other => return w.err(format!("unknown command '{other}'")),
            }
            w.done()?;
        }
        Ok(sc)
    }
}
