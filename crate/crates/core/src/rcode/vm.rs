use thiserror::Error;

use crate::model::{Atom, Database, EntityKind, EntityRef, ModelError, RemoveSelector, Status};

use super::{CompareOp, EntityOperand, OperandMode, Opcode, RcodeProgram, Triplet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionVerb {
    Stop,
    Start,
    Restart,
    Isolate,
    Enable,
    Reboot,
    Send { value: i64 },
    Warn { code: i64 },
    Remove(RemoveSelector),
    Call { n: i32, args: Vec<i64> },
    Pause { ticks: u64 },
}

/// One recovery action with its resolved targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionRequest {
    pub verb: ActionVerb,
    pub targets: Vec<EntityRef>,
}

pub trait ActionSink {
    fn emit(&mut self, req: &ActionRequest);
}

impl<F: FnMut(&ActionRequest)> ActionSink for F {
    fn emit(&mut self, req: &ActionRequest) {
        self(req)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLine {
    pub pc: usize,
    pub text: String,
}

impl std::fmt::Display for TraceLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}\t{}", self.pc, self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Halted,
    Paused { ticks: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionLog {
    pub actions: Vec<ActionRequest>,
    pub trace: Vec<TraceLine>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VmError {
    #[error("pc {pc}: stack underflow")]
    StackUnderflow { pc: usize },
    #[error("pc {pc}: malformed operand")]
    BadOperand { pc: usize },
    #[error("pc {pc}: atom index {index} out of range")]
    BadAtomIndex { pc: usize, index: i32 },
    #[error("pc {pc}: unknown opcode {code}")]
    UnknownOpcode { pc: usize, code: i32 },
    #[error("pc {pc}: FI without IF")]
    Unbalanced { pc: usize },
    #[error("pc {pc}: atom outside a guard")]
    AtomOutsideGuard { pc: usize },
    #[error("pc {pc}: jump target {target} out of range")]
    BadJump { pc: usize, target: i32 },
    #[error("program ran past its end")]
    NoHalt,
    #[error("step limit exceeded")]
    StepLimit,
    #[error("pc {pc}: {source}")]
    Db { pc: usize, source: ModelError },
}

#[derive(Debug, Clone)]
struct AtomReg {
    entity: EntityRef,
    matches: Vec<EntityRef>,
    universe: Vec<EntityRef>,
    satisfied: bool,
}

/// Resumable interpreter state.
#[derive(Debug, Clone, Default)]
pub struct Vm {
    pc: usize,
    stack: Vec<i64>,
    nest: usize,
    frames: Vec<Vec<AtomReg>>,
}

const STEP_LIMIT: usize = 1_000_000;

fn kind_word(k: EntityKind) -> &'static str {
    match k {
        EntityKind::Node => "NODE",
        EntityKind::Task => "TASK",
        EntityKind::Group => "GROUP",
    }
}

fn target_words(ts: &[EntityRef]) -> Vec<String> {
    ts.iter().map(|e| format!("{} {}", kind_word(e.kind), e.id)).collect()
}

/// Runs a program from the start against a database snapshot.
pub fn execute(p: &RcodeProgram, db: &Database, sink: &mut dyn ActionSink) -> Result<ActionLog, VmError> {
    Vm::new().run(p, db, sink)
}

impl Vm {
    pub fn new() -> Self {
        Vm::default()
    }

    pub fn pc(&self) -> usize {
        self.pc
    }

    fn pop(&mut self) -> Result<i64, VmError> {
        self.stack.pop().ok_or(VmError::StackUnderflow { pc: self.pc })
    }

    fn frame(&mut self) -> Result<&mut Vec<AtomReg>, VmError> {
        if self.nest == 0 {
            return Err(VmError::AtomOutsideGuard { pc: self.pc });
        }
        Ok(&mut self.frames[self.nest - 1])
    }

    fn atom_operand(&self, t: &Triplet) -> Result<EntityRef, VmError> {
        let o = EntityOperand::decode(t.opn1, t.opn2).ok_or(VmError::BadOperand { pc: self.pc })?;
        if o.mode != OperandMode::Literal || o.value < 0 {
            return Err(VmError::BadOperand { pc: self.pc });
        }
        Ok(EntityRef { kind: o.kind, id: o.value as u32 })
    }

    fn query(&self, db: &Database, a: &Atom) -> Result<crate::model::AtomValue, VmError> {
        db.query_atom(a).map_err(|source| VmError::Db { pc: self.pc, source })
    }

    fn reg(&self, k: i32) -> Result<&AtomReg, VmError> {
        let frame = self.nest.checked_sub(1).and_then(|i| self.frames.get(i));
        frame
            .and_then(|f| usize::try_from(k - 1).ok().and_then(|i| f.get(i)))
            .ok_or(VmError::BadAtomIndex { pc: self.pc, index: k })
    }

    fn guard_match(&self) -> Vec<EntityRef> {
        let mut out = Vec::new();
        if let Some(f) = self.nest.checked_sub(1).and_then(|i| self.frames.get(i)) {
            for r in f.iter().filter(|r| r.satisfied) {
                for m in &r.matches {
                    if !out.contains(m) {
                        out.push(*m);
                    }
                }
            }
        }
        out
    }

    fn resolve(&self, t: &Triplet, db: &Database) -> Result<Vec<EntityRef>, VmError> {
        let o = EntityOperand::decode(t.opn1, t.opn2).ok_or(VmError::BadOperand { pc: self.pc })?;
        Ok(match o.mode {
            OperandMode::Literal => {
                if o.value < 0 {
                    return Err(VmError::BadOperand { pc: self.pc });
                }
                vec![EntityRef { kind: o.kind, id: o.value as u32 }]
            }
            OperandMode::Match => self.reg(o.value)?.matches.clone(),
            OperandMode::NotMatch => {
                let r = self.reg(o.value)?;
                r.universe.iter().filter(|e| !r.matches.contains(e)).copied().collect()
            }
            OperandMode::AtomEntity => vec![self.reg(o.value)?.entity],
            OperandMode::GuardMatch => self.guard_match(),
            OperandMode::Star => db.topology.all_of(o.kind),
        })
    }

    /// Runs until HALT or PAUSE. A paused machine resumes where it stopped.
    pub fn run(&mut self, p: &RcodeProgram, db: &Database, sink: &mut dyn ActionSink) -> Result<ActionLog, VmError> {
        let mut log = ActionLog { actions: Vec::new(), trace: Vec::new(), outcome: Outcome::Halted };
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > STEP_LIMIT {
                return Err(VmError::StepLimit);
            }
            let pc = self.pc;
            let t = *p.triplets.get(pc).ok_or(VmError::NoHalt)?;
            self.pc += 1;
            let mut trace = |s: String| log.trace.push(TraceLine { pc, text: s });
            let mut act = |req: ActionRequest, actions: &mut Vec<ActionRequest>| {
                sink.emit(&req);
                actions.push(req);
            };
            match t.op {
                Opcode::Stop if t.is_halt() => {
                    self.stack.clear();
                    return Ok(log);
                }
                Opcode::SetRole => {}
                Opcode::If => {
                    self.nest += 1;
                    if self.frames.len() < self.nest {
                        self.frames.resize(self.nest, Vec::new());
                    }
                    self.frames[self.nest - 1].clear();
                    self.frames.truncate(self.nest);
                    trace("IF statement.".into());
                }
                Opcode::Fi => {
                    if self.nest == 0 {
                        return Err(VmError::Unbalanced { pc });
                    }
                    self.nest -= 1;
                    trace("FI statement.".into());
                }
                Opcode::OaNew => {
                    let k = usize::try_from(t.opn1).unwrap_or(0);
                    if k >= 1 && self.frames.len() >= k {
                        self.frames[k - 1].clear();
                        self.frames.truncate(k);
                    }
                    trace("OA-RENEW.".into());
                }
                Opcode::StorePhase | Opcode::StoreErrn | Opcode::StoreErrt => {
                    let e = self.atom_operand(&t)?;
                    let (atom, what) = match t.op {
                        Opcode::StorePhase => (Atom::Phase(e), "STORE-PHASE: stored phase"),
                        Opcode::StoreErrn => (Atom::Errn(e), "STORE-ERRN: stored error count"),
                        _ => (Atom::Errt(e), "STORE-ERRT: stored error type"),
                    };
                    let v = self.query(db, &atom)?;
                    trace(format!("{} of {}, i.e., {}.", what, e, v.value));
                    self.stack.push(v.value);
                    let reg = AtomReg { entity: e, matches: v.matches, universe: v.universe, satisfied: false };
                    self.frame()?.push(reg);
                }
                Opcode::StoreStatus => {
                    let status = Status::from_code(t.opn1 >> 8).ok_or(VmError::BadOperand { pc })?;
                    let e = self.atom_operand(&t)?;
                    let v = self.query(db, &Atom::Status(status, e))?;
                    trace(format!("STORE-STATUS: {} {} is {}.", status.name(), e, v.value));
                    self.stack.push(v.value);
                    let reg = AtomReg { entity: e, matches: v.matches, universe: v.universe, satisfied: v.value != 0 };
                    self.frame()?.push(reg);
                }
                Opcode::StoreDeadlocked => {
                    if t.opn1 < 0 || t.opn2 < 0 {
                        return Err(VmError::BadOperand { pc });
                    }
                    let (a, b) = (EntityRef::task(t.opn1 as u32), EntityRef::task(t.opn2 as u32));
                    let v = self.query(db, &Atom::Deadlocked(a, b))?;
                    trace(format!("STORE-DEADLOCKED: {} and {} is {}.", a, b, v.value));
                    self.stack.push(v.value);
                    let reg = AtomReg { entity: a, matches: v.matches, universe: v.universe, satisfied: v.value != 0 };
                    self.frame()?.push(reg);
                }
                Opcode::Compare => {
                    let op = CompareOp::from_code(t.opn1).ok_or(VmError::BadOperand { pc })?;
                    let v = self.pop()?;
                    let r = op.eval(v, i64::from(t.opn2));
                    trace(format!("COMPARING({} vs. {}): Storing {}.", t.opn2, v, i64::from(r)));
                    self.stack.push(i64::from(r));
                    if let Some(reg) = self.frame()?.last_mut() {
                        reg.satisfied = r;
                        if !r {
                            reg.matches.clear();
                        }
                    }
                }
                Opcode::And | Opcode::Or => {
                    let b = self.pop()?;
                    let a = self.pop()?;
                    let (r, name) = if t.op == Opcode::And {
                        (a != 0 && b != 0, "AND")
                    } else {
                        (a != 0 || b != 0, "OR")
                    };
                    trace(format!("{}({}, {}): Storing {}.", name, a, b, i64::from(r)));
                    self.stack.push(i64::from(r));
                }
                Opcode::Not => {
                    let a = self.pop()?;
                    trace(format!("NOT({}): Storing {}.", a, i64::from(a == 0)));
                    self.stack.push(i64::from(a == 0));
                }
                Opcode::False => {
                    let c = self.pop()?;
                    let target = usize::try_from(t.opn1)
                        .ok()
                        .filter(|&x| x < p.triplets.len())
                        .ok_or(VmError::BadJump { pc, target: t.opn1 })?;
                    if c == 0 {
                        trace(format!("Conditional GOTO, fulfilled, {}.", target));
                        self.pc = target;
                    } else {
                        trace(format!("Conditional GOTO, unfulfilled, {}.", pc + 1));
                    }
                }
                Opcode::Push => {
                    let v = if t.opn2 == 1 {
                        let gm = self.guard_match();
                        gm.iter()
                            .find(|e| db.state(**e).map(|s| s.faulty()).unwrap_or(false))
                            .map(|e| i64::from(e.id))
                            .unwrap_or(-1)
                    } else {
                        i64::from(t.opn1)
                    };
                    trace(format!("PUSH({}).", v));
                    self.stack.push(v);
                }
                Opcode::Send | Opcode::Warn => {
                    let v = self.pop()?;
                    let targets = self.resolve(&t, db)?;
                    if targets.is_empty() {
                        trace("no entity matched.".into());
                        continue;
                    }
                    for w in target_words(&targets) {
                        if t.op == Opcode::Send {
                            trace(format!("SEND MSG {} to {}.", v, w));
                        } else {
                            trace(format!("WARN({}) to {}.", v, w));
                        }
                    }
                    let verb = if t.op == Opcode::Send { ActionVerb::Send { value: v } } else { ActionVerb::Warn { code: v } };
                    act(ActionRequest { verb, targets }, &mut log.actions);
                }
                Opcode::Stop
                | Opcode::Start
                | Opcode::Restart
                | Opcode::Isolate
                | Opcode::Enable
                | Opcode::Reboot
                | Opcode::Remove => {
                    let targets = self.resolve(&t, db)?;
                    if targets.is_empty() {
                        trace("no entity matched.".into());
                        continue;
                    }
                    let (verb, word) = match t.op {
                        Opcode::Stop => (ActionVerb::Stop, "KILLING"),
                        Opcode::Start => (ActionVerb::Start, "STARTING"),
                        Opcode::Restart => (ActionVerb::Restart, "RESTARTING"),
                        Opcode::Isolate => (ActionVerb::Isolate, "ISOLATING"),
                        Opcode::Enable => (ActionVerb::Enable, "ENABLING"),
                        Opcode::Reboot => (ActionVerb::Reboot, "REBOOTING"),
                        _ => {
                            if t.opn1 >> 8 == 1 {
                                (ActionVerb::Remove(RemoveSelector::Any), "REMOVING ERRORS OF")
                            } else {
                                (ActionVerb::Remove(RemoveSelector::Phase), "REMOVING PHASE OF")
                            }
                        }
                    };
                    for w in target_words(&targets) {
                        trace(format!("{} {}.", word, w));
                    }
                    act(ActionRequest { verb, targets }, &mut log.actions);
                }
                Opcode::Call => {
                    let argc = usize::try_from(t.opn2).unwrap_or(0);
                    let mut args = Vec::with_capacity(argc);
                    for _ in 0..argc {
                        args.push(self.pop()?);
                    }
                    args.reverse();
                    trace(format!("CALL({}) with {} args.", t.opn1, argc));
                    act(ActionRequest { verb: ActionVerb::Call { n: t.opn1, args }, targets: Vec::new() }, &mut log.actions);
                }
                Opcode::Pause => {
                    let ticks = u64::try_from(t.opn1).unwrap_or(0);
                    trace(format!("PAUSE({}).", ticks));
                    act(ActionRequest { verb: ActionVerb::Pause { ticks }, targets: Vec::new() }, &mut log.actions);
                    log.outcome = Outcome::Paused { ticks };
                    return Ok(log);
                }
                Opcode::Unknown(code) => return Err(VmError::UnknownOpcode { pc, code }),
            }
        }
    }
}
