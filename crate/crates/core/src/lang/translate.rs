use std::collections::BTreeMap;

use super::ast::*;
use super::symtab::{AliasDecl, InjectionSpec, SymbolTable, WatchdogConfig};
use super::Diagnostic;
use crate::backbone::BackboneTimeouts;
use crate::model::{NodeId, Topology, UniqueId};
use crate::rcode::{selector_code, EntityOperand, OperandMode, Opcode, RcodeProgram, Role, Triplet};
use crate::voting::NVersionConfig;

/// Everything a script configures apart from the recovery program.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigBundle {
    pub topology: Topology,
    pub roles: Vec<(NodeId, Role)>,
    pub timeouts: BackboneTimeouts,
    pub extra_timeouts: BTreeMap<String, i64>,
    pub alpha: BTreeMap<UniqueId, (f64, f64)>,
    pub watchdogs: Vec<WatchdogConfig>,
    pub nversions: Vec<NVersionConfig>,
    pub injections: Vec<InjectionSpec>,
    pub numtasks: BTreeMap<NodeId, u32>,
    pub aliases: Vec<AliasDecl>,
    pub constants: BTreeMap<String, i64>,
}

impl ConfigBundle {
    pub fn manager(&self) -> Option<NodeId> {
        self.roles.iter().find(|(_, r)| *r == Role::Manager).map(|(n, _)| *n)
    }
}

struct Emitter {
    code: Vec<Triplet>,
}

type TResult<T> = Result<T, Diagnostic>;

fn lit(e: &IntExpr, line: usize) -> TResult<i32> {
    match e {
        IntExpr::Lit(v) => i32::try_from(*v).map_err(|_| Diagnostic::error(line, format!("value {} does not fit an r-code operand", v))),
        IntExpr::Sym(s) => Err(Diagnostic::error(line, format!("unresolved symbol {{{}}}", s))),
    }
}

impl Emitter {
    fn emit(&mut self, op: Opcode, opn1: i32, opn2: i32) -> usize {
        self.code.push(Triplet::new(op, opn1, opn2));
        self.code.len() - 1
    }

    fn patch(&mut self, at: usize, target: usize) {
        self.code[at].opn1 = target as i32;
    }

    fn operand(&self, e: &EntityExpr, extra: i32, line: usize, atoms: usize) -> TResult<(i32, i32)> {
        let (mode, value) = match &e.sel {
            EntitySel::Id(v) => (OperandMode::Literal, lit(v, line)?),
            EntitySel::Match(Some(k)) => (OperandMode::Match, *k as i32),
            EntitySel::Match(None) => (OperandMode::GuardMatch, 0),
            EntitySel::NotMatch(k) => (OperandMode::NotMatch, *k as i32),
            EntitySel::AtomEntity(k) => (OperandMode::AtomEntity, *k as i32),
            EntitySel::Star => (OperandMode::Star, 0),
        };
        if matches!(mode, OperandMode::Match | OperandMode::NotMatch | OperandMode::AtomEntity)
            && (value < 1 || value as usize > atoms)
        {
            return Err(Diagnostic::error(line, format!("atom index {} out of range", value)));
        }
        Ok(EntityOperand { kind: e.kind, mode, value, extra }.encode())
    }

    fn atom_entity(&mut self, op: Opcode, e: &EntityExpr, extra: i32, line: usize) -> TResult<()> {
        match &e.sel {
            EntitySel::Id(_) => {
                let (a, b) = self.operand(e, extra, line, 0)?;
                self.emit(op, a, b);
                Ok(())
            }
            _ => Err(Diagnostic::error(line, "guard atoms need an explicit entity")),
        }
    }

    fn atom(&mut self, a: &AtomExpr, line: usize) -> TResult<()> {
        match a {
            AtomExpr::Status(s, e) => self.atom_entity(Opcode::StoreStatus, e, s.code(), line),
            AtomExpr::Phase(e, op, v) | AtomExpr::Errn(e, op, v) | AtomExpr::Errt(e, op, v) => {
                let code = match a {
                    AtomExpr::Phase(..) => Opcode::StorePhase,
                    AtomExpr::Errn(..) => Opcode::StoreErrn,
                    _ => Opcode::StoreErrt,
                };
                self.atom_entity(code, e, 0, line)?;
                self.emit(Opcode::Compare, op.code(), lit(v, line)?);
                Ok(())
            }
            AtomExpr::Deadlocked(x, y) => match (&x.sel, &y.sel) {
                (EntitySel::Id(i), EntitySel::Id(j)) => {
                    self.emit(Opcode::StoreDeadlocked, lit(i, line)?, lit(j, line)?);
                    Ok(())
                }
                _ => Err(Diagnostic::error(line, "DEADLOCKED needs two explicit tasks")),
            },
        }
    }

    fn guard(&mut self, e: &Expr, line: usize) -> TResult<()> {
        match e {
            Expr::Atom(a) => self.atom(a, line),
            Expr::And(a, b) | Expr::Or(a, b) => {
                self.guard(a, line)?;
                self.guard(b, line)?;
                self.emit(if matches!(e, Expr::And(..)) { Opcode::And } else { Opcode::Or }, -1, -1);
                Ok(())
            }
            Expr::Not(a) => {
                self.guard(a, line)?;
                self.emit(Opcode::Not, -1, -1);
                Ok(())
            }
        }
    }

    fn push(&mut self, v: i32) {
        self.emit(Opcode::Push, v, -1);
    }

    fn actions(&mut self, acts: &[Action], atoms: usize, level: i32) -> TResult<()> {
        for a in acts {
            let line = a.line;
            fn simple(k: &ActionKind) -> Option<(Opcode, &EntityExpr)> {
                match k {
                ActionKind::Stop(e) => Some((Opcode::Stop, e)),
                ActionKind::Isolate(e) => Some((Opcode::Isolate, e)),
                ActionKind::Start(e) => Some((Opcode::Start, e)),
                ActionKind::Reboot(e) => Some((Opcode::Reboot, e)),
                ActionKind::Restart(e) => Some((Opcode::Restart, e)),
                ActionKind::Enable(e) => Some((Opcode::Enable, e)),
                _ => None,
                }
            }
            if let Some((op, e)) = simple(&a.kind) {
                let (x, y) = self.operand(e, 0, line, atoms)?;
                self.emit(op, x, y);
                continue;
            }
            match &a.kind {
                ActionKind::Send { value, target } => {
                    self.push(lit(value, line)?);
                    let (x, y) = self.operand(target, 0, line, atoms)?;
                    self.emit(Opcode::Send, x, y);
                }
                ActionKind::SendFaulty(target) => {
                    self.emit(Opcode::Push, 0, 1);
                    let (x, y) = self.operand(target, 0, line, atoms)?;
                    self.emit(Opcode::Send, x, y);
                }
                ActionKind::Warn { code, target } => {
                    self.push(code.as_ref().map(|c| lit(c, line)).transpose()?.unwrap_or(0));
                    let (x, y) = self.operand(target, 0, line, atoms)?;
                    self.emit(Opcode::Warn, x, y);
                }
                ActionKind::Remove { selector, target } => {
                    let (x, y) = self.operand(target, selector_code(*selector), line, atoms)?;
                    self.emit(Opcode::Remove, x, y);
                }
                ActionKind::Call { n, args } => {
                    for x in args {
                        self.push(lit(x, line)?);
                    }
                    self.emit(Opcode::Call, lit(n, line)?, args.len() as i32);
                }
                ActionKind::Pause(v) => {
                    self.emit(Opcode::Pause, lit(v, line)?, -1);
                }
                ActionKind::Section(s) => self.section(s, level + 1)?,
                _ => unreachable!("simple actions handled above"),
            }
        }
        Ok(())
    }

    fn section(&mut self, s: &Section, level: i32) -> TResult<()> {
        self.emit(Opcode::If, -1, -1);
        let mut to_fi = Vec::new();
        let mut pending: Option<usize> = None;
        let mut atoms = 0;
        for (i, b) in s.branches.iter().enumerate() {
            if let Some(at) = pending.take() {
                let here = self.code.len();
                self.patch(at, here);
                self.emit(Opcode::OaNew, level, -1);
            }
            self.guard(&b.guard, b.line)?;
            atoms = b.guard.atoms().len();
            pending = Some(self.emit(Opcode::False, -1, -1));
            self.actions(&b.actions, atoms, level)?;
            if i + 1 < s.branches.len() || s.else_actions.is_some() {
                self.push(0);
                to_fi.push(self.emit(Opcode::False, -1, -1));
            }
        }
        if let Some(e) = &s.else_actions {
            if let Some(at) = pending.take() {
                let here = self.code.len();
                self.patch(at, here);
            }
            self.actions(e, atoms, level)?;
        }
        let fi = self.emit(Opcode::Fi, -1, -1);
        for at in to_fi.into_iter().chain(pending) {
            self.patch(at, fi);
        }
        self.emit(Opcode::OaNew, level, -1);
        Ok(())
    }
}

/// Builds the r-code program and the configuration bundle from a checked script.
pub fn translate(ast: &Ast, st: &SymbolTable) -> Result<(RcodeProgram, ConfigBundle), Vec<Diagnostic>> {
    let mut e = Emitter { code: Vec::new() };
    for r in &st.roles {
        e.emit(Opcode::SetRole, r.item.0 as i32, r.item.1.code());
    }
    let mut diags = Vec::new();
    for s in &ast.sections {
        if let Err(d) = e.section(s, 1) {
            diags.push(d);
        }
    }
    e.code.push(Triplet::halt());
    let mut topology = Topology::new(st.nprocs);
    for t in &st.tasks {
        if let Err(err) = topology.add_task(t.item.clone()) {
            diags.push(Diagnostic::error(t.line, format!("semantical error: {}", err)));
        }
    }
    for g in &st.groups {
        if let Err(err) = topology.add_group(g.item.clone()) {
            diags.push(Diagnostic::error(g.line, format!("semantical error: {}", err)));
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let bundle = ConfigBundle {
        topology,
        roles: st.roles.iter().map(|r| r.item).collect(),
        timeouts: st.timeouts,
        extra_timeouts: st.extra_timeouts.clone(),
        alpha: st.alpha.clone(),
        watchdogs: st.watchdogs.iter().map(|w| w.item.clone()).collect(),
        nversions: st.nversions.iter().map(|n| n.item.clone()).collect(),
        injections: st.injections.iter().map(|i| i.item).collect(),
        numtasks: st.numtasks.clone(),
        aliases: st.aliases.clone(),
        constants: st.constants.clone(),
    };
    Ok((RcodeProgram { triplets: e.code }, bundle))
}
