use std::collections::BTreeSet;

use super::ast::*;
use super::symtab::{SymbolTable, WatchdogAction};
use super::Diagnostic;
use crate::model::{AlphaCounter, EntityKind, Status};
use crate::rcode::Role;
use crate::voting::{MetricRegistry, VotingError};

fn err(line: usize, msg: impl std::fmt::Display) -> Diagnostic {
    Diagnostic::error(line, format!("semantical error: {}", msg))
}

fn kind_name(k: EntityKind) -> &'static str {
    match k {
        EntityKind::Node => "NODE",
        EntityKind::Task => "TASK",
        EntityKind::Group => "LOGICAL",
    }
}

struct Checker<'a> {
    st: &'a SymbolTable,
    diags: Vec<Diagnostic>,
    used_groups: BTreeSet<u32>,
}

impl Checker<'_> {
    fn exists(&mut self, kind: EntityKind, id: i64, line: usize) {
        let ok = u32::try_from(id).is_ok_and(|id| match kind {
            EntityKind::Node => id < self.st.nprocs,
            EntityKind::Task => self.st.task(id).is_some(),
            EntityKind::Group => self.st.group(id).is_some(),
        });
        if !ok {
            let what = if kind == EntityKind::Node { "is not covered by NPROCS" } else { "is not declared" };
            self.diags.push(err(line, format!("{} {} {}", kind_name(kind), id, what)));
        }
    }

    /// Checks an entity reference inside a section whose innermost guard has `atoms` atoms.
    fn entity(&mut self, e: &EntityExpr, line: usize, atoms: usize) {
        match &e.sel {
            EntitySel::Id(IntExpr::Lit(id)) => {
                self.exists(e.kind, *id, line);
                if e.kind == EntityKind::Group {
                    self.used_groups.insert(*id as u32);
                }
            }
            EntitySel::Id(IntExpr::Sym(_)) => {}
            EntitySel::Match(Some(k)) | EntitySel::NotMatch(k) | EntitySel::AtomEntity(k) => {
                if *k < 1 || *k as usize > atoms {
                    self.diags.push(err(line, format!("atom index {} out of range (guard has {} atoms)", k, atoms)));
                }
            }
            EntitySel::Match(None) | EntitySel::Star => {}
        }
    }

    fn atom(&mut self, a: &AtomExpr, line: usize, atoms: usize) {
        let explicit = match a {
            AtomExpr::Status(_, e) | AtomExpr::Phase(e, _, _) | AtomExpr::Errn(e, _, _) | AtomExpr::Errt(e, _, _) => {
                matches!(e.sel, EntitySel::Id(_))
            }
            AtomExpr::Deadlocked(..) => true,
        };
        if !explicit {
            self.diags.push(err(line, "guard atoms need an explicit entity"));
            return;
        }
        match a {
            AtomExpr::Status(s, e) => {
                match (s, e.kind) {
                    (Status::Rebooted, k) if k != EntityKind::Node => {
                        self.diags.push(err(line, "REBOOTED only applies to nodes"))
                    }
                    (Status::Started | Status::Restarted, EntityKind::Node) => {
                        self.diags.push(err(line, format!("{} does not apply to nodes", s.name())))
                    }
                    _ => {}
                }
                self.entity(e, line, atoms);
            }
            AtomExpr::Phase(e, _, _) => {
                if e.kind != EntityKind::Task {
                    self.diags.push(err(line, "Can only use PHASE with tasks"));
                } else {
                    self.entity(e, line, atoms);
                }
            }
            AtomExpr::Errn(e, _, _) | AtomExpr::Errt(e, _, _) => self.entity(e, line, atoms),
            AtomExpr::Deadlocked(a, b) => {
                for e in [a, b] {
                    if e.kind != EntityKind::Task || !matches!(e.sel, EntitySel::Id(_)) {
                        self.diags.push(err(line, "DEADLOCKED needs two explicit tasks"));
                    } else {
                        self.entity(e, line, atoms);
                    }
                }
            }
        }
    }

    fn actions(&mut self, acts: &[Action], atoms: usize) {
        for a in acts {
            let line = a.line;
            match &a.kind {
                ActionKind::Stop(e) => {
                    if e.sel == EntitySel::Star && e.kind != EntityKind::Node {
                        self.diags.push(err(line, format!("STOP {}* is not allowed", kind_name(e.kind))));
                    }
                    self.entity(e, line, atoms);
                }
                ActionKind::Reboot(e) => {
                    if e.kind != EntityKind::Node {
                        self.diags.push(err(line, "Can only use REBOOT with nodes"));
                    }
                    self.entity(e, line, atoms);
                }
                ActionKind::Isolate(e)
                | ActionKind::Start(e)
                | ActionKind::Restart(e)
                | ActionKind::Enable(e)
                | ActionKind::Send { target: e, .. }
                | ActionKind::Warn { target: e, .. }
                | ActionKind::Remove { target: e, .. } => self.entity(e, line, atoms),
                ActionKind::SendFaulty(e) => self.entity(e, line, atoms),
                ActionKind::Pause(IntExpr::Lit(v)) if *v < 0 => {
                    self.diags.push(err(line, "PAUSE needs a non-negative tick count"))
                }
                ActionKind::Call { .. } | ActionKind::Pause(_) => {}
                ActionKind::Section(s) => self.section(s),
            }
        }
    }

    fn section(&mut self, s: &Section) {
        let mut last = 0;
        for b in &s.branches {
            let atoms = b.guard.atoms();
            for a in &atoms {
                self.atom(a, b.line, atoms.len());
            }
            last = atoms.len();
            self.actions(&b.actions, atoms.len());
        }
        if let Some(e) = &s.else_actions {
            self.actions(e, last);
        }
    }

    fn declared_task(&mut self, id: u32, line: usize, what: &str) {
        if self.st.task(id).is_none() {
            self.diags.push(err(line, format!("{} refers to undeclared task {}", what, id)));
        }
    }

    fn config(&mut self) {
        let st = self.st;
        for n in &st.node_refs {
            if n.item >= st.nprocs {
                self.diags.push(err(n.line, format!("node {} exceeds NPROCS = {}", n.item, st.nprocs)));
            }
        }
        let managers: Vec<_> = st.roles.iter().filter(|r| r.item.1 == Role::Manager).collect();
        if managers.len() > 1 {
            self.diags.push(err(managers[1].line, "more than one MANAGER defined"));
        }
        let mut locals = BTreeSet::new();
        for t in &st.tasks {
            if !locals.insert((t.item.node, t.item.local_id)) {
                self.diags.push(err(
                    t.line,
                    format!("local id {} used twice on node {}", t.item.local_id, t.item.node),
                ));
            }
        }
        for g in &st.groups {
            if g.item.members.is_empty() {
                self.diags.push(err(g.line, format!("LOGICAL {} has no members", g.item.unique_id)));
            }
            let mut seen = BTreeSet::new();
            for &m in &g.item.members {
                self.declared_task(m, g.line, &format!("LOGICAL {}", g.item.unique_id));
                if !seen.insert(m) {
                    self.diags.push(err(g.line, format!("task {} listed twice in LOGICAL {}", m, g.item.unique_id)));
                }
            }
        }
        if let Err(m) = st.timeouts.validate() {
            self.diags.push(err(1, m));
        }
        for (&t, &(threshold, factor)) in &st.alpha {
            if st.task(t).is_none() {
                self.diags.push(err(1, format!("alpha-count for undeclared task {}", t)));
            }
            if AlphaCounter::new(threshold, factor).is_err() {
                self.diags.push(err(1, format!("bad alpha-count parameters for task {}", t)));
            }
        }
        for w in &st.watchdogs {
            let c = &w.item;
            self.declared_task(c.watchdog_id, w.line, "WATCHDOG");
            if let Some(x) = c.watched {
                self.declared_task(x, w.line, "WATCHES");
            }
            if let WatchdogAction::WarnTask(x) = c.on_error {
                self.declared_task(x, w.line, "ON ERROR WARN");
            }
            if c.period == 0 {
                self.diags.push(err(w.line, "watchdog period must be positive"));
            }
        }
        let metrics = MetricRegistry::default();
        for nv in &st.nversions {
            let c = &nv.item;
            for v in &c.versions {
                self.declared_task(v.task, nv.line, "VERSION");
            }
            for x in [c.on_success, c.on_error].into_iter().flatten() {
                self.declared_task(x, nv.line, "N-VERSION");
            }
            match c.validate(&metrics) {
                Ok(()) => {}
                Err(VotingError::UnknownMetric(m)) => self.diags.push(Diagnostic::warning(
                    nv.line,
                    format!("warning: metric \"{}\" is not built in and must be registered before running", m),
                )),
                Err(e) => self.diags.push(err(nv.line, e)),
            }
        }
        for i in &st.injections {
            let t = i.item.target;
            if t.kind == EntityKind::Task {
                self.declared_task(t.id, i.line, "INJECT");
            }
        }
    }
}

/// Semantic checks over a resolved script; warnings do not reject it.
pub fn check_semantics(ast: &Ast, st: &SymbolTable) -> Vec<Diagnostic> {
    let mut c = Checker { st, diags: Vec::new(), used_groups: BTreeSet::new() };
    c.config();
    for s in &ast.sections {
        c.section(s);
    }
    for g in &st.groups {
        if !c.used_groups.contains(&g.item.unique_id) {
            c.diags.push(Diagnostic::warning(g.line, format!("warning: LOGICAL {} is never used", g.item.unique_id)));
        }
    }
    c.diags.sort_by_key(|d| d.line);
    c.diags
}
