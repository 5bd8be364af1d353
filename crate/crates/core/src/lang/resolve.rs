use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::symtab::*;
use super::Diagnostic;
use crate::model::{EntityRef, GroupDescriptor, TaskDescriptor};
use crate::voting::{Algorithm, NVersionConfig, VersionSpec, VoteParams};

/// Reads `#define NAME <integer>` pairs; everything else is ignored.
pub fn parse_defines(text: &str) -> Vec<(String, i64)> {
    let mut out = Vec::new();
    for line in text.lines() {
        let mut words = line.split_whitespace();
        if words.next() != Some("#define") {
            continue;
        }
        let (Some(name), Some(value)) = (words.next(), words.next()) else { continue };
        let value = value.trim_matches(|c| c == '(' || c == ')');
        let parsed = match value.strip_prefix("0x").or_else(|| value.strip_prefix("0X")) {
            Some(hex) => i64::from_str_radix(hex, 16).ok(),
            None => value.trim_end_matches(['L', 'l', 'U', 'u']).parse().ok(),
        };
        if let Some(v) = parsed {
            out.push((name.to_ascii_uppercase(), v));
        }
    }
    out
}

struct Resolver<'a> {
    constants: &'a BTreeMap<String, i64>,
    diags: Vec<Diagnostic>,
    trace: Vec<String>,
    shown: BTreeSet<String>,
}

impl Resolver<'_> {
    fn subst(&mut self, e: &mut IntExpr, line: usize, prefix: &str) -> Option<i64> {
        match e {
            IntExpr::Lit(v) => Some(*v),
            IntExpr::Sym(name) => match self.constants.get(name) {
                Some(&v) => {
                    let shown = format!("{}{{{}}}", prefix, name);
                    if self.shown.insert(shown.clone()) {
                        self.trace.push(format!("substituting {} with {}{}", shown, prefix, v));
                    }
                    *e = IntExpr::Lit(v);
                    Some(v)
                }
                None => {
                    self.diags.push(Diagnostic::error(line, format!("semantical error: undefined symbol {{{}}}", name)));
                    None
                }
            },
        }
    }

    fn id(&mut self, e: &mut IntExpr, line: usize, prefix: &str) -> Option<u32> {
        let v = self.subst(e, line, prefix)?;
        match u32::try_from(v) {
            Ok(v) => Some(v),
            Err(_) => {
                self.diags.push(Diagnostic::error(line, format!("semantical error: identifier {} must be non-negative", v)));
                None
            }
        }
    }

    fn ids(&mut self, spec: &mut IdSpec, line: usize) -> Option<Vec<u32>> {
        match spec {
            IdSpec::One(e) => Some(vec![self.id(e, line, "")?]),
            IdSpec::Range(a, b) => {
                let (a, b) = (self.id(a, line, ""), self.id(b, line, ""));
                let (a, b) = (a?, b?);
                if a > b {
                    self.diags.push(Diagnostic::error(line, format!("semantical error: empty interval [{},{}]", a, b)));
                    return None;
                }
                Some((a..=b).collect())
            }
        }
    }

    fn entity(&mut self, e: &mut EntityExpr, line: usize) {
        if let EntitySel::Id(v) = &mut e.sel {
            let prefix = e.prefix.clone();
            self.id(v, line, &prefix);
        }
    }

    fn atom(&mut self, a: &mut AtomExpr, line: usize) {
        match a {
            AtomExpr::Status(_, e) => self.entity(e, line),
            AtomExpr::Phase(e, _, v) | AtomExpr::Errn(e, _, v) | AtomExpr::Errt(e, _, v) => {
                self.entity(e, line);
                self.subst(v, line, "");
            }
            AtomExpr::Deadlocked(a, b) => {
                self.entity(a, line);
                self.entity(b, line);
            }
        }
    }

    fn expr(&mut self, e: &mut Expr, line: usize) {
        match e {
            Expr::Atom(a) => self.atom(a, line),
            Expr::And(a, b) | Expr::Or(a, b) => {
                self.expr(a, line);
                self.expr(b, line);
            }
            Expr::Not(a) => self.expr(a, line),
        }
    }

    fn actions(&mut self, acts: &mut [Action]) {
        for a in acts {
            let line = a.line;
            match &mut a.kind {
                ActionKind::Stop(e)
                | ActionKind::Isolate(e)
                | ActionKind::Start(e)
                | ActionKind::Reboot(e)
                | ActionKind::Restart(e)
                | ActionKind::Enable(e)
                | ActionKind::SendFaulty(e)
                | ActionKind::Remove { target: e, .. } => self.entity(e, line),
                ActionKind::Send { value, target } => {
                    self.subst(value, line, "");
                    self.entity(target, line);
                }
                ActionKind::Warn { code, target } => {
                    if let Some(c) = code {
                        self.subst(c, line, "");
                    }
                    self.entity(target, line);
                }
                ActionKind::Call { n, args } => {
                    self.subst(n, line, "");
                    for x in args {
                        self.subst(x, line, "");
                    }
                }
                ActionKind::Pause(v) => {
                    self.subst(v, line, "");
                }
                ActionKind::Section(s) => self.section(s),
            }
        }
    }

    fn section(&mut self, s: &mut Section) {
        for b in &mut s.branches {
            self.expr(&mut b.guard, b.line);
            self.actions(&mut b.actions);
        }
        if let Some(e) = &mut s.else_actions {
            self.actions(e);
        }
    }
}

fn ticks(v: i64, unit: u64) -> u64 {
    u64::try_from(v).unwrap_or(0).saturating_mul(unit)
}

/// Loads includes, substitutes every `{NAME}` in place and collects the configuration.
pub fn resolve_symbols(ast: &mut Ast, loader: &dyn Fn(&str) -> Option<String>) -> Result<SymbolTable, Vec<Diagnostic>> {
    let mut st = SymbolTable::default();
    let mut diags = Vec::new();
    for item in &ast.config {
        if let ConfigItem::Include(name) = &item.item {
            match loader(name) {
                Some(text) => {
                    let defs = parse_defines(&text);
                    st.trace.push(format!("[ Including file '{}' ...{} associations stored. ]", name, defs.len()));
                    st.constants.extend(defs);
                }
                None => diags.push(Diagnostic::error(item.line, format!("semantical error: cannot read include file '{}'", name))),
            }
        }
    }
    let constants = st.constants.clone();
    let mut r = Resolver { constants: &constants, diags, trace: Vec::new(), shown: BTreeSet::new() };
    let mut nprocs = None;
    let mut seen_ids: BTreeMap<u32, usize> = BTreeMap::new();
    for Spanned { line, item } in &mut ast.config {
        let line = *line;
        match item {
            ConfigItem::Include(_) => {}
            ConfigItem::Nprocs(e) => {
                if let Some(n) = r.id(e, line, "") {
                    if n == 0 {
                        r.diags.push(Diagnostic::error(line, "semantical error: NPROCS must be positive"));
                    }
                    nprocs = Some(n);
                }
            }
            ConfigItem::Define { nodes, extra, role } => {
                let mut list = r.ids(nodes, line).unwrap_or_default();
                for e in extra {
                    list.extend(r.id(e, line, ""));
                }
                for n in list {
                    if st.roles.iter().any(|s| s.item.0 == n) {
                        r.diags.push(Diagnostic::error(line, format!("semantical error: node {} defined twice", n)));
                        continue;
                    }
                    st.roles.push(Spanned { line, item: (n, *role) });
                    st.node_refs.push(Spanned { line, item: n });
                }
            }
            ConfigItem::Timeout { name, value } => {
                let Some(v) = r.subst(value, line, "") else { continue };
                if v <= 0 {
                    r.diags.push(Diagnostic::error(line, "semantical error: timeouts must be positive"));
                    continue;
                }
                let t = &mut st.timeouts;
                let slot = match name {
                    TimeoutName::MiaSend => &mut t.mia_send,
                    TimeoutName::TaiaRecv => &mut t.taia_recv,
                    TimeoutName::MiaRecv => &mut t.mia_recv,
                    TimeoutName::TaiaSend => &mut t.taia_send,
                    TimeoutName::Teif => &mut t.teif,
                    TimeoutName::ImAliveClear => &mut t.ia_clear,
                    TimeoutName::ImAliveSet => &mut t.ia_set,
                    TimeoutName::Other(n) => {
                        st.extra_timeouts.insert(n.clone(), v);
                        continue;
                    }
                };
                *slot = v as u64;
            }
            ConfigItem::NumTasks { node, count } => {
                if let (Some(n), Some(c)) = (r.id(node, line, ""), r.id(count, line, "")) {
                    st.numtasks.insert(n, c);
                    st.node_refs.push(Spanned { line, item: n });
                }
            }
            ConfigItem::Task { ids, name, node, local } => {
                let (ids, node, locals) = (r.ids(ids, line), r.id(node, line, ""), r.ids(local, line));
                let (Some(ids), Some(node), Some(locals)) = (ids, node, locals) else { continue };
                if ids.len() != locals.len() {
                    r.diags.push(Diagnostic::error(
                        line,
                        format!("semantical error: {} unique-ids but {} local ids", ids.len(), locals.len()),
                    ));
                    continue;
                }
                st.node_refs.push(Spanned { line, item: node });
                for (id, local) in ids.into_iter().zip(locals) {
                    if let Some(prev) = seen_ids.insert(id, line) {
                        r.diags.push(Diagnostic::error(
                            line,
                            format!("semantical error: unique-id {} already declared at line {}", id, prev),
                        ));
                        continue;
                    }
                    let name = name.clone().unwrap_or_else(|| format!("T{}", id));
                    st.tasks.push(Spanned { line, item: TaskDescriptor { unique_id: id, name, node, local_id: local } });
                }
            }
            ConfigItem::Alias { ids, mbox, alias } => {
                let (ids, mbox, alias) = (r.ids(ids, line), r.ids(mbox, line), r.ids(alias, line));
                let (Some(ids), Some(mbox), Some(alias)) = (ids, mbox, alias) else { continue };
                if ids.len() != mbox.len() || ids.len() != alias.len() {
                    r.diags.push(Diagnostic::error(line, "semantical error: interval lengths differ"));
                    continue;
                }
                for i in 0..ids.len() {
                    st.aliases.push(AliasDecl { task: ids[i], mbox: i64::from(mbox[i]), alias: i64::from(alias[i]) });
                }
            }
            ConfigItem::Logical { id, name, members } => {
                let Some(id) = r.id(id, line, "") else { continue };
                let members: Vec<u32> = members.iter_mut().filter_map(|m| r.id(m, line, "")).collect();
                if let Some(prev) = seen_ids.insert(id, line) {
                    r.diags.push(Diagnostic::error(
                        line,
                        format!("semantical error: unique-id {} already declared at line {}", id, prev),
                    ));
                    continue;
                }
                let name = name.clone().unwrap_or_else(|| format!("L{}", id));
                st.groups.push(Spanned { line, item: GroupDescriptor { unique_id: id, name, members } });
            }
            ConfigItem::AlphaCount { task, threshold, factor } => {
                if let Some(t) = r.id(task, line, "") {
                    st.alpha.insert(t, (*threshold, *factor));
                }
            }
            ConfigItem::Watchdog(w) => {
                let id = r.id(&mut w.id, line, "");
                let watched = match &mut w.watched {
                    Some(e) => r.id(e, line, "").map(Some),
                    None => Some(None),
                };
                let period = match &mut w.period {
                    Some((v, unit)) => r.subst(v, line, "").map(|v| ticks(v, *unit)),
                    None => Some(0),
                };
                let on_error = match &mut w.on_error {
                    Some(WatchdogOnError::WarnTask(t)) => r.id(t, line, "").map(WatchdogAction::WarnTask),
                    Some(WatchdogOnError::WarnBackbone) => Some(WatchdogAction::WarnBackbone),
                    Some(WatchdogOnError::Reboot) => Some(WatchdogAction::Reboot),
                    Some(WatchdogOnError::Restart) => Some(WatchdogAction::Restart),
                    None => {
                        r.diags.push(Diagnostic::error(line, "semantical error: WATCHDOG needs an ON ERROR clause"));
                        None
                    }
                };
                let (Some(id), Some(watched), Some(period), Some(on_error)) = (id, watched, period, on_error) else { continue };
                if let Some(a) = w.alpha {
                    st.alpha.insert(id, a);
                }
                st.watchdogs.push(Spanned {
                    line,
                    item: WatchdogConfig { watchdog_id: id, watched, period, on_error, alpha: w.alpha },
                });
            }
            ConfigItem::NVersion(nv) => {
                let Some(nv_id) = r.id(&mut nv.id, line, "") else { continue };
                let mut versions = Vec::new();
                for v in &mut nv.versions {
                    let rank = r.id(&mut v.rank, v.line, "");
                    let task = r.id(&mut v.task, v.line, "");
                    let timeout = match &mut v.timeout {
                        Some((t, unit)) => r.subst(t, v.line, "").map(|t| ticks(t, *unit)),
                        None => Some(DEFAULT_VERSION_TIMEOUT),
                    };
                    if let (Some(rank), Some(task), Some(timeout)) = (rank, task, timeout) {
                        versions.push(VersionSpec { rank, task, spare: v.spare, timeout });
                    }
                }
                let algorithm = match nv.algorithm.as_deref() {
                    None => Algorithm::Majority,
                    Some(a) => match Algorithm::from_name(a) {
                        Some(a) => a,
                        None => {
                            r.diags.push(Diagnostic::error(line, format!("semantical error: unknown voting algorithm {}", a)));
                            continue;
                        }
                    },
                };
                let on_success = nv.on_success.as_mut().and_then(|e| r.id(e, line, ""));
                let on_error = nv.on_error.as_mut().and_then(|e| r.id(e, line, ""));
                let params = VoteParams { epsilon: nv.epsilon.unwrap_or(0.0), ..VoteParams::default() };
                st.nversions.push(Spanned {
                    line,
                    item: NVersionConfig {
                        nv_id,
                        versions,
                        algorithm,
                        metric: nv.metric.clone().unwrap_or_else(|| "bitwise".into()),
                        params,
                        on_success,
                        on_error,
                    },
                });
            }
            ConfigItem::Inject { fault, on_node, id, after } => {
                let (Some(id), Some(at)) = (r.id(id, line, ""), r.subst(after, line, "")) else { continue };
                let target = if *on_node { EntityRef::node(id) } else { EntityRef::task(id) };
                if *on_node {
                    st.node_refs.push(Spanned { line, item: id });
                }
                st.injections.push(Spanned { line, item: InjectionSpec { fault: *fault, target, at: ticks(at, 1) } });
            }
        }
    }
    for s in &mut ast.sections {
        r.section(s);
    }
    st.nprocs_declared = nprocs.is_some();
    st.nprocs = nprocs.unwrap_or_else(|| st.node_refs.iter().map(|s| s.item + 1).max().unwrap_or(1));
    st.trace.append(&mut r.trace);
    if r.diags.iter().any(|d| d.is_error()) {
        Err(r.diags)
    } else {
        Ok(st)
    }
}
