use super::ast::*;
use super::lexer::{Tok, Token};
use super::Diagnostic;
use crate::model::{EntityKind, RemoveSelector, Status};
use crate::rcode::{CompareOp, Role};

type PResult<T> = Result<T, Diagnostic>;

const ENTITY_PREFIXES: [(&str, EntityKind); 8] = [
    ("LOGICAL", EntityKind::Group),
    ("GROUP", EntityKind::Group),
    ("TASK", EntityKind::Task),
    ("NODE", EntityKind::Node),
    ("T", EntityKind::Task),
    ("N", EntityKind::Node),
    ("G", EntityKind::Group),
    ("L", EntityKind::Group),
];

/// Splits `TASK14` into (`TASK`, 14); a bare prefix yields `None` for the number.
fn split_prefixed<'a>(word: &str, prefixes: &[&'a str]) -> Option<(&'a str, Option<i64>)> {
    for p in prefixes {
        if word == *p {
            return Some((p, None));
        }
        if let Some(rest) = word.strip_prefix(p) {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                return rest.parse().ok().map(|n| (*p, Some(n)));
            }
        }
    }
    None
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub diags: Vec<Diagnostic>,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, diags: Vec::new() }
    }

    fn peek(&self) -> &Tok {
        self.toks.get(self.pos).map(|t| &t.tok).unwrap_or(&Tok::Newline)
    }

    fn peek_at(&self, k: usize) -> &Tok {
        self.toks.get(self.pos + k).map(|t| &t.tok).unwrap_or(&Tok::Newline)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map(|t| t.line).unwrap_or(1)
    }

    fn eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        if !self.eof() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error(self.line(), format!("syntax error: {}", msg.into())))
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(w) => format!("'{}'", w),
            Tok::Int(n) => format!("'{}'", n),
            Tok::Real(r) => format!("'{}'", r),
            Tok::Str(s) => format!("\"{}\"", s),
            Tok::Brace(b) => format!("'{{{}}}'", b),
            Tok::Newline => "end of line".into(),
            t => format!("{:?}", t),
        }
    }

    fn at_ident(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == w)
    }

    fn ident(&self) -> Option<&str> {
        match self.peek() {
            Tok::Ident(x) => Some(x.as_str()),
            _ => None,
        }
    }

    fn eat_ident(&mut self, w: &str) -> bool {
        if self.at_ident(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self, w: &str) -> PResult<()> {
        if self.eat_ident(w) {
            Ok(())
        } else {
            self.err(format!("expected {} but found {}", w, self.describe()))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(format!("expected {} but found {}", what, self.describe()))
        }
    }

    fn skip_newlines(&mut self) {
        while !self.eof() && *self.peek() == Tok::Newline {
            self.pos += 1;
        }
    }

    fn skip_line(&mut self) {
        while !self.eof() {
            if self.bump() == Tok::Newline {
                break;
            }
        }
    }

    /// Skips to just past the FI closing the current section.
    fn skip_section(&mut self) {
        let mut depth = 1;
        while !self.eof() {
            match self.bump() {
                Tok::Ident(w) if w == "IF" => depth += 1,
                Tok::Ident(w) if w == "FI" => {
                    depth -= 1;
                    if depth == 0 {
                        self.skip_line();
                        return;
                    }
                }
                _ => {}
            }
        }
    }

    fn end_stmt(&mut self) -> PResult<()> {
        self.eat(&Tok::Dot);
        if self.eof() || self.eat(&Tok::Newline) {
            Ok(())
        } else {
            self.err(format!("unexpected {}", self.describe()))
        }
    }

    fn int(&mut self) -> PResult<IntExpr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.pos += 1;
                Ok(IntExpr::Lit(n))
            }
            Tok::Brace(b) => {
                self.pos += 1;
                Ok(IntExpr::Sym(b))
            }
            Tok::Minus => {
                if let Tok::Int(n) = self.peek_at(1).clone() {
                    self.pos += 2;
                    Ok(IntExpr::Lit(-n))
                } else {
                    self.err("expected a number after '-'")
                }
            }
            _ => self.err(format!("expected a number but found {}", self.describe())),
        }
    }

    fn real(&mut self) -> PResult<f64> {
        let neg = self.eat(&Tok::Minus);
        let v = match self.peek().clone() {
            Tok::Real(r) => r,
            Tok::Int(n) => n as f64,
            _ => return self.err(format!("expected a real number but found {}", self.describe())),
        };
        self.pos += 1;
        Ok(if neg { -v } else { v })
    }

    fn id_spec(&mut self) -> PResult<IdSpec> {
        if self.eat(&Tok::LBracket) {
            let a = self.int()?;
            self.expect(Tok::Comma, "','")?;
            let b = self.int()?;
            self.expect(Tok::RBracket, "']'")?;
            Ok(IdSpec::Range(a, b))
        } else {
            Ok(IdSpec::One(self.int()?))
        }
    }

    /// `KW n`, `KWn`, `KW {X}`.
    fn prefixed_int(&mut self, kws: &[&str]) -> PResult<IntExpr> {
        let word = self.ident().map(str::to_string);
        match word.as_deref().and_then(|w| split_prefixed(w, kws)) {
            Some((_, Some(n))) => {
                self.pos += 1;
                Ok(IntExpr::Lit(n))
            }
            Some((_, None)) => {
                self.pos += 1;
                self.int()
            }
            None => self.err(format!("expected {} but found {}", kws[0], self.describe())),
        }
    }

    fn entity(&mut self) -> PResult<EntityExpr> {
        let word = match self.ident() {
            Some(w) => w.to_string(),
            None => return self.err(format!("expected an entity but found {}", self.describe())),
        };
        let prefixes: Vec<&str> = ENTITY_PREFIXES.iter().map(|(p, _)| *p).collect();
        let (prefix, num) = match split_prefixed(&word, &prefixes) {
            Some(x) => x,
            None => return self.err(format!("expected an entity but found '{}'", word)),
        };
        let kind = ENTITY_PREFIXES.iter().find(|(p, _)| *p == prefix).unwrap().1;
        self.pos += 1;
        let mk = |sel| Ok(EntityExpr { kind, sel, prefix: prefix.to_string() });
        if let Some(n) = num {
            return mk(EntitySel::Id(IntExpr::Lit(n)));
        }
        match self.peek().clone() {
            Tok::Int(_) | Tok::Brace(_) => {
                let v = self.int()?;
                mk(EntitySel::Id(v))
            }
            Tok::At => {
                self.pos += 1;
                if let Tok::Int(k) = *self.peek() {
                    self.pos += 1;
                    mk(EntitySel::Match(Some(k)))
                } else {
                    mk(EntitySel::Match(None))
                }
            }
            Tok::Tilde | Tok::Dollar => {
                let t = self.bump();
                if let Tok::Int(k) = *self.peek() {
                    self.pos += 1;
                    mk(if t == Tok::Tilde { EntitySel::NotMatch(k) } else { EntitySel::AtomEntity(k) })
                } else {
                    self.err("expected an atom index")
                }
            }
            Tok::Star => {
                self.pos += 1;
                mk(EntitySel::Star)
            }
            _ => self.err(format!("expected an identifier after {} but found {}", prefix, self.describe())),
        }
    }

    pub fn parse(mut self) -> (Ast, Vec<Diagnostic>) {
        let mut ast = Ast::default();
        loop {
            self.skip_newlines();
            if self.eof() {
                break;
            }
            let line = self.line();
            if self.eat_ident("IF") {
                match self.section(line) {
                    Ok(s) => ast.sections.push(s),
                    Err(d) => {
                        self.diags.push(d);
                        self.skip_section();
                    }
                }
                continue;
            }
            match self.config_item() {
                Ok(item) => ast.config.push(Spanned { line, item }),
                Err(d) => {
                    self.diags.push(d);
                    self.skip_line();
                }
            }
        }
        (ast, self.diags)
    }

    fn unit(&mut self) -> u64 {
        let u = match self.ident() {
            Some("MS" | "MSEC" | "MILLISEC" | "MILLISECONDS") => 1_000,
            Some("US" | "USEC" | "MICROSEC" | "MICROSECONDS" | "TICKS" | "TICK") => 1,
            Some("S" | "SEC" | "SECONDS") => 1_000_000,
            _ => return 1,
        };
        self.pos += 1;
        u
    }

    fn config_item(&mut self) -> PResult<ConfigItem> {
        let word = match self.ident() {
            Some(w) => w.to_string(),
            None => return self.err(format!("unexpected {}", self.describe())),
        };
        if word.ends_with("_TIMEOUT") {
            self.pos += 1;
            self.expect(Tok::Assign, "'='")?;
            let value = self.int()?;
            self.end_stmt()?;
            let name = match word.as_str() {
                "MIA_SEND_TIMEOUT" => TimeoutName::MiaSend,
                "TAIA_RECV_TIMEOUT" => TimeoutName::TaiaRecv,
                "MIA_RECV_TIMEOUT" => TimeoutName::MiaRecv,
                "TAIA_SEND_TIMEOUT" => TimeoutName::TaiaSend,
                "TEIF_TIMEOUT" => TimeoutName::Teif,
                "I'M_ALIVE_CLEAR_TIMEOUT" | "IM_ALIVE_CLEAR_TIMEOUT" => TimeoutName::ImAliveClear,
                "I'M_ALIVE_SET_TIMEOUT" | "IM_ALIVE_SET_TIMEOUT" => TimeoutName::ImAliveSet,
                other => TimeoutName::Other(other.to_string()),
            };
            return Ok(ConfigItem::Timeout { name, value });
        }
        match word.as_str() {
            "INCLUDE" => {
                self.pos += 1;
                let f = match self.bump() {
                    Tok::Str(s) => s,
                    _ => return self.err("expected a file name"),
                };
                self.end_stmt()?;
                Ok(ConfigItem::Include(f))
            }
            "NPROCS" => {
                self.pos += 1;
                self.eat(&Tok::Assign);
                let n = self.int()?;
                self.end_stmt()?;
                Ok(ConfigItem::Nprocs(n))
            }
            "DEFINE" => {
                self.pos += 1;
                let a = self.int()?;
                let nodes = if self.eat(&Tok::Minus) { IdSpec::Range(a, self.int()?) } else { IdSpec::One(a) };
                let mut extra = Vec::new();
                while self.eat(&Tok::Comma) {
                    extra.push(self.int()?);
                }
                self.expect(Tok::Assign, "'='")?;
                let role = match self.ident() {
                    Some("MANAGER") => Role::Manager,
                    Some("ASSISTANT" | "ASSISTANTS") => Role::Assistant,
                    _ => return self.err(format!("expected MANAGER or ASSISTANTS but found {}", self.describe())),
                };
                self.pos += 1;
                self.end_stmt()?;
                Ok(ConfigItem::Define { nodes, extra, role })
            }
            "NUMTASKS" => {
                self.pos += 1;
                let bracket = self.eat(&Tok::LBracket);
                let node = self.int()?;
                if bracket {
                    self.expect(Tok::RBracket, "']'")?;
                }
                self.expect(Tok::Assign, "'='")?;
                let count = self.int()?;
                self.end_stmt()?;
                Ok(ConfigItem::NumTasks { node, count })
            }
            "LOGICAL" => {
                self.pos += 1;
                self.logical()
            }
            "ALPHACOUNT" => {
                self.pos += 1;
                let task = if self.ident().is_some() { self.prefixed_int(&["TASK", "T"])? } else { self.int()? };
                let (threshold, factor) = self.alpha_body()?;
                self.end_stmt()?;
                Ok(ConfigItem::AlphaCount { task, threshold, factor })
            }
            "WATCHDOG" => {
                self.pos += 1;
                self.watchdog()
            }
            "NVERSION" | "N-VERSION" | "NVERSIONS" => {
                self.pos += 1;
                self.nversion()
            }
            "INJECT" => {
                self.pos += 1;
                let fault = match self.ident() {
                    Some("BFAULT") => FaultKind::Benign,
                    Some("MFAULT") => FaultKind::Malicious,
                    _ => return self.err("expected BFAULT or MFAULT"),
                };
                self.pos += 1;
                self.expect_ident("ON")?;
                let on_node = match self.ident() {
                    Some("NODE") => true,
                    Some("COMPONENT") => false,
                    _ => return self.err("expected NODE or COMPONENT"),
                };
                self.pos += 1;
                let id = self.int()?;
                self.expect_ident("AFTER")?;
                let after = self.int()?;
                self.eat_ident("TICKS");
                self.end_stmt()?;
                Ok(ConfigItem::Inject { fault, on_node, id, after })
            }
            w if split_prefixed(w, &["TASK", "T"]).is_some() => {
                self.task_decl()
            }
            _ => self.err(format!("unexpected '{}'", word)),
        }
    }

    fn task_decl(&mut self) -> PResult<ConfigItem> {
        let word = self.ident().unwrap().to_string();
        let ids = match split_prefixed(&word, &["TASK", "T"]) {
            Some((_, Some(n))) => {
                self.pos += 1;
                IdSpec::One(IntExpr::Lit(n))
            }
            _ => {
                self.pos += 1;
                self.id_spec()?
            }
        };
        let name = if self.eat(&Tok::Assign) {
            match self.bump() {
                Tok::Str(s) => Some(s),
                _ => return self.err("expected a task name"),
            }
        } else {
            None
        };
        self.expect_ident("IS")?;
        if self.eat_ident("MBOX") {
            let mbox = self.id_spec()?;
            self.expect(Tok::Comma, "','")?;
            self.expect_ident("ALIAS")?;
            let alias = self.id_spec()?;
            self.end_stmt()?;
            return Ok(ConfigItem::Alias { ids, mbox, alias });
        }
        let node = self.prefixed_int(&["NODE", "N"])?;
        self.expect(Tok::Comma, "','")?;
        let local = match self.ident().map(str::to_string) {
            Some(w) => match split_prefixed(&w, &["TASKID"]) {
                Some((_, Some(n))) => {
                    self.pos += 1;
                    IdSpec::One(IntExpr::Lit(n))
                }
                Some((_, None)) => {
                    self.pos += 1;
                    self.id_spec()?
                }
                None => return self.err(format!("expected TASKID but found '{}'", w)),
            },
            None => return self.err(format!("expected TASKID but found {}", self.describe())),
        };
        self.eat(&Tok::Comma);
        self.end_stmt()?;
        Ok(ConfigItem::Task { ids, name, node, local })
    }

    fn logical(&mut self) -> PResult<ConfigItem> {
        let id = self.int()?;
        let name = if self.eat(&Tok::Assign) {
            match self.bump() {
                Tok::Str(s) => Some(s),
                _ => return self.err("expected a logical name"),
            }
        } else {
            None
        };
        self.expect_ident("IS")?;
        let mut members = Vec::new();
        loop {
            self.skip_newlines();
            if self.eof() {
                return self.err("missing END LOGICAL");
            }
            if self.eat_ident("END") {
                self.eat_ident("LOGICAL");
                break;
            }
            let m = if self.ident().is_some() { self.prefixed_int(&["TASK", "T"])? } else { self.int()? };
            members.push(m);
            self.eat(&Tok::Comma);
        }
        self.end_stmt()?;
        Ok(ConfigItem::Logical { id, name, members })
    }

    /// `IS threshold = x, factor = y END [ALPHACOUNT]`
    fn alpha_body(&mut self) -> PResult<(f64, f64)> {
        self.expect_ident("IS")?;
        let (mut threshold, mut factor) = (None, None);
        loop {
            self.skip_newlines();
            if self.eof() {
                return self.err("missing END after alpha-count parameters");
            }
            if self.eat_ident("END") {
                self.eat_ident("ALPHACOUNT");
                break;
            }
            let key = self.ident().map(str::to_string);
            match key.as_deref() {
                Some("THRESHOLD") => {
                    self.pos += 1;
                    self.expect(Tok::Assign, "'='")?;
                    threshold = Some(self.real()?);
                }
                Some("FACTOR") => {
                    self.pos += 1;
                    self.expect(Tok::Assign, "'='")?;
                    factor = Some(self.real()?);
                }
                _ => return self.err(format!("expected threshold or factor but found {}", self.describe())),
            }
            self.eat(&Tok::Comma);
        }
        match (threshold, factor) {
            (Some(t), Some(f)) => Ok((t, f)),
            _ => self.err("alpha-count needs both threshold and factor"),
        }
    }

    fn block<T>(&mut self, end: &[&str], what: &str, mut line_fn: impl FnMut(&mut Self, &str) -> PResult<T>) -> PResult<()> {
        loop {
            self.skip_newlines();
            if self.eof() {
                return self.err(format!("missing END {}", what));
            }
            if self.at_ident("END") && matches!(self.peek_at(1), Tok::Ident(w) if end.contains(&w.as_str())) {
                self.pos += 2;
                return self.end_stmt();
            }
            let word = match self.ident() {
                Some(w) => w.to_string(),
                None => {
                    let d = Diagnostic::error(self.line(), format!("syntax error: unexpected {}", self.describe()));
                    self.diags.push(d);
                    self.skip_line();
                    continue;
                }
            };
            if let Err(d) = line_fn(self, &word) {
                self.diags.push(d);
                self.skip_line();
            }
        }
    }

    fn watchdog(&mut self) -> PResult<ConfigItem> {
        let id = if self.ident().is_some() { self.prefixed_int(&["TASK", "T"])? } else { self.int()? };
        let watched = if self.eat_ident("WATCHES") {
            Some(if self.ident().is_some() { self.prefixed_int(&["TASK", "T"])? } else { self.int()? })
        } else {
            None
        };
        self.end_stmt()?;
        let mut decl = WatchdogDecl { id, watched, period: None, on_error: None, alpha: None };
        self.block(&["WATCHDOG"], "WATCHDOG", |p, word| {
            match word {
                "HEARTBEATS" => {
                    p.pos += 1;
                    p.expect_ident("EVERY")?;
                    let v = p.int()?;
                    let u = p.unit();
                    decl.period = Some((v, u));
                }
                "ON" => {
                    p.pos += 1;
                    p.expect_ident("ERROR")?;
                    decl.on_error = Some(if p.eat_ident("WARN") {
                        if p.eat_ident("BACKBONE") {
                            WatchdogOnError::WarnBackbone
                        } else {
                            WatchdogOnError::WarnTask(p.prefixed_int(&["TASK", "T"])?)
                        }
                    } else if p.eat_ident("REBOOT") {
                        WatchdogOnError::Reboot
                    } else if p.eat_ident("RESTART") {
                        WatchdogOnError::Restart
                    } else {
                        return p.err("expected WARN, REBOOT or RESTART");
                    });
                }
                "ALPHACOUNT" => {
                    p.pos += 1;
                    decl.alpha = Some(p.alpha_body()?);
                }
                _ => return p.err(format!("unexpected '{}' in WATCHDOG block", word)),
            }
            p.end_stmt()
        })?;
        Ok(ConfigItem::Watchdog(decl))
    }

    fn nversion(&mut self) -> PResult<ConfigItem> {
        let logical = if self.eat_ident("LOGICAL") {
            true
        } else {
            self.eat_ident("TASK");
            false
        };
        let id = if self.ident().is_some() { self.prefixed_int(&["TASK", "T", "LOGICAL", "L"])? } else { self.int()? };
        self.end_stmt()?;
        let mut decl = NVersionDecl {
            id,
            logical,
            versions: Vec::new(),
            algorithm: None,
            metric: None,
            epsilon: None,
            on_success: None,
            on_error: None,
        };
        self.block(&["NVERSION", "N-VERSION", "NVERSIONS"], "N-VERSION", |p, word| {
            let line = p.line();
            match word {
                "VERSION" => {
                    p.pos += 1;
                    let rank = p.int()?;
                    p.expect_ident("IS")?;
                    let spare = p.eat_ident("SPARE");
                    let task = p.prefixed_int(&["TASK", "T"])?;
                    let timeout = if p.eat_ident("TIMEOUT") {
                        let v = p.int()?;
                        Some((v, p.unit()))
                    } else {
                        None
                    };
                    decl.versions.push(VersionDecl { line, rank, spare, task, timeout });
                }
                "VOTING" => {
                    p.pos += 1;
                    p.expect_ident("ALGORITHM")?;
                    p.expect_ident("IS")?;
                    match p.bump() {
                        Tok::Ident(a) => decl.algorithm = Some(a),
                        _ => return p.err("expected an algorithm name"),
                    }
                }
                "METRIC" => {
                    p.pos += 1;
                    match p.bump() {
                        Tok::Str(s) | Tok::Ident(s) => decl.metric = Some(s),
                        _ => return p.err("expected a metric name"),
                    }
                }
                "EPSILON" => {
                    p.pos += 1;
                    p.eat(&Tok::Assign);
                    decl.epsilon = Some(p.real()?);
                }
                "ON" => {
                    p.pos += 1;
                    if p.eat_ident("SUCCESS") {
                        decl.on_success = Some(p.prefixed_int(&["TASK", "T"])?);
                    } else if p.eat_ident("ERROR") {
                        decl.on_error = Some(p.prefixed_int(&["TASK", "T"])?);
                    } else {
                        return p.err("expected SUCCESS or ERROR");
                    }
                }
                _ => return p.err(format!("unexpected '{}' in N-VERSION block", word)),
            }
            p.end_stmt()
        })?;
        Ok(ConfigItem::NVersion(decl))
    }

    fn section(&mut self, line: usize) -> PResult<Section> {
        let guard = self.guard()?;
        self.skip_newlines();
        self.expect_ident("THEN")?;
        let actions = self.actions()?;
        let mut sec = Section { line, branches: vec![Branch { line, guard, actions }], else_actions: None };
        loop {
            let l = self.line();
            if self.eat_ident("ELIF") {
                let guard = self.guard()?;
                self.skip_newlines();
                self.expect_ident("THEN")?;
                let actions = self.actions()?;
                sec.branches.push(Branch { line: l, guard, actions });
            } else if self.eat_ident("ELSE") {
                if sec.else_actions.is_some() {
                    return self.err("second ELSE in one section");
                }
                sec.else_actions = Some(self.actions()?);
            } else if self.eat_ident("FI") {
                self.end_stmt()?;
                return Ok(sec);
            } else {
                return Err(Diagnostic::error(self.line(), format!("syntax error: missing FI for IF at line {}", line)));
            }
        }
    }

    fn guard(&mut self) -> PResult<Expr> {
        self.expect(Tok::LBracket, "'['")?;
        let e = self.expr()?;
        self.expect(Tok::RBracket, "']'")?;
        Ok(e)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.and_expr()?;
        while self.eat_ident("OR") || self.eat(&Tok::Bar) {
            let right = self.and_expr()?;
            left = Expr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        while self.eat_ident("AND") || self.eat(&Tok::Amp) {
            let right = self.unary()?;
            left = Expr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_ident("NOT") || self.eat(&Tok::Bang) {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let e = self.expr()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(e);
        }
        Ok(Expr::Atom(self.atom()?))
    }

    fn compare(&mut self) -> PResult<CompareOp> {
        let op = match self.peek() {
            Tok::EqEq | Tok::Assign => CompareOp::Eq,
            Tok::Ne => CompareOp::Ne,
            Tok::Gt => CompareOp::Gt,
            Tok::Ge => CompareOp::Ge,
            Tok::Lt => CompareOp::Lt,
            Tok::Le => CompareOp::Le,
            _ => return self.err(format!("expected a comparison but found {}", self.describe())),
        };
        self.pos += 1;
        Ok(op)
    }

    fn atom(&mut self) -> PResult<AtomExpr> {
        let word = match self.ident() {
            Some(w) => w.to_string(),
            None => return self.err(format!("expected a condition but found {}", self.describe())),
        };
        if let Some(st) = Status::from_name(&word) {
            self.pos += 1;
            if matches!(self.peek(), Tok::At | Tok::Tilde) {
                return self.err(format!("{} needs an entity", word));
            }
            return Ok(AtomExpr::Status(st, self.entity()?));
        }
        match word.as_str() {
            "PHASE" | "ERRN" | "ERRT" => {
                self.pos += 1;
                self.expect(Tok::LParen, "'('")?;
                let e = self.entity()?;
                self.expect(Tok::RParen, "')'")?;
                let op = self.compare()?;
                let v = self.int()?;
                Ok(match word.as_str() {
                    "PHASE" => AtomExpr::Phase(e, op, v),
                    "ERRN" => AtomExpr::Errn(e, op, v),
                    _ => AtomExpr::Errt(e, op, v),
                })
            }
            "DEADLOCKED" => {
                self.pos += 1;
                let a = self.entity()?;
                self.eat(&Tok::Comma);
                let b = self.entity()?;
                Ok(AtomExpr::Deadlocked(a, b))
            }
            _ => self.err(format!("unknown condition '{}'", word)),
        }
    }

    fn actions(&mut self) -> PResult<Vec<Action>> {
        let mut out = Vec::new();
        loop {
            self.skip_newlines();
            if self.eof() {
                return Ok(out);
            }
            if matches!(self.ident(), Some("ELIF" | "ELSE" | "FI")) {
                return Ok(out);
            }
            let line = self.line();
            if self.eat_ident("IF") {
                let s = self.section(line)?;
                out.push(Action { line, kind: ActionKind::Section(s) });
                continue;
            }
            match self.action(line) {
                Ok(mut acts) => {
                    out.append(&mut acts);
                    if !matches!(self.ident(), Some("ELIF" | "ELSE" | "FI")) {
                        if let Err(d) = self.end_stmt() {
                            self.diags.push(d);
                            self.skip_line();
                        }
                    }
                }
                Err(d) => {
                    self.diags.push(d);
                    self.skip_line();
                }
            }
        }
    }

    fn action(&mut self, line: usize) -> PResult<Vec<Action>> {
        let word = match self.ident() {
            Some(w) => w.to_string(),
            None => return self.err(format!("expected an action but found {}", self.describe())),
        };
        self.pos += 1;
        let one = |kind| Ok(vec![Action { line, kind }]);
        match word.as_str() {
            "STOP" => one(ActionKind::Stop(self.entity()?)),
            "ISOLATE" => one(ActionKind::Isolate(self.entity()?)),
            "START" => one(ActionKind::Start(self.entity()?)),
            "REBOOT" => one(ActionKind::Reboot(self.entity()?)),
            "RESTART" => one(ActionKind::Restart(self.entity()?)),
            "ENABLE" => one(ActionKind::Enable(self.entity()?)),
            "SEND" => {
                if self.eat_ident("FAULTY") {
                    one(ActionKind::SendFaulty(self.entity()?))
                } else {
                    let value = self.int()?;
                    let target = self.entity()?;
                    one(ActionKind::Send { value, target })
                }
            }
            "WARN" => {
                let target = self.entity()?;
                let mut code = None;
                if self.eat(&Tok::LParen) {
                    self.expect_ident("ERR")?;
                    code = Some(self.int()?);
                    self.entity()?;
                    self.expect(Tok::RParen, "')'")?;
                }
                one(ActionKind::Warn { code, target })
            }
            "ERR" => {
                let code = self.int()?;
                self.entity()?;
                let mut out = Vec::new();
                self.expect_ident("WARN")?;
                out.push(Action { line, kind: ActionKind::Warn { code: Some(code.clone()), target: self.entity()? } });
                while self.eat_ident("AND") {
                    self.expect_ident("WARN")?;
                    out.push(Action { line, kind: ActionKind::Warn { code: Some(code.clone()), target: self.entity()? } });
                }
                Ok(out)
            }
            "REMOVE" => {
                let selector = if self.eat_ident("PHASE") {
                    RemoveSelector::Phase
                } else if self.eat_ident("ANY") {
                    RemoveSelector::Any
                } else {
                    return self.err("expected PHASE or ANY");
                };
                let target = self.entity()?;
                self.expect_ident("FROM")?;
                self.expect_ident("ERRORLIST")?;
                one(ActionKind::Remove { selector, target })
            }
            "CALL" => {
                let n = self.int()?;
                let mut args = Vec::new();
                if self.eat(&Tok::LParen) {
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.int()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma, "','")?;
                        }
                    }
                }
                one(ActionKind::Call { n, args })
            }
            "PAUSE" => one(ActionKind::Pause(self.int()?)),
            _ => {
                self.pos -= 1;
                self.err(format!("unknown action '{}'", word))
            }
        }
    }
}
