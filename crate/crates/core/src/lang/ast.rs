use crate::model::{EntityKind, RemoveSelector, Status};
use crate::rcode::{CompareOp, Role};

/// Integer that may still be a `{NAME}` constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntExpr {
    Lit(i64),
    Sym(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdSpec {
    One(IntExpr),
    Range(IntExpr, IntExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntitySel {
    Id(IntExpr),
    /// `@k`, or `@` alone for the whole guard.
    Match(Option<i64>),
    NotMatch(i64),
    AtomEntity(i64),
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityExpr {
    pub kind: EntityKind,
    pub sel: EntitySel,
    /// Prefix as written, for the substitution trace.
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeoutName {
    MiaSend,
    TaiaRecv,
    MiaRecv,
    TaiaSend,
    Teif,
    ImAliveClear,
    ImAliveSet,
    /// Accepted and kept, but unused by the backbone model.
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WatchdogOnError {
    WarnTask(IntExpr),
    WarnBackbone,
    Reboot,
    Restart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WatchdogDecl {
    pub id: IntExpr,
    pub watched: Option<IntExpr>,
    /// Period in ticks once the unit is applied.
    pub period: Option<(IntExpr, u64)>,
    pub on_error: Option<WatchdogOnError>,
    pub alpha: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VersionDecl {
    pub line: usize,
    pub rank: IntExpr,
    pub spare: bool,
    pub task: IntExpr,
    pub timeout: Option<(IntExpr, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NVersionDecl {
    pub id: IntExpr,
    pub logical: bool,
    pub versions: Vec<VersionDecl>,
    pub algorithm: Option<String>,
    pub metric: Option<String>,
    pub epsilon: Option<f64>,
    pub on_success: Option<IntExpr>,
    pub on_error: Option<IntExpr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    Benign,
    Malicious,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigItem {
    Include(String),
    Nprocs(IntExpr),
    Define { nodes: IdSpec, extra: Vec<IntExpr>, role: Role },
    Timeout { name: TimeoutName, value: IntExpr },
    NumTasks { node: IntExpr, count: IntExpr },
    Task { ids: IdSpec, name: Option<String>, node: IntExpr, local: IdSpec },
    Alias { ids: IdSpec, mbox: IdSpec, alias: IdSpec },
    Logical { id: IntExpr, name: Option<String>, members: Vec<IntExpr> },
    AlphaCount { task: IntExpr, threshold: f64, factor: f64 },
    Watchdog(WatchdogDecl),
    NVersion(NVersionDecl),
    Inject { fault: FaultKind, on_node: bool, id: IntExpr, after: IntExpr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned<T> {
    pub line: usize,
    pub item: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomExpr {
    Status(Status, EntityExpr),
    Phase(EntityExpr, CompareOp, IntExpr),
    Errn(EntityExpr, CompareOp, IntExpr),
    Errt(EntityExpr, CompareOp, IntExpr),
    Deadlocked(EntityExpr, EntityExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Atom(AtomExpr),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    /// Atoms in evaluation order.
    pub fn atoms(&self) -> Vec<&AtomExpr> {
        let mut v = Vec::new();
        fn walk<'a>(e: &'a Expr, v: &mut Vec<&'a AtomExpr>) {
            match e {
                Expr::Atom(a) => v.push(a),
                Expr::And(a, b) | Expr::Or(a, b) => {
                    walk(a, v);
                    walk(b, v);
                }
                Expr::Not(a) => walk(a, v),
            }
        }
        walk(self, &mut v);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionKind {
    Stop(EntityExpr),
    Isolate(EntityExpr),
    Start(EntityExpr),
    Reboot(EntityExpr),
    Restart(EntityExpr),
    Enable(EntityExpr),
    Send { value: IntExpr, target: EntityExpr },
    SendFaulty(EntityExpr),
    Warn { code: Option<IntExpr>, target: EntityExpr },
    Remove { selector: RemoveSelector, target: EntityExpr },
    Call { n: IntExpr, args: Vec<IntExpr> },
    Pause(IntExpr),
    Section(Section),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub line: usize,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub line: usize,
    pub guard: Expr,
    pub actions: Vec<Action>,
}

/// `IF [..] THEN .. (ELIF [..] THEN ..)* (ELSE ..)? FI`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub line: usize,
    pub branches: Vec<Branch>,
    pub else_actions: Option<Vec<Action>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ast {
    pub config: Vec<Spanned<ConfigItem>>,
    pub sections: Vec<Section>,
}
