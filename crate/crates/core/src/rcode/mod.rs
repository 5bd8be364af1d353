//! Recovery code: opcode set, binary format, listing and interpreter.

mod codec;
mod listing;
pub mod vm;

pub use codec::{decode, encode, DecodeError, MAGIC, VERSION};
pub use listing::{render_listing, render_line};
pub(crate) use listing::selector_code;
pub use vm::{execute, ActionLog, ActionRequest, ActionSink, ActionVerb, Outcome, TraceLine, Vm, VmError};

use crate::model::{EntityKind, EntityRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    /// Halts the program when both operands are -1, otherwise stops an entity.
    Stop,
    SetRole,
    If,
    Fi,
    StorePhase,
    StoreStatus,
    StoreErrn,
    StoreErrt,
    Compare,
    And,
    Or,
    Not,
    False,
    Push,
    Send,
    Start,
    Restart,
    Isolate,
    Enable,
    Reboot,
    Warn,
    Remove,
    Call,
    Pause,
    OaNew,
    StoreDeadlocked,
    Unknown(i32),
}

const TABLE: [(Opcode, &str); 26] = [
    (Opcode::Stop, "STOP"),
    (Opcode::SetRole, "SET_ROLE"),
    (Opcode::If, "IF"),
    (Opcode::Fi, "FI"),
    (Opcode::StorePhase, "STORE_PHASE"),
    (Opcode::StoreStatus, "STORE_STATUS"),
    (Opcode::StoreErrn, "STORE_ERRN"),
    (Opcode::StoreErrt, "STORE_ERRT"),
    (Opcode::Compare, "COMPARE"),
    (Opcode::And, "AND"),
    (Opcode::Or, "OR"),
    (Opcode::Not, "NOT"),
    (Opcode::False, "FALSE"),
    (Opcode::Push, "PUSH"),
    (Opcode::Send, "SEND"),
    (Opcode::Start, "START"),
    (Opcode::Restart, "RESTART"),
    (Opcode::Isolate, "ISOLATE"),
    (Opcode::Enable, "ENABLE"),
    (Opcode::Reboot, "REBOOT"),
    (Opcode::Warn, "WARN"),
    (Opcode::Remove, "REMOVE"),
    (Opcode::Call, "CALL"),
    (Opcode::Pause, "PAUSE"),
    (Opcode::OaNew, "ANEW_OA_OBJECTS"),
    (Opcode::StoreDeadlocked, "STORE_DEADLOCKED"),
];

impl Opcode {
    pub fn code(self) -> i32 {
        match self {
            Opcode::Unknown(c) => c,
            op => TABLE.iter().position(|(o, _)| *o == op).unwrap() as i32,
        }
    }

    pub fn from_code(c: i32) -> Opcode {
        usize::try_from(c)
            .ok()
            .and_then(|i| TABLE.get(i))
            .map(|(o, _)| *o)
            .unwrap_or(Opcode::Unknown(c))
    }

    pub fn mnemonic(self) -> String {
        match self {
            Opcode::Unknown(c) => c.to_string(),
            op => TABLE[op.code() as usize].1.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub op: Opcode,
    pub opn1: i32,
    pub opn2: i32,
}

impl Triplet {
    pub fn new(op: Opcode, opn1: i32, opn2: i32) -> Self {
        Triplet { op, opn1, opn2 }
    }

    pub fn halt() -> Self {
        Triplet::new(Opcode::Stop, -1, -1)
    }

    pub fn is_halt(&self) -> bool {
        self.op == Opcode::Stop && self.opn1 == -1 && self.opn2 == -1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RcodeProgram {
    pub triplets: Vec<Triplet>,
}

impl RcodeProgram {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }
    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
    pub fn opcodes(&self) -> Vec<Opcode> {
        self.triplets.iter().map(|t| t.op).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

impl CompareOp {
    pub const ALL: [CompareOp; 6] = [CompareOp::Eq, CompareOp::Ne, CompareOp::Gt, CompareOp::Ge, CompareOp::Lt, CompareOp::Le];

    pub fn code(self) -> i32 {
        CompareOp::ALL.iter().position(|c| *c == self).unwrap() as i32 + 1
    }

    pub fn from_code(c: i32) -> Option<Self> {
        usize::try_from(c - 1).ok().and_then(|i| CompareOp::ALL.get(i).copied())
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
        }
    }

    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CompareOp::Eq => lhs == rhs,
            CompareOp::Ne => lhs != rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Lt => lhs < rhs,
            CompareOp::Le => lhs <= rhs,
        }
    }
}

/// How an entity operand names its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandMode {
    Literal,
    /// Entities matching atom k of the enclosing guard.
    Match,
    /// Entities of atom k's universe not matching it.
    NotMatch,
    /// The entity literally named in atom k.
    AtomEntity,
    /// Everything matched by the satisfied atoms.
    GuardMatch,
    Star,
}

impl OperandMode {
    const ALL: [OperandMode; 6] = [
        OperandMode::Literal,
        OperandMode::Match,
        OperandMode::NotMatch,
        OperandMode::AtomEntity,
        OperandMode::GuardMatch,
        OperandMode::Star,
    ];

    pub fn code(self) -> i32 {
        OperandMode::ALL.iter().position(|m| *m == self).unwrap() as i32
    }

    pub fn from_code(c: i32) -> Option<Self> {
        usize::try_from(c).ok().and_then(|i| OperandMode::ALL.get(i).copied())
    }
}

/// Entity operand packed into `opn1` (kind, mode, extra) and `opn2` (id or atom index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntityOperand {
    pub kind: EntityKind,
    pub mode: OperandMode,
    pub value: i32,
    /// Status code or remove selector sharing the operand slot.
    pub extra: i32,
}

impl EntityOperand {
    pub fn literal(e: EntityRef) -> Self {
        EntityOperand { kind: e.kind, mode: OperandMode::Literal, value: e.id as i32, extra: 0 }
    }

    pub fn encode(&self) -> (i32, i32) {
        ((self.extra << 8) | (self.kind.code() << 4) | self.mode.code(), self.value)
    }

    pub fn decode(opn1: i32, opn2: i32) -> Option<Self> {
        if opn1 < 0 {
            return None;
        }
        let kind = EntityKind::from_code((opn1 >> 4) & 0xf)?;
        let mode = OperandMode::from_code(opn1 & 0xf)?;
        Some(EntityOperand { kind, mode, value: opn2, extra: opn1 >> 8 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Manager,
    Assistant,
}

impl Role {
    pub fn code(self) -> i32 {
        match self {
            Role::Manager => 0,
            Role::Assistant => 1,
        }
    }
    pub fn from_code(c: i32) -> Option<Role> {
        match c {
            0 => Some(Role::Manager),
            1 => Some(Role::Assistant),
            _ => None,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Role::Manager => "Manager",
            Role::Assistant => "Assistant",
        }
    }
}
