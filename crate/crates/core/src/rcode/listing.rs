use crate::model::{EntityKind, RemoveSelector, Status};

use super::{CompareOp, EntityOperand, OperandMode, Opcode, RcodeProgram, Role, Triplet};

const HEADER: &str = "line   rcode             opn1      opn2";

fn kind_name(k: EntityKind) -> &'static str {
    match k {
        EntityKind::Node => "Node",
        EntityKind::Task => "Thread",
        EntityKind::Group => "Group",
    }
}

fn operand_value(o: &EntityOperand) -> String {
    match o.mode {
        OperandMode::Literal => o.value.to_string(),
        OperandMode::Match => format!("@{}", o.value),
        OperandMode::NotMatch => format!("~{}", o.value),
        OperandMode::AtomEntity => format!("${}", o.value),
        OperandMode::GuardMatch => "@".into(),
        OperandMode::Star => "*".into(),
    }
}

fn raw(t: &Triplet) -> Vec<String> {
    vec![t.opn1.to_string(), t.opn2.to_string()]
}

fn entity_cols(t: &Triplet) -> Vec<String> {
    match EntityOperand::decode(t.opn1, t.opn2) {
        Some(o) => vec![kind_name(o.kind).into(), operand_value(&o)],
        None => raw(t),
    }
}

/// Columns after the mnemonic for one triplet.
fn operand_cols(t: &Triplet) -> Vec<String> {
    match t.op {
        Opcode::Stop if t.is_halt() => vec![],
        Opcode::If | Opcode::Fi | Opcode::And | Opcode::Or | Opcode::Not => vec![],
        Opcode::SetRole => match Role::from_code(t.opn2) {
            Some(r) => vec![t.opn1.to_string(), r.name().into()],
            None => raw(t),
        },
        Opcode::Compare => match CompareOp::from_code(t.opn1) {
            Some(c) => vec![c.symbol().into(), t.opn2.to_string()],
            None => raw(t),
        },
        Opcode::False | Opcode::Pause | Opcode::OaNew => vec![t.opn1.to_string()],
        Opcode::Push => {
            if t.opn2 == 1 {
                vec!["FAULTY".into()]
            } else {
                vec![t.opn1.to_string()]
            }
        }
        Opcode::Call => vec![t.opn1.to_string(), t.opn2.to_string()],
        Opcode::StoreDeadlocked => vec![format!("Thread {}", t.opn1), format!("Thread {}", t.opn2)],
        Opcode::StoreStatus => {
            let mut c = entity_cols(t);
            if let Some(s) = Status::from_code(t.opn1 >> 8) {
                c.push(s.name().into());
            }
            c
        }
        Opcode::Remove => {
            let mut c = entity_cols(t);
            c.push(if t.opn1 >> 8 == 1 { "ANY" } else { "PHASE" }.into());
            c
        }
        Opcode::Unknown(_) => raw(t),
        _ => entity_cols(t),
    }
}

/// Renders one listing line.
pub fn render_line(index: usize, t: &Triplet) -> String {
    let cols = operand_cols(t);
    let mut s = format!("{:05}  {:<18}", index, t.op.mnemonic());
    for (i, c) in cols.iter().enumerate() {
        if i + 1 == cols.len() {
            s.push_str(c);
        } else {
            s.push_str(&format!("{:<10}", c));
        }
    }
    s.trim_end().to_string()
}

/// Human-readable listing, one line per triplet after a header.
pub fn render_listing(p: &RcodeProgram) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for (i, t) in p.triplets.iter().enumerate() {
        out.push_str(&render_line(i, t));
        out.push('\n');
    }
    out
}

pub(crate) fn selector_code(s: RemoveSelector) -> i32 {
    match s {
        RemoveSelector::Phase => 0,
        RemoveSelector::Any => 1,
    }
}
