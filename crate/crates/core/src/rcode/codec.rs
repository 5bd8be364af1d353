use thiserror::Error;

use super::{Opcode, RcodeProgram, Triplet};

pub const MAGIC: &[u8; 4] = b"RCOD";
pub const VERSION: u16 = 1;
const HEADER: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic at byte 0")]
    BadMagic,
    #[error("unsupported version {version} at byte 4")]
    BadVersion { version: u16 },
    #[error("truncated input at byte {offset}")]
    Truncated { offset: usize },
    #[error("{extra} trailing bytes at byte {offset}")]
    Trailing { offset: usize, extra: usize },
}

/// Serializes a program: magic, u16 version, u32 count, then `count` triplets of LE i32.
pub fn encode(p: &RcodeProgram) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 12 * p.triplets.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(p.triplets.len() as u32).to_le_bytes());
    for t in &p.triplets {
        out.extend_from_slice(&t.op.code().to_le_bytes());
        out.extend_from_slice(&t.opn1.to_le_bytes());
        out.extend_from_slice(&t.opn2.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<RcodeProgram, DecodeError> {
    if bytes.len() < 4 {
        return Err(DecodeError::Truncated { offset: bytes.len() });
    }
    if &bytes[..4] != MAGIC {
        return Err(DecodeError::BadMagic);
    }
    if bytes.len() < HEADER {
        return Err(DecodeError::Truncated { offset: bytes.len() });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(DecodeError::BadVersion { version });
    }
    let count = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
    let mut triplets = Vec::with_capacity(count.min(1 << 16));
    let mut off = HEADER;
    let word = |off: usize| -> Result<i32, DecodeError> {
        bytes
            .get(off..off + 4)
            .map(|w| i32::from_le_bytes([w[0], w[1], w[2], w[3]]))
            .ok_or(DecodeError::Truncated { offset: bytes.len().min(off) })
    };
    for _ in 0..count {
        let op = word(off)?;
        let a = word(off + 4)?;
        let b = word(off + 8)?;
        triplets.push(Triplet::new(Opcode::from_code(op), a, b));
        off += 12;
    }
    if off != bytes.len() {
        return Err(DecodeError::Trailing { offset: off, extra: bytes.len() - off });
    }
    Ok(RcodeProgram { triplets })
}
