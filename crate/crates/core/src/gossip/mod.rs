//! Discrete-time model of the all-to-all value exchange between `N+1` voters.
//!
//! Processor `i` first receives from every lower-indexed peer, then sends to
//! every peer in the order given by its permutation, then receives from every
//! higher-indexed peer. A send and the matching receive complete together in
//! one step and a processor performs at most one action per step.

mod closed;
mod report;

pub use closed::{identity_lambda, identity_u4, pipelined_lambda, utilization_total, ClosedForm};
pub use report::{render_table, to_csv};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermKind {
    /// Ascending peer order.
    Identity,
    /// `i+1..=N` followed by `0..i`.
    Pipelined,
    /// Seeded shuffle per processor and session.
    PseudoRandom,
}

impl std::str::FromStr for PermKind {
    type Err = GossipError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(PermKind::Identity),
            "pipelined" | "pipeline" => Ok(PermKind::Pipelined),
            "random" | "pseudo-random" | "pseudo_random" => Ok(PermKind::PseudoRandom),
            _ => Err(GossipError::UnknownPermutation(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GossipError {
    #[error("at least two processors are required (n >= 1)")]
    TooFew,
    #[error("at least one session is required")]
    NoSessions,
    #[error("unknown permutation '{0}'")]
    UnknownPermutation(String),
    #[error("no action possible at step {step}")]
    Deadlock { step: usize },
}

/// Send order of processor `i` among `0..=n`.
pub fn permutation(i: usize, n: usize, kind: PermKind, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match kind {
        PermKind::Identity => (0..=n).filter(|&j| j != i).collect(),
        PermKind::Pipelined => (i + 1..=n).chain(0..i).collect(),
        PermKind::PseudoRandom => {
            let mut v: Vec<usize> = (0..=n).filter(|&j| j != i).collect();
            v.shuffle(rng);
            v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Send(usize),
    Recv(usize),
}

/// What a processor did during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Sent(usize),
    Received(usize),
    /// Blocked on a receive.
    WaitRecv,
    /// Blocked on a send.
    WaitSend,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossipRun {
    pub n: usize,
    pub sessions: usize,
    /// Number of processors that acted in each step.
    pub nu: Vec<usize>,
    /// Processors that finished receiving a whole session in each step.
    pub completions: Vec<usize>,
    /// `rows[i][t]` is processor i's action at step t.
    pub rows: Vec<Vec<Cell>>,
}

impl GossipRun {
    /// Steps until every processor finishes.
    pub fn lambda(&self) -> usize {
        self.nu.len()
    }

    /// Total processor-steps spent acting.
    pub fn utilization(&self) -> usize {
        self.nu.iter().sum()
    }

    /// Average number of active processors per step.
    pub fn mu(&self) -> f64 {
        self.utilization() as f64 / self.lambda() as f64
    }

    /// Fraction of processor-steps spent acting.
    pub fn epsilon(&self) -> f64 {
        self.utilization() as f64 / ((self.n + 1) as f64 * self.lambda() as f64)
    }

    /// Number of steps in which exactly `k` processors acted.
    pub fn count_with(&self, k: usize) -> usize {
        self.nu.iter().filter(|&&x| x == k).count()
    }

    pub fn is_palindrome(&self) -> bool {
        self.nu.iter().eq(self.nu.iter().rev())
    }
}

/// Runs `sessions` back-to-back exchanges and records per-step activity.
pub fn simulate(n: usize, kind: PermKind, sessions: usize, seed: u64) -> Result<GossipRun, GossipError> {
    if n < 1 {
        return Err(GossipError::TooFew);
    }
    if sessions == 0 {
        return Err(GossipError::NoSessions);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let progs: Vec<Vec<Op>> = (0..=n)
        .map(|i| {
            let mut p = Vec::with_capacity(2 * n * sessions);
            for _ in 0..sessions {
                p.extend((0..i).map(Op::Recv));
                p.extend(permutation(i, n, kind, &mut rng).into_iter().map(Op::Send));
                p.extend((i + 1..=n).map(Op::Recv));
            }
            p
        })
        .collect();
    let mut pc = vec![0usize; n + 1];
    let mut received = vec![0usize; n + 1];
    let mut run = GossipRun { n, sessions, nu: Vec::new(), completions: Vec::new(), rows: vec![Vec::new(); n + 1] };
    while (0..=n).any(|i| pc[i] < progs[i].len()) {
        let mut acted: Vec<Option<Cell>> = vec![None; n + 1];
        for i in 0..=n {
            if acted[i].is_some() {
                continue;
            }
            if let Some(Op::Send(j)) = progs[i].get(pc[i]).copied() {
                if acted[j].is_none() && progs[j].get(pc[j]) == Some(&Op::Recv(i)) {
                    acted[i] = Some(Cell::Sent(j));
                    acted[j] = Some(Cell::Received(i));
                }
            }
        }
        let mut used = 0;
        let mut done = 0;
        for i in 0..=n {
            let cell = match acted[i] {
                Some(c) => {
                    if let Cell::Received(_) = c {
                        received[i] += 1;
                        if received[i] % n == 0 {
                            done += 1;
                        }
                    }
                    pc[i] += 1;
                    used += 1;
                    c
                }
                None => match progs[i].get(pc[i]) {
                    None => Cell::Done,
                    Some(Op::Recv(_)) => Cell::WaitRecv,
                    Some(Op::Send(_)) => Cell::WaitSend,
                },
            };
            run.rows[i].push(cell);
        }
        if used == 0 {
            return Err(GossipError::Deadlock { step: run.nu.len() });
        }
        run.nu.push(used);
        run.completions.push(done);
    }
    Ok(run)
}
