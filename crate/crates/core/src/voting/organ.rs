use std::collections::BTreeSet;

use super::algo::{vote, Algorithm, MetricRegistry, VoteOutcome, VoteParams};
use super::VotingError;
use crate::model::{Ticks, UniqueId};

#[derive(Debug, Clone, PartialEq)]
pub struct VersionSpec {
    pub rank: u32,
    pub task: UniqueId,
    pub spare: bool,
    /// Time allowed for this version's value to arrive.
    pub timeout: Ticks,
}

/// One N-version programming block.
#[derive(Debug, Clone, PartialEq)]
pub struct NVersionConfig {
    pub nv_id: UniqueId,
    pub versions: Vec<VersionSpec>,
    pub algorithm: Algorithm,
    pub metric: String,
    pub params: VoteParams,
    pub on_success: Option<UniqueId>,
    pub on_error: Option<UniqueId>,
}

impl NVersionConfig {
    pub fn validate(&self, metrics: &MetricRegistry) -> Result<(), VotingError> {
        let active = self.versions.iter().filter(|v| !v.spare).count();
        if active < 2 {
            return Err(VotingError::TooFewVersions(active));
        }
        let mut ranks = BTreeSet::new();
        let mut tasks = BTreeSet::new();
        for v in &self.versions {
            if !ranks.insert(v.rank) {
                return Err(VotingError::DuplicateRank(v.rank));
            }
            if !tasks.insert(v.task) {
                return Err(VotingError::DuplicateTask(v.task));
            }
        }
        metrics.get(&self.metric)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotState {
    Active,
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub task: UniqueId,
    pub state: SlotState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpareState {
    Idle,
    Woken,
    InService,
}

/// The single message a request produces.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Success { to: Option<UniqueId>, from: UniqueId, value: f64 },
    Failure { to: Option<UniqueId>, from: UniqueId },
}

/// Voting replicas of one N-version block and their spares.
#[derive(Debug, Clone)]
pub struct Organ {
    pub config: NVersionConfig,
    pub slots: Vec<Slot>,
    pub spares: Vec<(UniqueId, SpareState)>,
}

impl Organ {
    pub fn new(config: NVersionConfig) -> Self {
        let mut versions = config.versions.clone();
        versions.sort_by_key(|v| v.rank);
        let slots = versions.iter().filter(|v| !v.spare).map(|v| Slot { task: v.task, state: SlotState::Active }).collect();
        let spares = versions.iter().filter(|v| v.spare).map(|v| (v.task, SpareState::Idle)).collect();
        Organ { config, slots, spares }
    }

    /// Tasks currently voting, in slot order.
    pub fn active_members(&self) -> Vec<UniqueId> {
        self.slots.iter().filter(|s| s.state == SlotState::Active).map(|s| s.task).collect()
    }

    pub fn is_member(&self, task: UniqueId) -> bool {
        self.slots.iter().any(|s| s.task == task)
    }

    pub fn is_spare(&self, task: UniqueId) -> bool {
        self.spares.iter().any(|(t, _)| *t == task)
    }

    pub fn spare_state(&self, task: UniqueId) -> Option<SpareState> {
        self.spares.iter().find(|(t, _)| *t == task).map(|(_, s)| *s)
    }

    pub fn timeout_of(&self, task: UniqueId) -> Ticks {
        self.config.versions.iter().find(|v| v.task == task).map(|v| v.timeout).unwrap_or(0)
    }

    pub fn stop(&mut self, task: UniqueId) -> bool {
        match self.slots.iter_mut().find(|s| s.task == task) {
            Some(s) => {
                s.state = SlotState::Stopped;
                true
            }
            None => false,
        }
    }

    pub fn restart(&mut self, task: UniqueId) -> bool {
        match self.slots.iter_mut().find(|s| s.task == task) {
            Some(s) => {
                s.state = SlotState::Active;
                true
            }
            None => false,
        }
    }

    /// Wakes a dormant spare; fails once no idle spare with that id remains.
    pub fn wake(&mut self, spare: UniqueId) -> Result<(), VotingError> {
        let member = self.is_member(spare);
        let nv = self.config.nv_id;
        match self.spares.iter_mut().find(|(t, _)| *t == spare) {
            Some((_, st @ SpareState::Idle)) => {
                *st = SpareState::Woken;
                Ok(())
            }
            Some(_) => Err(VotingError::SpareExhausted(nv)),
            None if member => Err(VotingError::SpareExhausted(nv)),
            None => Err(VotingError::NotASpare(spare)),
        }
    }

    /// Puts a woken spare into the slot held by `replaced`.
    pub fn take_slot(&mut self, spare: UniqueId, replaced: UniqueId) -> Result<usize, VotingError> {
        if self.spare_state(spare) != Some(SpareState::Woken) {
            return Err(VotingError::NotWoken(spare));
        }
        let idx = self
            .slots
            .iter()
            .position(|s| s.task == replaced)
            .ok_or(VotingError::NotAMember(replaced))?;
        self.slots[idx] = Slot { task: spare, state: SlotState::Active };
        for (t, st) in self.spares.iter_mut() {
            if *t == spare {
                *st = SpareState::InService;
            }
        }
        Ok(idx)
    }

    /// Replaces `replaced` with the first idle spare.
    pub fn reconfigure(&mut self, replaced: UniqueId) -> Result<UniqueId, VotingError> {
        let spare = self
            .spares
            .iter()
            .find(|(_, s)| *s == SpareState::Idle)
            .map(|(t, _)| *t)
            .ok_or(VotingError::SpareExhausted(self.config.nv_id))?;
        self.wake(spare)?;
        self.take_slot(spare, replaced)?;
        Ok(spare)
    }

    pub fn vote(&self, values: &[Option<f64>], metrics: &MetricRegistry) -> Result<VoteOutcome, VotingError> {
        let m = metrics.get(&self.config.metric)?;
        Ok(vote(self.config.algorithm, values, &m, self.config.params))
    }

    /// Votes on the active members' answers and produces the one reply the client sees.
    ///
    /// `values[k]` belongs to `active_members()[k]`.
    pub fn serve(&self, values: &[Option<f64>], metrics: &MetricRegistry) -> Result<(Reply, VoteOutcome), VotingError> {
        let members = self.active_members();
        if values.len() != members.len() {
            return Err(VotingError::Arity { expected: members.len(), got: values.len() });
        }
        if members.is_empty() {
            return Err(VotingError::NoMembers(self.config.nv_id));
        }
        let out = self.vote(values, metrics)?;
        let reply = match out.value {
            Some(value) => Reply::Success { to: self.config.on_success, from: members[out.winners[0]], value },
            None => Reply::Failure { to: self.config.on_error, from: members[0] },
        };
        Ok((reply, out))
    }
}
