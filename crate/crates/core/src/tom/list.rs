use crate::model::Ticks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeoutId(pub u64);

#[derive(Debug, Clone, PartialEq)]
pub struct TimeoutEntry<T> {
    pub id: TimeoutId,
    /// Original relative deadline, reused when a cyclic entry renews.
    pub deadline: Ticks,
    /// Ticks after the previous entry's expiry (after `starting_time` for the head).
    pub running: i64,
    pub cyclic: bool,
    pub enabled: bool,
    pub payload: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fired<T> {
    pub id: TimeoutId,
    /// Absolute time the entry was due.
    pub due: Ticks,
    pub payload: T,
}

/// Ordered list of pending timeouts with relative running times.
///
/// Only the head's value depends on the clock, so insertion is a single walk
/// and a scan touches only the entries that actually expired.
#[derive(Debug, Clone)]
pub struct TimeoutList<T> {
    entries: Vec<TimeoutEntry<T>>,
    starting_time: i64,
    next_id: u64,
}

impl<T> Default for TimeoutList<T> {
    fn default() -> Self {
        TimeoutList { entries: Vec::new(), starting_time: 0, next_id: 0 }
    }
}

impl<T: Clone> TimeoutList<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TimeoutEntry<T>] {
        &self.entries
    }

    pub fn starting_time(&self) -> Ticks {
        self.starting_time.max(0) as Ticks
    }

    /// Absolute expiry of every entry, in list order.
    pub fn absolute(&self) -> Vec<(TimeoutId, i64)> {
        let mut t = self.starting_time;
        self.entries
            .iter()
            .map(|e| {
                t += e.running;
                (e.id, t)
            })
            .collect()
    }

    pub fn next_expiry(&self) -> Option<Ticks> {
        self.entries.first().map(|e| (self.starting_time + e.running).max(0) as Ticks)
    }

    pub fn insert(&mut self, deadline: Ticks, cyclic: bool, payload: T, now: Ticks) -> TimeoutId {
        let id = TimeoutId(self.next_id);
        self.next_id += 1;
        self.place(id, now as i64 + deadline as i64, deadline, cyclic, true, payload);
        id
    }

    fn place(&mut self, id: TimeoutId, abs: i64, deadline: Ticks, cyclic: bool, enabled: bool, payload: T) {
        if self.entries.is_empty() {
            self.starting_time = abs - deadline as i64;
        }
        let off = abs - self.starting_time;
        let mut cum = 0i64;
        let mut pos = self.entries.len();
        for (i, e) in self.entries.iter().enumerate() {
            if off < cum + e.running {
                pos = i;
                break;
            }
            cum += e.running;
        }
        let running = off - cum;
        if let Some(succ) = self.entries.get_mut(pos) {
            succ.running -= running;
        }
        self.entries.insert(pos, TimeoutEntry { id, deadline, running, cyclic, enabled, payload });
    }

    fn position(&self, id: TimeoutId) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    pub fn delete(&mut self, id: TimeoutId) -> Option<T> {
        let pos = self.position(id)?;
        let e = self.entries.remove(pos);
        if let Some(succ) = self.entries.get_mut(pos) {
            succ.running += e.running;
        }
        Some(e.payload)
    }

    /// Deletes and re-inserts an entry so it expires `deadline` ticks after `now`.
    pub fn renew(&mut self, id: TimeoutId, deadline: Ticks, now: Ticks) -> bool {
        let Some(pos) = self.position(id) else { return false };
        let (cyclic, enabled, payload) = {
            let e = &self.entries[pos];
            (e.cyclic, e.enabled, e.payload.clone())
        };
        self.delete(id);
        self.place(id, now as i64 + deadline as i64, deadline, cyclic, enabled, payload);
        true
    }

    pub fn set_enabled(&mut self, id: TimeoutId, enabled: bool) -> bool {
        match self.position(id) {
            Some(p) => {
                self.entries[p].enabled = enabled;
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, id: TimeoutId) -> bool {
        self.position(id).is_some()
    }

    /// Pops every entry whose expiry is strictly before `now`, in expiry order.
    ///
    /// Disabled entries are dropped silently; cyclic ones are re-armed one
    /// period after the time they were due.
    pub fn scan(&mut self, now: Ticks) -> Vec<Fired<T>> {
        let now = now as i64;
        let mut out = Vec::new();
        while let Some(head) = self.entries.first() {
            if head.running - (now - self.starting_time) >= 0 {
                break;
            }
            let e = self.entries.remove(0);
            self.starting_time += e.running;
            let due = self.starting_time;
            if e.cyclic {
                let period = e.deadline.max(1);
                self.place(e.id, due + period as i64, period, true, e.enabled, e.payload.clone());
            }
            if e.enabled {
                out.push(Fired { id: e.id, due: due.max(0) as Ticks, payload: e.payload });
            }
        }
        out
    }
}
