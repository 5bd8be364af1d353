use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{TimeoutList, TOM_CYCLE};
use crate::model::Ticks;

/// How an alarm spends its execution time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlarmMode {
    /// Sleeps; alarms on different workers overlap.
    Wait,
    /// Busy on the single CPU; alarms never overlap.
    Cpu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongestionParams {
    pub timeouts: usize,
    pub horizon: Ticks,
    /// Execution time of one alarm.
    pub delta: Ticks,
    pub workers: usize,
    pub mode: AlarmMode,
    pub seed: u64,
    pub cycle: Ticks,
}

impl Default for CongestionParams {
    fn default() -> Self {
        CongestionParams {
            timeouts: 1000,
            horizon: 100_000_000,
            delta: 20_000,
            workers: 0,
            mode: AlarmMode::Wait,
            seed: 1,
            cycle: TOM_CYCLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongestionReport {
    /// Start time minus due time for every alarm, in firing order.
    pub delays: Vec<i64>,
    pub violations: usize,
    pub max_delay: i64,
    pub mean_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlarmError {
    #[error("cycle must be positive")]
    ZeroCycle,
    #[error("horizon must be positive")]
    ZeroHorizon,
}

/// Drives a timeout list with a periodic scanner and a pool of alarm workers.
///
/// With no workers the scanner runs each alarm itself and cannot scan again
/// until done. Otherwise expired alarms are queued FIFO and taken by the
/// first worker to become free.
pub fn simulate_congestion(p: &CongestionParams) -> Result<CongestionReport, AlarmError> {
    if p.cycle == 0 {
        return Err(AlarmError::ZeroCycle);
    }
    if p.horizon == 0 {
        return Err(AlarmError::ZeroHorizon);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut list: TimeoutList<usize> = TimeoutList::new();
    for i in 0..p.timeouts {
        let d = rng.gen_range(1..=p.horizon);
        list.insert(d, false, i, 0);
    }
    let mut delays = Vec::with_capacity(p.timeouts);
    let mut workers = vec![0i64; p.workers];
    let mut cpu_free = 0i64;
    let mut scanner_free = 0i64;
    let mut grid = 0i64;
    let delta = p.delta as i64;
    while !list.is_empty() {
        let scan_t = grid.max(scanner_free);
        let fired = list.scan(scan_t as Ticks);
        let mut t = scan_t;
        for f in fired {
            let due = f.due as i64;
            let start = if p.workers == 0 {
                let s = if p.mode == AlarmMode::Cpu { t.max(cpu_free) } else { t };
                t = s + delta;
                cpu_free = t;
                s
            } else {
                let k = (0..p.workers).min_by_key(|&k| (workers[k].max(t), k)).unwrap();
                let mut s = workers[k].max(t);
                if p.mode == AlarmMode::Cpu {
                    s = s.max(cpu_free);
                    cpu_free = s + delta;
                }
                workers[k] = s + delta;
                s
            };
            delays.push(start - due);
        }
        if p.workers == 0 {
            scanner_free = t;
        }
        grid = (scan_t / p.cycle as i64 + 1) * p.cycle as i64;
    }
    let cycle = p.cycle as i64;
    let violations = delays.iter().filter(|&&d| d > cycle).count();
    let max_delay = delays.iter().copied().max().unwrap_or(0);
    let mean_delay = if delays.is_empty() { 0.0 } else { delays.iter().sum::<i64>() as f64 / delays.len() as f64 };
    Ok(CongestionReport { delays, violations, max_delay, mean_delay })
}
