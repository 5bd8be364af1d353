//! Timeout manager: a list of relative timeouts and a congestion model for its alarms.

mod alarm;
mod list;

pub use alarm::{simulate_congestion, AlarmError, AlarmMode, CongestionParams, CongestionReport};
pub use list::{Fired, TimeoutEntry, TimeoutId, TimeoutList};

use crate::model::Ticks;

/// Default scan period of the timeout manager.
pub const TOM_CYCLE: Ticks = 50_000;
