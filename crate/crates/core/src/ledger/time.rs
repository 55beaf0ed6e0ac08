use std::sync::Mutex;

use chrono::{DateTime, Duration, Utc};

/// Source of the domain's record time.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Clock that only moves when told to. Used by scenarios, benchmarks and
/// simulated deployments.
#[derive(Debug)]
pub struct ManualClock {
    now: Mutex<DateTime<Utc>>,
}

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        ManualClock {
            now: Mutex::new(start),
        }
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.now.lock().unwrap() = t;
    }

    pub fn advance(&self, by: Duration) -> DateTime<Utc> {
        let mut now = self.now.lock().unwrap();
        *now += by;
        *now
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.now.lock().unwrap()
    }
}

/// Ledger/record time configuration.
#[derive(Debug, Clone, Copy)]
pub struct TimeModel {
    /// Maximum permitted |record time - ledger time|.
    pub skew: Duration,
}

impl Default for TimeModel {
    fn default() -> Self {
        TimeModel {
            skew: Duration::seconds(60),
        }
    }
}

impl TimeModel {
    pub fn within_skew(&self, ledger_time: DateTime<Utc>, record_time: DateTime<Utc>) -> bool {
        (record_time - ledger_time).abs() <= self.skew
    }
}
