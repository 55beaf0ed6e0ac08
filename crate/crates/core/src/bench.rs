//! Rent-collection latency benchmark.
//!
//! For each configuration a fresh world is populated with `n_leases`
//! leases, of which `floor(n_leases * due_fraction)` have a payment date on
//! the 25th of every benchmarked month and the rest only have one far in the
//! future. Repetition `k` moves the clock to the 26th of month `k` and runs
//! one scheduler tick (advance, then lifecycling), so every repetition
//! charges exactly the due leases once.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arc::{self, LocalEndpoint, RetryPolicy, Scheduler, SchedulerError};
use crate::ledger::LedgerError;
use crate::money::Money;
use crate::rental::{House, LeaseAgreement, LeaseTerms};
use crate::world::{ymd, World};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub n_leases: usize,
    pub due_fraction: f64,
    pub reps: usize,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.n_leases == 0 {
            return Err(BenchError::Config("at least one lease is required".into()));
        }
        if !(0.0..=1.0).contains(&self.due_fraction) {
            return Err(BenchError::Config(format!(
                "due fraction {} is outside [0, 1]",
                self.due_fraction
            )));
        }
        if self.reps == 0 {
            return Err(BenchError::Config("at least one repetition is required".into()));
        }
        Ok(())
    }

    pub fn n_due(&self) -> usize {
        (self.n_leases as f64 * self.due_fraction).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub run_id: u64,
    pub n_leases: usize,
    pub due_fraction: f64,
    pub n_due: usize,
    pub advance_ms: f64,
    pub lifecycle_ms: f64,
}

const START: (i32, u32, u32) = (2024, 1, 1);

fn month(k: usize) -> NaiveDate {
    let (y, m, _) = START;
    ymd(y, m, 25) + Months::new(k as u32)
}

/// Builds the world for `cfg`. Leases are created directly with all three
/// signatures rather than through proposals, since setup is not measured.
pub fn populate(cfg: &BenchConfig) -> Result<World, BenchError> {
    cfg.validate()?;
    let (y, m, d) = START;
    let w = World::new(ymd(y, m, d));
    let op = w.operator.clone();
    let n_due = cfg.n_due();
    let due_dates: std::collections::BTreeSet<NaiveDate> = (0..cfg.reps).map(month).collect();
    let never: std::collections::BTreeSet<NaiveDate> =
        [ymd(month(cfg.reps).year() + 50, 1, 25)].into();
    let mut keys = Vec::with_capacity(cfg.n_leases);
    for i in 0..cfg.n_leases {
        let tenant = w.party(&format!("tenant{i}"));
        let landlord = w.party(&format!("landlord{i}"));
        let dates = if i < n_due { &due_dates } else { &never };
        let la = LeaseAgreement {
            tenant: tenant.clone(),
            landlord: landlord.clone(),
            operator: op.clone(),
            house: House {
                house_id: format!("house{i}"),
                address: format!("{i} Bench Street"),
                landlord: landlord.clone(),
            },
            terms: LeaseTerms {
                rent: Money(50_000),
                begin_date: ymd(y, m, d),
                payment_dates: dates.clone(),
                num_arbitrators: 1,
            },
            remaining_payment_dates: dates.clone(),
        };
        w.ledger
            .acting_as([tenant, landlord, op.clone()].into())
            .create(&la)?;
        keys.push(la.la_key());
    }
    arc::add_las(&w.ledger.as_party(&op), &op, keys)?;
    Ok(w)
}

/// Runs one configuration and returns a row per repetition.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    let w = populate(cfg)?;
    let mut sched = Scheduler::new(
        LocalEndpoint {
            ledger: w.ledger.clone(),
            operator: w.operator.clone(),
            provider: w.provider.clone(),
            lifecycler: w.lifecycler.clone(),
        },
        RetryPolicy::default(),
    );
    let mut rows = Vec::with_capacity(cfg.reps);
    for k in 0..cfg.reps {
        w.set_date(month(k).succ_opt().expect("date in range"));
        let r = sched.tick()?;
        rows.push(BenchRow {
            run_id: k as u64,
            n_leases: r.row.n_leases,
            due_fraction: cfg.due_fraction,
            n_due: r.row.n_due,
            advance_ms: r.row.advance_ms,
            lifecycle_ms: r.row.lifecycle_ms,
        });
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(out: W, rows: &[BenchRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n_leases: usize,
    pub due_fraction: f64,
    pub reps: usize,
    pub median_advance_ms: f64,
    pub median_lifecycle_ms: f64,
}

/// Medians per (n_leases, due_fraction), ordered by both.
pub fn summarize(rows: &[BenchRow]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(usize, u64), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.n_leases, r.due_fraction.to_bits()))
            .or_default()
            .push(r);
    }
    cells
        .into_iter()
        .map(|((n, f), rs)| {
            let adv: Vec<f64> = rs.iter().map(|r| r.advance_ms).collect();
            let life: Vec<f64> = rs.iter().map(|r| r.lifecycle_ms).collect();
            CellSummary {
                n_leases: n,
                due_fraction: f64::from_bits(f),
                reps: rs.len(),
                median_advance_ms: median(&adv).unwrap_or(0.0),
                median_lifecycle_ms: median(&life).unwrap_or(0.0),
            }
        })
        .collect()
}
