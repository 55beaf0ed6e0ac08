use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use chrono::{Datelike, Months, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rental_core::arc;
use rental_core::ledger::{Ledger, Node};
use rental_core::rental::{House, LeaseAgreement, LeaseTerms};
use rental_core::world::{ymd, World};
use rental_core::Money;

use crate::common::Outcome;

const TRIALS: u64 = 1000;
const BUDGET: Duration = Duration::from_secs(60);

struct Lease {
    rent: Money,
    dates: BTreeSet<NaiveDate>,
}

#[derive(Default)]
struct Stats {
    leases: usize,
    ticks: usize,
    ious: usize,
    reruns: usize,
}

fn random_leases(rng: &mut ChaCha8Rng, n: usize, start: NaiveDate, months: u32) -> Vec<Lease> {
    (0..n)
        .map(|_| {
            let mut dates = BTreeSet::new();
            for m in 0..months {
                if rng.gen_bool(0.6) {
                    let first = start + Months::new(m);
                    dates.insert(ymd(first.year(), first.month(), rng.gen_range(1..=28)));
                }
            }
            // A date past the horizon, never due in the trial.
            if rng.gen_bool(0.2) {
                dates.insert(start + Months::new(months + 1));
            }
            Lease {
                rent: Money(rng.gen_range(1..=5_000) * 100),
                dates,
            }
        })
        .collect()
}

/// Brute-force prediction: every payment date strictly before the clock
/// date that has not been charged yet.
fn newly_due(
    leases: &[Lease],
    charged: &BTreeSet<(usize, NaiveDate)>,
    date: NaiveDate,
) -> BTreeSet<(usize, NaiveDate)> {
    let mut out = BTreeSet::new();
    for (i, l) in leases.iter().enumerate() {
        for d in &l.dates {
            if *d < date && !charged.contains(&(i, *d)) {
                out.insert((i, *d));
            }
        }
    }
    out
}

fn ledger_ious(ledger: &Ledger) -> BTreeSet<(usize, NaiveDate, i64)> {
    ledger
        .active_contracts()
        .into_iter()
        .filter(|c| c.template == "IOU")
        .map(|c| {
            let house = c.payload["laKey"]["houseId"].as_str().unwrap();
            let i = house.trim_start_matches('h').parse().unwrap();
            let due = c.payload["dueDate"].as_str().unwrap().parse().unwrap();
            (i, due, c.payload["amount"].as_i64().unwrap())
        })
        .collect()
}

fn clock_dates(ledger: &Ledger) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    for tx in ledger.commit_log() {
        for n in tx.iter_nodes() {
            if let Node::Create(c) = n {
                if c.contract.template == "DateClock" {
                    out.push(c.contract.payload["date"].as_str().unwrap().parse().unwrap());
                }
            }
        }
    }
    out
}

fn trial(seed: u64, stats: &mut Stats) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let months = rng.gen_range(1..=24u32);
    let n = rng.gen_range(1..=200usize);
    let start = ymd(2024, 1, 1);
    let horizon = (start + Months::new(months) - start).num_days();
    let leases = random_leases(&mut rng, n, start, months);

    let w = World::new(start);
    let op = w.operator.clone();
    let mut keys = Vec::with_capacity(n);
    for (i, l) in leases.iter().enumerate() {
        let tenant = w.party(&format!("T{}", i % 17));
        let landlord = w.party(&format!("L{i}"));
        let la = LeaseAgreement {
            tenant: tenant.clone(),
            landlord: landlord.clone(),
            operator: op.clone(),
            house: House {
                house_id: format!("h{i}"),
                address: String::new(),
                landlord: landlord.clone(),
            },
            terms: LeaseTerms {
                rent: l.rent,
                begin_date: start,
                payment_dates: l.dates.clone(),
                num_arbitrators: 1,
            },
            remaining_payment_dates: l.dates.clone(),
        };
        w.ledger
            .acting_as([tenant, landlord, op.clone()].into())
            .create(&la)
            .map_err(|e| e.to_string())?;
        keys.push(la.la_key());
    }
    arc::add_las(&w.ledger.as_party(&op), &op, keys).map_err(|e| e.to_string())?;

    let n_ticks = rng.gen_range(1..=months as usize + 4);
    let mut days: Vec<i64> = (0..n_ticks).map(|_| rng.gen_range(0..=horizon)).collect();
    days.sort();

    let mut charged = BTreeSet::new();
    let mut today = start;
    let mut last_update = None;
    for d in days {
        let date = start + chrono::Duration::days(d);
        w.set_date(date);
        let (adv, res) = w.tick().map_err(|e| format!("tick on {date}: {e}"))?;
        today = today.max(date);
        let expected = newly_due(&leases, &charged, today);
        if res.ious.len() != expected.len() {
            return Err(format!(
                "seed {seed}: {date} created {} IOUs, oracle expects {}",
                res.ious.len(),
                expected.len()
            ));
        }
        charged.extend(expected);
        if rng.gen_bool(0.3) {
            let again = w.process(adv.update).map_err(|e| e.to_string())?;
            stats.reruns += 1;
            if !again.ious.is_empty() {
                return Err(format!("seed {seed}: rerun on {date} created {}", again.ious.len()));
            }
        }
        last_update = Some(adv.update);
        stats.ticks += 1;
    }
    if let Some(u) = last_update {
        let again = w.process(u).map_err(|e| e.to_string())?;
        stats.reruns += 1;
        if !again.ious.is_empty() {
            return Err(format!("seed {seed}: final rerun created {}", again.ious.len()));
        }
    }

    let expected: BTreeSet<(usize, NaiveDate, i64)> = charged
        .iter()
        .map(|(i, d)| (*i, *d, leases[*i].rent.minor_units()))
        .collect();
    let actual = ledger_ious(&w.ledger);
    if actual != expected {
        return Err(format!(
            "seed {seed}: IOU set differs ({} on ledger, {} predicted)",
            actual.len(),
            expected.len()
        ));
    }
    let dates = clock_dates(&w.ledger);
    if dates.windows(2).any(|p| p[1] < p[0]) {
        return Err(format!("seed {seed}: date clock went backwards"));
    }
    stats.leases += n;
    stats.ious += actual.len();
    Ok(())
}

pub fn run() -> Outcome {
    let t0 = Instant::now();
    let mut stats = Stats::default();
    let mut violations = Vec::new();
    for seed in 0..TRIALS {
        if let Err(e) = trial(seed, &mut stats) {
            violations.push(e);
        }
    }
    let elapsed = t0.elapsed();
    Outcome::new(
        violations.is_empty() && elapsed < BUDGET,
        format!(
            "{TRIALS} trials, {} violations, {:.1}s of {}s budget ({} leases, {} ticks, {} IOUs, \
             {} reruns)",
            violations.len(),
            elapsed.as_secs_f64(),
            BUDGET.as_secs(),
            stats.leases,
            stats.ticks,
            stats.ious,
            stats.reruns
        ),
    )
    .with_details(violations)
}
