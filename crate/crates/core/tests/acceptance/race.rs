use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rental_core::arc;
use rental_core::ledger::{Clock, ContractId, Ledger, Node};
use rental_core::world::{monthly_terms, ymd, World};
use rental_core::{Money, Party};

use crate::common::Outcome;

const SCHEDULES: u64 = 300;
const STEPS: usize = 40;

#[derive(Default)]
struct Stats {
    commits: usize,
    rejected: usize,
    /// Adjacent date-referencing commits whose ledger-time dates go
    /// backwards. Shows the fuzzing does produce the race.
    ledger_time_inversions: usize,
}

/// The latest date clock date a transaction relies on: updates it fetches
/// and updates it creates.
fn referenced_date(ledger: &Ledger, tx: &rental_core::ledger::Transaction) -> Option<NaiveDate> {
    tx.iter_nodes()
        .filter_map(|n| match n {
            Node::Fetch(f) if f.template == "DateClockUpdate" => {
                Some(ledger.contract(f.contract_id)?.contract.payload)
            }
            Node::Create(c) if c.contract.template == "DateClockUpdate" => {
                Some(c.contract.payload.clone())
            }
            _ => None,
        })
        .filter_map(|p| p["date"].as_str()?.parse().ok())
        .max()
}

fn schedule(seed: u64, stats: &mut Stats) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let day = ymd(2024, 5, 25);
    let w = World::new(day);
    let op = w.operator.clone();
    let providers: Vec<Party> = std::iter::once(w.provider.clone())
        .chain((2..=3).map(|i| w.party(&format!("Provider{i}"))))
        .collect();
    for p in &providers[1..] {
        arc::add_provider(&w.ledger.as_party(&op), &op, p).map_err(|e| e.to_string())?;
        arc::accept_provider(&w.ledger.as_party(p), &op, p).map_err(|e| e.to_string())?;
    }
    for i in 0..3 {
        let t = w.party(&format!("Tenant{i}"));
        let l = w.party(&format!("Landlord{i}"));
        w.lease(
            &t,
            &l,
            &format!("h{i}"),
            monthly_terms(Money(50_000), ymd(2024, 5, 1), &[(2024, 5), (2024, 6)], 1),
        )
        .map_err(|e| e.to_string())?;
    }
    let start_of_fuzz = w.ledger.ledger_end();

    // A minute and a half before midnight, then small random steps across it.
    let midnight = (day + Duration::days(1)).and_hms_opt(0, 0, 0).unwrap().and_utc();
    w.clock.set(midnight - Duration::seconds(90));
    let mut known: Option<ContractId> = None;
    for _ in 0..STEPS {
        w.clock.advance(Duration::seconds(rng.gen_range(0..=10)));
        let lt = w.clock.now() + Duration::seconds(rng.gen_range(-50..=50));
        let outcome = if rng.gen_bool(0.5) {
            let p = &providers[rng.gen_range(0..providers.len())];
            // The lifecycler does not always hear about the new update in time.
            let heard = rng.gen_bool(0.5);
            arc::advance(&w.ledger.as_party(p).at(lt), &op, p).map(|r| {
                if heard {
                    known = Some(r.update);
                }
            })
        } else {
            let update = match known {
                Some(u) if rng.gen_bool(0.7) => u,
                _ => arc::current_update(&w.ledger, &op).unwrap().0,
            };
            arc::process_event(&w.ledger.as_party(&w.lifecycler).at(lt), &op, &w.lifecycler, update)
                .map(|_| ())
        };
        match outcome {
            Ok(()) => stats.commits += 1,
            Err(_) => stats.rejected += 1,
        }
    }

    // Replay.
    let mut last: Option<(u64, NaiveDate, NaiveDate)> = None;
    for tx in w.ledger.transactions_from(start_of_fuzz) {
        let Some(date) = referenced_date(&w.ledger, &tx) else {
            continue;
        };
        let lt_date = tx.ledger_time.date_naive();
        if let Some((prev_tx, prev_date, prev_lt)) = last {
            if date < prev_date {
                return Err(format!(
                    "seed {seed}: tx {} relies on {date} after tx {prev_tx} relied on {prev_date}",
                    tx.id
                ));
            }
            if lt_date < prev_lt {
                stats.ledger_time_inversions += 1;
            }
        }
        last = Some((tx.id, date, lt_date));
    }
    Ok(())
}

pub fn run() -> Outcome {
    let mut stats = Stats::default();
    let mut violations = Vec::new();
    for seed in 0..SCHEDULES {
        if let Err(e) = schedule(seed, &mut stats) {
            violations.push(e);
        }
    }
    Outcome::new(
        violations.is_empty() && stats.ledger_time_inversions > 0,
        format!(
            "{SCHEDULES} schedules, {} commits ({} rejected), {} ledger-time inversions across \
             midnight, {} date-order violations on replay",
            stats.commits,
            stats.rejected,
            stats.ledger_time_inversions,
            violations.len()
        ),
    )
    .with_details(violations)
}
