//! One line per acceptance criterion. Pass a substring of a criterion name
//! to run only the matching ones.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

mod arc;
mod auth;
mod bench;
mod common;
mod mi;
mod privacy;
mod race;
mod store;

use common::Outcome;

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    ("authorization", auth::run),
    ("privacy-matrix", privacy::run),
    ("arc-correctness", arc::run),
    ("midnight-race", race::run),
    ("mi-suite", mi::run),
    ("store-equivalence", store::run),
    ("benchmark-shape", bench::run),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, f) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::fail(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {} ({secs:.1}s)", outcome.summary);
        for d in &outcome.details {
            println!("       {d}");
        }
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
