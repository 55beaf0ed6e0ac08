use std::time::{Duration, Instant};

use rental_core::bench::{run_bench, summarize, BenchConfig};

use crate::common::Outcome;

const LEASES: [usize; 3] = [10, 100, 1000];
const FRACTIONS: [f64; 3] = [0.0, 0.5, 1.0];
const REPS: usize = 15;
const BUDGET: Duration = Duration::from_secs(600);

pub fn run() -> Outcome {
    let t0 = Instant::now();
    let mut rows = Vec::new();
    for n in LEASES {
        for f in FRACTIONS {
            match run_bench(&BenchConfig {
                n_leases: n,
                due_fraction: f,
                reps: REPS,
            }) {
                Ok(r) => rows.extend(r),
                Err(e) => return Outcome::fail(format!("n={n} f={f}: {e}")),
            }
        }
    }
    let elapsed = t0.elapsed();
    let cells = summarize(&rows);
    let mut problems = Vec::new();
    let mut lines = Vec::new();
    for n in LEASES {
        let m: Vec<f64> = FRACTIONS
            .iter()
            .map(|f| {
                cells
                    .iter()
                    .find(|c| c.n_leases == n && c.due_fraction == *f)
                    .map_or(f64::NAN, |c| c.median_lifecycle_ms)
            })
            .collect();
        lines.push(format!(
            "n={n}: median lifecycle ms none={:.3} half={:.3} all={:.3}",
            m[0], m[1], m[2]
        ));
        if !(m[2] >= m[1] && m[1] >= m[0]) {
            problems.push(format!("n={n}: ordering all >= half >= none broken"));
        }
    }
    if let Some(c) = cells.iter().find(|c| c.reps < REPS) {
        problems.push(format!(
            "n={} f={} has {} repetitions",
            c.n_leases, c.due_fraction, c.reps
        ));
    }
    let ok = problems.is_empty() && elapsed < BUDGET;
    lines.extend(problems.iter().cloned());
    Outcome::new(
        ok,
        format!(
            "3x3 grid, {REPS} reps per cell, {} ordering violations, {:.1}s of {}s budget",
            problems.len(),
            elapsed.as_secs_f64(),
            BUDGET.as_secs()
        ),
    )
    .with_details(lines)
}
