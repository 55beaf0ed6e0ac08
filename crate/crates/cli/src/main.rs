use std::fs::File;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Context;
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use rental_api::{AppState, ClockMode, ServerConfig};
use rental_core::arc::{RetryPolicy, Scheduler};
use rental_core::bench::{self, BenchConfig};
use rental_core::scenario;
use rental_core::world::morning;

mod node;

use node::{HttpEndpoint, NodeConfig};

#[derive(Parser)]
#[command(name = "rental", version, about = "Rental ledger with rent-collection and maintenance-issue oracles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure advance and lifecycling latency.
    Bench {
        #[arg(long)]
        leases: usize,
        /// Fraction of leases with a payment due at each tick (0 to 1).
        #[arg(long)]
        due_fraction: f64,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// CSV output; one row per repetition.
        #[arg(long)]
        out: PathBuf,
    },
    /// Scripted scenarios.
    Scenario {
        #[command(subcommand)]
        cmd: ScenarioCmd,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Use a manual clock starting at 08:00 on this date instead of the
        /// system clock. It moves through POST /admin/clock.
        #[arg(long, value_name = "YYYY-MM-DD")]
        manual_clock: Option<NaiveDate>,
        #[arg(long, default_value = "Operator")]
        operator: String,
        #[arg(long, default_value = "TimeProvider")]
        provider: String,
        #[arg(long, default_value = "Lifecycler")]
        lifecycler: String,
        /// Run both oracle roles as the provider party.
        #[arg(long)]
        single_oracle_party: bool,
        /// Party to allocate at startup; repeatable.
        #[arg(long = "party", value_name = "NAME")]
        parties: Vec<String>,
        /// Arbitrator for the operator's published list; repeatable.
        #[arg(long = "arbitrator", value_name = "NAME")]
        arbitrators: Vec<String>,
    },
    /// Run a rent-collection oracle node against a server.
    ArcNode {
        #[arg(long)]
        config: PathBuf,
        /// Stop after this many ticks instead of running forever.
        #[arg(long)]
        ticks: Option<u64>,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run a scenario file and print its report and visibility matrix.
    Run {
        file: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Bench {
            leases,
            due_fraction,
            reps,
            out,
        } => {
            let cfg = BenchConfig {
                n_leases: leases,
                due_fraction,
                reps,
            };
            let rows = bench::run_bench(&cfg)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            bench::write_csv(file, &rows)?;
            for c in bench::summarize(&rows) {
                println!(
                    "leases={} due_fraction={} reps={} median advance_ms={:.3} lifecycle_ms={:.3}",
                    c.n_leases, c.due_fraction, c.reps, c.median_advance_ms, c.median_lifecycle_ms
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Scenario {
            cmd: ScenarioCmd::Run { file, json },
        } => {
            let (report, _) = scenario::run_file(&file)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render());
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::Serve {
            addr,
            manual_clock,
            operator,
            provider,
            lifecycler,
            single_oracle_party,
            parties,
            arbitrators,
        } => {
            let cfg = ServerConfig {
                lifecycler: if single_oracle_party {
                    provider.clone()
                } else {
                    lifecycler
                },
                operator,
                provider,
                clock: manual_clock.map_or(ClockMode::System, |d| ClockMode::Manual(morning(d))),
                parties,
                arbitrators,
            };
            serve(addr, &cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ArcNode { config, ticks } => arc_node(&NodeConfig::load(&config)?, ticks),
    }
}

fn serve(addr: SocketAddr, cfg: &ServerConfig) -> anyhow::Result<()> {
    let state = AppState::new(cfg).map_err(|e| anyhow::anyhow!("{}: {}", e.code, e.message))?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        rental_api::serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        anyhow::Ok(())
    })?;
    // Event streams may still be open; do not wait for them.
    rt.shutdown_timeout(Duration::from_secs(1));
    Ok(())
}

fn arc_node(cfg: &NodeConfig, ticks: Option<u64>) -> anyhow::Result<ExitCode> {
    let endpoint = HttpEndpoint::new(cfg)?;
    let mut sched = Scheduler::new(endpoint, RetryPolicy::from(&cfg.retry));
    if let Some(path) = &cfg.latency_log {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        sched = sched.with_latency_log(Box::new(f));
    }
    let period = Duration::from_secs_f64(cfg.tick_period_secs);
    let mut done = 0;
    loop {
        let started = Instant::now();
        let r = sched.tick()?;
        println!(
            "tick {}: date {} advanced={} leases={} ious={} advance_ms={:.3} lifecycle_ms={:.3}",
            r.row.run_id,
            r.advance.date,
            r.advance.advanced,
            r.row.n_leases,
            r.row.n_due,
            r.row.advance_ms,
            r.row.lifecycle_ms
        );
        std::io::stdout().flush()?;
        done += 1;
        if ticks.is_some_and(|n| done >= n) {
            return Ok(ExitCode::SUCCESS);
        }
        std::thread::sleep(period.saturating_sub(started.elapsed()));
    }
}
