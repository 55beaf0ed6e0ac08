use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AdvanceResult, ProcessResult};
use crate::ledger::{ContractId, Ledger, LedgerError};
use crate::party::Party;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    /// Transport failure; the call may be retried.
    #[error("engine unavailable: {0}")]
    Unavailable(String),
    /// The engine rejected the command; retrying will not help.
    #[error("rejected ({code}): {message}")]
    Rejected { code: String, message: String },
}

impl From<LedgerError> for EndpointError {
    fn from(e: LedgerError) -> Self {
        EndpointError::Rejected {
            code: e.code().to_owned(),
            message: e.to_string(),
        }
    }
}

/// The two commands an ARC node issues each tick.
pub trait OracleEndpoint {
    fn advance(&self) -> Result<AdvanceResult, EndpointError>;
    fn process(&self, update: ContractId) -> Result<ProcessResult, EndpointError>;
}

/// Endpoint talking to an in-process ledger.
pub struct LocalEndpoint {
    pub ledger: Arc<Ledger>,
    pub operator: Party,
    pub provider: Party,
    pub lifecycler: Party,
}

impl OracleEndpoint for LocalEndpoint {
    fn advance(&self) -> Result<AdvanceResult, EndpointError> {
        let sub = self.ledger.as_party(&self.provider);
        Ok(super::advance(&sub, &self.operator, &self.provider)?)
    }

    fn process(&self, update: ContractId) -> Result<ProcessResult, EndpointError> {
        let sub = self.ledger.as_party(&self.lifecycler);
        Ok(super::process_event(
            &sub,
            &self.operator,
            &self.lifecycler,
            update,
        )?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 8,
            initial_backoff: Duration::from_millis(200),
            max_backoff: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: EndpointError },
    #[error(transparent)]
    Rejected(EndpointError),
    #[error("latency log: {0}")]
    Log(#[from] csv::Error),
}

/// One line of the latency log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub run_id: u64,
    pub n_leases: usize,
    pub n_due: usize,
    pub advance_ms: f64,
    pub lifecycle_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub row: LatencyRow,
    pub advance: AdvanceResult,
    pub process: ProcessResult,
}

type Sleeper = Box<dyn Fn(Duration) + Send>;

/// Drives the daily advance-then-lifecycle cycle against an endpoint.
pub struct Scheduler<E> {
    endpoint: E,
    retry: RetryPolicy,
    next_run: u64,
    log: Option<csv::Writer<Box<dyn Write + Send>>>,
    sleep: Sleeper,
}

impl<E: OracleEndpoint> Scheduler<E> {
    pub fn new(endpoint: E, retry: RetryPolicy) -> Self {
        Scheduler {
            endpoint,
            retry,
            next_run: 0,
            log: None,
            sleep: Box::new(std::thread::sleep),
        }
    }

    /// Appends one CSV row per tick to `out`, starting with a header.
    pub fn with_latency_log(mut self, out: Box<dyn Write + Send>) -> Self {
        self.log = Some(csv::Writer::from_writer(out));
        self
    }

    /// Replaces the sleep used between retries.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    pub fn endpoint(&self) -> &E {
        &self.endpoint
    }

    fn retrying<T>(
        &self,
        mut call: impl FnMut() -> Result<T, EndpointError>,
    ) -> Result<T, SchedulerError> {
        let mut backoff = self.retry.initial_backoff;
        let mut attempt = 1;
        loop {
            match call() {
                Ok(v) => return Ok(v),
                Err(e @ EndpointError::Rejected { .. }) => return Err(SchedulerError::Rejected(e)),
                Err(e) if attempt >= self.retry.max_attempts => {
                    return Err(SchedulerError::Exhausted {
                        attempts: attempt,
                        last: e,
                    })
                }
                Err(_) => {
                    (self.sleep)(backoff);
                    backoff = (backoff * 2).min(self.retry.max_backoff);
                    attempt += 1;
                }
            }
        }
    }

    /// Advances the clock, then lifecycles with the resulting update. If
    /// another provider advanced in between, the update goes stale and the
    /// tick starts over once.
    pub fn tick(&mut self) -> Result<TickReport, SchedulerError> {
        let mut restarted = false;
        loop {
            let t0 = Instant::now();
            let advance = self.retrying(|| self.endpoint.advance())?;
            let advance_ms = ms(t0.elapsed());

            let t1 = Instant::now();
            let process = match self.retrying(|| self.endpoint.process(advance.update)) {
                Err(SchedulerError::Rejected(EndpointError::Rejected { code, .. }))
                    if code == "STALE_UPDATE" && !restarted =>
                {
                    restarted = true;
                    continue;
                }
                other => other?,
            };
            let lifecycle_ms = ms(t1.elapsed());

            let row = LatencyRow {
                run_id: self.next_run,
                n_leases: process.leases,
                n_due: process.ious.len(),
                advance_ms,
                lifecycle_ms,
            };
            self.next_run += 1;
            if let Some(log) = &mut self.log {
                log.serialize(&row)?;
                log.flush().map_err(csv::Error::from)?;
            }
            return Ok(TickReport {
                row,
                advance,
                process,
            });
        }
    }
}

pub(crate) fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
