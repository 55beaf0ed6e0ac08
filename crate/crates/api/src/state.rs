use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, NaiveDate, Utc};
use rental_core::arc::{self, ArcSetup};
use rental_core::ledger::{Clock, ManualClock, Submitter, SystemClock};
use rental_core::store::{ContractStore, StoreEntry, StoreEvent, StoreHandle};
use rental_core::world::morning;
use rental_core::{mi, rental_package, ContractId, Ledger, LedgerConfig, Party, PartySet};
use serde::de::DeserializeOwned;
use tokio::sync::broadcast;

use crate::error::{ApiError, ApiResult};

/// How long a command waits for the caller's store to catch up.
const SETTLE_TIMEOUT: Duration = Duration::from_secs(10);
const FEED_CAPACITY: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum ClockMode {
    /// Record time follows the wall clock.
    System,
    /// Record time starts here and only moves through `/admin/clock`.
    Manual(DateTime<Utc>),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub operator: String,
    pub provider: String,
    /// May equal `provider` to run both oracle roles as one party.
    pub lifecycler: String,
    pub clock: ClockMode,
    /// Parties allocated at startup besides the oracle roles.
    pub parties: Vec<String>,
    /// If non-empty, the operator publishes this arbitrator list.
    pub arbitrators: Vec<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            operator: "Operator".into(),
            provider: "TimeProvider".into(),
            lifecycler: "Lifecycler".into(),
            clock: ClockMode::System,
            parties: Vec::new(),
            arbitrators: Vec::new(),
        }
    }
}

impl ServerConfig {
    /// Manual clock at 08:00 on `date`.
    pub fn manual(date: NaiveDate) -> Self {
        ServerConfig {
            clock: ClockMode::Manual(morning(date)),
            ..Default::default()
        }
    }
}

/// A party's live store plus the broadcast side of its event feed.
pub struct Session {
    pub party: Party,
    store: StoreHandle,
    feed: broadcast::Sender<StoreEvent>,
}

impl Session {
    pub fn store(&self) -> &ContractStore {
        &self.store
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StoreEvent> {
        self.feed.subscribe()
    }
}

pub struct Inner {
    pub ledger: Arc<Ledger>,
    pub clock: Option<Arc<ManualClock>>,
    pub operator: Party,
    pub provider: Party,
    pub lifecycler: Party,
    sessions: Mutex<HashMap<Party, Arc<Session>>>,
}

/// Shared server state. Cheap to clone.
#[derive(Clone)]
pub struct AppState(pub Arc<Inner>);

impl std::ops::Deref for AppState {
    type Target = Inner;

    fn deref(&self) -> &Inner {
        &self.0
    }
}

impl AppState {
    pub fn new(cfg: &ServerConfig) -> ApiResult<Self> {
        let (clock, source): (Option<Arc<ManualClock>>, Arc<dyn Clock>) = match cfg.clock {
            ClockMode::System => (None, Arc::new(SystemClock)),
            ClockMode::Manual(start) => {
                let c = Arc::new(ManualClock::new(start));
                (Some(c.clone()), c)
            }
        };
        let ledger = Arc::new(Ledger::new(
            rental_package(),
            LedgerConfig::default(),
            source,
        ));
        let operator = ledger.ensure_party(cfg.operator.as_str());
        let provider = ledger.ensure_party(cfg.provider.as_str());
        let lifecycler = ledger.ensure_party(cfg.lifecycler.as_str());
        for p in cfg.parties.iter().chain(&cfg.arbitrators) {
            ledger.ensure_party(p.as_str());
        }
        arc::bootstrap(
            &ledger,
            &ArcSetup {
                operator: operator.clone(),
                providers: PartySet::from([provider.clone()]),
                lifecyclers: PartySet::from([lifecycler.clone()]),
                start_date: ledger.now().date_naive(),
            },
        )?;
        if !cfg.arbitrators.is_empty() {
            let list = cfg.arbitrators.iter().map(|a| Party::new(a)).collect();
            mi::publish_arbitrators(&ledger, &operator, list)?;
        }
        Ok(AppState(Arc::new(Inner {
            ledger,
            clock,
            operator,
            provider,
            lifecycler,
            sessions: Mutex::default(),
        })))
    }

    /// The session of a registered party, started on first use.
    pub fn session(&self, party: &str) -> ApiResult<Arc<Session>> {
        let party = Party::new(party);
        if !self.ledger.is_known(&party) {
            return Err(ApiError::new(
                "UNKNOWN_PARTY",
                format!("unknown party {party}"),
            ));
        }
        let mut sessions = self.sessions.lock().unwrap();
        if let Some(s) = sessions.get(&party) {
            return Ok(s.clone());
        }
        let store = ContractStore::spawn(self.ledger.clone(), party.clone());
        let (feed, _) = broadcast::channel(FEED_CAPACITY);
        let tx = feed.clone();
        store.subscribe(move |ev| {
            let _ = tx.send(ev.clone());
        });
        let s = Arc::new(Session { party: party.clone(), store, feed });
        sessions.insert(party, s.clone());
        Ok(s)
    }

    /// The session of `party` once its store reflects every commit made
    /// before the call.
    pub async fn view(&self, party: &str) -> ApiResult<Arc<Session>> {
        let session = self.session(party)?;
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let ctx = Ctx { state, session };
            ctx.settle()?;
            Ok(ctx.session)
        })
        .await?
    }

    /// Runs `f` for `party` on the blocking pool. The party's store is
    /// brought up to date before `f` runs and again before returning, so
    /// responses reflect the commit they report.
    pub async fn command<T, F>(&self, party: &str, f: F) -> ApiResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&Ctx) -> ApiResult<T> + Send + 'static,
    {
        let session = self.session(party)?;
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let ctx = Ctx { state, session };
            ctx.settle()?;
            let out = f(&ctx);
            ctx.settle()?;
            out
        })
        .await?
    }
}

/// What a command closure gets to work with.
pub struct Ctx {
    pub state: AppState,
    pub session: Arc<Session>,
}

impl Ctx {
    pub fn party(&self) -> &Party {
        &self.session.party
    }

    pub fn ledger(&self) -> &Ledger {
        &self.state.ledger
    }

    pub fn sub(&self) -> Submitter<'_> {
        self.ledger().as_party(self.party())
    }

    fn settle(&self) -> ApiResult<()> {
        let end = self.ledger().ledger_end();
        if self.session.store().wait_for_offset(end, SETTLE_TIMEOUT) {
            Ok(())
        } else {
            Err(ApiError::new(
                "STORE_TIMEOUT",
                format!("store of {} did not reach offset {end}", self.party()),
            ))
        }
    }

    /// Store entry behind `external_id`, which must hold a `template`.
    pub fn entry(&self, external_id: u64, template: &str) -> ApiResult<StoreEntry> {
        let e = self.session.store().get(external_id)?;
        if e.template != template {
            return Err(ApiError::new(
                "WRONG_TEMPLATE",
                format!("external id {external_id} is a {}, not a {template}", e.template),
            ));
        }
        Ok(e)
    }

    pub fn contract(&self, external_id: u64, template: &str) -> ApiResult<ContractId> {
        Ok(self.entry(external_id, template)?.contract_id)
    }

    pub fn decode<T: DeserializeOwned>(&self, external_id: u64, template: &str) -> ApiResult<T> {
        decode(self.entry(external_id, template)?.payload)
    }

    /// External id of `id` in the caller's store, if it is visible there.
    /// Waits for the store to reflect everything committed so far.
    pub fn external_id(&self, id: ContractId) -> Option<u64> {
        self.settle().ok()?;
        self.session.store().external_id(id).ok()
    }
}

pub fn decode<T: DeserializeOwned>(v: serde_json::Value) -> ApiResult<T> {
    serde_json::from_value(v).map_err(|e| ApiError::new("INVALID_PAYLOAD", e.to_string()))
}
