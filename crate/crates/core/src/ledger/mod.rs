//! Single-node permissioned ledger.
//!
//! The engine plays the part of the synchronization domain: it serializes
//! submissions through one commit pipeline, assigns each committed
//! transaction a strictly increasing record time, and keeps the commit log
//! from which per-party projections are derived.

mod error;
mod log;
mod projection;
mod template;
mod time;
mod transaction;
mod update;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Condvar, Mutex, RwLock, RwLockReadGuard};
use std::time::Duration as StdDuration;

use chrono::{DateTime, Duration, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use error::{LedgerError, Result};
pub use log::{read_commit_log, write_commit_log, LogError};
pub use projection::{active_from_events, project_transaction, Event, EventKind, Visibility};
pub use template::{Admitted, ChoiceDescriptor, Consuming, Package, Template, TemplateDescriptor};
pub use time::{Clock, ManualClock, SystemClock, TimeModel};
pub use transaction::{
    ArchiveNode, Contract, ContractId, ContractKey, ContractRecord, ContractStatus, CreateNode,
    ExerciseNode, FetchNode, Node, Transaction,
};
pub use update::Update;

use crate::party::{Party, PartySet};

/// A ledger command as submitted by a client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Command {
    Create {
        template: String,
        payload: Value,
    },
    #[serde(rename_all = "camelCase")]
    Exercise {
        contract_id: ContractId,
        choice: String,
        argument: Value,
    },
    ExerciseByKey {
        key: ContractKey,
        choice: String,
        argument: Value,
    },
}

impl Command {
    pub fn create<T: Template>(contract: &T) -> Self {
        Command::Create {
            template: T::NAME.to_owned(),
            payload: serde_json::to_value(contract).expect("template payload serializes"),
        }
    }

    pub fn exercise<A: Serialize>(contract_id: ContractId, choice: &str, argument: &A) -> Self {
        Command::Exercise {
            contract_id,
            choice: choice.to_owned(),
            argument: serde_json::to_value(argument).expect("choice argument serializes"),
        }
    }

    pub fn exercise_by_key<A: Serialize>(key: ContractKey, choice: &str, argument: &A) -> Self {
        Command::ExerciseByKey {
            key,
            choice: choice.to_owned(),
            argument: serde_json::to_value(argument).expect("choice argument serializes"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Committed {
    pub transaction: Arc<Transaction>,
    /// Created contract id for a create command, choice result for an
    /// exercise.
    pub result: Value,
}

impl Committed {
    pub fn result_as<T: DeserializeOwned>(&self) -> Result<T> {
        template::decode(&self.result)
    }
}

#[derive(Clone, Debug)]
pub struct LedgerConfig {
    pub time_model: TimeModel,
    /// The distinguished party anyone may read as.
    pub public_party: Option<Party>,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig {
            time_model: TimeModel::default(),
            public_party: Some(Party::new("public")),
        }
    }
}

pub(crate) struct Stored {
    pub(crate) contract: Arc<Contract>,
    pub(crate) status: ContractStatus,
}

impl Stored {
    fn record(&self) -> ContractRecord {
        ContractRecord {
            contract: (*self.contract).clone(),
            status: self.status,
        }
    }
}

#[derive(Default)]
pub(crate) struct State {
    pub(crate) contracts: HashMap<ContractId, Stored>,
    pub(crate) active_keys: HashMap<ContractKey, ContractId>,
    pub(crate) parties: BTreeSet<Party>,
    pub(crate) log: Vec<Arc<Transaction>>,
    pub(crate) active_count: usize,
}

impl State {
    /// Applies the effects recorded in `tx`. Used for fresh commits and for
    /// reloading a commit log alike.
    fn apply(&mut self, tx: Arc<Transaction>) {
        for node in tx.iter_nodes() {
            match node {
                Node::Create(c) => {
                    if let Some(key) = &c.contract.key {
                        self.active_keys.insert(key.clone(), c.contract.id);
                    }
                    self.contracts.insert(
                        c.contract.id,
                        Stored {
                            contract: Arc::new(c.contract.clone()),
                            status: ContractStatus::Active,
                        },
                    );
                    self.active_count += 1;
                }
                Node::Exercise(ExerciseNode {
                    contract_id,
                    consuming: true,
                    ..
                })
                | Node::Archive(ArchiveNode { contract_id, .. }) => self.archive(*contract_id),
                _ => {}
            }
        }
        self.log.push(tx);
    }

    fn archive(&mut self, id: ContractId) {
        if let Some(rec) = self.contracts.get_mut(&id) {
            if rec.status == ContractStatus::Active {
                rec.status = ContractStatus::Archived;
                self.active_count -= 1;
                if let Some(key) = &rec.contract.key {
                    if self.active_keys.get(key) == Some(&id) {
                        self.active_keys.remove(key);
                    }
                }
            }
        }
    }

    fn last_record_time(&self) -> Option<DateTime<Utc>> {
        self.log.last().map(|t| t.record_time)
    }
}

/// The ledger engine. Cheap to share behind an `Arc`; every method takes
/// `&self`.
pub struct Ledger {
    package: Arc<Package>,
    clock: Arc<dyn Clock>,
    config: LedgerConfig,
    commit: Mutex<()>,
    state: RwLock<State>,
    committed: Mutex<u64>,
    committed_cv: Condvar,
}

impl Ledger {
    pub fn new(package: Package, config: LedgerConfig, clock: Arc<dyn Clock>) -> Self {
        let mut state = State::default();
        if let Some(p) = &config.public_party {
            state.parties.insert(p.clone());
        }
        Ledger {
            package: Arc::new(package),
            clock,
            config,
            commit: Mutex::new(()),
            state: RwLock::new(state),
            committed: Mutex::new(0),
            committed_cv: Condvar::new(),
        }
    }

    /// Rebuilds a ledger by re-applying a commit log.
    pub fn from_log(
        package: Package,
        config: LedgerConfig,
        clock: Arc<dyn Clock>,
        parties: impl IntoIterator<Item = Party>,
        transactions: Vec<Transaction>,
    ) -> Self {
        let ledger = Ledger::new(package, config, clock);
        for p in parties {
            ledger.ensure_party(p);
        }
        {
            let mut st = ledger.state.write().unwrap();
            for tx in transactions {
                for node in tx.iter_nodes() {
                    if let Node::Create(c) = node {
                        for p in c.contract.stakeholders() {
                            st.parties.insert(p);
                        }
                    }
                }
                st.apply(Arc::new(tx));
            }
            *ledger.committed.lock().unwrap() = st.log.len() as u64;
        }
        ledger
    }

    fn read(&self) -> RwLockReadGuard<'_, State> {
        self.state.read().unwrap()
    }

    pub fn package(&self) -> &Package {
        &self.package
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn public_party(&self) -> Option<&Party> {
        self.config.public_party.as_ref()
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn allocate_party(&self, party: impl Into<Party>) -> Result<Party> {
        let party = party.into();
        let _guard = self.commit.lock().unwrap();
        let mut st = self.state.write().unwrap();
        if !st.parties.insert(party.clone()) {
            return Err(LedgerError::DuplicateParty(party));
        }
        Ok(party)
    }

    /// Allocates `party` unless it already exists.
    pub fn ensure_party(&self, party: impl Into<Party>) -> Party {
        let party = party.into();
        let _guard = self.commit.lock().unwrap();
        self.state.write().unwrap().parties.insert(party.clone());
        party
    }

    pub fn parties(&self) -> BTreeSet<Party> {
        self.read().parties.clone()
    }

    pub fn is_known(&self, party: &Party) -> bool {
        self.read().parties.contains(party)
    }

    /// Interprets `command` and commits the resulting transaction atomically,
    /// or rejects it with no change to the ledger.
    pub fn submit(
        &self,
        act_as: &PartySet,
        command: Command,
        ledger_time: DateTime<Utc>,
    ) -> Result<Committed> {
        let _guard = self.commit.lock().unwrap();

        let (tx, result) = {
            let st = self.read();
            if act_as.is_empty() {
                return Err(LedgerError::Authorization("no submitting party".into()));
            }
            if let Some(p) = act_as.iter().find(|p| !st.parties.contains(*p)) {
                return Err(LedgerError::UnknownParty(p.clone()));
            }
            let record_time = next_record_time(st.last_record_time(), self.clock.now());
            if !self.config.time_model.within_skew(ledger_time, record_time) {
                return Err(LedgerError::TimeOutOfSkew {
                    ledger_time: ledger_time.to_rfc3339(),
                    record_time: record_time.to_rfc3339(),
                });
            }
            let tx_id = st.log.len() as u64;
            let mut upd = Update::new(
                &st,
                &self.package,
                self.config.public_party.as_ref(),
                tx_id,
                ledger_time,
                act_as.clone(),
            );
            let result = self.interpret(&mut upd, &st, act_as, command)?;
            let tx = Transaction {
                id: tx_id,
                ledger_time,
                record_time,
                act_as: act_as.clone(),
                nodes: upd.into_nodes(),
            };
            (Arc::new(tx), result)
        };

        self.state.write().unwrap().apply(tx.clone());
        {
            let mut n = self.committed.lock().unwrap();
            *n = tx.id + 1;
        }
        self.committed_cv.notify_all();
        Ok(Committed {
            transaction: tx,
            result,
        })
    }

    /// Submits with the engine clock's current time as ledger time.
    pub fn submit_now(&self, act_as: &PartySet, command: Command) -> Result<Committed> {
        self.submit(act_as, command, self.clock.now())
    }

    fn interpret(
        &self,
        upd: &mut Update<'_>,
        st: &State,
        act_as: &PartySet,
        command: Command,
    ) -> Result<Value> {
        let public_acting = self
            .config
            .public_party
            .as_ref()
            .is_some_and(|p| act_as.contains(p));
        match command {
            Command::Create { template, payload } => {
                if public_acting {
                    return Err(public_misuse());
                }
                let id = upd.create_raw(&template, payload)?;
                Ok(Value::String(id.to_string()))
            }
            Command::Exercise {
                contract_id,
                choice,
                argument,
            } => {
                if public_acting {
                    self.check_public_choice(st, contract_id, &choice)?;
                }
                upd.exercise_raw(contract_id, None, &choice, argument)
            }
            Command::ExerciseByKey {
                key,
                choice,
                argument,
            } => {
                let id = upd
                    .lookup_by_key(&key)?
                    .ok_or_else(|| LedgerError::NotFound(format!("key {key}")))?;
                if public_acting {
                    self.check_public_choice(st, id, &choice)?;
                }
                upd.exercise_raw(id, None, &choice, argument)
            }
        }
    }

    fn check_public_choice(&self, st: &State, id: ContractId, choice: &str) -> Result<()> {
        let Some(rec) = st.contracts.get(&id) else {
            return Err(LedgerError::NotFound(format!("contract {id}")));
        };
        let desc = self.package.template(&rec.contract.template)?;
        if desc.choice_named(choice)?.public_actable {
            Ok(())
        } else {
            Err(public_misuse())
        }
    }

    /// Convenience handle submitting as a single party.
    pub fn as_party(&self, party: &Party) -> Submitter<'_> {
        Submitter {
            ledger: self,
            act_as: PartySet::from([party.clone()]),
            ledger_time: None,
        }
    }

    pub fn acting_as(&self, act_as: PartySet) -> Submitter<'_> {
        Submitter {
            ledger: self,
            act_as,
            ledger_time: None,
        }
    }

    pub fn contract(&self, id: ContractId) -> Option<ContractRecord> {
        self.read().contracts.get(&id).map(Stored::record)
    }

    pub fn active_count(&self) -> usize {
        self.read().active_count
    }

    /// Every active contract, ordered by contract id.
    pub fn active_contracts(&self) -> Vec<Contract> {
        let st = self.read();
        let sorted: BTreeMap<ContractId, &Contract> = st
            .contracts
            .values()
            .filter(|r| r.status == ContractStatus::Active)
            .map(|r| (r.contract.id, &*r.contract))
            .collect();
        sorted.into_values().cloned().collect()
    }

    /// Active contracts `party` is a stakeholder of, ordered by id.
    pub fn active_for(&self, party: &Party) -> Vec<Contract> {
        let st = self.read();
        let sorted: BTreeMap<ContractId, &Contract> = st
            .contracts
            .values()
            .filter(|r| r.status == ContractStatus::Active && r.contract.is_stakeholder(party))
            .map(|r| (r.contract.id, &*r.contract))
            .collect();
        sorted.into_values().cloned().collect()
    }

    /// Canonical JSON rendering of the active set. Two ledgers with the same
    /// active contracts render identically.
    pub fn active_set_json(&self) -> String {
        serde_json::to_string(&self.active_contracts()).expect("contracts serialize")
    }

    /// Finds the active contract for `key`, if the submitting parties can
    /// see it.
    pub fn lookup_by_key(&self, key: &ContractKey, act_as: &PartySet) -> Result<Contract> {
        let st = self.read();
        let id = st
            .active_keys
            .get(key)
            .ok_or_else(|| LedgerError::NotFound(format!("key {key}")))?;
        let c = &st.contracts[id].contract;
        if act_as.iter().any(|p| c.is_stakeholder(p)) {
            Ok((**c).clone())
        } else {
            Err(LedgerError::NotVisible(format!("key {key}")))
        }
    }

    /// Create and archive events visible to `party`, in commit order.
    pub fn project_for(&self, party: &Party) -> Result<Vec<Event>> {
        let st = self.read();
        if !st.parties.contains(party) {
            return Err(LedgerError::UnknownParty(party.clone()));
        }
        Ok(st
            .log
            .iter()
            .flat_map(|tx| project_transaction(tx, party))
            .collect())
    }

    /// Number of committed transactions; the next transaction's offset.
    pub fn ledger_end(&self) -> u64 {
        self.read().log.len() as u64
    }

    pub fn transactions_from(&self, offset: u64) -> Vec<Arc<Transaction>> {
        let st = self.read();
        st.log.iter().skip(offset as usize).cloned().collect()
    }

    pub fn transaction(&self, offset: u64) -> Option<Arc<Transaction>> {
        self.read().log.get(offset as usize).cloned()
    }

    /// Blocks until the ledger end exceeds `offset` or `timeout` elapses.
    /// Returns the ledger end.
    pub fn wait_past(&self, offset: u64, timeout: StdDuration) -> u64 {
        let guard = self.committed.lock().unwrap();
        let (guard, _) = self
            .committed_cv
            .wait_timeout_while(guard, timeout, |n| *n <= offset)
            .unwrap();
        *guard
    }

    pub fn commit_log(&self) -> Vec<Arc<Transaction>> {
        self.read().log.clone()
    }
}

fn public_misuse() -> LedgerError {
    LedgerError::Authorization(
        "the public party may only act for reads and public-actable choices".into(),
    )
}

fn next_record_time(last: Option<DateTime<Utc>>, now: DateTime<Utc>) -> DateTime<Utc> {
    match last {
        Some(last) if now <= last => last + Duration::microseconds(1),
        _ => now,
    }
}

/// Submission handle bound to a set of acting parties.
#[derive(Clone)]
pub struct Submitter<'l> {
    ledger: &'l Ledger,
    act_as: PartySet,
    ledger_time: Option<DateTime<Utc>>,
}

impl<'l> Submitter<'l> {
    /// Pins the ledger time of subsequent submissions.
    pub fn at(mut self, ledger_time: DateTime<Utc>) -> Self {
        self.ledger_time = Some(ledger_time);
        self
    }

    pub fn act_as(&self) -> &PartySet {
        &self.act_as
    }

    pub fn ledger(&self) -> &'l Ledger {
        self.ledger
    }

    pub fn submit(&self, command: Command) -> Result<Committed> {
        let t = self.ledger_time.unwrap_or_else(|| self.ledger.now());
        self.ledger.submit(&self.act_as, command, t)
    }

    pub fn create<T: Template>(&self, contract: &T) -> Result<ContractId> {
        self.submit(Command::create(contract))?.result_as()
    }

    pub fn exercise<A: Serialize, R: DeserializeOwned>(
        &self,
        id: ContractId,
        choice: &str,
        argument: &A,
    ) -> Result<R> {
        self.submit(Command::exercise(id, choice, argument))?
            .result_as()
    }

    pub fn exercise_by_key<A: Serialize, R: DeserializeOwned>(
        &self,
        key: ContractKey,
        choice: &str,
        argument: &A,
    ) -> Result<R> {
        self.submit(Command::exercise_by_key(key, choice, argument))?
            .result_as()
    }

    pub fn fetch<T: Template>(&self, id: ContractId) -> Result<T> {
        let rec = self
            .ledger
            .contract(id)
            .ok_or_else(|| LedgerError::NotFound(format!("contract {id}")))?;
        if rec.contract.template != T::NAME {
            return Err(LedgerError::WrongTemplate {
                id,
                expected: T::NAME.to_owned(),
                actual: rec.contract.template,
            });
        }
        if !self.act_as.iter().any(|p| rec.contract.is_stakeholder(p)) {
            return Err(LedgerError::NotVisible(id.to_string()));
        }
        if rec.status != ContractStatus::Active {
            return Err(LedgerError::ContractNotActive(id));
        }
        template::decode(&rec.contract.payload)
    }
}
