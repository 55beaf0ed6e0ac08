//! Per-party live view of the ledger.
//!
//! A [`ContractStore`] holds the active contracts one party can see as
//! signatory or observer, each under a small integer external id that is
//! never reused. [`ContractStore::spawn`] keeps it current: a probe thread
//! follows the commit log and hands transactions to a single writer through
//! a bounded channel, blocking when the writer falls behind instead of
//! dropping anything.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::sync_channel;
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ledger::{
    project_transaction, ContractId, EventKind, Ledger, Node, Template, Transaction, Visibility,
};
use crate::mi::{InviteArbitrators, MiResult, Poll};
use crate::party::Party;
use crate::rental::Iou;

const CHANNEL_BOUND: usize = 256;
const POLL_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoreEntry {
    pub external_id: u64,
    pub contract_id: ContractId,
    pub template: String,
    pub payload: Value,
    pub visibility: Visibility,
    /// Offset of the transaction that created the contract.
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("external id {0} is unknown")]
    Unknown(u64),
    /// The contract behind this id has been archived.
    #[error("external id {0} refers to an archived contract")]
    Retired(u64),
    #[error("contract {0} is not in the store")]
    NotInStore(ContractId),
}

/// Role-relevant events pushed to a party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Notification {
    /// The party has been invited to arbitrate a maintenance issue.
    Invitation { entry: StoreEntry },
    /// A poll the party votes on was opened.
    Poll { entry: StoreEntry },
    /// A maintenance issue the party is involved in was resolved.
    Result { entry: StoreEntry },
    /// A rent IOU naming the party was created.
    Iou { entry: StoreEntry },
}

impl Notification {
    pub fn kind(&self) -> &'static str {
        match self {
            Notification::Invitation { .. } => "invitation",
            Notification::Poll { .. } => "poll",
            Notification::Result { .. } => "result",
            Notification::Iou { .. } => "iou",
        }
    }
}

/// Everything a store emits while applying a transaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum StoreEvent {
    Created {
        entry: StoreEntry,
    },
    #[serde(rename_all = "camelCase")]
    Archived {
        external_id: u64,
        contract_id: ContractId,
        template: String,
    },
    Notification {
        notification: Notification,
    },
}

impl StoreEvent {
    /// Name used for the SSE `event:` field.
    pub fn name(&self) -> &'static str {
        match self {
            StoreEvent::Created { .. } => "created",
            StoreEvent::Archived { .. } => "archived",
            StoreEvent::Notification { notification } => notification.kind(),
        }
    }
}

type Listener = Box<dyn Fn(&StoreEvent) + Send + Sync>;

#[derive(Default)]
struct Inner {
    live: BTreeMap<u64, StoreEntry>,
    by_contract: HashMap<ContractId, u64>,
}

pub struct ContractStore {
    party: Party,
    inner: RwLock<Inner>,
    next_id: AtomicU64,
    /// Number of transactions applied so far.
    applied: Mutex<u64>,
    applied_cv: Condvar,
    listeners: RwLock<Vec<Listener>>,
}

impl ContractStore {
    pub fn new(party: Party) -> Self {
        ContractStore {
            party,
            inner: RwLock::default(),
            next_id: AtomicU64::new(1),
            applied: Mutex::new(0),
            applied_cv: Condvar::new(),
            listeners: RwLock::default(),
        }
    }

    /// Creates a store for `party` and starts following `ledger`.
    pub fn spawn(ledger: Arc<Ledger>, party: Party) -> StoreHandle {
        let store = Arc::new(ContractStore::new(party));
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = sync_channel::<Arc<Transaction>>(CHANNEL_BOUND);

        let probe = {
            let stop = stop.clone();
            let from = store.offset();
            std::thread::spawn(move || {
                let mut offset = from;
                while !stop.load(Ordering::Relaxed) {
                    let end = ledger.wait_past(offset, POLL_INTERVAL);
                    if end <= offset {
                        continue;
                    }
                    for t in ledger.transactions_from(offset) {
                        offset = t.id + 1;
                        if tx.send(t).is_err() {
                            return;
                        }
                    }
                }
            })
        };
        let writer = {
            let store = store.clone();
            std::thread::spawn(move || {
                for t in rx {
                    store.apply(&t);
                }
            })
        };
        StoreHandle {
            store,
            stop,
            threads: vec![probe, writer],
        }
    }

    pub fn party(&self) -> &Party {
        &self.party
    }

    /// Registers a callback run by the writer for every store event.
    pub fn subscribe(&self, f: impl Fn(&StoreEvent) + Send + Sync + 'static) {
        self.listeners.write().unwrap().push(Box::new(f));
    }

    /// Number of transactions applied; the next expected offset.
    pub fn offset(&self) -> u64 {
        *self.applied.lock().unwrap()
    }

    /// Blocks until at least `offset` transactions have been applied.
    pub fn wait_for_offset(&self, offset: u64, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut applied = self.applied.lock().unwrap();
        while *applied < offset {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return false;
            }
            applied = self.applied_cv.wait_timeout(applied, left).unwrap().0;
        }
        true
    }

    /// Applies one committed transaction. Transactions already applied are
    /// ignored, so re-delivering after a reconnect is harmless.
    pub fn apply(&self, tx: &Transaction) {
        let mut applied = self.applied.lock().unwrap();
        if tx.id < *applied {
            return;
        }
        assert_eq!(
            tx.id, *applied,
            "store for {} missed transactions before offset {}",
            self.party, tx.id
        );
        let mut events = Vec::new();
        {
            let mut inner = self.inner.write().unwrap();
            for ev in project_transaction(tx, &self.party) {
                match ev.kind {
                    EventKind::Created { contract } => {
                        if ev.visibility == Visibility::Witness {
                            continue;
                        }
                        let external_id = self.next_id.fetch_add(1, Ordering::SeqCst);
                        let entry = StoreEntry {
                            external_id,
                            contract_id: contract.id,
                            template: contract.template,
                            payload: contract.payload,
                            visibility: ev.visibility,
                            offset: tx.id,
                        };
                        inner.by_contract.insert(entry.contract_id, external_id);
                        inner.live.insert(external_id, entry.clone());
                        let n = notification(tx, &self.party, &entry);
                        events.push(StoreEvent::Created { entry });
                        if let Some(notification) = n {
                            events.push(StoreEvent::Notification { notification });
                        }
                    }
                    EventKind::Archived {
                        contract_id,
                        template,
                    } => {
                        if let Some(external_id) = inner.by_contract.remove(&contract_id) {
                            inner.live.remove(&external_id);
                            events.push(StoreEvent::Archived {
                                external_id,
                                contract_id,
                                template,
                            });
                        }
                    }
                }
            }
        }
        *applied = tx.id + 1;
        drop(applied);
        self.applied_cv.notify_all();
        let listeners = self.listeners.read().unwrap();
        for ev in &events {
            for l in listeners.iter() {
                l(ev);
            }
        }
    }

    /// Applies every transaction the store has not seen yet.
    pub fn catch_up(&self, ledger: &Ledger) {
        for t in ledger.transactions_from(self.offset()) {
            self.apply(&t);
        }
    }

    pub fn get(&self, external_id: u64) -> Result<StoreEntry, StoreError> {
        if let Some(e) = self.inner.read().unwrap().live.get(&external_id) {
            return Ok(e.clone());
        }
        if external_id >= 1 && external_id < self.next_id.load(Ordering::SeqCst) {
            Err(StoreError::Retired(external_id))
        } else {
            Err(StoreError::Unknown(external_id))
        }
    }

    pub fn resolve(&self, external_id: u64) -> Result<ContractId, StoreError> {
        self.get(external_id).map(|e| e.contract_id)
    }

    pub fn external_id(&self, contract: ContractId) -> Result<u64, StoreError> {
        self.inner
            .read()
            .unwrap()
            .by_contract
            .get(&contract)
            .copied()
            .ok_or(StoreError::NotInStore(contract))
    }

    /// Live entries in external id order.
    pub fn entries(&self) -> Vec<StoreEntry> {
        self.inner.read().unwrap().live.values().cloned().collect()
    }

    pub fn by_template(&self, template: &str) -> Vec<StoreEntry> {
        self.inner
            .read()
            .unwrap()
            .live
            .values()
            .filter(|e| e.template == template)
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn created_by(tx: &Transaction, id: ContractId) -> Option<&str> {
    fn walk<'a>(nodes: &'a [Node], parent: Option<&'a str>, id: ContractId) -> Option<&'a str> {
        for n in nodes {
            match n {
                Node::Create(c) if c.contract.id == id => return parent,
                Node::Exercise(e) => {
                    if let Some(found) = walk(&e.children, Some(&e.choice), id) {
                        return Some(found);
                    }
                }
                _ => {}
            }
        }
        None
    }
    walk(&tx.nodes, None, id)
}

fn notification(tx: &Transaction, party: &Party, entry: &StoreEntry) -> Option<Notification> {
    let payload = &entry.payload;
    let entry = entry.clone();
    match entry.template.as_str() {
        InviteArbitrators::NAME => {
            if created_by(tx, entry.contract_id) != Some("InvokeArbitrators") {
                return None;
            }
            let inv: InviteArbitrators = serde_json::from_value(payload.clone()).ok()?;
            inv.invited
                .contains(party)
                .then_some(Notification::Invitation { entry })
        }
        Poll::NAME => {
            if created_by(tx, entry.contract_id) != Some("CreatePoll") {
                return None;
            }
            let poll: Poll = serde_json::from_value(payload.clone()).ok()?;
            poll.voters
                .contains(party)
                .then_some(Notification::Poll { entry })
        }
        MiResult::NAME => Some(Notification::Result { entry }),
        Iou::NAME => Some(Notification::Iou { entry }),
        _ => None,
    }
}

/// A running store. Dropping it stops the probe and writer threads.
pub struct StoreHandle {
    store: Arc<ContractStore>,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl StoreHandle {
    pub fn store(&self) -> &Arc<ContractStore> {
        &self.store
    }
}

impl std::ops::Deref for StoreHandle {
    type Target = ContractStore;

    fn deref(&self) -> &ContractStore {
        &self.store
    }
}

impl Drop for StoreHandle {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}
