use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::transaction::{Contract, ContractId, Node, Transaction};
use crate::party::{Party, PartySet};

/// How a party comes to see an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Visibility {
    #[serde(rename = "S")]
    Signatory,
    #[serde(rename = "O")]
    Observer,
    #[serde(rename = "W")]
    Witness,
}

impl Visibility {
    pub fn letter(self) -> char {
        match self {
            Visibility::Signatory => 'S',
            Visibility::Observer => 'O',
            Visibility::Witness => 'W',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "camelCase")]
pub enum EventKind {
    Created {
        contract: Contract,
    },
    #[serde(rename_all = "camelCase")]
    Archived {
        contract_id: ContractId,
        template: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Event {
    pub offset: u64,
    pub visibility: Visibility,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn contract_id(&self) -> ContractId {
        match &self.kind {
            EventKind::Created { contract } => contract.id,
            EventKind::Archived { contract_id, .. } => *contract_id,
        }
    }
}

/// The part of `tx` that `party` sees: creations where it is a signatory,
/// observer or witness, and archivals of contracts it is a stakeholder of.
pub fn project_transaction(tx: &Transaction, party: &Party) -> Vec<Event> {
    let mut out = Vec::new();
    for node in tx.iter_nodes() {
        let (visibility, kind) = match node {
            Node::Create(c) => {
                let vis = if c.contract.signatories.contains(party) {
                    Visibility::Signatory
                } else if c.contract.observers.contains(party) {
                    Visibility::Observer
                } else if c.witnesses.contains(party) {
                    Visibility::Witness
                } else {
                    continue;
                };
                (
                    vis,
                    EventKind::Created {
                        contract: c.contract.clone(),
                    },
                )
            }
            Node::Exercise(e) if e.consuming => match stake(&e.signatories, &e.stakeholders, party)
            {
                Some(vis) => (
                    vis,
                    EventKind::Archived {
                        contract_id: e.contract_id,
                        template: e.template.clone(),
                    },
                ),
                None => continue,
            },
            Node::Archive(a) => match stake(&a.signatories, &a.stakeholders, party) {
                Some(vis) => (
                    vis,
                    EventKind::Archived {
                        contract_id: a.contract_id,
                        template: a.template.clone(),
                    },
                ),
                None => continue,
            },
            _ => continue,
        };
        out.push(Event {
            offset: tx.id,
            visibility,
            kind,
        });
    }
    out
}

fn stake(signatories: &PartySet, stakeholders: &PartySet, party: &Party) -> Option<Visibility> {
    if signatories.contains(party) {
        Some(Visibility::Signatory)
    } else if stakeholders.contains(party) {
        Some(Visibility::Observer)
    } else {
        None
    }
}

/// Folds an event stream into the contracts that are still active and that
/// the party holds a stake in. Witnessed creations are excluded: the party
/// never learns of their archival.
pub fn active_from_events<'a>(events: impl IntoIterator<Item = &'a Event>) -> Vec<Contract> {
    let mut live: BTreeMap<ContractId, &Contract> = BTreeMap::new();
    for e in events {
        match &e.kind {
            EventKind::Created { contract } if e.visibility != Visibility::Witness => {
                live.insert(contract.id, contract);
            }
            EventKind::Archived { contract_id, .. } => {
                live.remove(contract_id);
            }
            _ => {}
        }
    }
    live.into_values().cloned().collect()
}
