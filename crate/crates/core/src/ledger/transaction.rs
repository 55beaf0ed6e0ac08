use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::party::{Party, PartySet};

/// Contract identifier: the committing transaction and the creation index
/// within it. Rendered as `#<tx>:<index>`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContractId {
    pub tx: u64,
    pub index: u32,
}

impl fmt::Display for ContractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}:{}", self.tx, self.index)
    }
}

impl fmt::Debug for ContractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ContractId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed contract id {s:?}");
        let rest = s.strip_prefix('#').ok_or_else(bad)?;
        let (tx, index) = rest.split_once(':').ok_or_else(bad)?;
        Ok(ContractId {
            tx: tx.parse().map_err(|_| bad())?,
            index: index.parse().map_err(|_| bad())?,
        })
    }
}

impl Serialize for ContractId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContractId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Template-scoped contract key. The key value is held as canonical JSON
/// text so keys compare and hash by value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContractKey {
    pub template: String,
    pub value: String,
}

impl ContractKey {
    pub fn new<K: Serialize>(template: &str, value: &K) -> Self {
        let value = serde_json::to_value(value).expect("contract key must serialize");
        ContractKey {
            template: template.to_owned(),
            value: value.to_string(),
        }
    }

    pub fn value(&self) -> Value {
        serde_json::from_str(&self.value).unwrap_or(Value::Null)
    }
}

impl fmt::Display for ContractKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.template, self.value)
    }
}

impl fmt::Debug for ContractKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The immutable part of a contract, fixed at creation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub id: ContractId,
    pub template: String,
    pub payload: Value,
    pub signatories: PartySet,
    pub observers: PartySet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<ContractKey>,
}

impl Contract {
    pub fn stakeholders(&self) -> PartySet {
        self.signatories.union(&self.observers).cloned().collect()
    }

    pub fn is_stakeholder(&self, party: &Party) -> bool {
        self.signatories.contains(party) || self.observers.contains(party)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractStatus {
    Active,
    Archived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractRecord {
    #[serde(flatten)]
    pub contract: Contract,
    pub status: ContractStatus,
}

impl ContractRecord {
    pub fn is_active(&self) -> bool {
        self.status == ContractStatus::Active
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateNode {
    pub contract: Contract,
    /// Authority in effect when the contract was created.
    pub authorizers: PartySet,
    /// Stakeholders of the exercised contracts this creation is a
    /// consequence of.
    pub witnesses: PartySet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseNode {
    pub contract_id: ContractId,
    pub template: String,
    pub choice: String,
    pub argument: Value,
    pub actors: PartySet,
    pub consuming: bool,
    pub signatories: PartySet,
    pub stakeholders: PartySet,
    pub witnesses: PartySet,
    pub children: Vec<Node>,
    pub result: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FetchNode {
    pub contract_id: ContractId,
    pub template: String,
    pub actors: PartySet,
    pub witnesses: PartySet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ArchiveNode {
    pub contract_id: ContractId,
    pub template: String,
    pub authorizers: PartySet,
    pub signatories: PartySet,
    pub stakeholders: PartySet,
    pub witnesses: PartySet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Node {
    Create(CreateNode),
    Exercise(ExerciseNode),
    Fetch(FetchNode),
    Archive(ArchiveNode),
}

impl Node {
    pub fn contract_id(&self) -> ContractId {
        match self {
            Node::Create(n) => n.contract.id,
            Node::Exercise(n) => n.contract_id,
            Node::Fetch(n) => n.contract_id,
            Node::Archive(n) => n.contract_id,
        }
    }

    pub fn witnesses(&self) -> &PartySet {
        match self {
            Node::Create(n) => &n.witnesses,
            Node::Exercise(n) => &n.witnesses,
            Node::Fetch(n) => &n.witnesses,
            Node::Archive(n) => &n.witnesses,
        }
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::Exercise(n) => &n.children,
            _ => &[],
        }
    }
}

/// A committed transaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transaction {
    pub id: u64,
    pub ledger_time: DateTime<Utc>,
    pub record_time: DateTime<Utc>,
    pub act_as: PartySet,
    pub nodes: Vec<Node>,
}

impl Transaction {
    /// Depth-first, pre-order walk over every node.
    pub fn iter_nodes(&self) -> NodeIter<'_> {
        NodeIter {
            stack: self.nodes.iter().rev().collect(),
        }
    }

    /// Contracts created by this transaction, in creation order.
    pub fn created(&self) -> impl Iterator<Item = &CreateNode> {
        self.iter_nodes().filter_map(|n| match n {
            Node::Create(c) => Some(c),
            _ => None,
        })
    }

    /// (contract id, template, stakeholders) of every contract this
    /// transaction archives, whether by consuming exercise or explicit archive.
    pub fn archived(&self) -> impl Iterator<Item = (ContractId, &str, &PartySet)> {
        self.iter_nodes().filter_map(|n| match n {
            Node::Exercise(e) if e.consuming => {
                Some((e.contract_id, e.template.as_str(), &e.stakeholders))
            }
            Node::Archive(a) => Some((a.contract_id, a.template.as_str(), &a.stakeholders)),
            _ => None,
        })
    }

    /// The result of the first root exercise, if any.
    pub fn exercise_result(&self) -> Option<&Value> {
        self.nodes.iter().find_map(|n| match n {
            Node::Exercise(e) => Some(&e.result),
            _ => None,
        })
    }
}

pub struct NodeIter<'a> {
    stack: Vec<&'a Node>,
}

impl<'a> Iterator for NodeIter<'a> {
    type Item = &'a Node;

    fn next(&mut self) -> Option<&'a Node> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children().iter().rev());
        Some(node)
    }
}
