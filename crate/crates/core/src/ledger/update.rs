use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Utc};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::error::{LedgerError, Result};
use super::template::{decode, encode, Package, Template};
use super::transaction::{
    ArchiveNode, Contract, ContractId, ContractKey, CreateNode, ExerciseNode, FetchNode, Node,
};
use super::State;
use crate::party::{fmt_set, Party, PartySet};

/// Interpretation context for one transaction.
///
/// Choice bodies read and write the ledger exclusively through this type.
/// Every check runs against the committed state overlaid with the effects
/// of the transaction so far; nothing reaches the ledger until the whole
/// transaction interprets successfully. `create`, `fetch`, `archive` and the
/// key lookups perform all their checks before recording any effect, so a
/// body may inspect their errors and carry on.
pub struct Update<'a> {
    state: &'a State,
    package: &'a Package,
    public: Option<&'a Party>,
    tx_id: u64,
    next_index: u32,
    ledger_time: DateTime<Utc>,
    created: HashMap<ContractId, Arc<Contract>>,
    archived: HashSet<ContractId>,
    keys: HashMap<ContractKey, Option<ContractId>>,
    authority: PartySet,
    witnesses: PartySet,
    frames: Vec<Vec<Node>>,
}

impl<'a> Update<'a> {
    pub(crate) fn new(
        state: &'a State,
        package: &'a Package,
        public: Option<&'a Party>,
        tx_id: u64,
        ledger_time: DateTime<Utc>,
        act_as: PartySet,
    ) -> Self {
        Update {
            state,
            package,
            public,
            tx_id,
            next_index: 0,
            ledger_time,
            created: HashMap::new(),
            archived: HashSet::new(),
            keys: HashMap::new(),
            authority: act_as,
            witnesses: PartySet::new(),
            frames: vec![Vec::new()],
        }
    }

    pub(crate) fn into_nodes(mut self) -> Vec<Node> {
        debug_assert_eq!(self.frames.len(), 1);
        self.frames.pop().unwrap_or_default()
    }

    /// Transaction ledger time as set by the submitter.
    pub fn ledger_time(&self) -> DateTime<Utc> {
        self.ledger_time
    }

    pub fn ledger_date(&self) -> NaiveDate {
        self.ledger_time.date_naive()
    }

    pub fn public_party(&self) -> Option<&Party> {
        self.public
    }

    /// Parties whose authority is in effect at this point.
    pub fn authority(&self) -> &PartySet {
        &self.authority
    }

    fn lookup(&self, id: ContractId) -> Result<&Arc<Contract>> {
        if self.archived.contains(&id) {
            return Err(LedgerError::ContractNotActive(id));
        }
        if let Some(c) = self.created.get(&id) {
            return Ok(c);
        }
        match self.state.contracts.get(&id) {
            None => Err(LedgerError::NotFound(format!("contract {id}"))),
            Some(r) if r.status != super::ContractStatus::Active => {
                Err(LedgerError::ContractNotActive(id))
            }
            Some(r) => Ok(&r.contract),
        }
    }

    fn active_key(&self, key: &ContractKey) -> Option<ContractId> {
        match self.keys.get(key) {
            Some(slot) => *slot,
            None => self.state.active_keys.get(key).copied(),
        }
    }

    fn check_visible(&self, c: &Contract) -> Result<()> {
        if self.authority.iter().any(|p| c.is_stakeholder(p)) {
            Ok(())
        } else {
            Err(LedgerError::NotVisible(c.id.to_string()))
        }
    }

    fn push(&mut self, node: Node) {
        self.frames
            .last_mut()
            .expect("update frame stack is never empty")
            .push(node);
    }

    fn check_parties_known(&self, set: &PartySet) -> Result<()> {
        match set.iter().find(|p| !self.state.parties.contains(*p)) {
            Some(p) => Err(LedgerError::UnknownParty(p.clone())),
            None => Ok(()),
        }
    }

    pub fn create<T: Template>(&mut self, contract: &T) -> Result<ContractId> {
        self.package.template(T::NAME)?;
        contract.ensure().map_err(LedgerError::Precondition)?;
        self.create_checked(
            T::NAME,
            encode(contract)?,
            contract.signatories(),
            contract.observers(),
            contract.key(),
        )
    }

    pub(crate) fn create_raw(&mut self, template: &str, payload: Value) -> Result<ContractId> {
        let a = self.package.template(template)?.admit(&payload)?;
        self.create_checked(template, a.payload, a.signatories, a.observers, a.key)
    }

    fn create_checked(
        &mut self,
        template: &str,
        payload: Value,
        signatories: PartySet,
        observers: PartySet,
        key: Option<ContractKey>,
    ) -> Result<ContractId> {
        if signatories.is_empty() {
            return Err(LedgerError::Precondition(format!(
                "{template} must have at least one signatory"
            )));
        }
        self.check_parties_known(&signatories)?;
        self.check_parties_known(&observers)?;
        let missing: PartySet = signatories.difference(&self.authority).cloned().collect();
        if !missing.is_empty() {
            return Err(LedgerError::Authorization(format!(
                "creating {template} requires authority of {}",
                fmt_set(&missing)
            )));
        }
        if let Some(key) = &key {
            if self.active_key(key).is_some() {
                return Err(LedgerError::KeyCollision(key.clone()));
            }
        }
        let id = ContractId {
            tx: self.tx_id,
            index: self.next_index,
        };
        self.next_index += 1;
        let contract = Contract {
            id,
            template: template.to_owned(),
            payload,
            signatories,
            observers,
            key: key.clone(),
        };
        if let Some(key) = key {
            self.keys.insert(key, Some(id));
        }
        let node = Node::Create(CreateNode {
            contract: contract.clone(),
            authorizers: self.authority.clone(),
            witnesses: self.witnesses.clone(),
        });
        self.push(node);
        self.created.insert(id, Arc::new(contract));
        Ok(id)
    }

    pub fn fetch<T: Template>(&mut self, id: ContractId) -> Result<T> {
        let c = self.fetch_raw(id, Some(T::NAME))?;
        decode(&c.payload)
    }

    pub(crate) fn fetch_raw(
        &mut self,
        id: ContractId,
        expected: Option<&str>,
    ) -> Result<Arc<Contract>> {
        let c = self.lookup(id)?.clone();
        check_template(&c, expected)?;
        self.check_visible(&c)?;
        self.push(Node::Fetch(FetchNode {
            contract_id: id,
            template: c.template.clone(),
            actors: self.authority.clone(),
            witnesses: self.witnesses.clone(),
        }));
        Ok(c)
    }

    /// The active contract with `key`, if any. A matching contract outside
    /// the current authority's view is an error rather than `None`.
    pub fn lookup_by_key(&mut self, key: &ContractKey) -> Result<Option<ContractId>> {
        match self.active_key(key) {
            None => Ok(None),
            Some(id) => {
                let c = self.lookup(id)?;
                self.check_visible(c)?;
                Ok(Some(id))
            }
        }
    }

    pub fn fetch_by_key<T: Template>(&mut self, key: &ContractKey) -> Result<(ContractId, T)> {
        let id = self
            .lookup_by_key(key)?
            .ok_or_else(|| LedgerError::NotFound(format!("key {key}")))?;
        Ok((id, self.fetch(id)?))
    }

    /// Archives `id` under the current authority, which must include every
    /// signatory.
    pub fn archive(&mut self, id: ContractId) -> Result<()> {
        let c = self.lookup(id)?.clone();
        let missing: PartySet = c.signatories.difference(&self.authority).cloned().collect();
        if !missing.is_empty() {
            return Err(LedgerError::Authorization(format!(
                "archiving {} {id} requires authority of {}",
                c.template,
                fmt_set(&missing)
            )));
        }
        self.mark_archived(&c);
        self.push(Node::Archive(ArchiveNode {
            contract_id: id,
            template: c.template.clone(),
            authorizers: self.authority.clone(),
            signatories: c.signatories.clone(),
            stakeholders: c.stakeholders(),
            witnesses: self.witnesses.clone(),
        }));
        Ok(())
    }

    fn mark_archived(&mut self, c: &Contract) {
        self.archived.insert(c.id);
        self.created.remove(&c.id);
        if let Some(key) = &c.key {
            self.keys.insert(key.clone(), None);
        }
    }

    pub fn exercise<A: Serialize, R: DeserializeOwned>(
        &mut self,
        id: ContractId,
        choice: &str,
        argument: &A,
    ) -> Result<R> {
        let result = self.exercise_raw(id, None, choice, encode(argument)?)?;
        decode(&result)
    }

    pub fn exercise_by_key<A: Serialize, R: DeserializeOwned>(
        &mut self,
        key: &ContractKey,
        choice: &str,
        argument: &A,
    ) -> Result<R> {
        let id = self
            .lookup_by_key(key)?
            .ok_or_else(|| LedgerError::NotFound(format!("key {key}")))?;
        self.exercise(id, choice, argument)
    }

    pub(crate) fn exercise_raw(
        &mut self,
        id: ContractId,
        expected: Option<&str>,
        choice: &str,
        argument: Value,
    ) -> Result<Value> {
        let c = self.lookup(id)?.clone();
        check_template(&c, expected)?;
        let desc = self.package.template(&c.template)?;
        let choice_desc = desc.choice_named(choice)?.clone();
        let controllers = choice_desc.controllers(&c.payload, &argument)?;
        if controllers.is_empty() {
            return Err(LedgerError::Authorization(format!(
                "{}.{choice} has no controllers",
                c.template
            )));
        }
        let missing: PartySet = controllers.difference(&self.authority).cloned().collect();
        if !missing.is_empty() {
            return Err(LedgerError::Authorization(format!(
                "{}.{choice} requires controller authority of {}",
                c.template,
                fmt_set(&missing)
            )));
        }
        self.check_visible(&c)?;

        let stakeholders = c.stakeholders();
        if choice_desc.consuming {
            self.mark_archived(&c);
        }
        let body_authority: PartySet = c.signatories.union(&controllers).cloned().collect();
        let outer_authority = std::mem::replace(&mut self.authority, body_authority);
        let outer_witnesses = self.witnesses.clone();
        self.witnesses.extend(stakeholders.iter().cloned());
        self.frames.push(Vec::new());

        let result = (choice_desc.body)(self, id, &c.payload, &argument);

        let children = self.frames.pop().unwrap_or_default();
        self.authority = outer_authority;
        self.witnesses = outer_witnesses;
        let result = result?;

        self.push(Node::Exercise(ExerciseNode {
            contract_id: id,
            template: c.template.clone(),
            choice: choice.to_owned(),
            argument,
            actors: controllers,
            consuming: choice_desc.consuming,
            signatories: c.signatories.clone(),
            stakeholders,
            witnesses: self.witnesses.clone(),
            children,
            result: result.clone(),
        }));
        Ok(result)
    }
}

fn check_template(c: &Contract, expected: Option<&str>) -> Result<()> {
    match expected {
        Some(t) if t != c.template => Err(LedgerError::WrongTemplate {
            id: c.id,
            expected: t.to_owned(),
            actual: c.template.clone(),
        }),
        _ => Ok(()),
    }
}
