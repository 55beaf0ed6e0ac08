//! Lease creation (propose, accept, approve) and IOU debt records.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ledger::{
    Consuming, ContractId, ContractKey, LedgerError, Result, Submitter, Template,
    TemplateDescriptor,
};
use crate::money::Money;
use crate::party::{Party, PartySet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct House {
    pub house_id: String,
    pub address: String,
    pub landlord: Party,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LeaseTerms {
    pub rent: Money,
    #[serde(with = "crate::dates")]
    pub begin_date: NaiveDate,
    #[serde(with = "crate::dates::set")]
    pub payment_dates: BTreeSet<NaiveDate>,
    /// Number of arbitrators called when a maintenance issue goes to
    /// arbitration.
    pub num_arbitrators: u32,
}

impl LeaseTerms {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.num_arbitrators == 0 {
            return Err("numArbitrators must be at least 1".into());
        }
        if self.rent.minor_units() < 0 {
            return Err("rent must not be negative".into());
        }
        if let Some(d) = self.payment_dates.iter().find(|d| **d < self.begin_date) {
            return Err(format!(
                "payment date {d} precedes begin date {}",
                self.begin_date
            ));
        }
        Ok(())
    }
}

/// Key of a lease agreement: one active lease per tenant, landlord and house.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LaKey {
    pub tenant: Party,
    pub landlord: Party,
    pub house_id: String,
}

impl LaKey {
    pub fn contract_key(&self) -> ContractKey {
        ContractKey::new(LeaseAgreement::NAME, self)
    }
}

fn check_parties(
    tenant: &Party,
    landlord: &Party,
    operator: &Party,
    house: &House,
) -> std::result::Result<(), String> {
    if tenant == landlord || tenant == operator || landlord == operator {
        return Err("tenant, landlord and operator must be distinct parties".into());
    }
    if &house.landlord != landlord {
        return Err(format!(
            "house {} belongs to {}, not {landlord}",
            house.house_id, house.landlord
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub tenant: Party,
    pub landlord: Party,
    pub operator: Party,
    pub house: House,
    pub terms: LeaseTerms,
}

impl Template for Proposal {
    const NAME: &'static str = "Proposal";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.tenant.clone()])
    }

    fn observers(&self) -> PartySet {
        PartySet::from([self.landlord.clone(), self.operator.clone()])
    }

    fn ensure(&self) -> std::result::Result<(), String> {
        check_parties(&self.tenant, &self.landlord, &self.operator, &self.house)?;
        self.terms.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaCreationRequest {
    pub tenant: Party,
    pub landlord: Party,
    pub operator: Party,
    pub house: House,
    pub terms: LeaseTerms,
}

impl Template for LaCreationRequest {
    const NAME: &'static str = "LACreationRequest";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.tenant.clone(), self.landlord.clone()])
    }

    fn observers(&self) -> PartySet {
        PartySet::from([self.operator.clone()])
    }

    fn ensure(&self) -> std::result::Result<(), String> {
        check_parties(&self.tenant, &self.landlord, &self.operator, &self.house)?;
        self.terms.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LeaseAgreement {
    pub tenant: Party,
    pub landlord: Party,
    pub operator: Party,
    pub house: House,
    pub terms: LeaseTerms,
    /// Payment dates not yet turned into IOUs.
    #[serde(with = "crate::dates::set")]
    pub remaining_payment_dates: BTreeSet<NaiveDate>,
}

impl LeaseAgreement {
    pub fn la_key(&self) -> LaKey {
        LaKey {
            tenant: self.tenant.clone(),
            landlord: self.landlord.clone(),
            house_id: self.house.house_id.clone(),
        }
    }

    pub fn is_party_to(&self, p: &Party) -> bool {
        &self.tenant == p || &self.landlord == p
    }
}

impl Template for LeaseAgreement {
    const NAME: &'static str = "LeaseAgreement";

    fn signatories(&self) -> PartySet {
        PartySet::from([
            self.tenant.clone(),
            self.landlord.clone(),
            self.operator.clone(),
        ])
    }

    fn key(&self) -> Option<ContractKey> {
        Some(self.la_key().contract_key())
    }

    fn ensure(&self) -> std::result::Result<(), String> {
        check_parties(&self.tenant, &self.landlord, &self.operator, &self.house)?;
        self.terms.validate()?;
        if !self
            .remaining_payment_dates
            .is_subset(&self.terms.payment_dates)
        {
            return Err("remaining payment dates must come from the lease terms".into());
        }
        Ok(())
    }
}

/// Debt of the tenant to the landlord for one rent payment date.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Iou {
    pub owner: Party,
    pub debtor: Party,
    pub amount: Money,
    pub due_date: NaiveDate,
    pub la_key: LaKey,
}

impl Template for Iou {
    const NAME: &'static str = "IOU";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.debtor.clone()])
    }

    fn observers(&self) -> PartySet {
        PartySet::from([self.owner.clone()])
    }

    /// IOUs are never archived, so the key also rules out charging the same
    /// payment date twice.
    fn key(&self) -> Option<ContractKey> {
        Some(ContractKey::new(Self::NAME, &(&self.la_key, self.due_date)))
    }
}

fn one(p: &Party) -> PartySet {
    PartySet::from([p.clone()])
}

pub(crate) fn proposal_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<Proposal>()
        .choice(
            "Withdraw",
            Consuming::Consuming,
            |p: &Proposal, _: &()| Ok(one(&p.tenant)),
            |_, _, _, _: ()| Ok(()),
        )
        .choice(
            "Decline",
            Consuming::Consuming,
            |p: &Proposal, _: &()| Ok(one(&p.landlord)),
            |_, _, _, _: ()| Ok(()),
        )
        .choice(
            "Accept",
            Consuming::Consuming,
            |p: &Proposal, _: &()| Ok(one(&p.landlord)),
            |upd, _, p: Proposal, _: ()| {
                upd.create(&LaCreationRequest {
                    tenant: p.tenant,
                    landlord: p.landlord,
                    operator: p.operator,
                    house: p.house,
                    terms: p.terms,
                })
            },
        )
}

pub(crate) fn request_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<LaCreationRequest>().choice(
        "Approve",
        Consuming::Consuming,
        |r: &LaCreationRequest, _: &()| Ok(one(&r.operator)),
        |upd, _, r: LaCreationRequest, _: ()| {
            upd.create(&LeaseAgreement {
                remaining_payment_dates: r.terms.payment_dates.clone(),
                tenant: r.tenant,
                landlord: r.landlord,
                operator: r.operator,
                house: r.house,
                terms: r.terms,
            })
        },
    )
}

pub(crate) fn iou_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<Iou>()
}

pub fn submit_proposal(sub: &Submitter<'_>, proposal: &Proposal) -> Result<ContractId> {
    sub.create(proposal)
}

pub fn withdraw(sub: &Submitter<'_>, proposal: ContractId) -> Result<()> {
    sub.exercise(proposal, "Withdraw", &())
}

pub fn decline(sub: &Submitter<'_>, proposal: ContractId) -> Result<()> {
    sub.exercise(proposal, "Decline", &())
}

/// Landlord accepts; returns the lease creation request.
pub fn accept(sub: &Submitter<'_>, proposal: ContractId) -> Result<ContractId> {
    sub.exercise(proposal, "Accept", &())
}

/// Operator approves the request and registers the new lease with its
/// rent-collection `Evolve` contract.
///
/// Registration is a second transaction submitted by the operator alone, so
/// the tenant and landlord do not witness the `Evolve` contract and the keys
/// of unrelated leases it holds.
pub fn approve(sub: &Submitter<'_>, request: ContractId) -> Result<ContractId> {
    let req: LaCreationRequest = sub.fetch(request)?;
    let evolve = crate::arc::evolve_key(&req.operator);
    let operator = PartySet::from([req.operator.clone()]);
    if sub.ledger().lookup_by_key(&evolve, &operator).is_err() {
        return Err(LedgerError::Precondition(format!(
            "operator {} has no rent-collection contract to register leases with",
            req.operator
        )));
    }
    let la: ContractId = sub.exercise(request, "Approve", &())?;
    let la_key = LaKey {
        tenant: req.tenant,
        landlord: req.landlord,
        house_id: req.house.house_id,
    };
    crate::arc::add_la(sub, &req.operator, &la_key)?;
    Ok(la)
}
