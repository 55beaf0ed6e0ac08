//! Maintenance-issue resolution: mediation between tenant and landlord, or
//! arbitration by a panel of operator-listed arbitrators who vote on a poll
//! created by the one that visits the property.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ledger::{
    Consuming, ContractId, ContractKey, Ledger, LedgerError, Result, Submitter, Template,
    TemplateDescriptor, Update,
};
use crate::money::Money;
use crate::party::{fmt_set, Party, PartySet};
use crate::rental::{LaKey, LeaseAgreement};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MiDetails {
    pub description: String,
    pub starting_date: NaiveDate,
    pub house_id: String,
}

/// Identity of a maintenance issue: its lease plus a digest of the details.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MiRef {
    pub la_key: LaKey,
    pub digest: String,
}

impl MiRef {
    pub fn new(la_key: &LaKey, details: &MiDetails) -> Self {
        let canonical = serde_json::to_value(details)
            .expect("details serialize")
            .to_string();
        let digest = Sha256::digest(canonical.as_bytes());
        MiRef {
            la_key: la_key.clone(),
            digest: hex::encode(&digest[..16]),
        }
    }
}

/// Split of responsibility for a maintenance issue, in whole percent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Responsibility {
    pub landlord_pct: u32,
    pub tenant_pct: u32,
}

impl Responsibility {
    pub fn new(landlord_pct: u32, tenant_pct: u32) -> std::result::Result<Self, String> {
        let r = Responsibility {
            landlord_pct,
            tenant_pct,
        };
        r.validate()?;
        Ok(r)
    }

    /// Landlord share with the tenant taking the complement.
    pub fn landlord(landlord_pct: u32) -> Self {
        assert!(landlord_pct <= 100);
        Responsibility {
            landlord_pct,
            tenant_pct: 100 - landlord_pct,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.landlord_pct > 100 || self.tenant_pct > 100 {
            return Err("responsibility percentages must be within 0..=100".into());
        }
        if self.landlord_pct + self.tenant_pct != 100 {
            return Err(format!(
                "responsibility must sum to 100, got {} + {}",
                self.landlord_pct, self.tenant_pct
            ));
        }
        Ok(())
    }
}

/// Mean landlord share over `votes`, rounded half away from zero; the tenant
/// share is the complement. `None` for no votes.
pub fn mean_responsibility(votes: &[Responsibility]) -> Option<Responsibility> {
    if votes.is_empty() {
        return None;
    }
    let n = votes.len() as u64;
    let sum: u64 = votes.iter().map(|v| u64::from(v.landlord_pct)).sum();
    let mean = (2 * sum + n) / (2 * n);
    Some(Responsibility::landlord(mean as u32))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MiReport {
    pub tenant: Party,
    pub landlord: Party,
    pub la_key: LaKey,
    pub mi_details: MiDetails,
    pub arbitrators: PartySet,
    pub active_invitation: bool,
}

impl MiReport {
    pub fn mi_ref(&self) -> MiRef {
        MiRef::new(&self.la_key, &self.mi_details)
    }
}

impl Template for MiReport {
    const NAME: &'static str = "MIReport";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.tenant.clone(), self.landlord.clone()])
    }

    fn observers(&self) -> PartySet {
        self.arbitrators.clone()
    }

    fn key(&self) -> Option<ContractKey> {
        Some(report_key(&self.mi_ref()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MediationAssessment {
    pub creator: Party,
    pub counterpart: Party,
    pub responsibility: Responsibility,
    pub cost: Money,
    pub mi_ref: MiRef,
}

impl Template for MediationAssessment {
    const NAME: &'static str = "MediationAssessment";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.creator.clone()])
    }

    fn observers(&self) -> PartySet {
        PartySet::from([self.counterpart.clone()])
    }

    fn ensure(&self) -> std::result::Result<(), String> {
        if self.creator == self.counterpart {
            return Err("creator and counterpart must differ".into());
        }
        let pair = PartySet::from([self.creator.clone(), self.counterpart.clone()]);
        let lease = PartySet::from([
            self.mi_ref.la_key.tenant.clone(),
            self.mi_ref.la_key.landlord.clone(),
        ]);
        if pair != lease {
            return Err("assessment parties must be the lease's tenant and landlord".into());
        }
        self.responsibility.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResolutionMethod {
    Mediation,
    Arbitration,
}

/// Final outcome for a maintenance issue. At most one per issue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MiResult {
    pub tenant: Party,
    pub landlord: Party,
    pub mi_ref: MiRef,
    pub responsibility: Responsibility,
    pub cost: Money,
    pub method: ResolutionMethod,
    pub voters: PartySet,
}

impl Template for MiResult {
    const NAME: &'static str = "MIResult";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.tenant.clone(), self.landlord.clone()])
    }

    fn observers(&self) -> PartySet {
        self.voters.clone()
    }

    fn key(&self) -> Option<ContractKey> {
        Some(result_key(&self.mi_ref))
    }

    fn ensure(&self) -> std::result::Result<(), String> {
        self.responsibility.validate()?;
        if self.method == ResolutionMethod::Mediation && !self.voters.is_empty() {
            return Err("a mediation result has no voters".into());
        }
        Ok(())
    }
}

/// Operator-signed list of legitimate arbitrators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailableArbitrators {
    pub operator: Party,
    pub arbitrators: PartySet,
    pub observers: PartySet,
}

impl Template for AvailableArbitrators {
    const NAME: &'static str = "AvailableArbitrators";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.operator.clone()])
    }

    fn observers(&self) -> PartySet {
        self.observers.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailableArbitratorsRequest {
    pub public: Party,
    pub requester: Party,
}

impl Template for AvailableArbitratorsRequest {
    const NAME: &'static str = "AvailableArbitratorsRequest";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.requester.clone()])
    }

    fn observers(&self) -> PartySet {
        PartySet::from([self.public.clone()])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InviteArbitrators {
    pub tenant: Party,
    pub landlord: Party,
    pub mi_ref: MiRef,
    pub required: u32,
    pub invited: PartySet,
    pub confirmed: PartySet,
}

impl Template for InviteArbitrators {
    const NAME: &'static str = "InviteArbitrators";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.tenant.clone(), self.landlord.clone()])
    }

    fn observers(&self) -> PartySet {
        self.invited.clone()
    }

    fn key(&self) -> Option<ContractKey> {
        Some(ContractKey::new(Self::NAME, &self.mi_ref))
    }

    fn ensure(&self) -> std::result::Result<(), String> {
        if !self.confirmed.is_subset(&self.invited) {
            return Err("confirmed arbitrators must have been invited".into());
        }
        if self.confirmed.len() > self.required as usize {
            return Err("more arbitrators confirmed than required".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Poll {
    pub tenant: Party,
    pub landlord: Party,
    pub mi_ref: MiRef,
    pub mi_details: MiDetails,
    pub visitor: Party,
    pub visit_details: String,
    pub assessment_date: NaiveDate,
    pub reparation_date: NaiveDate,
    pub cost: Money,
    pub voters: PartySet,
    pub already_voted: PartySet,
    pub votes: Vec<Responsibility>,
}

impl Template for Poll {
    const NAME: &'static str = "Poll";

    fn signatories(&self) -> PartySet {
        let mut s = self.already_voted.clone();
        s.insert(self.tenant.clone());
        s.insert(self.landlord.clone());
        s
    }

    fn observers(&self) -> PartySet {
        self.voters.clone()
    }

    fn key(&self) -> Option<ContractKey> {
        Some(ContractKey::new(Self::NAME, &self.mi_ref))
    }

    fn ensure(&self) -> std::result::Result<(), String> {
        if !self.already_voted.is_subset(&self.voters) {
            return Err("only voters can have voted".into());
        }
        if self.votes.len() != self.already_voted.len() {
            return Err("one vote per voter who has voted".into());
        }
        if !self.already_voted.contains(&self.visitor) {
            return Err("the visitor votes when creating the poll".into());
        }
        self.votes.iter().try_for_each(Responsibility::validate)
    }
}

pub fn report_key(mi: &MiRef) -> ContractKey {
    ContractKey::new(MiReport::NAME, mi)
}

pub fn result_key(mi: &MiRef) -> ContractKey {
    ContractKey::new(MiResult::NAME, mi)
}

fn one(p: &Party) -> PartySet {
    PartySet::from([p.clone()])
}

fn tenant_or_landlord(tenant: &Party, landlord: &Party, p: &Party) -> Result<PartySet> {
    if p == tenant || p == landlord {
        Ok(one(p))
    } else {
        Err(LedgerError::Authorization(format!(
            "{p} is neither the tenant nor the landlord"
        )))
    }
}

fn ensure_unresolved(upd: &mut Update<'_>, mi: &MiRef) -> Result<()> {
    match upd.lookup_by_key(&result_key(mi))? {
        Some(_) => Err(LedgerError::AlreadyResolved),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateMiArg {
    pub creator: Party,
    pub description: String,
    pub starting_date: NaiveDate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InvokeArbitratorsArg {
    pub caller: Party,
    pub available_arbitrators: ContractId,
    pub mi_report: ContractId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InvokeResult {
    pub invitation: ContractId,
    pub mi_report: ContractId,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubmitAssessmentArg {
    pub creator: Party,
    pub responsibility: Responsibility,
    pub cost: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VisitReport {
    pub visit_details: String,
    pub assessment_date: NaiveDate,
    pub reparation_date: NaiveDate,
    pub cost: Money,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreatePollArg {
    pub visitor: Party,
    #[serde(flatten)]
    pub visit: VisitReport,
    pub vote: Responsibility,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArbitratorArg {
    pub arbitrator: Party,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CallerArg {
    pub caller: Party,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RequestArg {
    pub request: ContractId,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VoteArg {
    pub voter: Party,
    pub responsibility: Responsibility,
}

/// Adds `CreateMI` and `InvokeArbitrators` to the lease agreement template.
pub(crate) fn extend_lease_agreement(t: TemplateDescriptor) -> TemplateDescriptor {
    t.choice(
        "CreateMI",
        Consuming::NonConsuming,
        |la: &LeaseAgreement, a: &CreateMiArg| {
            tenant_or_landlord(&la.tenant, &la.landlord, &a.creator)
        },
        |upd, _, la: LeaseAgreement, a: CreateMiArg| {
            if a.starting_date < la.terms.begin_date {
                return Err(LedgerError::Precondition(format!(
                    "issue start {} precedes lease begin {}",
                    a.starting_date, la.terms.begin_date
                )));
            }
            upd.create(&MiReport {
                la_key: la.la_key(),
                mi_details: MiDetails {
                    description: a.description,
                    starting_date: a.starting_date,
                    house_id: la.house.house_id.clone(),
                },
                tenant: la.tenant,
                landlord: la.landlord,
                arbitrators: PartySet::new(),
                active_invitation: false,
            })
        },
    )
    .choice(
        "InvokeArbitrators",
        Consuming::NonConsuming,
        |la: &LeaseAgreement, a: &InvokeArbitratorsArg| {
            tenant_or_landlord(&la.tenant, &la.landlord, &a.caller)
        },
        |upd, _, la: LeaseAgreement, a: InvokeArbitratorsArg| {
            let report: MiReport = upd.fetch(a.mi_report)?;
            if report.la_key != la.la_key() {
                return Err(LedgerError::Precondition(
                    "maintenance issue belongs to another lease".into(),
                ));
            }
            if report.active_invitation {
                return Err(LedgerError::InvitationAlreadyActive);
            }
            let mi_ref = report.mi_ref();
            ensure_unresolved(upd, &mi_ref)?;

            let list: AvailableArbitrators = upd.fetch(a.available_arbitrators)?;
            let signers = list.signatories();
            if signers.iter().any(|p| la.is_party_to(p)) {
                return Err(LedgerError::Impersonation(format!(
                    "arbitrator list signed by {} who is party to the lease",
                    fmt_set(&signers)
                )));
            }
            if let Some(public) = upd.public_party() {
                if list.observers.contains(public) {
                    return Err(LedgerError::Precondition(
                        "the public arbitrator list cannot be consumed; request a private copy"
                            .into(),
                    ));
                }
            }
            // Only the lease's operator, a signatory here, can archive a list
            // it signed. Anyone else's list fails at this point.
            upd.archive(a.available_arbitrators).map_err(|e| match e {
                LedgerError::Authorization(_) => LedgerError::Impersonation(format!(
                    "arbitrator list signed by {} rather than the lease operator {}",
                    fmt_set(&signers),
                    la.operator
                )),
                other => other,
            })?;

            upd.archive(a.mi_report)?;
            let mi_report = upd.create(&MiReport {
                active_invitation: true,
                ..report
            })?;
            let invitation = upd.create(&InviteArbitrators {
                tenant: la.tenant.clone(),
                landlord: la.landlord.clone(),
                mi_ref,
                required: la.terms.num_arbitrators,
                invited: list.arbitrators,
                confirmed: PartySet::new(),
            })?;
            Ok(InvokeResult {
                invitation,
                mi_report,
            })
        },
    )
}

pub(crate) fn report_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<MiReport>()
        .choice(
            "SubmitAssessment",
            Consuming::NonConsuming,
            |r: &MiReport, a: &SubmitAssessmentArg| {
                tenant_or_landlord(&r.tenant, &r.landlord, &a.creator)
            },
            |upd, _, r: MiReport, a: SubmitAssessmentArg| {
                let mi_ref = r.mi_ref();
                ensure_unresolved(upd, &mi_ref)?;
                let counterpart = if a.creator == r.tenant {
                    r.landlord
                } else {
                    r.tenant
                };
                upd.create(&MediationAssessment {
                    creator: a.creator,
                    counterpart,
                    responsibility: a.responsibility,
                    cost: a.cost,
                    mi_ref,
                })
            },
        )
        .choice(
            "CreatePoll",
            Consuming::NonConsuming,
            |r: &MiReport, a: &CreatePollArg| {
                if r.arbitrators.contains(&a.visitor) {
                    Ok(one(&a.visitor))
                } else {
                    Err(LedgerError::Authorization(format!(
                        "{} is not an arbitrator assigned to this issue",
                        a.visitor
                    )))
                }
            },
            |upd, _, r: MiReport, a: CreatePollArg| {
                let mi_ref = r.mi_ref();
                ensure_unresolved(upd, &mi_ref)?;
                upd.create(&Poll {
                    tenant: r.tenant,
                    landlord: r.landlord,
                    mi_ref,
                    mi_details: r.mi_details,
                    visitor: a.visitor.clone(),
                    visit_details: a.visit.visit_details,
                    assessment_date: a.visit.assessment_date,
                    reparation_date: a.visit.reparation_date,
                    cost: a.visit.cost,
                    voters: r.arbitrators,
                    already_voted: one(&a.visitor),
                    votes: vec![a.vote],
                })
            },
        )
}

pub(crate) fn assessment_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<MediationAssessment>()
        .choice(
            "AcceptAssessment",
            Consuming::Consuming,
            |m: &MediationAssessment, _: &()| Ok(one(&m.counterpart)),
            |upd, _, m: MediationAssessment, _: ()| {
                ensure_unresolved(upd, &m.mi_ref)?;
                upd.create(&MiResult {
                    tenant: m.mi_ref.la_key.tenant.clone(),
                    landlord: m.mi_ref.la_key.landlord.clone(),
                    mi_ref: m.mi_ref,
                    responsibility: m.responsibility,
                    cost: m.cost,
                    method: ResolutionMethod::Mediation,
                    voters: PartySet::new(),
                })
            },
        )
        .choice(
            "RejectAssessment",
            Consuming::Consuming,
            |m: &MediationAssessment, _: &()| Ok(one(&m.counterpart)),
            |_, _, _, _: ()| Ok(()),
        )
}

pub(crate) fn available_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<AvailableArbitrators>()
        .choice(
            "AddObserver",
            Consuming::NonConsuming,
            |aa: &AvailableArbitrators, _: &RequestArg| Ok(aa.observers.clone()),
            |upd, _, aa: AvailableArbitrators, a: RequestArg| {
                let public = upd.public_party().cloned().ok_or_else(|| {
                    LedgerError::Precondition("ledger has no public party".into())
                })?;
                if !aa.observers.contains(&public) {
                    return Err(LedgerError::Precondition(
                        "only the public arbitrator list can be copied".into(),
                    ));
                }
                let req: AvailableArbitratorsRequest = upd.fetch(a.request)?;
                upd.create(&AvailableArbitrators {
                    observers: one(&req.requester),
                    ..aa
                })
            },
        )
        .public_actable("AddObserver")
        .choice(
            "AddArbitrator",
            Consuming::Consuming,
            |aa: &AvailableArbitrators, _: &ArbitratorArg| Ok(one(&aa.operator)),
            |upd, _, mut aa: AvailableArbitrators, a: ArbitratorArg| {
                aa.arbitrators.insert(a.arbitrator);
                upd.create(&aa)
            },
        )
        .choice(
            "RemoveArbitrator",
            Consuming::Consuming,
            |aa: &AvailableArbitrators, _: &ArbitratorArg| Ok(one(&aa.operator)),
            |upd, _, mut aa: AvailableArbitrators, a: ArbitratorArg| {
                aa.arbitrators.remove(&a.arbitrator);
                upd.create(&aa)
            },
        )
}

pub(crate) fn request_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<AvailableArbitratorsRequest>()
}

pub(crate) fn invitation_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<InviteArbitrators>()
        .choice(
            "AcceptInvitation",
            Consuming::Consuming,
            |inv: &InviteArbitrators, a: &ArbitratorArg| {
                if inv.invited.contains(&a.arbitrator) {
                    Ok(one(&a.arbitrator))
                } else {
                    Err(LedgerError::Authorization(format!(
                        "{} was not invited",
                        a.arbitrator
                    )))
                }
            },
            |upd, _, mut inv: InviteArbitrators, a: ArbitratorArg| {
                if inv.confirmed.contains(&a.arbitrator) {
                    return Err(LedgerError::AlreadyConfirmed(a.arbitrator));
                }
                if inv.confirmed.len() >= inv.required as usize {
                    return Err(LedgerError::InvitationFull(inv.required as usize));
                }
                inv.confirmed.insert(a.arbitrator);
                upd.create(&inv)
            },
        )
        .choice(
            "DeclineInvitation",
            Consuming::Consuming,
            |inv: &InviteArbitrators, a: &ArbitratorArg| {
                if inv.invited.contains(&a.arbitrator) && !inv.confirmed.contains(&a.arbitrator) {
                    Ok(one(&a.arbitrator))
                } else {
                    Err(LedgerError::Authorization(format!(
                        "{} has no pending invitation",
                        a.arbitrator
                    )))
                }
            },
            |upd, _, mut inv: InviteArbitrators, a: ArbitratorArg| {
                inv.invited.remove(&a.arbitrator);
                upd.create(&inv)
            },
        )
        .choice(
            "ConfirmAttribution",
            Consuming::Consuming,
            |inv: &InviteArbitrators, a: &CallerArg| {
                tenant_or_landlord(&inv.tenant, &inv.landlord, &a.caller)
            },
            |upd, _, inv: InviteArbitrators, _: CallerArg| {
                if inv.confirmed.len() != inv.required as usize {
                    return Err(LedgerError::NotEnoughArbitrators {
                        confirmed: inv.confirmed.len(),
                        required: inv.required as usize,
                    });
                }
                let (report_id, report) = upd.fetch_by_key::<MiReport>(&report_key(&inv.mi_ref))?;
                upd.archive(report_id)?;
                upd.create(&MiReport {
                    arbitrators: inv.confirmed,
                    active_invitation: true,
                    ..report
                })
            },
        )
}

pub(crate) fn poll_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<Poll>()
        .choice(
            "Vote",
            Consuming::Consuming,
            |p: &Poll, a: &VoteArg| {
                if !p.voters.contains(&a.voter) {
                    Err(LedgerError::NotAVoter(a.voter.clone()))
                } else if p.already_voted.contains(&a.voter) {
                    Err(LedgerError::DuplicateVote(a.voter.clone()))
                } else {
                    Ok(one(&a.voter))
                }
            },
            |upd, _, mut p: Poll, a: VoteArg| {
                p.already_voted.insert(a.voter);
                p.votes.push(a.responsibility);
                upd.create(&p)
            },
        )
        .choice(
            "FinalizeVotation",
            Consuming::Consuming,
            |p: &Poll, a: &CallerArg| {
                if p.voters.contains(&a.caller) || a.caller == p.tenant || a.caller == p.landlord {
                    Ok(one(&a.caller))
                } else {
                    Err(LedgerError::Authorization(format!(
                        "{} has no stake in this poll",
                        a.caller
                    )))
                }
            },
            |upd, _, p: Poll, _: CallerArg| {
                if p.already_voted != p.voters {
                    return Err(LedgerError::VotingIncomplete {
                        voted: p.already_voted.len(),
                        voters: p.voters.len(),
                    });
                }
                ensure_unresolved(upd, &p.mi_ref)?;
                let responsibility = mean_responsibility(&p.votes)
                    .ok_or_else(|| LedgerError::Precondition("poll has no votes".into()))?;
                upd.create(&MiResult {
                    tenant: p.tenant,
                    landlord: p.landlord,
                    mi_ref: p.mi_ref,
                    responsibility,
                    cost: p.cost,
                    method: ResolutionMethod::Arbitration,
                    voters: p.voters,
                })
            },
        )
}

pub fn create_mi(
    sub: &Submitter<'_>,
    lease: ContractId,
    creator: &Party,
    description: &str,
    starting_date: NaiveDate,
) -> Result<ContractId> {
    sub.exercise(
        lease,
        "CreateMI",
        &CreateMiArg {
            creator: creator.clone(),
            description: description.to_owned(),
            starting_date,
        },
    )
}

pub fn submit_assessment(
    sub: &Submitter<'_>,
    report: ContractId,
    creator: &Party,
    responsibility: Responsibility,
    cost: Money,
) -> Result<ContractId> {
    sub.exercise(
        report,
        "SubmitAssessment",
        &SubmitAssessmentArg {
            creator: creator.clone(),
            responsibility,
            cost,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject,
}

/// Counterpart accepts or rejects a mediation assessment. Acceptance yields
/// the mediation result.
pub fn resolve_mediation(
    sub: &Submitter<'_>,
    assessment: ContractId,
    decision: Decision,
) -> Result<Option<ContractId>> {
    match decision {
        Decision::Accept => Ok(Some(sub.exercise(assessment, "AcceptAssessment", &())?)),
        Decision::Reject => {
            let () = sub.exercise(assessment, "RejectAssessment", &())?;
            Ok(None)
        }
    }
}

/// Operator publishes its arbitrator list, observable by the public party.
pub fn publish_arbitrators(
    ledger: &Ledger,
    operator: &Party,
    arbitrators: PartySet,
) -> Result<ContractId> {
    let public = ledger
        .public_party()
        .cloned()
        .ok_or_else(|| LedgerError::Precondition("ledger has no public party".into()))?;
    ledger.as_party(operator).create(&AvailableArbitrators {
        operator: operator.clone(),
        arbitrators,
        observers: PartySet::from([public]),
    })
}

/// The operator's public arbitrator list, as seen through the public party.
pub fn public_arbitrator_list(
    ledger: &Ledger,
    operator: &Party,
) -> Option<(ContractId, AvailableArbitrators)> {
    let public = ledger.public_party()?;
    ledger
        .active_for(public)
        .into_iter()
        .filter(|c| c.template == AvailableArbitrators::NAME && c.signatories.contains(operator))
        .find_map(|c| {
            let aa: AvailableArbitrators = serde_json::from_value(c.payload).ok()?;
            (aa.observers.contains(public) && &aa.operator == operator).then_some((c.id, aa))
        })
}

pub fn request_arbitrator_list(sub: &Submitter<'_>, requester: &Party) -> Result<ContractId> {
    let public = sub
        .ledger()
        .public_party()
        .cloned()
        .ok_or_else(|| LedgerError::Precondition("ledger has no public party".into()))?;
    sub.create(&AvailableArbitratorsRequest {
        public,
        requester: requester.clone(),
    })
}

/// Exercises `AddObserver` on the public list; `sub` must act as the public
/// party.
pub fn add_observer(
    sub: &Submitter<'_>,
    available: ContractId,
    request: ContractId,
) -> Result<ContractId> {
    sub.exercise(available, "AddObserver", &RequestArg { request })
}

/// Requests and obtains a private copy of the operator's arbitrator list.
pub fn private_arbitrator_list(
    ledger: &Ledger,
    requester: &Party,
    operator: &Party,
) -> Result<ContractId> {
    let public = ledger
        .public_party()
        .cloned()
        .ok_or_else(|| LedgerError::Precondition("ledger has no public party".into()))?;
    let (list, _) = public_arbitrator_list(ledger, operator)
        .ok_or_else(|| LedgerError::NotFound(format!("public arbitrator list of {operator}")))?;
    let request = request_arbitrator_list(&ledger.as_party(requester), requester)?;
    add_observer(
        &ledger.acting_as(PartySet::from([requester.clone(), public])),
        list,
        request,
    )
}

pub fn invoke_arbitrators(
    sub: &Submitter<'_>,
    lease: ContractId,
    caller: &Party,
    available: ContractId,
    report: ContractId,
) -> Result<InvokeResult> {
    sub.exercise(
        lease,
        "InvokeArbitrators",
        &InvokeArbitratorsArg {
            caller: caller.clone(),
            available_arbitrators: available,
            mi_report: report,
        },
    )
}

pub fn accept_invitation(
    sub: &Submitter<'_>,
    invitation: ContractId,
    arbitrator: &Party,
) -> Result<ContractId> {
    sub.exercise(
        invitation,
        "AcceptInvitation",
        &ArbitratorArg {
            arbitrator: arbitrator.clone(),
        },
    )
}

pub fn decline_invitation(
    sub: &Submitter<'_>,
    invitation: ContractId,
    arbitrator: &Party,
) -> Result<ContractId> {
    sub.exercise(
        invitation,
        "DeclineInvitation",
        &ArbitratorArg {
            arbitrator: arbitrator.clone(),
        },
    )
}

/// Returns the replacement MIReport carrying the confirmed arbitrators.
pub fn confirm_attribution(
    sub: &Submitter<'_>,
    invitation: ContractId,
    caller: &Party,
) -> Result<ContractId> {
    sub.exercise(
        invitation,
        "ConfirmAttribution",
        &CallerArg {
            caller: caller.clone(),
        },
    )
}

pub fn create_poll(
    sub: &Submitter<'_>,
    report: ContractId,
    visitor: &Party,
    visit: VisitReport,
    vote: Responsibility,
) -> Result<ContractId> {
    sub.exercise(
        report,
        "CreatePoll",
        &CreatePollArg {
            visitor: visitor.clone(),
            visit,
            vote,
        },
    )
}

pub fn vote(
    sub: &Submitter<'_>,
    poll: ContractId,
    voter: &Party,
    responsibility: Responsibility,
) -> Result<ContractId> {
    sub.exercise(
        poll,
        "Vote",
        &VoteArg {
            voter: voter.clone(),
            responsibility,
        },
    )
}

pub fn finalize_votation(
    sub: &Submitter<'_>,
    poll: ContractId,
    caller: &Party,
) -> Result<ContractId> {
    sub.exercise(
        poll,
        "FinalizeVotation",
        &CallerArg {
            caller: caller.clone(),
        },
    )
}
