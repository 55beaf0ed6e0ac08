//! Automated rent collection.
//!
//! Two transactions run each day. A time provider advances the operator's
//! private `DateClock` to the date of the transaction's ledger time, which
//! replaces the single public `DateClockUpdate`. The lifecycler then passes
//! that update to `Evolve.ProcessEvent`, which walks every registered lease
//! and turns each remaining payment date earlier than the update's date
//! into an IOU.
//!
//! Workflows read the date from the `DateClockUpdate` rather than from
//! ledger time, so two transactions committed back to back around midnight
//! either share a date or only the later one sees the new day.

mod scheduler;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use scheduler::{
    EndpointError, LatencyRow, LocalEndpoint, OracleEndpoint, RetryPolicy, Scheduler,
    SchedulerError, TickReport,
};

use crate::ledger::{
    Consuming, ContractId, ContractKey, Ledger, LedgerError, Result, Submitter, Template,
    TemplateDescriptor,
};
use crate::party::{fmt_set, Party, PartySet};
use crate::rental::{Iou, LaKey, LeaseAgreement};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DateClock {
    pub operator: Party,
    /// Parties allowed to advance the date.
    pub providers: PartySet,
    /// The last provider to advance the date.
    pub creator: Party,
    pub waiting_accept: PartySet,
    pub date: NaiveDate,
}

impl Template for DateClock {
    const NAME: &'static str = "DateClock";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.operator.clone()])
    }

    fn observers(&self) -> PartySet {
        self.providers
            .union(&self.waiting_accept)
            .cloned()
            .collect()
    }

    fn key(&self) -> Option<ContractKey> {
        Some(clock_key(&self.operator))
    }

    fn ensure(&self) -> std::result::Result<(), String> {
        if !self.providers.contains(&self.creator) {
            return Err(format!("creator {} is not a provider", self.creator));
        }
        if !self.providers.is_disjoint(&self.waiting_accept) {
            return Err("a party cannot be both provider and pending provider".into());
        }
        Ok(())
    }
}

/// The current date, readable by anyone through the public party.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DateClockUpdate {
    pub operator: Party,
    pub date: NaiveDate,
    pub clock_providers: PartySet,
    pub public: Option<Party>,
}

impl Template for DateClockUpdate {
    const NAME: &'static str = "DateClockUpdate";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.operator.clone()])
    }

    fn observers(&self) -> PartySet {
        let mut o = self.clock_providers.clone();
        o.extend(self.public.iter().cloned());
        o
    }

    fn key(&self) -> Option<ContractKey> {
        Some(update_key(&self.operator))
    }
}

/// Registry of the leases lifecycled by the operator's rent collection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Evolve {
    pub operator: Party,
    pub lifecyclers: PartySet,
    pub la_keys: BTreeSet<LaKey>,
}

impl Template for Evolve {
    const NAME: &'static str = "Evolve";

    fn signatories(&self) -> PartySet {
        PartySet::from([self.operator.clone()])
    }

    fn observers(&self) -> PartySet {
        self.lifecyclers.clone()
    }

    fn key(&self) -> Option<ContractKey> {
        Some(evolve_key(&self.operator))
    }
}

pub fn clock_key(operator: &Party) -> ContractKey {
    ContractKey::new(DateClock::NAME, operator)
}

pub fn update_key(operator: &Party) -> ContractKey {
    ContractKey::new(DateClockUpdate::NAME, operator)
}

pub fn evolve_key(operator: &Party) -> ContractKey {
    ContractKey::new(Evolve::NAME, operator)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProviderArg {
    pub provider: Party,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdvanceResult {
    pub update: ContractId,
    pub date: NaiveDate,
    /// False when the clock already showed the ledger-time date or later.
    pub advanced: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AddLaArg {
    pub la_key: LaKey,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AddLasArg {
    pub la_keys: Vec<LaKey>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessEventArg {
    pub lifecycler: Party,
    pub update: ContractId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessResult {
    pub date: NaiveDate,
    pub leases: usize,
    pub ious: Vec<ContractId>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessPaymentArg {
    pub update: ContractId,
}

fn fetch_update(
    upd: &mut crate::ledger::Update<'_>,
    id: ContractId,
    operator: &Party,
) -> Result<DateClockUpdate> {
    let dcu: DateClockUpdate = upd.fetch(id).map_err(|e| match e {
        LedgerError::ContractNotActive(id) => LedgerError::StaleUpdate(id),
        other => other,
    })?;
    if &dcu.operator != operator {
        return Err(LedgerError::Precondition(format!(
            "date clock update belongs to {}, not {operator}",
            dcu.operator
        )));
    }
    Ok(dcu)
}

pub(crate) fn date_clock_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<DateClock>()
        .choice(
            "Advance",
            Consuming::NonConsuming,
            |c: &DateClock, a: &ProviderArg| {
                if c.providers.contains(&a.provider) {
                    Ok(PartySet::from([a.provider.clone()]))
                } else {
                    Err(LedgerError::Authorization(format!(
                        "{} is not a provider of the date clock (providers {})",
                        a.provider,
                        fmt_set(&c.providers)
                    )))
                }
            },
            |upd, self_id, clock: DateClock, a: ProviderArg| {
                let today = upd.ledger_date();
                let offset = (today - clock.date).num_days();
                let (update_id, _) =
                    upd.fetch_by_key::<DateClockUpdate>(&update_key(&clock.operator))?;
                if offset <= 0 {
                    return Ok(AdvanceResult {
                        update: update_id,
                        date: clock.date,
                        advanced: false,
                    });
                }
                upd.archive(self_id)?;
                upd.archive(update_id)?;
                let public = upd.public_party().cloned();
                upd.create(&DateClock {
                    date: today,
                    creator: a.provider,
                    ..clock.clone()
                })?;
                let update = upd.create(&DateClockUpdate {
                    operator: clock.operator,
                    date: today,
                    clock_providers: clock.providers,
                    public,
                })?;
                Ok(AdvanceResult {
                    update,
                    date: today,
                    advanced: true,
                })
            },
        )
        .choice(
            "AddProvider",
            Consuming::Consuming,
            |c: &DateClock, _: &ProviderArg| Ok(PartySet::from([c.operator.clone()])),
            |upd, _, mut c: DateClock, a: ProviderArg| {
                if c.providers.contains(&a.provider) {
                    return Err(LedgerError::Precondition(format!(
                        "{} is already a provider",
                        a.provider
                    )));
                }
                c.waiting_accept.insert(a.provider);
                upd.create(&c)
            },
        )
        .choice(
            "AcceptProvider",
            Consuming::Consuming,
            |c: &DateClock, a: &ProviderArg| {
                if c.waiting_accept.contains(&a.provider) {
                    Ok(PartySet::from([a.provider.clone()]))
                } else {
                    Err(LedgerError::Authorization(format!(
                        "{} has no pending provider invitation",
                        a.provider
                    )))
                }
            },
            |upd, _, mut c: DateClock, a: ProviderArg| {
                c.waiting_accept.remove(&a.provider);
                c.providers.insert(a.provider);
                upd.create(&c)
            },
        )
}

pub(crate) fn date_clock_update_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<DateClockUpdate>()
}

pub(crate) fn evolve_template() -> TemplateDescriptor {
    TemplateDescriptor::of::<Evolve>()
        .choice(
            "AddLA",
            Consuming::NonConsuming,
            |e: &Evolve, _: &AddLaArg| Ok(PartySet::from([e.operator.clone()])),
            |upd, self_id, mut e: Evolve, a: AddLaArg| {
                if !e.la_keys.insert(a.la_key) {
                    return Ok(self_id);
                }
                upd.archive(self_id)?;
                upd.create(&e)
            },
        )
        .choice(
            "AddLAs",
            Consuming::NonConsuming,
            |e: &Evolve, _: &AddLasArg| Ok(PartySet::from([e.operator.clone()])),
            |upd, self_id, mut e: Evolve, a: AddLasArg| {
                let before = e.la_keys.len();
                e.la_keys.extend(a.la_keys);
                if e.la_keys.len() == before {
                    return Ok(self_id);
                }
                upd.archive(self_id)?;
                upd.create(&e)
            },
        )
        .choice(
            "ProcessEvent",
            Consuming::NonConsuming,
            |e: &Evolve, a: &ProcessEventArg| {
                if e.lifecyclers.contains(&a.lifecycler) {
                    Ok(PartySet::from([a.lifecycler.clone()]))
                } else {
                    Err(LedgerError::Authorization(format!(
                        "{} is not a lifecycler",
                        a.lifecycler
                    )))
                }
            },
            |upd, _, e: Evolve, a: ProcessEventArg| {
                let dcu = fetch_update(upd, a.update, &e.operator)?;
                let mut ious = Vec::new();
                let mut leases = 0;
                for key in &e.la_keys {
                    let Some(la) = upd.lookup_by_key(&key.contract_key())? else {
                        continue;
                    };
                    leases += 1;
                    let created: Vec<ContractId> = upd.exercise(
                        la,
                        "ProcessPayment",
                        &ProcessPaymentArg { update: a.update },
                    )?;
                    ious.extend(created);
                }
                Ok(ProcessResult {
                    date: dcu.date,
                    leases,
                    ious,
                })
            },
        )
}

/// Adds `ProcessPayment` to the lease agreement template.
pub(crate) fn extend_lease_agreement(t: TemplateDescriptor) -> TemplateDescriptor {
    t.choice(
        "ProcessPayment",
        Consuming::NonConsuming,
        |la: &LeaseAgreement, _: &ProcessPaymentArg| Ok(PartySet::from([la.operator.clone()])),
        |upd, self_id, la: LeaseAgreement, a: ProcessPaymentArg| {
            let dcu = fetch_update(upd, a.update, &la.operator)?;
            let due = due_dates(&la.remaining_payment_dates, dcu.date);
            if due.is_empty() {
                return Ok(Vec::new());
            }
            let la_key = la.la_key();
            let mut ious = Vec::with_capacity(due.len());
            for d in &due {
                ious.push(upd.create(&Iou {
                    owner: la.landlord.clone(),
                    debtor: la.tenant.clone(),
                    amount: la.terms.rent,
                    due_date: *d,
                    la_key: la_key.clone(),
                })?);
            }
            upd.archive(self_id)?;
            let remaining = la
                .remaining_payment_dates
                .difference(&due)
                .cloned()
                .collect();
            upd.create(&LeaseAgreement {
                remaining_payment_dates: remaining,
                ..la
            })?;
            Ok(ious)
        },
    )
}

/// Payment dates strictly earlier than `today`.
pub fn due_dates(remaining: &BTreeSet<NaiveDate>, today: NaiveDate) -> BTreeSet<NaiveDate> {
    remaining.range(..today).cloned().collect()
}

#[derive(Clone, Debug)]
pub struct ArcSetup {
    pub operator: Party,
    pub providers: PartySet,
    pub lifecyclers: PartySet,
    pub start_date: NaiveDate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcContracts {
    pub clock: ContractId,
    pub update: ContractId,
    pub evolve: ContractId,
}

/// Creates the operator's date clock, its first update and an empty
/// `Evolve`.
pub fn bootstrap(ledger: &Ledger, setup: &ArcSetup) -> Result<ArcContracts> {
    let creator = setup.providers.iter().next().cloned().ok_or_else(|| {
        LedgerError::Precondition("at least one time provider is required".into())
    })?;
    if setup.lifecyclers.is_empty() {
        return Err(LedgerError::Precondition(
            "at least one lifecycler is required".into(),
        ));
    }
    let op = ledger.as_party(&setup.operator);
    let clock = op.create(&DateClock {
        operator: setup.operator.clone(),
        providers: setup.providers.clone(),
        creator,
        waiting_accept: PartySet::new(),
        date: setup.start_date,
    })?;
    let update = op.create(&DateClockUpdate {
        operator: setup.operator.clone(),
        date: setup.start_date,
        clock_providers: setup.providers.clone(),
        public: ledger.public_party().cloned(),
    })?;
    let evolve = op.create(&Evolve {
        operator: setup.operator.clone(),
        lifecyclers: setup.lifecyclers.clone(),
        la_keys: BTreeSet::new(),
    })?;
    Ok(ArcContracts {
        clock,
        update,
        evolve,
    })
}

/// Advances the operator's date clock as the submitting provider.
pub fn advance(sub: &Submitter<'_>, operator: &Party, provider: &Party) -> Result<AdvanceResult> {
    sub.exercise_by_key(
        clock_key(operator),
        "Advance",
        &ProviderArg {
            provider: provider.clone(),
        },
    )
}

pub fn add_provider(sub: &Submitter<'_>, operator: &Party, provider: &Party) -> Result<ContractId> {
    sub.exercise_by_key(
        clock_key(operator),
        "AddProvider",
        &ProviderArg {
            provider: provider.clone(),
        },
    )
}

pub fn accept_provider(
    sub: &Submitter<'_>,
    operator: &Party,
    provider: &Party,
) -> Result<ContractId> {
    sub.exercise_by_key(
        clock_key(operator),
        "AcceptProvider",
        &ProviderArg {
            provider: provider.clone(),
        },
    )
}

pub fn add_la(sub: &Submitter<'_>, operator: &Party, la_key: &LaKey) -> Result<ContractId> {
    sub.exercise_by_key(
        evolve_key(operator),
        "AddLA",
        &AddLaArg {
            la_key: la_key.clone(),
        },
    )
}

/// Registers many leases in one transaction.
pub fn add_las(sub: &Submitter<'_>, operator: &Party, la_keys: Vec<LaKey>) -> Result<ContractId> {
    sub.exercise_by_key(evolve_key(operator), "AddLAs", &AddLasArg { la_keys })
}

pub fn process_event(
    sub: &Submitter<'_>,
    operator: &Party,
    lifecycler: &Party,
    update: ContractId,
) -> Result<ProcessResult> {
    sub.exercise_by_key(
        evolve_key(operator),
        "ProcessEvent",
        &ProcessEventArg {
            lifecycler: lifecycler.clone(),
            update,
        },
    )
}

/// The operator's current date clock update, read as the public party.
pub fn current_update(ledger: &Ledger, operator: &Party) -> Result<(ContractId, DateClockUpdate)> {
    let public = ledger
        .public_party()
        .cloned()
        .ok_or_else(|| LedgerError::Precondition("ledger has no public party".into()))?;
    let c = ledger.lookup_by_key(&update_key(operator), &PartySet::from([public]))?;
    let dcu = serde_json::from_value(c.payload)
        .map_err(|e| LedgerError::InvalidPayload(e.to_string()))?;
    Ok((c.id, dcu))
}
