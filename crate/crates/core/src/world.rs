//! A ready-made ledger with the rental package, a manual clock and a
//! bootstrapped rent-collection oracle. Shared by scenarios, the benchmark
//! and tests.

use std::sync::Arc;

use chrono::{DateTime, NaiveDate, NaiveTime, Utc};

use crate::arc::{self, AdvanceResult, ArcContracts, ArcSetup, ProcessResult};
use crate::ledger::{Clock, ContractId, Ledger, LedgerConfig, ManualClock, Result};
use crate::mi;
use crate::money::Money;
use crate::party::{Party, PartySet};
use crate::rental::{self, House, LeaseTerms, Proposal};
use crate::rental_package;

pub struct World {
    pub ledger: Arc<Ledger>,
    pub clock: Arc<ManualClock>,
    pub operator: Party,
    pub provider: Party,
    pub lifecycler: Party,
    pub arc: ArcContracts,
}

/// Time of day at which a simulated day's transactions happen.
pub fn morning(date: NaiveDate) -> DateTime<Utc> {
    date.and_time(NaiveTime::from_hms_opt(8, 0, 0).unwrap())
        .and_utc()
}

pub fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl World {
    /// Parties `Operator`, `TimeProvider` and `Lifecycler`, clock at 08:00
    /// on `start`.
    pub fn new(start: NaiveDate) -> Self {
        Self::with_roles(start, "Operator", "TimeProvider", "Lifecycler")
    }

    pub fn with_roles(start: NaiveDate, operator: &str, provider: &str, lifecycler: &str) -> Self {
        let clock = Arc::new(ManualClock::new(morning(start)));
        let ledger = Arc::new(Ledger::new(
            rental_package(),
            LedgerConfig::default(),
            clock.clone() as Arc<dyn Clock>,
        ));
        let operator = ledger.ensure_party(operator);
        let provider = ledger.ensure_party(provider);
        let lifecycler = ledger.ensure_party(lifecycler);
        let arc = arc::bootstrap(
            &ledger,
            &ArcSetup {
                operator: operator.clone(),
                providers: PartySet::from([provider.clone()]),
                lifecyclers: PartySet::from([lifecycler.clone()]),
                start_date: start,
            },
        )
        .expect("bootstrap on a fresh ledger");
        World {
            ledger,
            clock,
            operator,
            provider,
            lifecycler,
            arc,
        }
    }

    pub fn party(&self, name: &str) -> Party {
        self.ledger.ensure_party(name)
    }

    pub fn today(&self) -> NaiveDate {
        self.clock.now().date_naive()
    }

    /// Moves the clock to 08:00 on `date`.
    pub fn set_date(&self, date: NaiveDate) {
        self.clock.set(morning(date));
    }

    /// Proposal, acceptance and approval of a lease. Returns the lease
    /// agreement id.
    pub fn lease(
        &self,
        tenant: &Party,
        landlord: &Party,
        house_id: &str,
        terms: LeaseTerms,
    ) -> Result<ContractId> {
        let proposal = Proposal {
            tenant: tenant.clone(),
            landlord: landlord.clone(),
            operator: self.operator.clone(),
            house: House {
                house_id: house_id.to_owned(),
                address: format!("{house_id} Main Street"),
                landlord: landlord.clone(),
            },
            terms,
        };
        let p = rental::submit_proposal(&self.ledger.as_party(tenant), &proposal)?;
        let r = rental::accept(&self.ledger.as_party(landlord), p)?;
        rental::approve(&self.ledger.as_party(&self.operator), r)
    }

    /// Current id of a lease; lifecycling replaces the contract.
    pub fn current_lease(
        &self,
        tenant: &Party,
        landlord: &Party,
        house_id: &str,
    ) -> Result<ContractId> {
        let key = rental::LaKey {
            tenant: tenant.clone(),
            landlord: landlord.clone(),
            house_id: house_id.to_owned(),
        };
        let c = self
            .ledger
            .lookup_by_key(&key.contract_key(), &PartySet::from([tenant.clone()]))?;
        Ok(c.id)
    }

    pub fn advance(&self) -> Result<AdvanceResult> {
        arc::advance(
            &self.ledger.as_party(&self.provider),
            &self.operator,
            &self.provider,
        )
    }

    pub fn process(&self, update: ContractId) -> Result<ProcessResult> {
        arc::process_event(
            &self.ledger.as_party(&self.lifecycler),
            &self.operator,
            &self.lifecycler,
            update,
        )
    }

    /// Advance followed by lifecycling at the current clock time.
    pub fn tick(&self) -> Result<(AdvanceResult, ProcessResult)> {
        let adv = self.advance()?;
        let processed = self.process(adv.update)?;
        Ok((adv, processed))
    }

    /// Operator's public arbitrator list.
    pub fn publish_arbitrators(&self, arbitrators: &[Party]) -> Result<ContractId> {
        mi::publish_arbitrators(
            &self.ledger,
            &self.operator,
            arbitrators.iter().cloned().collect(),
        )
    }
}

/// Monthly terms with payment dates on the 25th of each listed month.
pub fn monthly_terms(
    rent: Money,
    begin: NaiveDate,
    months: &[(i32, u32)],
    num_arbitrators: u32,
) -> LeaseTerms {
    LeaseTerms {
        rent,
        begin_date: begin,
        payment_dates: months.iter().map(|(y, m)| ymd(*y, *m, 25)).collect(),
        num_arbitrators,
    }
}
