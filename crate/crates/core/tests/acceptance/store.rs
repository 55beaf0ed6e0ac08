use std::collections::BTreeMap;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use rental_core::ledger::{active_from_events, Contract, ContractId};
use rental_core::mi::{self, Decision, Responsibility};
use rental_core::rental::{self, House, Proposal};
use rental_core::store::{ContractStore, StoreHandle};
use rental_core::world::{monthly_terms, ymd, World};
use rental_core::{arc, Money, Party};

use crate::common::Outcome;

const COMMITS: u64 = 500;
const WAIT: Duration = Duration::from_secs(10);

type View = BTreeMap<ContractId, (String, Value)>;

fn engine_view(w: &World, p: &Party) -> View {
    let events = w.ledger.project_for(p).unwrap();
    active_from_events(&events)
        .into_iter()
        .map(|c| (c.id, (c.template, c.payload)))
        .collect()
}

fn store_view(s: &ContractStore) -> View {
    s.entries()
        .into_iter()
        .map(|e| (e.contract_id, (e.template, e.payload)))
        .collect()
}

fn active(w: &World, template: &str) -> Vec<Contract> {
    w.ledger
        .active_contracts()
        .into_iter()
        .filter(|c| c.template == template)
        .collect()
}

fn party(c: &Contract, field: &str) -> Party {
    Party::new(c.payload[field].as_str().unwrap())
}

struct Driver {
    w: World,
    rng: ChaCha8Rng,
    tenants: Vec<Party>,
    landlords: Vec<Party>,
    houses: usize,
    /// Second half of a two-commit operation, run on the next step.
    pending: Option<Pending>,
}

enum Pending {
    Register(rental::LaKey),
    Process(ContractId),
}

impl Driver {
    /// Attempts one random operation; it may commit nothing if it is
    /// rejected or has nothing to act on.
    fn step(&mut self) {
        let w = &self.w;
        match self.pending.take() {
            Some(Pending::Register(key)) => {
                let op = w.operator.clone();
                let _ = arc::add_la(&w.ledger.as_party(&op), &op, &key);
                return;
            }
            Some(Pending::Process(update)) => {
                let _ = w.process(update);
                return;
            }
            None => {}
        }
        let pick = |rng: &mut ChaCha8Rng, t: &str| active(w, t).choose(rng).cloned();
        match self.rng.gen_range(0..12) {
            0 | 1 => {
                let t = self.tenants.choose(&mut self.rng).unwrap().clone();
                let l = self.landlords.choose(&mut self.rng).unwrap().clone();
                self.houses += 1;
                let p = Proposal {
                    tenant: t.clone(),
                    landlord: l.clone(),
                    operator: w.operator.clone(),
                    house: House {
                        house_id: format!("h{}", self.houses),
                        address: String::new(),
                        landlord: l,
                    },
                    terms: monthly_terms(
                        Money(60_000),
                        ymd(2024, 5, 1),
                        &[(2024, 5), (2024, 6), (2024, 7)],
                        self.rng.gen_range(1..=3),
                    ),
                };
                let _ = rental::submit_proposal(&w.ledger.as_party(&t), &p);
            }
            2 | 3 => {
                if let Some(c) = pick(&mut self.rng, "Proposal") {
                    let l = party(&c, "landlord");
                    let t = party(&c, "tenant");
                    let _ = match self.rng.gen_range(0..4) {
                        0 => rental::decline(&w.ledger.as_party(&l), c.id),
                        1 => rental::withdraw(&w.ledger.as_party(&t), c.id),
                        _ => rental::accept(&w.ledger.as_party(&l), c.id).map(|_| ()),
                    };
                }
            }
            4 => {
                // Approval and registration, as two separate commits.
                if let Some(c) = pick(&mut self.rng, "LACreationRequest") {
                    let op = w.operator.clone();
                    let approved = w
                        .ledger
                        .as_party(&op)
                        .exercise::<_, ContractId>(c.id, "Approve", &());
                    if approved.is_ok() {
                        self.pending = Some(Pending::Register(rental::LaKey {
                            tenant: party(&c, "tenant"),
                            landlord: party(&c, "landlord"),
                            house_id: c.payload["house"]["houseId"].as_str().unwrap().into(),
                        }));
                    }
                }
            }
            5 => {
                let date = w.today() + chrono::Duration::days(self.rng.gen_range(0..=12));
                w.set_date(date);
                if let Ok(adv) = w.advance() {
                    self.pending = Some(Pending::Process(adv.update));
                }
            }
            6 => {
                if let Some(c) = pick(&mut self.rng, "LeaseAgreement") {
                    let who = party(&c, if self.rng.gen_bool(0.5) { "tenant" } else { "landlord" });
                    let _ = mi::create_mi(
                        &w.ledger.as_party(&who),
                        c.id,
                        &who,
                        &format!("issue {}", self.rng.gen::<u16>()),
                        ymd(2024, 5, 1),
                    );
                }
            }
            7 => {
                if let Some(c) = pick(&mut self.rng, "MIReport") {
                    let who = party(&c, "landlord");
                    let _ = mi::submit_assessment(
                        &w.ledger.as_party(&who),
                        c.id,
                        &who,
                        Responsibility::landlord(self.rng.gen_range(0..=100)),
                        Money(10_000),
                    );
                }
            }
            8 => {
                if let Some(c) = pick(&mut self.rng, "MediationAssessment") {
                    let counterpart = party(&c, "counterpart");
                    let d = if self.rng.gen_bool(0.5) {
                        Decision::Accept
                    } else {
                        Decision::Reject
                    };
                    let _ = mi::resolve_mediation(&w.ledger.as_party(&counterpart), c.id, d);
                }
            }
            9 => {
                let t = self.tenants.choose(&mut self.rng).unwrap().clone();
                let _ = mi::request_arbitrator_list(&w.ledger.as_party(&t), &t);
            }
            10 => {
                let op = w.operator.clone();
                if let (Some(req), Some((list, _))) = (
                    pick(&mut self.rng, "AvailableArbitratorsRequest"),
                    mi::public_arbitrator_list(&w.ledger, &op),
                ) {
                    let requester = party(&req, "requester");
                    let public = w.ledger.public_party().unwrap().clone();
                    let _ = mi::add_observer(
                        &w.ledger.acting_as([requester, public].into()),
                        list,
                        req.id,
                    );
                }
            }
            _ => {
                let t = self.tenants.choose(&mut self.rng).unwrap().clone();
                let _ = w.ledger.as_party(&t).create(&rental::Iou {
                    owner: self.landlords[0].clone(),
                    debtor: t.clone(),
                    amount: Money(self.rng.gen_range(1..=1000)),
                    due_date: w.today(),
                    la_key: rental::LaKey {
                        tenant: t,
                        landlord: self.landlords[0].clone(),
                        house_id: format!("loose{}", self.rng.gen::<u32>()),
                    },
                });
            }
        }
    }
}

pub fn run() -> Outcome {
    let w = World::new(ymd(2024, 5, 1));
    let tenants: Vec<Party> = (0..4).map(|i| w.party(&format!("Tenant{i}"))).collect();
    let landlords: Vec<Party> = (0..4).map(|i| w.party(&format!("Landlord{i}"))).collect();
    let arbitrators: Vec<Party> = (1..=3).map(|i| w.party(&format!("Arbitrator{i}"))).collect();
    w.publish_arbitrators(&arbitrators).unwrap();

    let mut parties: Vec<Party> = vec![
        w.operator.clone(),
        w.provider.clone(),
        w.lifecycler.clone(),
        w.ledger.public_party().unwrap().clone(),
    ];
    parties.extend(tenants.iter().cloned());
    parties.extend(landlords.iter().cloned());
    parties.extend(arbitrators.iter().cloned());
    let stores: Vec<StoreHandle> = parties
        .iter()
        .map(|p| ContractStore::spawn(w.ledger.clone(), p.clone()))
        .collect();

    let mut d = Driver {
        w,
        rng: ChaCha8Rng::seed_from_u64(11),
        tenants,
        landlords,
        houses: 0,
        pending: None,
    };
    let start = d.w.ledger.ledger_end();
    let mut commits = 0;
    let mut attempts = 0;
    let mut comparisons = 0;
    let mut mismatches = Vec::new();
    while commits < COMMITS && attempts < 50 * COMMITS {
        attempts += 1;
        let before = d.w.ledger.ledger_end();
        d.step();
        let end = d.w.ledger.ledger_end();
        if end == before {
            continue;
        }
        commits = end - start;
        for (p, s) in parties.iter().zip(&stores) {
            if !s.wait_for_offset(end, WAIT) {
                mismatches.push(format!("{p}: store stuck at offset {}", s.offset()));
                continue;
            }
            comparisons += 1;
            let (engine, store) = (engine_view(&d.w, p), store_view(s));
            if engine != store {
                mismatches.push(format!(
                    "{p} at offset {end}: store has {}, engine projection {}",
                    store.len(),
                    engine.len()
                ));
            }
        }
    }
    let templates: std::collections::BTreeSet<String> = d
        .w
        .ledger
        .commit_log()
        .iter()
        .flat_map(|tx| tx.created().map(|c| c.contract.template.clone()).collect::<Vec<_>>())
        .collect();
    Outcome::new(
        mismatches.is_empty() && commits >= COMMITS,
        format!(
            "{commits} commits, {} party stores, {comparisons} comparisons, {} mismatches \
             ({} templates exercised)",
            parties.len(),
            mismatches.len(),
            templates.len()
        ),
    )
    .with_details(mismatches)
}
