use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rental_core::ledger::{Command, ContractId, Ledger, Node};
use rental_core::rental::{self, House, LaCreationRequest, LeaseAgreement, Proposal};
use rental_core::world::{monthly_terms, ymd, World};
use rental_core::{Money, Party, PartySet};

use crate::common::{walk, Outcome};

struct Fx {
    w: World,
    t: Party,
    l: Party,
    op: Party,
    x: Party,
    public: Party,
    /// Open proposal for h1.
    proposal: ContractId,
    /// Accepted proposal for h2, awaiting approval.
    request: ContractId,
}

fn proposal(f: &Fx, tenant: &Party, house: &str) -> Proposal {
    Proposal {
        tenant: tenant.clone(),
        landlord: f.l.clone(),
        operator: f.op.clone(),
        house: House {
            house_id: house.into(),
            address: format!("{house} Main Street"),
            landlord: f.l.clone(),
        },
        terms: monthly_terms(Money(75_000), ymd(2024, 5, 1), &[(2024, 5), (2024, 6)], 3),
    }
}

fn fixture() -> Fx {
    let w = World::new(ymd(2024, 5, 1));
    let t = w.party("Tenant");
    let l = w.party("Landlord");
    let x = w.party("Mallory");
    let op = w.operator.clone();
    let public = w.ledger.public_party().cloned().expect("public party");
    let mut f = Fx {
        w,
        t,
        l,
        op,
        x,
        public,
        proposal: ContractId { tx: 0, index: 0 },
        request: ContractId { tx: 0, index: 0 },
    };
    let sub_t = f.w.ledger.as_party(&f.t);
    f.proposal = rental::submit_proposal(&sub_t, &proposal(&f, &f.t, "h1")).unwrap();
    let p2 = rental::submit_proposal(&sub_t, &proposal(&f, &f.t, "h2")).unwrap();
    f.request = rental::accept(&f.w.ledger.as_party(&f.l), p2).unwrap();
    f
}

fn lease(f: &Fx, house: &str) -> LeaseAgreement {
    let p = proposal(f, &f.t, house);
    LeaseAgreement {
        remaining_payment_dates: p.terms.payment_dates.clone(),
        tenant: p.tenant,
        landlord: p.landlord,
        operator: p.operator,
        house: p.house,
        terms: p.terms,
    }
}

fn request(f: &Fx, house: &str) -> LaCreationRequest {
    let p = proposal(f, &f.t, house);
    LaCreationRequest {
        tenant: p.tenant,
        landlord: p.landlord,
        operator: p.operator,
        house: p.house,
        terms: p.terms,
    }
}

/// One adversarial command, described by what it builds rather than by ids,
/// so it can be replayed in any fresh fixture.
#[derive(Clone, Debug)]
enum Attack {
    CreateLease(Vec<usize>),
    CreateRequest(Vec<usize>),
    Accept(Vec<usize>),
    Approve(Vec<usize>),
    ForgeProposal(Vec<usize>),
    ApproveProposal,
    AcceptRequest,
    SelfApprove(Vec<usize>),
}

fn who(f: &Fx, idx: &[usize]) -> PartySet {
    let all = [&f.t, &f.l, &f.op, &f.x, &f.public];
    idx.iter().map(|i| all[*i].clone()).collect()
}

const T: usize = 0;
const L: usize = 1;
const OP: usize = 2;

fn subsets() -> Vec<Vec<usize>> {
    (1u32..32)
        .map(|m| (0..5).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

fn command(f: &Fx, a: &Attack) -> (PartySet, Command) {
    match a {
        Attack::CreateLease(s) => (who(f, s), Command::create(&lease(f, "h1"))),
        Attack::CreateRequest(s) => (who(f, s), Command::create(&request(f, "h3"))),
        Attack::Accept(s) => (who(f, s), Command::exercise(f.proposal, "Accept", &())),
        Attack::Approve(s) => (who(f, s), Command::exercise(f.request, "Approve", &())),
        Attack::ForgeProposal(s) => (who(f, s), Command::create(&proposal(f, &f.t, "h4"))),
        Attack::ApproveProposal => (
            who(f, &[OP]),
            Command::exercise(f.proposal, "Approve", &()),
        ),
        Attack::AcceptRequest => (who(f, &[L]), Command::exercise(f.request, "Accept", &())),
        // The operator creating a lease in which it also plays the landlord.
        Attack::SelfApprove(s) => {
            let mut la = lease(f, "h5");
            la.landlord = f.op.clone();
            la.house.landlord = f.op.clone();
            (who(f, s), Command::create(&la))
        }
    }
}

fn attacks() -> Vec<Attack> {
    let mut out = Vec::new();
    for s in subsets() {
        let has = |p: usize| s.contains(&p);
        if !(has(T) && has(L) && has(OP)) {
            out.push(Attack::CreateLease(s.clone()));
        }
        if !(has(T) && has(L)) {
            out.push(Attack::CreateRequest(s.clone()));
        }
        if !has(L) {
            out.push(Attack::Accept(s.clone()));
        }
        if !has(OP) {
            out.push(Attack::Approve(s.clone()));
        }
        if !has(T) {
            out.push(Attack::ForgeProposal(s.clone()));
        }
    }
    out.push(Attack::ApproveProposal);
    out.push(Attack::AcceptRequest);
    out.push(Attack::SelfApprove(vec![OP]));
    out.push(Attack::SelfApprove(vec![OP, 3]));
    out
}

/// Chain and authority violations found by replaying the commit log.
///
/// Every creation must be authorized by all its signatories. A lease must
/// come out of `Approve` on a request that itself came out of `Accept` on a
/// proposal with the same parties, or out of lifecycling of an earlier
/// lease, or be created at top level by all three signatories together.
pub fn replay_violations(ledger: &Ledger) -> Vec<String> {
    let mut out = Vec::new();
    let log = ledger.commit_log();
    let parent_of = |id: ContractId| -> Option<(String, String, ContractId)> {
        let tx = &log[id.tx as usize];
        let mut found = None;
        walk(tx, &mut |n, p| {
            if let (Node::Create(c), Some(Node::Exercise(e))) = (n, p) {
                if c.contract.id == id {
                    found = Some((e.template.clone(), e.choice.clone(), e.contract_id));
                }
            }
        });
        found
    };
    for tx in &log {
        walk(tx, &mut |n, p| {
            let Node::Create(c) = n else { return };
            if !c.contract.signatories.is_subset(&c.authorizers) {
                out.push(format!("{} created without all signatories", c.contract.id));
            }
            if c.contract.template != "LeaseAgreement" {
                return;
            }
            let ok = match p {
                None => c.contract.signatories.is_subset(&tx.act_as),
                Some(Node::Exercise(e)) if e.template == "LeaseAgreement" => true,
                Some(Node::Exercise(e)) if e.template == "LACreationRequest" && e.choice == "Approve" => {
                    matches!(
                        parent_of(e.contract_id),
                        Some((t, ch, pid)) if t == "Proposal" && ch == "Accept"
                            && same_parties(ledger, pid, c.contract.id)
                    )
                }
                _ => false,
            };
            if !ok {
                out.push(format!("lease {} has no proposal chain", c.contract.id));
            }
        });
    }
    out
}

fn same_parties(ledger: &Ledger, proposal: ContractId, lease: ContractId) -> bool {
    let p = ledger.contract(proposal).unwrap().contract.payload;
    let l = ledger.contract(lease).unwrap().contract.payload;
    ["tenant", "landlord", "operator", "house"]
        .iter()
        .all(|k| p[k] == l[k])
}

fn leases(ledger: &Ledger) -> usize {
    ledger
        .active_contracts()
        .iter()
        .filter(|c| c.template == "LeaseAgreement")
        .count()
}

pub fn run() -> Outcome {
    let singles = attacks();
    let mut sequences: Vec<Vec<Attack>> = singles.iter().map(|a| vec![a.clone()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..60 {
        let len = rng.gen_range(2..=4);
        sequences.push(
            singles
                .choose_multiple(&mut rng, len)
                .cloned()
                .collect(),
        );
    }

    let mut violations = Vec::new();
    let mut rejected = 0;
    for seq in &sequences {
        let f = fixture();
        let mut all_rejected = true;
        for a in seq {
            let (act_as, cmd) = command(&f, a);
            if f.w.ledger.submit_now(&act_as, cmd).is_ok() {
                all_rejected = false;
                violations.push(format!("accepted: {a:?} in {seq:?}"));
            }
        }
        if leases(&f.w.ledger) != 0 {
            violations.push(format!("lease exists after {seq:?}"));
        } else if all_rejected {
            rejected += 1;
        }
        violations.extend(replay_violations(&f.w.ledger));
    }

    // The intended path works and replays cleanly; so does a joint direct
    // creation by all three signatories.
    let f = fixture();
    let la = rental::approve(&f.w.ledger.as_party(&f.op), f.request);
    if la.is_err() {
        violations.push(format!("approve failed: {la:?}"));
    }
    let joint = f
        .w
        .ledger
        .acting_as(who(&f, &[T, L, OP]))
        .create(&lease(&f, "h1"));
    if joint.is_err() {
        violations.push(format!("joint creation failed: {joint:?}"));
    }
    if leases(&f.w.ledger) != 2 {
        violations.push("legitimate leases missing".into());
    }
    violations.extend(replay_violations(&f.w.ledger));

    Outcome::new(
        violations.is_empty() && rejected == sequences.len(),
        format!(
            "{rejected}/{} adversarial sequences fully rejected; proposal->accept->approve \
             succeeds; log replay {} violations",
            sequences.len(),
            violations.len()
        ),
    )
    .with_details(violations)
}
