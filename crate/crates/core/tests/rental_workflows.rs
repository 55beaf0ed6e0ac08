use rental_core::ledger::{EventKind, Visibility};
use rental_core::rental::{self, House, LeaseAgreement, LeaseTerms, Proposal};
use rental_core::world::{monthly_terms, ymd, World};
use rental_core::{LedgerError, Money, Party};

fn setup() -> (World, Party, Party) {
    let w = World::new(ymd(2024, 5, 1));
    let t = w.party("Tenant");
    let l = w.party("Landlord");
    (w, t, l)
}

fn terms() -> LeaseTerms {
    monthly_terms(Money(75_000), ymd(2024, 5, 1), &[(2024, 5), (2024, 6)], 3)
}

fn proposal(w: &World, t: &Party, l: &Party) -> Proposal {
    Proposal {
        tenant: t.clone(),
        landlord: l.clone(),
        operator: w.operator.clone(),
        house: House {
            house_id: "h1".into(),
            address: "1 Rua Augusta".into(),
            landlord: l.clone(),
        },
        terms: terms(),
    }
}

fn visibility_of(w: &World, p: &Party, id: rental_core::ContractId) -> Option<Visibility> {
    w.ledger
        .project_for(p)
        .unwrap()
        .into_iter()
        .find(|e| matches!(&e.kind, EventKind::Created { contract } if contract.id == id))
        .map(|e| e.visibility)
}

#[test]
fn proposal_is_signed_by_tenant_and_observed_by_others() {
    let (w, t, l) = setup();
    let p = rental::submit_proposal(&w.ledger.as_party(&t), &proposal(&w, &t, &l)).unwrap();
    assert_eq!(visibility_of(&w, &t, p), Some(Visibility::Signatory));
    assert_eq!(visibility_of(&w, &l, p), Some(Visibility::Observer));
    assert_eq!(
        visibility_of(&w, &w.operator, p),
        Some(Visibility::Observer)
    );
}

#[test]
fn landlord_cannot_submit_for_tenant() {
    let (w, t, l) = setup();
    let err = rental::submit_proposal(&w.ledger.as_party(&l), &proposal(&w, &t, &l)).unwrap_err();
    assert!(matches!(err, LedgerError::Authorization(_)), "{err}");
}

#[test]
fn two_proposals_for_the_same_house_coexist() {
    let (w, t, l) = setup();
    let a = rental::submit_proposal(&w.ledger.as_party(&t), &proposal(&w, &t, &l)).unwrap();
    let b = rental::submit_proposal(&w.ledger.as_party(&t), &proposal(&w, &t, &l)).unwrap();
    assert_ne!(a, b);
    assert!(w.ledger.contract(a).unwrap().is_active());
    assert!(w.ledger.contract(b).unwrap().is_active());
}

#[test]
fn withdraw_and_decline() {
    let (w, t, l) = setup();
    let tenant = w.ledger.as_party(&t);
    let landlord = w.ledger.as_party(&l);
    let p = rental::submit_proposal(&tenant, &proposal(&w, &t, &l)).unwrap();
    let err = rental::decline(&tenant, p).unwrap_err();
    assert!(matches!(err, LedgerError::Authorization(_)), "{err}");
    rental::withdraw(&tenant, p).unwrap();
    assert!(!w.ledger.contract(p).unwrap().is_active());
    assert!(matches!(
        rental::withdraw(&tenant, p),
        Err(LedgerError::ContractNotActive(_))
    ));

    let before = w.ledger.active_count();
    let q = rental::submit_proposal(&tenant, &proposal(&w, &t, &l)).unwrap();
    rental::decline(&landlord, q).unwrap();
    assert_eq!(w.ledger.active_count(), before);
}

#[test]
fn accept_creates_request_signed_by_both() {
    let (w, t, l) = setup();
    let p = rental::submit_proposal(&w.ledger.as_party(&t), &proposal(&w, &t, &l)).unwrap();
    let err = rental::accept(&w.ledger.as_party(&w.operator), p).unwrap_err();
    assert!(matches!(err, LedgerError::Authorization(_)), "{err}");
    let r = rental::accept(&w.ledger.as_party(&l), p).unwrap();
    let rec = w.ledger.contract(r).unwrap().contract;
    assert_eq!(rec.template, "LACreationRequest");
    assert_eq!(rec.signatories, [t.clone(), l.clone()].into());
    assert!(matches!(
        rental::accept(&w.ledger.as_party(&l), p),
        Err(LedgerError::ContractNotActive(_))
    ));
}

#[test]
fn approve_creates_lease_with_three_signatories() {
    let (w, t, l) = setup();
    let p = rental::submit_proposal(&w.ledger.as_party(&t), &proposal(&w, &t, &l)).unwrap();
    let r = rental::accept(&w.ledger.as_party(&l), p).unwrap();
    let err = rental::approve(&w.ledger.as_party(&t), r).unwrap_err();
    assert!(matches!(err, LedgerError::Authorization(_)), "{err}");
    let la = rental::approve(&w.ledger.as_party(&w.operator), r).unwrap();
    let rec = w.ledger.contract(la).unwrap().contract;
    assert_eq!(
        rec.signatories,
        [t.clone(), l.clone(), w.operator.clone()].into()
    );
    let lease: LeaseAgreement = serde_json::from_value(rec.payload).unwrap();
    assert_eq!(lease.remaining_payment_dates, lease.terms.payment_dates);

    // registered with the operator's Evolve
    let evolve = w
        .ledger
        .lookup_by_key(
            &rental_core::arc::evolve_key(&w.operator),
            &[w.operator.clone()].into(),
        )
        .unwrap();
    let evolve: rental_core::arc::Evolve = serde_json::from_value(evolve.payload).unwrap();
    assert!(evolve.la_keys.contains(&lease.la_key()));
}

#[test]
fn duplicate_lease_for_same_key_collides() {
    let (w, t, l) = setup();
    w.lease(&t, &l, "h1", terms()).unwrap();
    let err = w.lease(&t, &l, "h1", terms()).unwrap_err();
    assert!(matches!(err, LedgerError::KeyCollision(_)), "{err}");
    w.lease(&t, &l, "h2", terms()).unwrap();
}

#[test]
fn operator_alone_cannot_create_a_lease() {
    let (w, t, l) = setup();
    let la = LeaseAgreement {
        tenant: t.clone(),
        landlord: l.clone(),
        operator: w.operator.clone(),
        house: proposal(&w, &t, &l).house,
        terms: terms(),
        remaining_payment_dates: terms().payment_dates,
    };
    let err = w.ledger.as_party(&w.operator).create(&la).unwrap_err();
    assert!(matches!(err, LedgerError::Authorization(_)), "{err}");
    w.ledger
        .acting_as([t, l, w.operator.clone()].into())
        .create(&la)
        .unwrap();
}

#[test]
fn invalid_terms_are_rejected() {
    let (w, t, l) = setup();
    let mut p = proposal(&w, &t, &l);
    p.terms.num_arbitrators = 0;
    let err = rental::submit_proposal(&w.ledger.as_party(&t), &p).unwrap_err();
    assert!(matches!(err, LedgerError::Precondition(_)), "{err}");
    let mut p = proposal(&w, &t, &l);
    p.terms.payment_dates.insert(ymd(2024, 4, 25));
    assert!(rental::submit_proposal(&w.ledger.as_party(&t), &p).is_err());
}
