use rental_core::mi::{self, AvailableArbitrators, MiResult, Responsibility, VisitReport};
use rental_core::world::{monthly_terms, ymd, World};
use rental_core::{ContractId, LedgerError, Money, Party};

use crate::common::Outcome;

/// Landlord shares voted in each case. The expected mean is computed here
/// with plain integer arithmetic, rounding halves up.
const CASES: &[(u32, &[u32])] = &[(1, &[70]), (3, &[100, 50, 0]), (5, &[100, 100, 0, 0, 25])];

fn oracle_mean(votes: &[u32]) -> u32 {
    let sum: u32 = votes.iter().sum();
    let n = votes.len() as u32;
    let (q, r) = (sum / n, sum % n);
    if 2 * r >= n {
        q + 1
    } else {
        q
    }
}

fn expect_code<T: std::fmt::Debug>(
    checks: &mut Vec<(String, bool)>,
    what: String,
    r: Result<T, LedgerError>,
    code: &str,
) {
    let ok = matches!(&r, Err(e) if e.code() == code);
    checks.push((
        if ok {
            what
        } else {
            format!("{what}: expected {code}, got {r:?}")
        },
        ok,
    ));
}

fn payload<T: serde::de::DeserializeOwned>(w: &World, id: ContractId) -> T {
    serde_json::from_value(w.ledger.contract(id).unwrap().contract.payload).unwrap()
}

fn case(n: u32, votes: &[u32], checks: &mut Vec<(String, bool)>) -> Result<(), LedgerError> {
    let w = World::new(ymd(2024, 5, 1));
    let t = w.party("Tenant");
    let l = w.party("Landlord");
    let arbs: Vec<Party> = (1..=n + 1)
        .map(|i| w.party(&format!("Arbitrator{i}")))
        .collect();
    w.publish_arbitrators(&arbs)?;
    let la = w.lease(
        &t,
        &l,
        "h1",
        monthly_terms(Money(75_000), ymd(2024, 5, 1), &[(2024, 5)], n),
    )?;
    let report = mi::create_mi(&w.ledger.as_party(&t), la, &t, "leaking roof", ymd(2024, 5, 3))?;

    // A list signed by the landlord rather than the operator.
    let forged = w.ledger.as_party(&l).create(&AvailableArbitrators {
        operator: l.clone(),
        arbitrators: arbs[..1].iter().cloned().collect(),
        observers: [l.clone()].into(),
    })?;
    expect_code(
        checks,
        format!("N={n}: forged arbitrator list rejected"),
        mi::invoke_arbitrators(&w.ledger.as_party(&l), la, &l, forged, report),
        "IMPERSONATION",
    );

    let list = mi::private_arbitrator_list(&w.ledger, &t, &w.operator)?;
    let inv = mi::invoke_arbitrators(&w.ledger.as_party(&t), la, &t, list, report)?;
    let mut invite = inv.invitation;
    for (i, a) in arbs[..n as usize].iter().enumerate() {
        if i > 0 {
            expect_code(
                checks,
                format!("N={n}: confirm with {i} arbitrators rejected"),
                mi::confirm_attribution(&w.ledger.as_party(&t), invite, &t),
                "NOT_ENOUGH_ARBITRATORS",
            );
        }
        invite = mi::accept_invitation(&w.ledger.as_party(a), invite, a)?;
    }
    let extra = &arbs[n as usize];
    expect_code(
        checks,
        format!("N={n}: invitation capped at {n}"),
        mi::accept_invitation(&w.ledger.as_party(extra), invite, extra),
        "INVITATION_FULL",
    );
    let report = mi::confirm_attribution(&w.ledger.as_party(&l), invite, &l)?;
    let confirmed: mi::MiReport = payload(&w, report);
    checks.push((
        format!("N={n}: report names {} arbitrators", confirmed.arbitrators.len()),
        confirmed.arbitrators.len() == n as usize,
    ));

    let visitor = &arbs[0];
    let mut poll = mi::create_poll(
        &w.ledger.as_party(visitor),
        report,
        visitor,
        VisitReport {
            visit_details: "water damage".into(),
            assessment_date: ymd(2024, 5, 10),
            reparation_date: ymd(2024, 5, 20),
            cost: Money(40_000),
        },
        Responsibility::landlord(votes[0]),
    )?;
    expect_code(
        checks,
        format!("N={n}: duplicate vote rejected"),
        mi::vote(&w.ledger.as_party(visitor), poll, visitor, Responsibility::landlord(0)),
        "DUPLICATE_VOTE",
    );
    for (i, (a, v)) in arbs.iter().zip(votes).enumerate().skip(1) {
        expect_code(
            checks,
            format!("N={n}: finalize with {i} of {n} votes rejected"),
            mi::finalize_votation(&w.ledger.as_party(a), poll, a),
            "VOTING_INCOMPLETE",
        );
        poll = mi::vote(&w.ledger.as_party(a), poll, a, Responsibility::landlord(*v))?;
        expect_code(
            checks,
            format!("N={n}: second vote by arbitrator {} rejected", i + 1),
            mi::vote(&w.ledger.as_party(a), poll, a, Responsibility::landlord(*v)),
            "DUPLICATE_VOTE",
        );
    }
    let result = mi::finalize_votation(&w.ledger.as_party(&t), poll, &t)?;
    let r: MiResult = payload(&w, result);
    let want = oracle_mean(votes);
    checks.push((
        format!(
            "N={n}: mean of {votes:?} is {}/{}, expected {want}/{}",
            r.responsibility.landlord_pct,
            r.responsibility.tenant_pct,
            100 - want
        ),
        r.responsibility == Responsibility::landlord(want),
    ));
    Ok(())
}

pub fn run() -> Outcome {
    let mut checks = Vec::new();
    for (n, votes) in CASES {
        if let Err(e) = case(*n, votes, &mut checks) {
            checks.push((format!("N={n}: unexpected rejection: {e}"), false));
        }
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(s, _)| s.clone())
        .collect();
    let mean = checks
        .iter()
        .find(|(s, _)| s.starts_with("N=3: mean"))
        .map(|(s, _)| s.trim_start_matches("N=3: ").to_owned())
        .unwrap_or_default();
    Outcome::new(
        failed.is_empty(),
        format!(
            "{}/{} checks hold for N in {{1,3,5}}; {mean}",
            checks.len() - failed.len(),
            checks.len()
        ),
    )
    .with_details(failed)
}
