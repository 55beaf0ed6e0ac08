use std::path::Path;

use rental_core::scenario;

use crate::common::Outcome;

const PARTIES: [&str; 7] = [
    "Operator",
    "Tenant",
    "Landlord",
    "Arbitrator1",
    "Arbitrator2",
    "Arbitrator3",
    "Arbitrator4",
];

/// Expected cells in `PARTIES` order. `$poll` is bound to the poll after
/// the second vote, `$report` to the report carrying the confirmed
/// arbitrators.
const EXPECTED: &[(&str, &str, &str)] = &[
    ("lease", "LeaseAgreement", "SSS----"),
    ("mi", "MIReport", "WSS----"),
    ("report", "MIReport", "-SSOOOW"),
    ("poll", "Poll", "-SSSSO-"),
    ("ballot", "Poll", "-SSSSS-"),
    ("result", "MIResult", "-SSOOO-"),
];

pub fn run() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/canonical.scn");
    let (report, world) = match scenario::run_file(&path) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(format!("scenario did not load: {e}")),
    };
    let mut problems: Vec<String> = report
        .failures()
        .map(|s| format!("line {}: {} ({})", s.line, s.text, s.detail))
        .collect();
    let m = &report.matrix;

    for (var, template, cells) in EXPECTED {
        let Some(row) = m.rows.iter().find(|r| r.var == *var) else {
            problems.push(format!("${var} not in matrix"));
            continue;
        };
        if row.template != *template {
            problems.push(format!("${var} is a {}, expected {template}", row.template));
        }
        let actual: String = PARTIES
            .iter()
            .map(|p| m.cell(var, p).unwrap_or('?'))
            .collect();
        if actual != *cells {
            problems.push(format!("${var}: {actual}, expected {cells}"));
        }
    }

    // Poll rows must also follow the signatory rule read off their payload:
    // signed by those who voted plus tenant and landlord, observed by voters.
    for row in m.rows.iter().filter(|r| r.template == "Poll") {
        let payload = world.ledger.contract(row.contract_id).unwrap().contract.payload;
        let names = |k: &str| -> Vec<String> {
            serde_json::from_value(payload[k].clone()).unwrap_or_default()
        };
        let voted = names("alreadyVoted");
        let voters = names("voters");
        for p in PARTIES {
            let expected = if voted.iter().any(|v| v == p)
                || payload["tenant"] == p
                || payload["landlord"] == p
            {
                'S'
            } else if voters.iter().any(|v| v == p) {
                'O'
            } else {
                '-'
            };
            let got = m.cell(&row.var, p).unwrap_or('?');
            if got != expected {
                problems.push(format!("${} {p}: {got}, rule says {expected}", row.var));
            }
        }
    }

    let steps = report.steps.len();
    Outcome::new(
        problems.is_empty(),
        format!(
            "{} of {steps} scenario steps hold; {} matrix rows checked exactly, {} mismatches",
            steps - report.failures().count(),
            EXPECTED.len(),
            problems.len()
        ),
    )
    .with_details(problems)
}
