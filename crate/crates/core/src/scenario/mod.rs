//! Line-oriented scenario scripts.
//!
//! A script declares parties, then lists workflow commands and assertions
//! that run in order against a fresh [`World`]. Failing steps are reported
//! and the run continues. The report includes an S/O/W matrix showing how
//! each declared party sees every contract bound to a `$variable`.
//!
//! ```text
//! party Tenant Landlord
//! $p = propose Tenant Landlord house=h1 rent=750.00 begin=2024-05-01 pay=2024-05-25 arbitrators=1
//! expect-error AUTHORIZATION accept Tenant $p
//! $r = accept Landlord $p
//! $la = approve Operator $r
//! expect-visible $la Tenant=S Landlord=S Operator=S
//! ```

mod parse;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use parse::{parse, Op, Script, Step};

use crate::arc;
use crate::ledger::{project_transaction, Command, ContractId, EventKind, LedgerError, Visibility};
use crate::mi::{self, Decision, Responsibility, VisitReport};
use crate::party::{Party, PartySet};
use crate::rental::{self, House, LeaseTerms, Proposal};
use crate::world::World;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub line: usize,
    pub text: String,
    pub passed: bool,
    pub assertion: bool,
    /// Failure explanation, or a short note on success.
    pub detail: String,
}

/// How each declared party sees each bound contract.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Matrix {
    pub parties: Vec<String>,
    pub rows: Vec<MatrixRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixRow {
    pub var: String,
    pub template: String,
    pub contract_id: ContractId,
    /// One letter per party: S, O, W or -.
    pub cells: Vec<char>,
}

impl Matrix {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cell(&self, var: &str, party: &str) -> Option<char> {
        let col = self.parties.iter().position(|p| p == party)?;
        let row = self.rows.iter().find(|r| r.var == var)?;
        Some(row.cells[col])
    }

    pub fn render(&self) -> String {
        if self.rows.is_empty() {
            return String::new();
        }
        let w0 = self.rows.iter().map(|r| r.var.len() + 1).max().unwrap_or(0).max(8);
        let w1 = self.rows.iter().map(|r| r.template.len()).max().unwrap_or(0).max(8);
        let mut out = format!("{:w0$}  {:w1$}", "contract", "template");
        for p in &self.parties {
            write!(out, "  {p}").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{:w0$}  {:w1$}", format!("${}", r.var), r.template).unwrap();
            for (p, c) in self.parties.iter().zip(&r.cells) {
                write!(out, "  {c:<width$}", width = p.len()).unwrap();
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub steps: Vec<StepOutcome>,
    pub matrix: Matrix,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &StepOutcome> {
        self.steps.iter().filter(|s| !s.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let mark = if s.passed { "ok  " } else { "FAIL" };
            write!(out, "{mark} {:>4}: {}", s.line, s.text).unwrap();
            if !s.detail.is_empty() {
                write!(out, "  ({})", s.detail).unwrap();
            }
            out.push('\n');
        }
        let matrix = self.matrix.render();
        if !matrix.is_empty() {
            out.push('\n');
            out.push_str(&matrix);
        }
        let failed = self.failures().count();
        write!(
            out,
            "\n{} steps, {} failed\n",
            self.steps.len(),
            failed
        )
        .unwrap();
        out
    }
}

pub fn run_file(path: &std::path::Path) -> Result<(Report, World), ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
    run_str(&text)
}

pub fn run_str(text: &str) -> Result<(Report, World), ScenarioError> {
    let script = parse(text)?;
    Ok(run(&script))
}

/// Runs `script` against a fresh world and returns the report with the
/// world for further inspection.
pub fn run(script: &Script) -> (Report, World) {
    let world = World::with_roles(
        script.start,
        &script.operator,
        &script.provider,
        &script.lifecycler,
    );
    let mut r = Runner {
        world,
        vars: BTreeMap::new(),
        order: Vec::new(),
        declared: vec![script.operator.clone()],
    };
    let mut steps = Vec::new();
    for step in &script.steps {
        steps.push(r.step(step));
    }
    let matrix = r.matrix();
    (Report { steps, matrix }, r.world)
}

enum Failure {
    Ledger(LedgerError),
    Other(String),
}

impl From<LedgerError> for Failure {
    fn from(e: LedgerError) -> Self {
        Failure::Ledger(e)
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Other(e)
    }
}

type StepResult = Result<Option<ContractId>, Failure>;

struct Runner {
    world: World,
    vars: BTreeMap<String, ContractId>,
    /// Variables in first-binding order.
    order: Vec<String>,
    declared: Vec<String>,
}

impl Runner {
    fn step(&mut self, step: &Step) -> StepOutcome {
        let assertion = step.op.is_assertion();
        let outcome = if assertion {
            self.assert(&step.op)
        } else {
            match (self.command(&step.op), &step.expect_error) {
                (Ok(bound), None) => match (bound, &step.bind) {
                    (Some(id), Some(var)) => {
                        self.bind(var, id);
                        Ok(format!("${var} = {id}"))
                    }
                    (None, Some(var)) => Err(format!("nothing to bind to ${var}")),
                    (_, None) => Ok(String::new()),
                },
                (Ok(_), Some(code)) => Err(format!("expected {code}, but the step succeeded")),
                (Err(Failure::Ledger(e)), Some(code)) if e.code() == code => {
                    Ok(format!("rejected: {e}"))
                }
                (Err(Failure::Ledger(e)), Some(code)) => {
                    Err(format!("expected {code}, got {}: {e}", e.code()))
                }
                (Err(Failure::Ledger(e)), None) => Err(format!("{}: {e}", e.code())),
                (Err(Failure::Other(e)), _) => Err(e),
            }
        };
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        StepOutcome {
            line: step.line,
            text: step.text.clone(),
            passed,
            assertion,
            detail,
        }
    }

    fn bind(&mut self, var: &str, id: ContractId) {
        if self.vars.insert(var.to_owned(), id).is_none() {
            self.order.push(var.to_owned());
        }
    }

    fn var(&self, name: &str) -> Result<ContractId, String> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| format!("${name} is not bound"))
    }

    fn party(&self, name: &str) -> Result<Party, String> {
        let p = Party::from(name);
        let w = &self.world;
        let roles = [&w.operator, &w.provider, &w.lifecycler];
        if self.declared.iter().any(|d| d == name)
            || roles.contains(&&p)
            || w.ledger.public_party() == Some(&p)
        {
            Ok(p)
        } else {
            Err(format!("party {name} was not declared"))
        }
    }

    fn parties(&self, names: &[String]) -> Result<PartySet, String> {
        names.iter().map(|n| self.party(n)).collect()
    }

    fn substitute(&self, v: &mut Value) -> Result<(), String> {
        match v {
            Value::String(s) if s.starts_with('$') => {
                *s = self.var(&s[1..])?.to_string();
            }
            Value::Array(xs) => xs.iter_mut().try_for_each(|x| self.substitute(x))?,
            Value::Object(m) => m.values_mut().try_for_each(|x| self.substitute(x))?,
            _ => {}
        }
        Ok(())
    }

    fn json(&self, text: &str) -> Result<Value, String> {
        let mut v: Value =
            serde_json::from_str(text).map_err(|e| format!("invalid JSON {text:?}: {e}"))?;
        self.substitute(&mut v)?;
        Ok(v)
    }

    fn command(&mut self, op: &Op) -> StepResult {
        let w = &self.world;
        let l = &w.ledger;
        let as_ = |name: &str| -> Result<_, String> { Ok(l.as_party(&self.party(name)?)) };
        let some = |id: ContractId| Ok(Some(id));
        match op {
            Op::Party(names) => {
                for n in names {
                    l.allocate_party(n.as_str())?;
                    self.declared.push(n.clone());
                }
                Ok(None)
            }
            Op::Date(d) => {
                w.set_date(*d);
                Ok(None)
            }
            Op::Time(t) => {
                w.clock.set(*t);
                Ok(None)
            }
            Op::Propose {
                tenant,
                landlord,
                house,
                rent,
                begin,
                pay,
                arbitrators,
            } => {
                let t = self.party(tenant)?;
                let ll = self.party(landlord)?;
                let p = Proposal {
                    tenant: t.clone(),
                    landlord: ll.clone(),
                    operator: w.operator.clone(),
                    house: House {
                        house_id: house.clone(),
                        address: format!("{house} Main Street"),
                        landlord: ll,
                    },
                    terms: LeaseTerms {
                        rent: *rent,
                        begin_date: *begin,
                        payment_dates: pay.iter().cloned().collect(),
                        num_arbitrators: *arbitrators,
                    },
                };
                some(rental::submit_proposal(&l.as_party(&t), &p)?)
            }
            Op::Accept(a, p) => some(rental::accept(&as_(a)?, self.var(p)?)?),
            Op::Decline(a, p) => {
                rental::decline(&as_(a)?, self.var(p)?)?;
                Ok(None)
            }
            Op::Withdraw(a, p) => {
                rental::withdraw(&as_(a)?, self.var(p)?)?;
                Ok(None)
            }
            Op::Approve(a, r) => some(rental::approve(&as_(a)?, self.var(r)?)?),
            Op::Lease {
                tenant,
                landlord,
                house,
            } => some(w.current_lease(&self.party(tenant)?, &self.party(landlord)?, house)?),
            Op::Current(v) => {
                let rec = l
                    .contract(self.var(v)?)
                    .ok_or_else(|| format!("${v} not found"))?
                    .contract;
                let key = rec
                    .key
                    .clone()
                    .ok_or_else(|| format!("{} contracts have no key", rec.template))?;
                some(l.lookup_by_key(&key, &rec.signatories)?.id)
            }
            Op::Advance(provider) => {
                let p = match provider {
                    Some(p) => self.party(p)?,
                    None => w.provider.clone(),
                };
                some(arc::advance(&l.as_party(&p), &w.operator, &p)?.update)
            }
            Op::Process(update) => {
                let u = match update {
                    Some(v) => self.var(v)?,
                    None => arc::current_update(l, &w.operator)?.0,
                };
                w.process(u)?;
                Ok(None)
            }
            Op::Tick => {
                let (adv, _) = w.tick()?;
                some(adv.update)
            }
            Op::AddProvider(p) => {
                let p = self.party(p)?;
                arc::add_provider(&l.as_party(&w.operator), &w.operator, &p)?;
                Ok(None)
            }
            Op::AcceptProvider(p) => {
                let p = self.party(p)?;
                arc::accept_provider(&l.as_party(&p), &w.operator, &p)?;
                Ok(None)
            }
            Op::PublishArbitrators(names) => {
                let arbs: Vec<Party> = names.iter().map(|n| self.party(n)).collect::<Result<_, _>>()?;
                some(w.publish_arbitrators(&arbs)?)
            }
            Op::CreateMi {
                actor,
                lease,
                description,
                date,
            } => some(mi::create_mi(
                &as_(actor)?,
                self.var(lease)?,
                &self.party(actor)?,
                description,
                *date,
            )?),
            Op::Assess {
                actor,
                report,
                landlord_pct,
                cost,
            } => some(mi::submit_assessment(
                &as_(actor)?,
                self.var(report)?,
                &self.party(actor)?,
                Responsibility::landlord(*landlord_pct),
                *cost,
            )?),
            Op::AcceptAssessment(a, x) => {
                Ok(mi::resolve_mediation(&as_(a)?, self.var(x)?, Decision::Accept)?)
            }
            Op::RejectAssessment(a, x) => {
                mi::resolve_mediation(&as_(a)?, self.var(x)?, Decision::Reject)?;
                Ok(None)
            }
            Op::ArbitratorList(requester) => some(mi::private_arbitrator_list(
                l,
                &self.party(requester)?,
                &w.operator,
            )?),
            Op::Invoke {
                actor,
                lease,
                list,
                report,
            } => some(
                mi::invoke_arbitrators(
                    &as_(actor)?,
                    self.var(lease)?,
                    &self.party(actor)?,
                    self.var(list)?,
                    self.var(report)?,
                )?
                .invitation,
            ),
            Op::AcceptInvitation(a, inv) => some(mi::accept_invitation(
                &as_(a)?,
                self.var(inv)?,
                &self.party(a)?,
            )?),
            Op::DeclineInvitation(a, inv) => some(mi::decline_invitation(
                &as_(a)?,
                self.var(inv)?,
                &self.party(a)?,
            )?),
            Op::Confirm(a, inv) => some(mi::confirm_attribution(
                &as_(a)?,
                self.var(inv)?,
                &self.party(a)?,
            )?),
            Op::Poll {
                actor,
                report,
                landlord_pct,
                cost,
                details,
                assessed,
                repair,
            } => {
                let today = w.today();
                some(mi::create_poll(
                    &as_(actor)?,
                    self.var(report)?,
                    &self.party(actor)?,
                    VisitReport {
                        visit_details: details.clone(),
                        assessment_date: assessed.unwrap_or(today),
                        reparation_date: repair.unwrap_or(today),
                        cost: *cost,
                    },
                    Responsibility::landlord(*landlord_pct),
                )?)
            }
            Op::Vote {
                actor,
                poll,
                landlord_pct,
            } => some(mi::vote(
                &as_(actor)?,
                self.var(poll)?,
                &self.party(actor)?,
                Responsibility::landlord(*landlord_pct),
            )?),
            Op::Finalize(a, poll) => some(mi::finalize_votation(
                &as_(a)?,
                self.var(poll)?,
                &self.party(a)?,
            )?),
            Op::Create {
                act_as,
                template,
                payload,
            } => {
                let act_as = self.parties(act_as)?;
                let c = l.submit(
                    &act_as,
                    Command::Create {
                        template: template.clone(),
                        payload: self.json(payload)?,
                    },
                    l.now(),
                )?;
                Ok(c.result_as().ok())
            }
            Op::Exercise {
                act_as,
                target,
                choice,
                argument,
            } => {
                let act_as = self.parties(act_as)?;
                let c = l.submit(
                    &act_as,
                    Command::Exercise {
                        contract_id: self.var(target)?,
                        choice: choice.clone(),
                        argument: self.json(argument)?,
                    },
                    l.now(),
                )?;
                Ok(c.result_as().ok())
            }
            Op::ExpectVisible { .. }
            | Op::ExpectField { .. }
            | Op::ExpectActive(..)
            | Op::ExpectCount(..) => unreachable!("assertions are not commands"),
        }
    }

    fn visibility(&self, id: ContractId, party: &Party) -> Option<Visibility> {
        let tx = self.world.ledger.transaction(id.tx)?;
        project_transaction(&tx, party)
            .into_iter()
            .find(|e| matches!(&e.kind, EventKind::Created { contract } if contract.id == id))
            .map(|e| e.visibility)
    }

    fn assert(&self, op: &Op) -> Result<String, String> {
        let l = &self.world.ledger;
        match op {
            Op::ExpectVisible { target, cells } => {
                let id = self.var(target)?;
                let mut diffs = Vec::new();
                for (name, want) in cells {
                    let got = self.visibility(id, &self.party(name)?);
                    if got != *want {
                        diffs.push(format!("{name}: expected {}, got {}", letter(*want), letter(got)));
                    }
                }
                if diffs.is_empty() {
                    Ok(String::new())
                } else {
                    Err(diffs.join("; "))
                }
            }
            Op::ExpectField {
                target,
                path,
                value,
            } => {
                let id = self.var(target)?;
                let rec = l.contract(id).ok_or_else(|| format!("{id} not found"))?;
                let mut v = &rec.contract.payload;
                for seg in path.split('.') {
                    v = match v {
                        Value::Object(m) => m.get(seg),
                        Value::Array(xs) => seg.parse::<usize>().ok().and_then(|i| xs.get(i)),
                        _ => None,
                    }
                    .ok_or_else(|| format!("{path}: no field {seg:?}"))?;
                }
                let want =
                    serde_json::from_str::<Value>(value).unwrap_or_else(|_| Value::String(value.clone()));
                if *v == want {
                    Ok(String::new())
                } else {
                    Err(format!("{path}: expected {want}, got {v}"))
                }
            }
            Op::ExpectActive(target, want) => {
                let id = self.var(target)?;
                let active = l.contract(id).map(|r| r.is_active()).unwrap_or(false);
                if active == *want {
                    Ok(String::new())
                } else {
                    Err(format!(
                        "{id} is {}",
                        if active { "active" } else { "archived" }
                    ))
                }
            }
            Op::ExpectCount(template, n) => {
                let got = l
                    .active_contracts()
                    .iter()
                    .filter(|c| &c.template == template)
                    .count();
                if got == *n {
                    Ok(String::new())
                } else {
                    Err(format!("expected {n} active {template}, got {got}"))
                }
            }
            _ => unreachable!("not an assertion"),
        }
    }

    fn matrix(&self) -> Matrix {
        let mut parties: Vec<String> = Vec::new();
        for p in &self.declared {
            if !parties.contains(p) {
                parties.push(p.clone());
            }
        }
        let rows = self
            .order
            .iter()
            .filter_map(|var| {
                let id = self.vars[var];
                let rec = self.world.ledger.contract(id)?;
                let cells = parties
                    .iter()
                    .map(|p| letter(self.visibility(id, &Party::from(p.as_str()))))
                    .collect();
                Some(MatrixRow {
                    var: var.clone(),
                    template: rec.contract.template,
                    contract_id: id,
                    cells,
                })
            })
            .collect();
        if self.order.is_empty() {
            return Matrix::default();
        }
        Matrix { parties, rows }
    }
}

fn letter(v: Option<Visibility>) -> char {
    v.map(Visibility::letter).unwrap_or('-')
}

/// The commit log without timestamps, for comparing runs.
pub fn timeless_log(world: &World) -> Vec<Value> {
    world
        .ledger
        .commit_log()
        .iter()
        .map(|tx| {
            let mut v = serde_json::to_value(&**tx).expect("transaction serializes");
            if let Value::Object(m) = &mut v {
                m.remove("ledgerTime");
                m.remove("recordTime");
            }
            v
        })
        .collect()
}

