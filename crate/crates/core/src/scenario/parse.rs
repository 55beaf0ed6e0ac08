use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};

use super::ScenarioError;
use crate::ledger::Visibility;
use crate::money::Money;

#[derive(Clone, Debug, PartialEq)]
pub struct Script {
    pub start: NaiveDate,
    pub operator: String,
    pub provider: String,
    pub lifecycler: String,
    /// Declared parties in declaration order.
    pub parties: Vec<String>,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub line: usize,
    pub text: String,
    pub bind: Option<String>,
    /// Error code the step must fail with.
    pub expect_error: Option<String>,
    pub op: Op,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Party(Vec<String>),
    Date(NaiveDate),
    Time(DateTime<Utc>),
    Propose {
        tenant: String,
        landlord: String,
        house: String,
        rent: Money,
        begin: NaiveDate,
        pay: Vec<NaiveDate>,
        arbitrators: u32,
    },
    Accept(String, String),
    Decline(String, String),
    Withdraw(String, String),
    Approve(String, String),
    Lease {
        tenant: String,
        landlord: String,
        house: String,
    },
    /// Active contract with the same key as the bound one.
    Current(String),
    Advance(Option<String>),
    Process(Option<String>),
    Tick,
    AddProvider(String),
    AcceptProvider(String),
    PublishArbitrators(Vec<String>),
    CreateMi {
        actor: String,
        lease: String,
        description: String,
        date: NaiveDate,
    },
    Assess {
        actor: String,
        report: String,
        landlord_pct: u32,
        cost: Money,
    },
    AcceptAssessment(String, String),
    RejectAssessment(String, String),
    ArbitratorList(String),
    Invoke {
        actor: String,
        lease: String,
        list: String,
        report: String,
    },
    AcceptInvitation(String, String),
    DeclineInvitation(String, String),
    Confirm(String, String),
    Poll {
        actor: String,
        report: String,
        landlord_pct: u32,
        cost: Money,
        details: String,
        assessed: Option<NaiveDate>,
        repair: Option<NaiveDate>,
    },
    Vote {
        actor: String,
        poll: String,
        landlord_pct: u32,
    },
    Finalize(String, String),
    Create {
        act_as: Vec<String>,
        template: String,
        payload: String,
    },
    Exercise {
        act_as: Vec<String>,
        target: String,
        choice: String,
        argument: String,
    },
    ExpectVisible {
        target: String,
        cells: Vec<(String, Option<Visibility>)>,
    },
    ExpectField {
        target: String,
        path: String,
        value: String,
    },
    ExpectActive(String, bool),
    ExpectCount(String, usize),
}

impl Op {
    pub fn is_assertion(&self) -> bool {
        matches!(
            self,
            Op::ExpectVisible { .. } | Op::ExpectField { .. } | Op::ExpectActive(..) | Op::ExpectCount(..)
        )
    }
}

struct Args<'a> {
    line: usize,
    pos: Vec<&'a str>,
    kv: BTreeMap<&'a str, &'a str>,
    next: usize,
}

impl<'a> Args<'a> {
    fn new(line: usize, words: &'a [String]) -> Self {
        let mut pos = Vec::new();
        let mut kv = BTreeMap::new();
        for w in words {
            match w.split_once('=') {
                Some((k, v)) if !w.starts_with('{') && !w.starts_with('[') && !k.is_empty() => {
                    kv.insert(k, v);
                }
                _ => pos.push(w.as_str()),
            }
        }
        Args {
            line,
            pos,
            kv,
            next: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn positional(&mut self, what: &str) -> Result<String, ScenarioError> {
        let v = self
            .pos
            .get(self.next)
            .ok_or_else(|| self.err(format!("missing {what}")))?;
        self.next += 1;
        Ok((*v).to_owned())
    }

    fn optional(&mut self) -> Option<String> {
        let v = self.pos.get(self.next).map(|s| (*s).to_owned());
        if v.is_some() {
            self.next += 1;
        }
        v
    }

    fn var(&mut self, what: &str) -> Result<String, ScenarioError> {
        let v = self.positional(what)?;
        var_name(&v).ok_or_else(|| self.err(format!("{what} must be a $variable, got {v:?}")))
    }

    fn rest(&mut self) -> Vec<String> {
        let r = self.pos[self.next.min(self.pos.len())..]
            .iter()
            .map(|s| (*s).to_owned())
            .collect();
        self.next = self.pos.len();
        r
    }

    fn key(&mut self, k: &str) -> Result<&'a str, ScenarioError> {
        self.kv
            .remove(k)
            .ok_or_else(|| self.err(format!("missing {k}=...")))
    }

    fn key_opt(&mut self, k: &str) -> Option<&'a str> {
        self.kv.remove(k)
    }

    fn date(&self, s: &str) -> Result<NaiveDate, ScenarioError> {
        s.parse()
            .map_err(|_| self.err(format!("invalid date {s:?}, expected YYYY-MM-DD")))
    }

    fn money(&self, s: &str) -> Result<Money, ScenarioError> {
        s.parse().map_err(|e: String| self.err(e))
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T, ScenarioError> {
        s.parse()
            .map_err(|_| self.err(format!("invalid number {s:?}")))
    }

    fn date_at(&mut self, what: &str) -> Result<NaiveDate, ScenarioError> {
        let s = self.positional(what)?;
        self.date(&s)
    }

    fn date_key(&mut self, k: &str) -> Result<NaiveDate, ScenarioError> {
        let s = self.key(k)?;
        self.date(s)
    }

    fn money_key(&mut self, k: &str) -> Result<Money, ScenarioError> {
        let s = self.key(k)?;
        self.money(s)
    }

    fn number_key<T: std::str::FromStr>(&mut self, k: &str) -> Result<T, ScenarioError> {
        let s = self.key(k)?;
        self.number(s)
    }

    fn pct(&mut self) -> Result<u32, ScenarioError> {
        let s = self.key("landlord")?;
        let v: u32 = self.number(s)?;
        if v > 100 {
            return Err(self.err("landlord share must be within 0..=100"));
        }
        Ok(v)
    }

    fn finish(self) -> Result<(), ScenarioError> {
        if self.next < self.pos.len() {
            return Err(self.err(format!("unexpected argument {:?}", self.pos[self.next])));
        }
        if let Some(k) = self.kv.keys().next() {
            return Err(self.err(format!("unexpected option {k}=")));
        }
        Ok(())
    }
}

fn var_name(s: &str) -> Option<String> {
    let name = s.strip_prefix('$')?;
    (!name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_'))
        .then(|| name.to_owned())
}

fn actors(s: &str) -> Vec<String> {
    s.split(',').filter(|p| !p.is_empty()).map(str::to_owned).collect()
}

pub fn parse(text: &str) -> Result<Script, ScenarioError> {
    let mut script = Script {
        start: NaiveDate::from_ymd_opt(2024, 5, 1).unwrap(),
        operator: "Operator".into(),
        provider: "TimeProvider".into(),
        lifecycler: "Lifecycler".into(),
        parties: Vec::new(),
        steps: Vec::new(),
    };
    let mut header_done = false;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| ScenarioError::Parse { line, message };
        let words = shlex::split(trimmed).ok_or_else(|| err("unbalanced quotes".into()))?;
        let mut words = words.as_slice();

        let mut bind = None;
        if words.len() >= 2 && words[1] == "=" {
            bind = Some(
                var_name(&words[0])
                    .ok_or_else(|| err(format!("cannot bind to {:?}", words[0])))?,
            );
            words = &words[2..];
        }
        let mut expect_error = None;
        if words.first().map(String::as_str) == Some("expect-error") {
            let code = words
                .get(1)
                .ok_or_else(|| err("expect-error needs an error code".into()))?;
            expect_error = Some(code.clone());
            words = &words[2..];
        }
        let Some((cmd, rest)) = words.split_first() else {
            return Err(err("missing command".into()));
        };
        let mut a = Args::new(line, rest);

        match cmd.as_str() {
            "start" | "roles" => {
                if header_done {
                    return Err(err(format!("{cmd} must come before the first step")));
                }
                if cmd == "start" {
                    script.start = a.date_at("date")?;
                } else {
                    if let Some(v) = a.key_opt("operator") {
                        script.operator = v.to_owned();
                    }
                    if let Some(v) = a.key_opt("provider") {
                        script.provider = v.to_owned();
                    }
                    if let Some(v) = a.key_opt("lifecycler") {
                        script.lifecycler = v.to_owned();
                    }
                }
                a.finish()?;
                continue;
            }
            _ => header_done = true,
        }

        let op = match cmd.as_str() {
            "party" => {
                let ps = a.rest();
                if ps.is_empty() {
                    return Err(err("party needs at least one name".into()));
                }
                script.parties.extend(ps.iter().cloned());
                Op::Party(ps)
            }
            "date" => Op::Date(a.date_at("date")?),
            "time" => {
                let s = a.positional("timestamp")?;
                Op::Time(
                    s.parse::<DateTime<Utc>>()
                        .map_err(|_| err(format!("invalid timestamp {s:?}")))?,
                )
            }
            "propose" => {
                let tenant = a.positional("tenant")?;
                let landlord = a.positional("landlord")?;
                let house = a.key("house")?.to_owned();
                let rent = a.money_key("rent")?;
                let begin = a.date_key("begin")?;
                let pay = a
                    .key("pay")?
                    .split(',')
                    .map(|d| a.date(d))
                    .collect::<Result<_, _>>()?;
                let arbitrators = a.number_key("arbitrators")?;
                Op::Propose {
                    tenant,
                    landlord,
                    house,
                    rent,
                    begin,
                    pay,
                    arbitrators,
                }
            }
            "accept" => Op::Accept(a.positional("landlord")?, a.var("proposal")?),
            "decline" => Op::Decline(a.positional("landlord")?, a.var("proposal")?),
            "withdraw" => Op::Withdraw(a.positional("tenant")?, a.var("proposal")?),
            "approve" => Op::Approve(a.positional("operator")?, a.var("request")?),
            "lease" => Op::Lease {
                tenant: a.positional("tenant")?,
                landlord: a.positional("landlord")?,
                house: a.positional("house")?,
            },
            "current" => Op::Current(a.var("contract")?),
            "advance" => Op::Advance(a.optional()),
            "process" => Op::Process(match a.optional() {
                Some(v) => Some(var_name(&v).ok_or_else(|| err(format!("expected $update, got {v:?}")))?),
                None => None,
            }),
            "tick" => Op::Tick,
            "add-provider" => Op::AddProvider(a.positional("provider")?),
            "accept-provider" => Op::AcceptProvider(a.positional("provider")?),
            "publish-arbitrators" => Op::PublishArbitrators(a.rest()),
            "create-mi" => Op::CreateMi {
                actor: a.positional("actor")?,
                lease: a.var("lease")?,
                description: a.positional("description")?,
                date: a.date_at("starting date")?,
            },
            "assess" => Op::Assess {
                actor: a.positional("actor")?,
                report: a.var("report")?,
                landlord_pct: a.pct()?,
                cost: a.money_key("cost")?,
            },
            "accept-assessment" => Op::AcceptAssessment(a.positional("actor")?, a.var("assessment")?),
            "reject-assessment" => Op::RejectAssessment(a.positional("actor")?, a.var("assessment")?),
            "arbitrator-list" => Op::ArbitratorList(a.positional("requester")?),
            "invoke" => Op::Invoke {
                actor: a.positional("actor")?,
                lease: a.var("lease")?,
                list: a.var("arbitrator list")?,
                report: a.var("report")?,
            },
            "accept-invitation" => Op::AcceptInvitation(a.positional("arbitrator")?, a.var("invitation")?),
            "decline-invitation" => {
                Op::DeclineInvitation(a.positional("arbitrator")?, a.var("invitation")?)
            }
            "confirm" => Op::Confirm(a.positional("actor")?, a.var("invitation")?),
            "poll" => {
                let actor = a.positional("visitor")?;
                let report = a.var("report")?;
                let landlord_pct = a.pct()?;
                let cost = a.money_key("cost")?;
                let details = a.key_opt("details").unwrap_or("").to_owned();
                let assessed = a.key_opt("assessed").map(|d| a.date(d)).transpose()?;
                let repair = a.key_opt("repair").map(|d| a.date(d)).transpose()?;
                Op::Poll {
                    actor,
                    report,
                    landlord_pct,
                    cost,
                    details,
                    assessed,
                    repair,
                }
            }
            "vote" => Op::Vote {
                actor: a.positional("voter")?,
                poll: a.var("poll")?,
                landlord_pct: a.pct()?,
            },
            "finalize" => Op::Finalize(a.positional("actor")?, a.var("poll")?),
            "create" => Op::Create {
                act_as: actors(&a.positional("acting parties")?),
                template: a.positional("template")?,
                payload: a.positional("payload")?,
            },
            "exercise" => Op::Exercise {
                act_as: actors(&a.positional("acting parties")?),
                target: a.var("contract")?,
                choice: a.positional("choice")?,
                argument: a.optional().unwrap_or_else(|| "null".into()),
            },
            "expect-visible" => {
                let target = a.var("contract")?;
                let cells = std::mem::take(&mut a.kv)
                    .into_iter()
                    .map(|(p, v)| {
                        let vis = match v {
                            "S" => Some(Visibility::Signatory),
                            "O" => Some(Visibility::Observer),
                            "W" => Some(Visibility::Witness),
                            "-" => None,
                            other => {
                                return Err(err(format!(
                                    "visibility must be S, O, W or -, got {other:?}"
                                )))
                            }
                        };
                        Ok((p.to_owned(), vis))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if cells.is_empty() {
                    return Err(err("expect-visible needs PARTY=S|O|W|- pairs".into()));
                }
                Op::ExpectVisible { target, cells }
            }
            "expect-field" => Op::ExpectField {
                target: a.var("contract")?,
                path: a.positional("field path")?,
                value: a.positional("value")?,
            },
            "expect-active" => Op::ExpectActive(a.var("contract")?, true),
            "expect-archived" => Op::ExpectActive(a.var("contract")?, false),
            "expect-count" => {
                let template = a.positional("template")?;
                let n = a.positional("count")?;
                Op::ExpectCount(template, a.number(&n)?)
            }
            other => return Err(err(format!("unknown command {other:?}"))),
        };
        a.finish()?;
        if op.is_assertion() && (bind.is_some() || expect_error.is_some()) {
            return Err(err("assertions cannot bind or expect errors".into()));
        }
        if matches!(op, Op::Party(_) | Op::Date(_) | Op::Time(_)) && expect_error.is_some() {
            return Err(err("expect-error applies to ledger commands only".into()));
        }
        script.steps.push(Step {
            line,
            text: trimmed.to_owned(),
            bind,
            expect_error,
            op,
        });
    }
    Ok(script)
}
