use std::fmt;
use std::str::FromStr;
use std::ops::Add;

use serde::{Deserialize, Serialize};

/// Amount of money in integer minor units (cents).
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn minor_units(self) -> i64 {
        self.0
    }
}

impl Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

/// Parses `750`, `750.5` or `750.00` as major units.
impl FromStr for Money {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid amount {s:?}");
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (major, minor) = body.split_once('.').unwrap_or((body, ""));
        if major.is_empty() || minor.len() > 2 || !(major.bytes().chain(minor.bytes())).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let major: i64 = major.parse().map_err(|_| bad())?;
        let minor: i64 = format!("{minor:0<2}").parse().map_err(|_| bad())?;
        let v = major.checked_mul(100).and_then(|m| m.checked_add(minor)).ok_or_else(bad)?;
        Ok(Money(if neg { -v } else { v }))
    }
}
