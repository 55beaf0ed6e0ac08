use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An identity on the ledger in whose authority actions are taken.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Party(Arc<str>);

impl Party {
    pub fn new(id: impl AsRef<str>) -> Self {
        Party(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}'", self.0)
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Party {
    fn from(s: &str) -> Self {
        Party::new(s)
    }
}

impl From<String> for Party {
    fn from(s: String) -> Self {
        Party(Arc::from(s))
    }
}

impl Serialize for Party {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Party {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Err(serde::de::Error::custom("party id must not be empty"));
        }
        Ok(Party::from(s))
    }
}

pub type PartySet = BTreeSet<Party>;

/// Builds a party set from anything that yields parties.
pub fn parties<I, P>(items: I) -> PartySet
where
    I: IntoIterator<Item = P>,
    P: Into<Party>,
{
    items.into_iter().map(Into::into).collect()
}

pub(crate) fn fmt_set(set: &PartySet) -> String {
    let names: Vec<&str> = set.iter().map(Party::as_str).collect();
    format!("{{{}}}", names.join(", "))
}
