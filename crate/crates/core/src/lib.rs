//! Permissioned contract ledger and property-rental workflows.
//!
//! * [`ledger`]: the engine (templates, choices, authorization, privacy
//!   projection, contract keys, ledger/record time).
//! * [`rental`]: lease proposal workflow and IOU debt records.
//! * [`arc`]: the automated rent-collection oracle (date clock and
//!   lifecycling).
//! * [`mi`]: the maintenance-issue oracle (mediation, arbitrator invitation,
//!   polls).
//! * [`store`]: per-party live contract store with external ids and
//!   notifications.
//! * [`scenario`] and [`bench`]: scripted scenarios and the latency harness.

pub mod bench;
mod dates;
pub mod ledger;
pub mod money;
pub mod party;

pub use ledger::{Command, ContractId, ContractKey, Ledger, LedgerConfig, LedgerError};
pub use money::Money;
pub use party::{parties, Party, PartySet};

pub mod arc;
pub mod mi;
mod package;
pub mod rental;

pub use package::rental_package;
pub mod scenario;
pub mod store;
pub mod world;
