use thiserror::Error;

use super::{ContractId, ContractKey};
use crate::party::Party;

/// Every way a submission can be rejected.
///
/// A rejected submission leaves the ledger untouched, whichever variant is
/// returned.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("authorization failed: {0}")]
    Authorization(String),
    #[error("contract {0} is not active")]
    ContractNotActive(ContractId),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("contract {0} is not visible to the submitting parties")]
    NotVisible(String),
    #[error("an active contract already exists for key {0}")]
    KeyCollision(ContractKey),
    #[error(
        "ledger time {ledger_time} deviates from record time {record_time} by more than the skew"
    )]
    TimeOutOfSkew {
        ledger_time: String,
        record_time: String,
    },
    #[error("unknown party {0}")]
    UnknownParty(Party),
    #[error("party {0} is already allocated")]
    DuplicateParty(Party),
    #[error("unknown template {0}")]
    UnknownTemplate(String),
    #[error("template {template} has no choice {choice}")]
    UnknownChoice { template: String, choice: String },
    #[error("contract {id} has template {actual}, expected {expected}")]
    WrongTemplate {
        id: ContractId,
        expected: String,
        actual: String,
    },
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("date clock update {0} is no longer current")]
    StaleUpdate(ContractId),

    #[error("an arbitrator invitation is already active for this maintenance issue")]
    InvitationAlreadyActive,
    #[error("impersonation detected: {0}")]
    Impersonation(String),
    #[error("arbitrator {0} already confirmed")]
    AlreadyConfirmed(Party),
    #[error("invitation already has the required {0} arbitrators")]
    InvitationFull(usize),
    #[error("only {confirmed} of {required} arbitrators confirmed")]
    NotEnoughArbitrators { confirmed: usize, required: usize },
    #[error("{0} has already voted")]
    DuplicateVote(Party),
    #[error("{0} is not a voter of this poll")]
    NotAVoter(Party),
    #[error("{voted} of {voters} voters have voted")]
    VotingIncomplete { voted: usize, voters: usize },
    #[error("maintenance issue already has a result")]
    AlreadyResolved,
}

impl LedgerError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use LedgerError::*;
        match self {
            Authorization(_) => "AUTHORIZATION",
            ContractNotActive(_) => "CONTRACT_NOT_ACTIVE",
            NotFound(_) => "NOT_FOUND",
            NotVisible(_) => "NOT_VISIBLE",
            KeyCollision(_) => "KEY_COLLISION",
            TimeOutOfSkew { .. } => "TIME_OUT_OF_SKEW",
            UnknownParty(_) => "UNKNOWN_PARTY",
            DuplicateParty(_) => "DUPLICATE_PARTY",
            UnknownTemplate(_) => "UNKNOWN_TEMPLATE",
            UnknownChoice { .. } => "UNKNOWN_CHOICE",
            WrongTemplate { .. } => "WRONG_TEMPLATE",
            InvalidPayload(_) => "INVALID_PAYLOAD",
            Precondition(_) => "PRECONDITION",
            StaleUpdate(_) => "STALE_UPDATE",
            InvitationAlreadyActive => "INVITATION_ALREADY_ACTIVE",
            Impersonation(_) => "IMPERSONATION",
            AlreadyConfirmed(_) => "ALREADY_CONFIRMED",
            InvitationFull(_) => "INVITATION_FULL",
            NotEnoughArbitrators { .. } => "NOT_ENOUGH_ARBITRATORS",
            DuplicateVote(_) => "DUPLICATE_VOTE",
            NotAVoter(_) => "NOT_A_VOTER",
            VotingIncomplete { .. } => "VOTING_INCOMPLETE",
            AlreadyResolved => "ALREADY_RESOLVED",
        }
    }
}

pub type Result<T, E = LedgerError> = std::result::Result<T, E>;
