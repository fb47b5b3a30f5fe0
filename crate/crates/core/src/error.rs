use thiserror::Error;

use crate::types::{PartyId, Round};

#[derive(Debug, Error)]
pub enum Error {
    #[error("resilience check failed: {0}")]
    Resilience(String),

    #[error("adversary exceeded its corruption budget at round {round}: {count} corrupt, budget {budget}")]
    Budget { round: Round, count: usize, budget: usize },

    #[error("adversary un-corrupted {party} at round {round}; corruption must be monotone")]
    Uncorrupt { party: PartyId, round: Round },

    #[error("crypto: {0}")]
    Crypto(#[from] CryptoError),

    #[error("config: {0}")]
    Config(String),

    #[error("enumeration space of {0} runs exceeds the limit of {1}")]
    SpaceTooLarge(u128, u128),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("party {0} is not registered")]
    Unregistered(PartyId),

    #[error("need {need} distinct valid signatures, got {got}")]
    TooFewSignatures { need: usize, got: usize },

    #[error("signatures are over different messages")]
    MixedMessages,

    #[error("forgery is only possible in the sabotaged setting")]
    ForgeryUnavailable,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
