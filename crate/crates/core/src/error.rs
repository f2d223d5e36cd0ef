use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} is {requested}, cap is {cap}")]
    Capacity {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("operands live on different outcome spaces")]
    SpaceMismatch,

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("unknown symbol {symbol:?}")]
    UnknownSymbol { symbol: char },

    #[error("horizon mismatch: expected {expected} stages, found {found}")]
    HorizonMismatch { expected: usize, found: usize },

    #[error("atom {atom} has zero probability; conditional expectation is not defined there")]
    ZeroProbabilityAtom { atom: usize },

    #[error("policy is undefined at t={t} for input {input}")]
    PartialPolicy { t: usize, input: String },

    #[error("universe mismatch between interval sets")]
    UniverseMismatch,
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
