use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid information structure: {0}")]
    InvalidStructure(String),

    #[error("input schedule `{name}` covers {len} steps but {needed} are required")]
    ScheduleTooShort {
        name: String,
        len: usize,
        needed: usize,
    },

    #[error("chromosome gene {index} has value {value}, allowed range is 0..{limit}")]
    GeneOutOfRange { index: usize, value: u8, limit: u8 },

    #[error("no collapse within the swept range")]
    NoCollapse,

    #[error("search space of {size} structures exceeds the exhaustive cap of {cap}; use the genetic algorithm")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
