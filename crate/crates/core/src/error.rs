use thiserror::Error;

/// Errors raised by the probability and lens operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{what} is not normalized (total mass {total})")]
    NotNormalized { what: String, total: String },

    #[error("unknown element `{element}` in space `{space}`")]
    UnknownElement { element: String, space: String },

    #[error("negative mass {value} at `{element}`")]
    NegativeMass { element: String, value: String },

    #[error("space mismatch in {context}: expected `{expected}`, found `{found}`")]
    SpaceMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("channel table has no row for `{element}`")]
    MissingRow { element: String },

    #[error("duplicate element `{element}` in space `{space}`")]
    DuplicateElement { element: String, space: String },

    #[error("space `{0}` has no elements")]
    EmptySpace(String),

    #[error("pushforward of the prior has empty support")]
    EmptyPushforward,

    #[error("density does not represent a causal channel: row `{element}` integrates to {total}")]
    NotCausal { element: String, total: String },

    #[error("invalid effect or measure: {0}")]
    InvalidWeights(String),

    #[error("invalid number `{0}`")]
    InvalidNumber(String),

    #[error("malformed JSON: {0}")]
    Json(String),

    #[error("no counterexample found after {trials} trials")]
    NotFound { trials: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn mismatch(
        context: &'static str,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::SpaceMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
