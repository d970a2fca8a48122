//! A straight-line model language: spaces, priors, channel tables,
//! sequential (`>>`) and parallel (`|`) pipelines, and queries.
//!
//! ```text
//! space Weather = {rain, dry}
//! space Grass = {wet, notwet}
//! prior P : Weather = {rain: 0.2, dry: 0.8}
//! channel sprinkle : Weather -> Grass = {
//!   rain -> {wet: 0.9, notwet: 0.1}
//!   dry -> {wet: 0.1, notwet: 0.9}
//! }
//! infer sprinkle prior P observe wet
//! ```
//!
//! `c >> d` runs `c` first, so it denotes the composite `d ∘ c`. `>>` binds
//! tighter than `|`. A product of declared spaces is written `space XY = X * Y`
//! and its elements `(x, y)`.

pub mod ast;
pub mod eval;
pub mod gen;
pub mod lexer;
pub mod parser;
pub mod printer;

use thiserror::Error;

pub use ast::{Model, Pos, Query, QueryKind, Stmt};
pub use eval::{export_model, run_query, validate_model, BoundModel, QueryOutcome};
pub use parser::parse_model;
pub use printer::{print_model, print_query};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("{pos}: syntax error: found {found}, expected {}", expected.join(" or "))]
    Syntax {
        pos: Pos,
        found: String,
        expected: Vec<String>,
    },

    #[error("{pos}: {kind} `{name}` is already declared at {first}")]
    DuplicateName {
        kind: &'static str,
        name: String,
        pos: Pos,
        first: Pos,
    },

    #[error("{pos}: {kind} `{name}` is used before its declaration at {declared}")]
    ForwardReference {
        kind: &'static str,
        name: String,
        pos: Pos,
        declared: Pos,
    },

    #[error("{pos}: undefined {kind} `{name}`")]
    UndefinedName {
        kind: &'static str,
        name: String,
        pos: Pos,
    },

    #[error("{pos}: {source}")]
    Validation {
        pos: Pos,
        #[source]
        source: crate::Error,
    },

    #[error("{pos}: observation `{observation}` has zero predicted mass; prediction {predicted}")]
    ZeroMassObservation {
        pos: Pos,
        observation: String,
        predicted: String,
    },
}

impl DslError {
    pub fn pos(&self) -> Pos {
        match self {
            DslError::Syntax { pos, .. }
            | DslError::DuplicateName { pos, .. }
            | DslError::ForwardReference { pos, .. }
            | DslError::UndefinedName { pos, .. }
            | DslError::Validation { pos, .. }
            | DslError::ZeroMassObservation { pos, .. } => *pos,
        }
    }

    /// Process exit code: 1 syntax, 2 name or validation errors, 3 for an
    /// observation with zero predicted mass.
    pub fn exit_code(&self) -> i32 {
        match self {
            DslError::Syntax { .. } => 1,
            DslError::ZeroMassObservation { .. } => 3,
            _ => 2,
        }
    }
}

/// Parses and validates in one step.
pub fn load<S: crate::Scalar>(src: &str) -> Result<BoundModel<S>, DslError> {
    validate_model(&parse_model(src)?)
}
