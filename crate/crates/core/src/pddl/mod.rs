//! PDDL parsing for the STRIPS + typing fragment (with negative
//! preconditions and equality).

mod model;
mod parse;
mod render;
pub mod sexpr;

use thiserror::Error;

pub use model::*;
pub use parse::{parse_domain, parse_problem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unsupported requirement flag '{0}'")]
    UnsupportedRequirement(String),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("arity mismatch for '{predicate}': expected {expected} arguments, found {found}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown type '{0}'")]
    UnknownType(String),
    #[error("cyclic type hierarchy through '{0}'")]
    CyclicTypes(String),
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("duplicate object '{0}'")]
    DuplicateObject(String),
    #[error("duplicate predicate '{0}'")]
    DuplicatePredicate(String),
    #[error("duplicate action schema '{0}'")]
    DuplicateSchema(String),
    #[error("variable {variable} is not a parameter of '{schema}'")]
    UndeclaredVariable { schema: String, variable: String },
    #[error("object '{object}' is not of type '{expected}' required by '{predicate}'")]
    TypeMismatch {
        predicate: String,
        object: String,
        expected: String,
    },
    #[error("problem is for domain '{found}' but was parsed against '{expected}'")]
    DomainMismatch { expected: String, found: String },
}
