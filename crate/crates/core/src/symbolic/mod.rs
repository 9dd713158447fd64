//! Operator language: parsing, printing and grounding.
//!
//! The domain file format is s-expression based. A domain is a sequence of
//! `(:action ..)`, `(:axiom ..)` and `(:reward ..)` blocks, optionally
//! preceded by `(:types ..)` and `(:predicates ..)` declarations. Actions
//! carry `:parameters`, `:precondition`, `:effects`, `:uconds` and
//! `:ueffects` clauses; `(maybe ..)` and `(verify ..)` mark uncertain
//! effects, and `(when ..)` effects expand into schema variants.

mod ast;
mod ground;
mod parse;
mod print;
mod sexpr;

pub use ast::{
    Atom, Axiom, Domain, EffectItem, Formula, Literal, OperatorSchema, PredicateSchema,
    StaticGuard, Term, TypedParam,
};
pub use ground::{
    AbstractBelief, CompiledFormula, EntId, GroundOperator, OpId, OutcomeBits, PredId,
    Problem, PropId, Proposition, TypeId,
};
pub use parse::parse_domain;

use thiserror::Error;

/// Errors raised while parsing or grounding a domain.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum DomainError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { msg: String, line: u32, col: u32 },

    #[error("{line}:{col}: unknown predicate `{name}`")]
    UnknownPredicate { name: String, line: u32, col: u32 },

    #[error("{line}:{col}: arity mismatch for `{name}`: expected {expected}, got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize, line: u32, col: u32 },

    #[error("{line}:{col}: type mismatch: {msg}")]
    TypeMismatch { msg: String, line: u32, col: u32 },

    #[error("{line}:{col}: {msg}")]
    Semantic { msg: String, line: u32, col: u32 },

    #[error("no entity pool for type `{0}`")]
    MissingPool(String),

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("uncertain-effect assignment incomplete: expected {expected} values, got {got}")]
    PartialAssignment { expected: usize, got: usize },

    #[error("proposition `{0}` not in the current universe")]
    PropositionNotInUniverse(String),

    #[error("operator `{0}` has {1} uncertain effects; at most 8 are supported")]
    TooManyUncertainEffects(String, usize),
}

impl DomainError {
    pub(crate) fn syntax(msg: impl Into<String>, line: u32, col: u32) -> Self {
        DomainError::Syntax { msg: msg.into(), line, col }
    }

    pub(crate) fn semantic(msg: impl Into<String>, line: u32, col: u32) -> Self {
        DomainError::Semantic { msg: msg.into(), line, col }
    }
}
