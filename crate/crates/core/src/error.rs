use crate::model::{Fact, Violation};
use crate::structure::{NonHierPath, Triplet};

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: expected {expected}")]
    Syntax { line: usize, column: usize, expected: String },
    #[error("unsafe variable {var}")]
    Unsafe { var: String },
    #[error("arity mismatch: {relation} has arity {expected}, used with {found}")]
    Arity { relation: String, expected: usize, found: usize },
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("bad probability {0}")]
    BadProbability(String),
    #[error("relation {0} is declared twice")]
    DuplicateRelation(String),
    #[error("relation name {0} uses the reserved prefix __exo_")]
    ReservedName(String),
    #[error("invalid input: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("query is not hierarchical: {0}")]
    NotHierarchical(Box<Triplet>),
    #[error("query has a self-join on relation {0}")]
    SelfJoin(String),
    #[error("{0} is not an endogenous fact of the database")]
    FactNotEndogenous(Fact),
    #[error("{endogenous} endogenous facts exceed the brute-force cap of {cap}")]
    CapExceeded { endogenous: usize, cap: usize },
    #[error("query has a non-hierarchical path: {0}")]
    HasNonHierPath(Box<NonHierPath>),
    #[error("materializing {relation} needs {tuples} tuples, above the cap of {cap}")]
    BlowupExceeded { relation: String, tuples: u128, cap: u128 },
    #[error("rewritten query is not hierarchical")]
    InternalNotHierarchical,
    #[error("query is not polarity-consistent: {0} occurs both positively and negatively")]
    NotPolarityConsistent(String),
    #[error("exogenous relation {relation} holds endogenous fact {fact}")]
    EndogenousInExogenous { relation: String, fact: Fact },
    #[error("deterministic relation {relation} holds {fact} with probability {probability}")]
    NotDeterministic { relation: String, fact: Fact, probability: String },
    #[error("invalid sampling plan: {0}")]
    BadPlan(String),
    #[error("cannot read {0}")]
    Io(String),
    #[error("this operation needs a single conjunctive query, got {0} rules")]
    NotConjunctive(usize),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Well-formed input that an engine declines to compute.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::NotHierarchical(_)
                | Error::SelfJoin(_)
                | Error::CapExceeded { .. }
                | Error::HasNonHierPath(_)
                | Error::BlowupExceeded { .. }
                | Error::InternalNotHierarchical
                | Error::NotPolarityConsistent(_)
                | Error::NotConjunctive(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
