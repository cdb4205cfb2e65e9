//! Shapley values of database facts for Boolean conjunctive queries with negation.
//!
//! Exact values for hierarchical self-join-free queries, a rewriting that removes
//! exogenous relations, an additive sampling estimator for everything else,
//! relevance tests for polarity-consistent queries, probabilistic evaluation,
//! and brute-force oracles for all of them.

pub mod approx;
pub mod combin;
pub mod error;
pub mod eval;
pub mod exact;
pub mod fixtures;
mod lifted;
pub mod model;
pub mod parse;
pub mod prob;
pub mod random;
pub mod rational;
pub mod relevance;
pub mod report;
pub mod rewrite;
pub mod structure;

pub use error::{Error, Result};
pub use model::{Atom, CQNeg, Database, Fact, FactInfo, Polarity, Provenance, RelationSym, Schema, Term, UCQNeg};
pub use rational::Rational;
