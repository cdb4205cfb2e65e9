//! Small named instances used by tests, the CLI examples and the browser demo.

use std::collections::BTreeSet;

use crate::model::{CQNeg, Database, Fact, Provenance, Schema, UCQNeg};
use crate::parse::{parse_facts, parse_query, parse_schema};

pub const RUNNING_SCHEMA: &str = include_str!("../fixtures/running.schema");
pub const RUNNING_EXO_SCHEMA: &str = include_str!("../fixtures/running_exo.schema");
pub const RUNNING_FACTS: &str = include_str!("../fixtures/running.facts");
pub const Q1: &str = include_str!("../fixtures/q1.query");
pub const Q2: &str = include_str!("../fixtures/q2.query");
pub const Q3: &str = include_str!("../fixtures/q3.query");
pub const Q4: &str = include_str!("../fixtures/q4.query");
pub const RELEVANCE_SCHEMA: &str = include_str!("../fixtures/relevance.schema");
pub const RELEVANCE_FACTS: &str = include_str!("../fixtures/relevance.facts");
pub const RELEVANCE_QUERY: &str = include_str!("../fixtures/relevance.query");
pub const SAT_QUERY: &str = include_str!("../fixtures/sat.query");

fn cq(text: &str) -> CQNeg {
    parse_query(text).expect("fixture query parses").disjuncts.remove(0)
}

/// The student database with no relation declared exogenous.
pub fn running_db() -> Database {
    parse_facts(RUNNING_FACTS, &parse_schema(RUNNING_SCHEMA).unwrap()).unwrap()
}

/// The student database with Stud and Course in X.
pub fn running_db_exo() -> Database {
    parse_facts(RUNNING_FACTS, &parse_schema(RUNNING_EXO_SCHEMA).unwrap()).unwrap()
}

/// Endogenous facts of the student database by their short names ft1..ft3, fr1..fr5.
pub fn running_fact(name: &str) -> Fact {
    let (rel, args): (&str, &[&str]) = match name {
        "ft1" => ("TA", &["Adam"]),
        "ft2" => ("TA", &["Ben"]),
        "ft3" => ("TA", &["David"]),
        "fr1" => ("Reg", &["Adam", "OS"]),
        "fr2" => ("Reg", &["Adam", "AI"]),
        "fr3" => ("Reg", &["Ben", "OS"]),
        "fr4" => ("Reg", &["Caroline", "DB"]),
        "fr5" => ("Reg", &["Caroline", "IC"]),
        other => panic!("no fact named {other}"),
    };
    Fact::new(rel, args.iter().copied())
}

pub const RUNNING_NAMES: [&str; 8] = ["ft1", "ft2", "ft3", "fr1", "fr2", "fr3", "fr4", "fr5"];

pub fn q1() -> CQNeg {
    cq(Q1)
}

pub fn q2() -> CQNeg {
    cq(Q2)
}

pub fn q3() -> CQNeg {
    cq(Q3)
}

pub fn q4() -> CQNeg {
    cq(Q4)
}

pub fn citations_q() -> CQNeg {
    cq("q() :- Author(x,y), Pub(x,z), Citations(z,w).")
}

pub fn exo_pad_q() -> CQNeg {
    cq("q() :- not R(x,w), S(z,x), not P(z,w), T(y,w).")
}

pub fn exo_path_q() -> CQNeg {
    cq("q() :- not R(x,w), S(z,x), not P(z,y), T(y,w).")
}

pub fn long_path_q() -> CQNeg {
    cq("q() :- not R(x), Q(x,v), S(x,z), U(z,w), not P(w,y), T(y,v).")
}

pub fn branching_path_q() -> CQNeg {
    cq("q() :- U(t,r), not T(y), Q(y,w), not V(t), R(x,y), not S(x,z), O(z), P(u,y,w).")
}

pub fn exo_set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Database encoding a small 2+/2-/4+- formula for the relevance reduction.
pub fn relevance_db() -> Database {
    parse_facts(RELEVANCE_FACTS, &parse_schema(RELEVANCE_SCHEMA).unwrap()).unwrap()
}

pub fn q_rst_neg_r() -> CQNeg {
    cq(RELEVANCE_QUERY)
}

/// Two mutually inverse endogenous facts; R(1,2) is relevant both ways.
pub fn inverse_pair_db() -> Database {
    Database::new(Schema::new().with("R", 2, false))
        .with(Fact::new("R", ["1", "2"]), Provenance::Endogenous)
        .with(Fact::new("R", ["2", "1"]), Provenance::Endogenous)
}

pub fn inverse_pair_q() -> CQNeg {
    cq("q() :- R(x,y), not R(y,x).")
}

pub fn q_sat() -> UCQNeg {
    parse_query(SAT_QUERY).unwrap()
}
