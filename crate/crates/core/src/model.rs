//! Schemas, facts, databases and queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::rational::Rational;

/// Relation names starting with this prefix belong to the rewriter.
pub const RESERVED_PREFIX: &str = "__exo_";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationSym {
    pub name: String,
    pub arity: usize,
    /// Member of the exogenous relation set X.
    pub exogenous_only: bool,
}

impl RelationSym {
    pub fn new(name: impl Into<String>, arity: usize, exogenous_only: bool) -> Self {
        RelationSym { name: name.into(), arity, exogenous_only }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    relations: BTreeMap<String, RelationSym>,
}

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    /// Returns false when the name is already declared.
    pub fn declare(&mut self, rel: RelationSym) -> bool {
        if self.relations.contains_key(&rel.name) {
            return false;
        }
        self.relations.insert(rel.name.clone(), rel);
        true
    }

    pub fn with(mut self, name: &str, arity: usize, exogenous_only: bool) -> Self {
        self.declare(RelationSym::new(name, arity, exogenous_only));
        self
    }

    pub(crate) fn remove(&mut self, name: &str) -> Option<RelationSym> {
        self.relations.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&RelationSym> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationSym> {
        self.relations.values()
    }

    /// The set X of exogenous relations.
    pub fn exogenous_relations(&self) -> BTreeSet<String> {
        self.relations.values().filter(|r| r.exogenous_only).map(|r| r.name.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Provenance {
    Endogenous,
    Exogenous,
}

impl Provenance {
    pub fn keyword(self) -> &'static str {
        match self {
            Provenance::Endogenous => "endo",
            Provenance::Exogenous => "exo",
        }
    }
}

/// A fact is identified by its tuple; provenance and probability are attributes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub relation: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new<I, S>(relation: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Fact { relation: relation.into(), args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write_fact_constant(f, a)?;
        }
        f.write_str(")")
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit())
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        if c == '\'' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("'")
}

fn write_fact_constant(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if is_identifier(s) || is_numeral(s) {
        f.write_str(s)
    } else {
        write_quoted(f, s)
    }
}

/// In queries a bare lowercase identifier is a variable, so such constants need quotes.
fn write_query_constant(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    let bare = is_numeral(s) || (is_identifier(s) && s.starts_with(|c: char| c.is_ascii_uppercase()));
    if bare {
        f.write_str(s)
    } else {
        write_quoted(f, s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactInfo {
    pub provenance: Provenance,
    pub probability: Option<Rational>,
}

impl FactInfo {
    pub fn endogenous() -> Self {
        FactInfo { provenance: Provenance::Endogenous, probability: None }
    }

    pub fn exogenous() -> Self {
        FactInfo { provenance: Provenance::Exogenous, probability: None }
    }

    pub fn probabilistic(p: Rational) -> Self {
        FactInfo { provenance: Provenance::Endogenous, probability: Some(p) }
    }

    /// Probability of presence; facts without one are certain.
    pub fn presence(&self) -> Rational {
        self.probability.clone().unwrap_or_else(Rational::one)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    schema: Schema,
    facts: BTreeMap<Fact, FactInfo>,
}

impl Database {
    pub fn new(schema: Schema) -> Self {
        Database { schema, facts: BTreeMap::new() }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub(crate) fn schema_mut(&mut self) -> &mut Schema {
        &mut self.schema
    }

    /// Set semantics: re-inserting an existing tuple is a no-op and returns false.
    pub fn insert(&mut self, fact: Fact, info: FactInfo) -> bool {
        if self.facts.contains_key(&fact) {
            return false;
        }
        self.facts.insert(fact, info);
        true
    }

    pub fn with(mut self, fact: Fact, provenance: Provenance) -> Self {
        self.insert(fact, FactInfo { provenance, probability: None });
        self
    }

    pub fn get(&self, fact: &Fact) -> Option<&FactInfo> {
        self.facts.get(fact)
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains_key(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// All facts in canonical (relation, args) order.
    pub fn iter(&self) -> impl Iterator<Item = (&Fact, &FactInfo)> {
        self.facts.iter()
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.keys()
    }

    pub fn endogenous(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter().filter(|(_, i)| i.provenance == Provenance::Endogenous).map(|(f, _)| f)
    }

    pub fn exogenous(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter().filter(|(_, i)| i.provenance == Provenance::Exogenous).map(|(f, _)| f)
    }

    pub fn endogenous_count(&self) -> usize {
        self.endogenous().count()
    }

    pub fn is_endogenous(&self, fact: &Fact) -> bool {
        matches!(self.facts.get(fact), Some(i) if i.provenance == Provenance::Endogenous)
    }

    pub fn relation<'a>(&'a self, name: &'a str) -> impl Iterator<Item = (&'a Fact, &'a FactInfo)> + 'a {
        let start = Fact { relation: name.to_string(), args: Vec::new() };
        self.facts.range(start..).take_while(move |(f, _)| f.relation == name)
    }

    pub fn relation_len(&self, name: &str) -> usize {
        self.relation(name).count()
    }

    pub(crate) fn remove_relation(&mut self, name: &str) {
        let doomed: Vec<Fact> = self.relation(name).map(|(f, _)| f.clone()).collect();
        for f in doomed {
            self.facts.remove(&f);
        }
        self.schema.remove(name);
    }

    /// Copy with `fact` carrying a different provenance.
    pub fn reclassified(&self, fact: &Fact, provenance: Provenance) -> Database {
        let mut db = self.clone();
        if let Some(info) = db.facts.get_mut(fact) {
            info.provenance = provenance;
        }
        db
    }

    pub fn without(&self, fact: &Fact) -> Database {
        let mut db = self.clone();
        db.facts.remove(fact);
        db
    }

    /// Constants of the facts.
    pub fn constants(&self) -> BTreeSet<String> {
        self.facts.keys().flat_map(|f| f.args.iter().cloned()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(value: &str) -> Term {
        Term::Const(value.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write_query_constant(f, c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
    pub polarity: Polarity,
}

pub type Binding = BTreeMap<String, String>;

impl Atom {
    pub fn new(relation: &str, terms: Vec<Term>, polarity: Polarity) -> Self {
        Atom { relation: relation.to_string(), terms, polarity }
    }

    pub fn is_positive(&self) -> bool {
        self.polarity == Polarity::Positive
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        self.terms.iter().filter_map(Term::as_var).collect()
    }

    /// Distinct variables in order of first occurrence.
    pub fn var_list(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for v in self.terms.iter().filter_map(Term::as_var) {
            if !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn has_var(&self, v: &str) -> bool {
        self.terms.iter().any(|t| t.as_var() == Some(v))
    }

    /// Variable binding under which the atom maps onto `fact`, if any.
    pub fn unify(&self, fact: &Fact) -> Option<Binding> {
        if fact.relation != self.relation || fact.args.len() != self.terms.len() {
            return None;
        }
        let mut b = Binding::new();
        for (t, a) in self.terms.iter().zip(&fact.args) {
            match t {
                Term::Const(c) if c != a => return None,
                Term::Const(_) => {}
                Term::Var(v) => match b.get(v) {
                    Some(prev) if prev != a => return None,
                    Some(_) => {}
                    None => {
                        b.insert(v.clone(), a.clone());
                    }
                },
            }
        }
        Some(b)
    }

    /// The fact this atom denotes under `binding`; None if a variable is unbound.
    pub fn ground(&self, binding: &Binding) -> Option<Fact> {
        let mut args = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match t {
                Term::Const(c) => args.push(c.clone()),
                Term::Var(v) => args.push(binding.get(v)?.clone()),
            }
        }
        Some(Fact { relation: self.relation.clone(), args })
    }

    pub fn substitute(&self, var: &str, value: &str) -> Atom {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(v) if v == var => Term::Const(value.to_string()),
                other => other.clone(),
            })
            .collect();
        Atom { relation: self.relation.clone(), terms, polarity: self.polarity }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_positive() {
            f.write_str("not ")?;
        }
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// Boolean conjunctive query with safe negation; atoms keep source order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CQNeg {
    pub atoms: Vec<Atom>,
}

impl CQNeg {
    pub fn new(atoms: Vec<Atom>) -> Self {
        CQNeg { atoms }
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        self.atoms.iter().flat_map(|a| a.vars()).collect()
    }

    pub fn positive(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| a.is_positive())
    }

    pub fn negative(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| !a.is_positive())
    }

    /// Indices of the atoms containing `var`.
    pub fn atoms_with(&self, var: &str) -> BTreeSet<usize> {
        self.atoms.iter().enumerate().filter(|(_, a)| a.has_var(var)).map(|(i, _)| i).collect()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }

    pub fn relations(&self) -> BTreeSet<&str> {
        self.atoms.iter().map(|a| a.relation.as_str()).collect()
    }

    pub fn substitute(&self, var: &str, value: &str) -> CQNeg {
        CQNeg { atoms: self.atoms.iter().map(|a| a.substitute(var, value)).collect() }
    }

    /// Variables of negative atoms with no positive occurrence, sorted.
    pub fn unsafe_vars(&self) -> Vec<String> {
        let positive: BTreeSet<&str> = self.positive().flat_map(|a| a.vars()).collect();
        let negative: BTreeSet<&str> = self.negative().flat_map(|a| a.vars()).collect();
        negative.difference(&positive).map(|v| v.to_string()).collect()
    }

    pub fn is_safe(&self) -> bool {
        self.unsafe_vars().is_empty()
    }
}

impl fmt::Display for CQNeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("q() :- ")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UCQNeg {
    pub disjuncts: Vec<CQNeg>,
}

impl UCQNeg {
    pub fn new(disjuncts: Vec<CQNeg>) -> Self {
        UCQNeg { disjuncts }
    }

    /// The single disjunct, if there is exactly one.
    pub fn as_cq(&self) -> Option<&CQNeg> {
        match self.disjuncts.as_slice() {
            [q] => Some(q),
            _ => None,
        }
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.disjuncts.iter().flat_map(|q| q.constants()).collect()
    }

    pub fn relations(&self) -> BTreeSet<&str> {
        self.disjuncts.iter().flat_map(|q| q.relations()).collect()
    }
}

impl From<CQNeg> for UCQNeg {
    fn from(q: CQNeg) -> Self {
        UCQNeg { disjuncts: vec![q] }
    }
}

impl fmt::Display for UCQNeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

/// Anything evaluable as a union of conjunctive queries.
pub trait Disjuncts {
    fn disjuncts(&self) -> &[CQNeg];
}

impl Disjuncts for CQNeg {
    fn disjuncts(&self) -> &[CQNeg] {
        std::slice::from_ref(self)
    }
}

impl Disjuncts for UCQNeg {
    fn disjuncts(&self) -> &[CQNeg] {
        &self.disjuncts
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownRelation { relation: String },
    ArityMismatch { relation: String, expected: usize, found: usize },
    Duplicate { fact: Fact },
    ExogenousOnly { fact: Fact },
    ProbabilityOutOfRange { fact: Fact, probability: Rational },
    UnsafeVariable { disjunct: usize, var: String },
    EmptyDisjunct { disjunct: usize },
    NoDisjuncts,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownRelation { relation } => write!(f, "unknown relation {relation}"),
            Violation::ArityMismatch { relation, expected, found } => {
                write!(f, "arity mismatch: {relation} has arity {expected}, used with {found}")
            }
            Violation::Duplicate { fact } => write!(f, "duplicate fact {fact}"),
            Violation::ExogenousOnly { fact } => {
                write!(f, "endogenous fact {fact} in exogenous relation {}", fact.relation)
            }
            Violation::ProbabilityOutOfRange { fact, probability } => {
                write!(f, "probability {probability} of {fact} is outside [0,1]")
            }
            Violation::UnsafeVariable { var, .. } => write!(f, "unsafe variable {var}"),
            Violation::EmptyDisjunct { disjunct } => write!(f, "disjunct {disjunct} has no atoms"),
            Violation::NoDisjuncts => f.write_str("query has no rules"),
        }
    }
}

fn check_fact(schema: &Schema, fact: &Fact, info: &FactInfo, out: &mut Vec<Violation>) {
    let Some(rel) = schema.get(&fact.relation) else {
        out.push(Violation::UnknownRelation { relation: fact.relation.clone() });
        return;
    };
    if rel.arity != fact.args.len() {
        out.push(Violation::ArityMismatch {
            relation: rel.name.clone(),
            expected: rel.arity,
            found: fact.args.len(),
        });
    }
    if rel.exogenous_only && info.provenance == Provenance::Endogenous {
        out.push(Violation::ExogenousOnly { fact: fact.clone() });
    }
    if let Some(p) = &info.probability {
        if !p.in_unit_interval() {
            out.push(Violation::ProbabilityOutOfRange { fact: fact.clone(), probability: p.clone() });
        }
    }
}

pub fn validate_database(db: &Database) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    for (fact, info) in db.iter() {
        check_fact(db.schema(), fact, info, &mut out);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Validation of a raw fact listing, which unlike a Database can hold duplicates.
pub fn validate_fact_list(schema: &Schema, facts: &[(Fact, FactInfo)]) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (fact, info) in facts {
        check_fact(schema, fact, info, &mut out);
        if !seen.insert(fact) {
            out.push(Violation::Duplicate { fact: fact.clone() });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Safety and arity consistency, within the query and against `schema` when given.
pub fn validate_query(q: &UCQNeg, schema: Option<&Schema>) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if q.disjuncts.is_empty() {
        out.push(Violation::NoDisjuncts);
    }
    let mut arities: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, cq) in q.disjuncts.iter().enumerate() {
        if cq.atoms.is_empty() {
            out.push(Violation::EmptyDisjunct { disjunct: i });
        }
        for var in cq.unsafe_vars() {
            out.push(Violation::UnsafeVariable { disjunct: i, var });
        }
        for a in &cq.atoms {
            let found = a.terms.len();
            let expected = match schema {
                Some(s) => match s.get(&a.relation) {
                    Some(rel) => rel.arity,
                    None => {
                        out.push(Violation::UnknownRelation { relation: a.relation.clone() });
                        continue;
                    }
                },
                None => *arities.entry(a.relation.as_str()).or_insert(found),
            };
            if expected != found {
                out.push(Violation::ArityMismatch { relation: a.relation.clone(), expected, found });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Constants of the database together with the constants of the query.
pub fn active_domain(db: &Database, q: &UCQNeg) -> BTreeSet<String> {
    let mut dom = db.constants();
    dom.extend(q.constants());
    dom
}
