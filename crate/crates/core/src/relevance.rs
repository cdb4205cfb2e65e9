//! Deciding whether a fact can ever flip the query, for polarity-consistent queries.
//!
//! A fact f of a positive relation is relevant iff some mapping h that uses f
//! survives when every other negative-relation fact not blocked by h is added;
//! dually for negative relations.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::eval::Instance;
use crate::model::{Binding, CQNeg, Database, Disjuncts, Fact, UCQNeg};
use crate::structure::{mixed_relation, polarity_map, PolarityUse};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flip {
    /// Adding f makes the query true.
    FalseToTrue,
    /// Adding f makes the query false.
    TrueToFalse,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelevanceWitness {
    pub flip: Flip,
    pub mapping: Option<Binding>,
    pub subset: Vec<Fact>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelevanceResult {
    pub pos_relevant: bool,
    pub neg_relevant: bool,
    pub witness: Option<RelevanceWitness>,
}

impl RelevanceResult {
    pub fn relevant(&self) -> bool {
        self.pos_relevant || self.neg_relevant
    }

    fn none() -> Self {
        RelevanceResult { pos_relevant: false, neg_relevant: false, witness: None }
    }

    fn or(self, other: RelevanceResult) -> Self {
        RelevanceResult {
            pos_relevant: self.pos_relevant || other.pos_relevant,
            neg_relevant: self.neg_relevant || other.neg_relevant,
            witness: self.witness.or(other.witness),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

fn require_consistent(q: &UCQNeg) -> Result<()> {
    match mixed_relation(q) {
        Some(rel) => Err(Error::NotPolarityConsistent(rel)),
        None => Ok(()),
    }
}

fn require_safe(q: &UCQNeg) -> Result<()> {
    for d in &q.disjuncts {
        if let Some(var) = d.unsafe_vars().into_iter().next() {
            return Err(Error::Unsafe { var });
        }
    }
    Ok(())
}

/// One accepted mapping with the facts it touches.
struct Candidate {
    binding: Binding,
    positive: BTreeSet<usize>,
    negative: BTreeSet<usize>,
}

/// Mappings of `d` that send every positive atom into D and no negative atom into Dx;
/// on the positive side some positive atom must hit `target`, on the negative side some negative atom.
fn candidates(inst: &Instance, d: &CQNeg, target: Option<(usize, Side)>, visit: &mut dyn FnMut(Candidate) -> bool) {
    let c = inst.compile(d);
    let world = vec![true; inst.len()];
    let pins: Vec<Option<(usize, usize)>> = match target {
        Some((id, Side::Positive)) => d
            .positive()
            .enumerate()
            .filter(|(_, a)| a.relation == inst.facts[id].relation)
            .map(|(i, _)| Some((i, id)))
            .collect(),
        _ => vec![None],
    };
    for pin in pins {
        let mut stop = false;
        c.for_each_match(inst, &world, pin, &mut |m| {
            let mut negative = BTreeSet::new();
            for j in 0..c.negative_count() {
                if let Some(id) = c.negative_fact(inst, j, m.values) {
                    if !inst.endogenous[id] {
                        return false;
                    }
                    negative.insert(id);
                }
            }
            if let Some((id, Side::Negative)) = target {
                if !negative.contains(&id) {
                    return false;
                }
            }
            let positive = m.positive_facts.iter().copied().filter(|&i| inst.endogenous[i]).collect();
            stop = visit(Candidate { binding: inst.binding(&c, m.values), positive, negative });
            stop
        });
        if stop {
            return;
        }
    }
}

/// Search one side. Mappings come from `sources`; the final test runs against `check`,
/// with the negative-relation pool drawn from `check` as well.
fn decide(db: &Database, sources: &[CQNeg], check: &UCQNeg, f: &Fact, side: Side) -> Option<RelevanceWitness> {
    let inst = Instance::from_db(db);
    let target = inst.id(f)?;
    let polarity = polarity_map(check);
    let neg_pool: BTreeSet<usize> = (0..inst.len())
        .filter(|&i| inst.endogenous[i] && polarity.get(&inst.facts[i].relation) == Some(&PolarityUse::Negative))
        .collect();
    let compiled = inst.compile_all(check);
    let mut found = None;
    for d in sources {
        candidates(&inst, d, Some((target, side)), &mut |cand| {
            let mut world = inst.exogenous_world();
            let mut subset: BTreeSet<usize> = neg_pool.difference(&cand.negative).copied().collect();
            subset.extend(cand.positive.iter().copied().filter(|&i| i != target));
            subset.remove(&target);
            for &i in &subset {
                world[i] = true;
            }
            if side == Side::Negative {
                world[target] = true;
            }
            if inst.satisfies(&compiled, &world) {
                return false;
            }
            let mut facts: Vec<Fact> = subset.iter().map(|&i| inst.facts[i].clone()).collect();
            facts.sort();
            let flip = if side == Side::Positive { Flip::FalseToTrue } else { Flip::TrueToFalse };
            found = Some(RelevanceWitness { flip, mapping: Some(cand.binding), subset: facts });
            true
        });
        if found.is_some() {
            break;
        }
    }
    found
}

fn side_result(side: Side, witness: Option<RelevanceWitness>) -> RelevanceResult {
    let hit = witness.is_some();
    RelevanceResult { pos_relevant: hit && side == Side::Positive, neg_relevant: hit && side == Side::Negative, witness }
}

fn prepare(db: &Database, q: &UCQNeg, f: &Fact) -> Result<()> {
    require_consistent(q)?;
    require_safe(q)?;
    if !db.is_endogenous(f) {
        return Err(Error::FactNotEndogenous(f.clone()));
    }
    Ok(())
}

fn side_of(q: &UCQNeg, f: &Fact) -> Option<Side> {
    match polarity_map(q).get(&f.relation) {
        Some(PolarityUse::Positive) => Some(Side::Positive),
        Some(PolarityUse::Negative) => Some(Side::Negative),
        _ => None,
    }
}

/// Can adding f turn the query from false to true?
pub fn is_pos_relevant(db: &Database, q: &CQNeg, f: &Fact) -> Result<RelevanceResult> {
    let u = UCQNeg::from(q.clone());
    prepare(db, &u, f)?;
    if side_of(&u, f) != Some(Side::Positive) {
        return Ok(RelevanceResult::none());
    }
    Ok(side_result(Side::Positive, decide(db, std::slice::from_ref(q), &u, f, Side::Positive)))
}

/// Can adding f turn the query from true to false?
pub fn is_neg_relevant(db: &Database, q: &CQNeg, f: &Fact) -> Result<RelevanceResult> {
    let u = UCQNeg::from(q.clone());
    prepare(db, &u, f)?;
    if side_of(&u, f) != Some(Side::Negative) {
        return Ok(RelevanceResult::none());
    }
    Ok(side_result(Side::Negative, decide(db, std::slice::from_ref(q), &u, f, Side::Negative)))
}

pub fn relevance(db: &Database, q: &CQNeg, f: &Fact) -> Result<RelevanceResult> {
    Ok(is_pos_relevant(db, q, f)?.or(is_neg_relevant(db, q, f)?))
}

pub fn shapley_is_zero(db: &Database, q: &CQNeg, f: &Fact) -> Result<bool> {
    Ok(!relevance(db, q, f)?.relevant())
}

/// Disjunct-by-disjunct relevance: each disjunct is decided on its own and the answers are OR-ed.
pub fn ucq_is_relevant(db: &Database, q: &UCQNeg, f: &Fact) -> Result<RelevanceResult> {
    prepare(db, q, f)?;
    let mut out = RelevanceResult::none();
    for d in &q.disjuncts {
        let r = relevance(db, d, f)?;
        out = out.or(r);
    }
    Ok(out)
}

/// Relevance for a union, with mappings from each disjunct but the final check against the whole union.
pub fn ucq_is_relevant_union(db: &Database, q: &UCQNeg, f: &Fact) -> Result<RelevanceResult> {
    prepare(db, q, f)?;
    Ok(match side_of(q, f) {
        Some(side) => side_result(side, decide(db, &q.disjuncts, q, f, side)),
        None => RelevanceResult::none(),
    })
}

/// Mappings accepted by the enumeration, for inspection; with `target`, only those
/// sending a positive atom to that fact.
pub fn candidate_mappings(db: &Database, q: &CQNeg, target: Option<&Fact>) -> BTreeSet<Binding> {
    let inst = Instance::from_db(db);
    let t = match target {
        Some(f) => match inst.id(f) {
            Some(id) => Some((id, Side::Positive)),
            None => return BTreeSet::new(),
        },
        None => None,
    };
    let mut out = BTreeSet::new();
    candidates(&inst, q, t, &mut |c| {
        out.insert(c.binding);
        false
    });
    out
}

/// Does the witness flip the query as claimed?
pub fn replay_witness<Q: Disjuncts + ?Sized>(db: &Database, q: &Q, f: &Fact, w: &RelevanceWitness) -> bool {
    let base: Vec<&Fact> = db.exogenous().chain(w.subset.iter()).collect();
    let before = crate::eval::eval_boolean(base.iter().copied(), q);
    let after = crate::eval::eval_boolean(base.iter().copied().chain([f]), q);
    match w.flip {
        Flip::FalseToTrue => !before && after,
        Flip::TrueToFalse => before && !after,
    }
}
