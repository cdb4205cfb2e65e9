//! Polynomial-time Shapley values for hierarchical self-join-free queries.

use crate::combin::{shapley_from_counts, CountVector};
use crate::error::{Error, Result};
use crate::lifted::{evaluate, Counting};
use crate::model::{CQNeg, Database, Fact, Provenance};
use crate::rational::Rational;
use crate::structure::{find_non_hierarchical_triplet, self_join_relation};

/// Refuse queries outside the tractable class, with the reason.
pub(crate) fn require_hierarchical(q: &CQNeg) -> Result<()> {
    if let Some(var) = q.unsafe_vars().into_iter().next() {
        return Err(Error::Unsafe { var });
    }
    if let Some(rel) = self_join_relation(q) {
        return Err(Error::SelfJoin(rel));
    }
    match find_non_hierarchical_triplet(q) {
        Some(t) => Err(Error::NotHierarchical(Box::new(t))),
        None => Ok(()),
    }
}

/// counts[k] = number of k-subsets E of Dn with Dx ∪ E ⊨ q, for k = 0..|Dn|.
pub fn cntsat(db: &Database, q: &CQNeg) -> Result<CountVector> {
    require_hierarchical(q)?;
    let flags: Vec<(&Fact, bool)> = db.iter().map(|(f, i)| (f, i.provenance == Provenance::Endogenous)).collect();
    let (counts, m) = evaluate(&Counting, q, flags.iter().map(|(f, e)| (*f, e)))?;
    debug_assert_eq!(m, db.endogenous_count());
    Ok(counts)
}

pub fn shapley_exact(db: &Database, q: &CQNeg, f: &Fact) -> Result<Rational> {
    if !db.is_endogenous(f) {
        return Err(Error::FactNotEndogenous(f.clone()));
    }
    require_hierarchical(q)?;
    let with_f = cntsat(&db.reclassified(f, Provenance::Exogenous), q)?;
    let without_f = cntsat(&db.without(f), q)?;
    Ok(shapley_from_counts(db.endogenous_count(), &with_f, &without_f))
}

/// Values of all endogenous facts in canonical order.
pub fn shapley_exact_all(db: &Database, q: &CQNeg) -> Result<Vec<(Fact, Rational)>> {
    require_hierarchical(q)?;
    db.endogenous().map(|f| Ok((f.clone(), shapley_exact(db, q, f)?))).collect()
}
