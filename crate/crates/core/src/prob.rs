//! Query probability over tuple-independent databases.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::eval::{Instance, DEFAULT_CAP};
use crate::exact::require_hierarchical;
use crate::lifted::{evaluate, Probability};
use crate::model::{CQNeg, Database, Disjuncts, Fact, FactInfo, Provenance};
use crate::rational::Rational;
use crate::rewrite::Rewriter;

/// Pr[world ⊨ q] for a hierarchical self-join-free query.
pub fn prob_eval_hierarchical(pdb: &Database, q: &CQNeg) -> Result<Rational> {
    require_hierarchical(q)?;
    let probs: Vec<(&Fact, Rational)> = pdb.iter().map(|(f, i)| (f, i.presence())).collect();
    evaluate(&Probability, q, probs.iter().map(|(f, p)| (*f, p)))
}

/// Relations in `deterministic` must carry probability-1 facts only; those become exogenous.
fn fix_deterministic(pdb: &Database, deterministic: &BTreeSet<String>) -> Result<Database> {
    let mut out = pdb.clone();
    for (f, info) in pdb.iter().filter(|(f, _)| deterministic.contains(&f.relation)) {
        let p = info.presence();
        if !p.is_one() {
            return Err(Error::NotDeterministic { relation: f.relation.clone(), fact: f.clone(), probability: p.to_string() });
        }
        if info.provenance == Provenance::Endogenous {
            out = out.reclassified(f, Provenance::Exogenous);
        }
    }
    Ok(out)
}

/// Pr[world ⊨ q] when the deterministic relations leave no non-hierarchical path.
pub fn prob_eval(pdb: &Database, q: &CQNeg, deterministic: &BTreeSet<String>) -> Result<Rational> {
    prob_eval_with(pdb, q, deterministic, &Rewriter::default())
}

pub fn prob_eval_with(pdb: &Database, q: &CQNeg, deterministic: &BTreeSet<String>, rewriter: &Rewriter) -> Result<Rational> {
    let fixed = fix_deterministic(pdb, deterministic)?;
    let (d, q, _) = rewriter.rewrite(&fixed, q, deterministic)?;
    prob_eval_hierarchical(&d, &q)
}

/// Sum over all worlds of the uncertain facts; at most `cap` of them.
pub fn brute_prob_with_cap<Q: Disjuncts + ?Sized>(pdb: &Database, q: &Q, cap: usize) -> Result<Rational> {
    let present: Vec<(&Fact, &FactInfo)> = pdb.iter().filter(|(_, i)| !i.presence().is_zero()).collect();
    let inst = Instance::new(present.iter().map(|(f, i)| (*f, !i.presence().is_one())));
    let uncertain = inst.endogenous_ids();
    if uncertain.len() > cap {
        return Err(Error::CapExceeded { endogenous: uncertain.len(), cap });
    }
    let probs: Vec<Rational> = uncertain.iter().map(|&i| pdb.get(&inst.facts[i]).unwrap().presence()).collect();
    let compiled = inst.compile_all(q);
    let mut world = inst.exogenous_world();
    let mut total = Rational::zero();
    for mask in 0..1usize << uncertain.len() {
        let mut weight = Rational::one();
        for (bit, (&id, p)) in uncertain.iter().zip(&probs).enumerate() {
            let on = mask >> bit & 1 == 1;
            world[id] = on;
            weight = if on { weight * p.clone() } else { weight * (Rational::one() - p.clone()) };
        }
        if inst.satisfies(&compiled, &world) {
            total = total + weight;
        }
    }
    Ok(total)
}

pub fn brute_prob<Q: Disjuncts + ?Sized>(pdb: &Database, q: &Q) -> Result<Rational> {
    brute_prob_with_cap(pdb, q, DEFAULT_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, exo_set};
    use crate::model::Schema;
    use crate::parse::{parse_facts, parse_query, parse_schema};

    fn cq(s: &str) -> CQNeg {
        parse_query(s).unwrap().disjuncts.remove(0)
    }

    #[test]
    fn single_fact() {
        let db = Database::new(Schema::new().with("R", 1, false));
        let mut db = db;
        db.insert(Fact::new("R", ["a"]), FactInfo::probabilistic(Rational::new(3, 10)));
        let q = cq("q() :- R(x).");
        assert_eq!(prob_eval_hierarchical(&db, &q).unwrap(), Rational::new(3, 10));
        assert_eq!(brute_prob(&db, &q).unwrap(), Rational::new(3, 10));
    }

    #[test]
    fn conjunction_of_halves() {
        let schema = parse_schema("relation R/1\nrelation S/1").unwrap();
        let db = parse_facts("prob 1/2 R(a)\nprob 0.5 S(a)", &schema).unwrap();
        let q = cq("q() :- R(x), S(x).");
        assert_eq!(brute_prob(&db, &q).unwrap(), Rational::new(1, 4));
        assert_eq!(prob_eval_hierarchical(&db, &q).unwrap(), Rational::new(1, 4));
    }

    #[test]
    fn q1_small_instance() {
        let schema = parse_schema(fixtures::RUNNING_SCHEMA).unwrap();
        let facts = "exo Stud(Adam)\nexo Stud(Ben)\nprob 1/3 TA(Adam)\nprob 0.25 TA(Ben)\n\
                     prob 1/2 Reg(Adam,OS)\nprob 2/5 Reg(Ben,OS)\nprob 0.9 Reg(Ben,AI)\nprob 1/7 Stud(Eve)";
        let db = parse_facts(facts, &schema).unwrap();
        let q1 = fixtures::q1();
        assert_eq!(prob_eval_hierarchical(&db, &q1).unwrap(), brute_prob(&db, &q1).unwrap());
    }

    #[test]
    fn q2_with_deterministic_relations() {
        let schema = parse_schema(fixtures::RUNNING_EXO_SCHEMA).unwrap();
        let facts = "exo Stud(Adam)\nexo Stud(Ben)\nexo Course(OS,EE)\nexo Course(AI,CS)\n\
                     prob 1/3 TA(Adam)\nprob 1/4 TA(Ben)\nprob 1/2 Reg(Adam,OS)\nprob 3/5 Reg(Ben,AI)\nprob 1/5 Reg(Ben,OS)";
        let db = parse_facts(facts, &schema).unwrap();
        let q2 = fixtures::q2();
        let x = exo_set(&["Stud", "Course"]);
        assert_eq!(prob_eval(&db, &q2, &x).unwrap(), brute_prob(&db, &q2).unwrap());
        assert!(matches!(prob_eval_hierarchical(&db, &q2), Err(Error::NotHierarchical(_))));
    }

    #[test]
    fn refusals() {
        let q = fixtures::exo_path_q();
        let db = Database::new(Schema::new());
        assert!(matches!(prob_eval(&db, &q, &exo_set(&["S", "P"])), Err(Error::HasNonHierPath(_))));
        let mut db = Database::new(Schema::new().with("S", 1, false).with("R", 1, false));
        db.insert(Fact::new("S", ["a"]), FactInfo::probabilistic(Rational::new(1, 2)));
        let q = cq("q() :- R(x), S(x).");
        assert!(matches!(prob_eval(&db, &q, &exo_set(&["S"])), Err(Error::NotDeterministic { .. })));
    }
}
