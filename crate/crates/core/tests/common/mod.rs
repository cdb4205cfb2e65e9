#![allow(dead_code)]

use std::collections::BTreeSet;

use shapfact_core::eval::eval_boolean;
use shapfact_core::model::{Database, Disjuncts, Fact};
use shapfact_core::Rational;

/// Shapley value by walking every permutation of the endogenous facts.
pub fn permutation_shapley<Q: Disjuncts + ?Sized>(db: &Database, q: &Q, f: &Fact) -> Rational {
    let endo: Vec<Fact> = db.endogenous().cloned().collect();
    let exo: Vec<Fact> = db.exogenous().cloned().collect();
    let mut order: Vec<usize> = (0..endo.len()).collect();
    let mut total: i64 = 0;
    let mut count: i64 = 0;
    permute(&mut order, 0, &mut |perm| {
        let mut before: Vec<&Fact> = exo.iter().collect();
        for &i in perm {
            if endo[i] == *f {
                break;
            }
            before.push(&endo[i]);
        }
        let a = eval_boolean(before.iter().copied(), q);
        let b = eval_boolean(before.iter().copied().chain([f]), q);
        total += b as i64 - a as i64;
        count += 1;
    });
    Rational::new(total, count)
}

fn permute(xs: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == xs.len() {
        visit(xs);
        return;
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permute(xs, k + 1, visit);
        xs.swap(k, i);
    }
}

/// [D ⊨ q] − [Dx ⊨ q].
pub fn grand_coalition_gain<Q: Disjuncts + ?Sized>(db: &Database, q: &Q) -> Rational {
    let all = eval_boolean(db.facts(), q) as i64;
    let none = eval_boolean(db.exogenous(), q) as i64;
    Rational::from_integer(all - none)
}

pub fn sum(values: impl IntoIterator<Item = Rational>) -> Rational {
    values.into_iter().sum()
}

pub fn relations_with_polarity(q: &shapfact_core::CQNeg, positive: bool) -> BTreeSet<String> {
    q.atoms.iter().filter(|a| a.is_positive() == positive).map(|a| a.relation.clone()).collect()
}

pub fn factorial(n: u64) -> i128 {
    (1..=n as i128).product()
}
