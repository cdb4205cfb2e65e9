//! Recursion over hierarchical self-join-free queries, shared by counting and
//! probabilistic evaluation. Each algebra supplies the ground case and the two
//! combinators; the decomposition into components and root partitions lives here.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::combin::{binomial, binomial_row, convolve, CountVector};
use crate::error::{Error, Result};
use crate::model::{Atom, CQNeg, Fact};
use crate::rational::Rational;

pub(crate) trait Algebra {
    type Info;
    type Value;

    /// A component whose atoms are all ground; `matched[i]` is the fact equal to atom i, if any.
    fn leaf(&self, atoms: &[Atom], matched: &[Option<&Self::Info>], scope: &[&Self::Info]) -> Self::Value;
    /// Conjunction of variable-disjoint parts over disjoint fact sets.
    fn and(&self, parts: Vec<Self::Value>) -> Self::Value;
    /// Disjunction over the root values, each over its own fact set.
    fn exists(&self, parts: Vec<Self::Value>) -> Self::Value;
    /// Account for facts that no atom of the query can use.
    fn free(&self, value: Self::Value, unused: &[&Self::Info]) -> Self::Value;
}

type Scope<'a, I> = Vec<(&'a Fact, &'a I)>;

pub(crate) fn evaluate<'a, A: Algebra>(
    alg: &A,
    q: &CQNeg,
    facts: impl IntoIterator<Item = (&'a Fact, &'a A::Info)>,
) -> Result<A::Value>
where
    A::Info: 'a,
{
    let by_rel: BTreeMap<&str, &Atom> = q.atoms.iter().map(|a| (a.relation.as_str(), a)).collect();
    let (mut used, mut unused): (Scope<A::Info>, Vec<&A::Info>) = (Vec::new(), Vec::new());
    for (f, info) in facts {
        match by_rel.get(f.relation.as_str()) {
            Some(a) if a.unify(f).is_some() => used.push((f, info)),
            _ => unused.push(info),
        }
    }
    let v = lift(alg, &q.atoms, used)?;
    Ok(alg.free(v, &unused))
}

fn components(atoms: &[Atom]) -> Vec<Vec<usize>> {
    let mut comp: Vec<usize> = (0..atoms.len()).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        if c[i] != i {
            let r = find(c, c[i]);
            c[i] = r;
        }
        c[i]
    }
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            if atoms[i].vars().intersection(&atoms[j].vars()).next().is_some() {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                comp[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..atoms.len() {
        let r = find(&mut comp, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn lift<A: Algebra>(alg: &A, atoms: &[Atom], scope: Scope<A::Info>) -> Result<A::Value> {
    let comps = components(atoms);
    if comps.len() > 1 {
        let mut parts = Vec::with_capacity(comps.len());
        let mut rest = scope;
        for comp in comps {
            let rels: BTreeSet<&str> = comp.iter().map(|&i| atoms[i].relation.as_str()).collect();
            let (mine, others): (Scope<A::Info>, Scope<A::Info>) =
                rest.into_iter().partition(|(f, _)| rels.contains(f.relation.as_str()));
            rest = others;
            let sub: Vec<Atom> = comp.iter().map(|&i| atoms[i].clone()).collect();
            parts.push(lift(alg, &sub, mine)?);
        }
        debug_assert!(rest.is_empty());
        return Ok(alg.and(parts));
    }
    if atoms.iter().all(Atom::is_ground) {
        let empty = Default::default();
        let matched: Vec<Option<&A::Info>> = atoms
            .iter()
            .map(|a| {
                let g = a.ground(&empty).expect("ground atom");
                scope.iter().find(|(f, _)| **f == g).map(|(_, i)| *i)
            })
            .collect();
        let infos: Vec<&A::Info> = scope.iter().map(|(_, i)| *i).collect();
        return Ok(alg.leaf(atoms, &matched, &infos));
    }
    let root = atoms[0]
        .vars()
        .into_iter()
        .find(|v| atoms.iter().all(|a| a.has_var(v)))
        .map(str::to_string)
        .ok_or(Error::InternalNotHierarchical)?;
    let position: BTreeMap<&str, usize> = atoms
        .iter()
        .map(|a| (a.relation.as_str(), a.terms.iter().position(|t| t.as_var() == Some(&root)).unwrap()))
        .collect();
    let mut groups: BTreeMap<&str, Scope<A::Info>> = BTreeMap::new();
    for (f, info) in scope {
        let value = f.args[position[f.relation.as_str()]].as_str();
        groups.entry(value).or_default().push((f, info));
    }
    let mut parts = Vec::with_capacity(groups.len());
    for (value, group) in groups {
        let sub: Vec<Atom> = atoms.iter().map(|a| a.substitute(&root, value)).collect();
        parts.push(lift(alg, &sub, group)?);
    }
    Ok(alg.exists(parts))
}

/// Counting algebra: value is (Sat counts by subset size, endogenous facts in scope).
pub(crate) struct Counting;

impl Algebra for Counting {
    type Info = bool;
    type Value = (CountVector, usize);

    fn leaf(&self, atoms: &[Atom], matched: &[Option<&bool>], scope: &[&bool]) -> Self::Value {
        let m = scope.iter().filter(|e| ***e).count();
        let zero = (vec![BigUint::zero(); m + 1], m);
        let (mut forced_in, mut forced_out) = (0, 0);
        for (a, info) in atoms.iter().zip(matched) {
            match (a.is_positive(), info) {
                (true, None) => return zero,
                (true, Some(true)) => forced_in += 1,
                (false, Some(false)) => return zero,
                (false, Some(true)) => forced_out += 1,
                _ => {}
            }
        }
        let choosable = m - forced_in - forced_out;
        let counts = (0..=m).map(|k| if k < forced_in { BigUint::zero() } else { binomial(choosable, k - forced_in) });
        (counts.collect(), m)
    }

    fn and(&self, parts: Vec<Self::Value>) -> Self::Value {
        parts.into_iter().fold((vec![BigUint::from(1u32)], 0), |(c, m), (d, n)| (convolve(&c, &d), m + n))
    }

    fn exists(&self, parts: Vec<Self::Value>) -> Self::Value {
        let mut unsat = vec![BigUint::from(1u32)];
        let mut total = 0;
        for (sat, m) in parts {
            let row = binomial_row(m);
            let u: CountVector = row.iter().zip(&sat).map(|(r, s)| r - s).collect();
            unsat = convolve(&unsat, &u);
            total += m;
        }
        let counts = binomial_row(total).iter().zip(&unsat).map(|(r, u)| r - u).collect();
        (counts, total)
    }

    fn free(&self, (counts, m): Self::Value, unused: &[&bool]) -> Self::Value {
        let e = unused.iter().filter(|x| ***x).count();
        (convolve(&counts, &binomial_row(e)), m + e)
    }
}

/// Probability algebra over tuple-independent facts; the info is the presence probability.
pub(crate) struct Probability;

impl Algebra for Probability {
    type Info = Rational;
    type Value = Rational;

    fn leaf(&self, atoms: &[Atom], matched: &[Option<&Rational>], _scope: &[&Rational]) -> Rational {
        let mut p = Rational::one();
        for (a, info) in atoms.iter().zip(matched) {
            p = match (a.is_positive(), info) {
                (true, None) => return Rational::zero(),
                (true, Some(x)) => p * (*x).clone(),
                (false, None) => p,
                (false, Some(x)) => p * (Rational::one() - (*x).clone()),
            };
        }
        p
    }

    fn and(&self, parts: Vec<Rational>) -> Rational {
        parts.into_iter().product()
    }

    fn exists(&self, parts: Vec<Rational>) -> Rational {
        Rational::one() - parts.into_iter().map(|p| Rational::one() - p).product::<Rational>()
    }

    fn free(&self, value: Rational, _unused: &[&Rational]) -> Rational {
        value
    }
}
