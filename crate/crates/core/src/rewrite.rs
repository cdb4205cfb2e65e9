//! Rewriting away exogenous relations so that the exact engine applies.
//!
//! Three passes: negated exogenous atoms become positive atoms over the
//! complement, each component of exogenous atoms is joined into one atom, and
//! each joined atom is projected and padded to the variables of a non-exogenous
//! atom that contains it.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::Instance;
use crate::exact::shapley_exact;
use crate::model::{Atom, Binding, CQNeg, Database, Fact, FactInfo, Polarity, RelationSym, Term, RESERVED_PREFIX};
use crate::rational::Rational;
use crate::structure::{
    exogenous_atom_components, exogenous_vars, has_non_hierarchical_path, is_hierarchical, self_join_relation,
};

pub const DEFAULT_BLOWUP_CAP: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepKind {
    ComplementNegatedExo,
    JoinComponent,
    PadToContainingAtom,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub kind: StepKind,
    pub consumed: Vec<Atom>,
    pub produced: Atom,
    pub sizes_before: Vec<usize>,
    pub size_after: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RewriteTrace {
    pub domain: BTreeSet<String>,
    pub exogenous: BTreeSet<String>,
    pub steps: Vec<RewriteStep>,
}

impl Serialize for RewriteStep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RewriteStep", 5)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("consumed", &self.consumed.iter().map(|a| a.to_string()).collect::<Vec<_>>())?;
        st.serialize_field("produced", &self.produced.to_string())?;
        st.serialize_field("sizes_before", &self.sizes_before)?;
        st.serialize_field("size_after", &self.size_after)?;
        st.end()
    }
}

impl Serialize for RewriteTrace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RewriteTrace", 2)?;
        st.serialize_field("domain_size", &self.domain.len())?;
        st.serialize_field("steps", &self.steps)?;
        st.end()
    }
}

/// Tuple budget for materialized relations.
#[derive(Clone, Copy, Debug)]
pub struct Rewriter {
    pub cap: u128,
}

impl Default for Rewriter {
    fn default() -> Self {
        Rewriter { cap: DEFAULT_BLOWUP_CAP }
    }
}

fn check_size(relation: &str, tuples: u128, cap: u128) -> Result<()> {
    if tuples > cap {
        return Err(Error::BlowupExceeded { relation: relation.to_string(), tuples, cap });
    }
    Ok(())
}

fn domain_power(domain: usize, arity: usize) -> u128 {
    (domain as u128).checked_pow(arity as u32).unwrap_or(u128::MAX)
}

/// Every tuple of `domain^arity` in lexicographic order.
fn all_tuples(domain: &[&str], arity: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                domain.iter().map(move |c| {
                    let mut t = t.clone();
                    t.push(c.to_string());
                    t
                })
            })
            .collect();
    }
    out
}

/// Tuples of `domain^arity` for `rel` that are not among its facts.
pub fn complement_relation(
    rel: &RelationSym,
    facts: &BTreeSet<Fact>,
    domain: &BTreeSet<String>,
    cap: u128,
) -> Result<BTreeSet<Fact>> {
    check_size(&rel.name, domain_power(domain.len(), rel.arity), cap)?;
    let dom: Vec<&str> = domain.iter().map(String::as_str).collect();
    Ok(all_tuples(&dom, rel.arity)
        .into_iter()
        .map(|args| Fact::new(rel.name.clone(), args))
        .filter(|f| !facts.contains(f))
        .collect())
}

/// Bindings of `vars` under every match of the positive `atoms` in the database.
fn join(db: &Database, atoms: &[Atom], vars: &[String], relation: &str, cap: u128) -> Result<BTreeSet<Vec<String>>> {
    let rels: BTreeSet<&str> = atoms.iter().map(|a| a.relation.as_str()).collect();
    let inst = Instance::new(db.iter().filter(|(f, _)| rels.contains(f.relation.as_str())).map(|(f, _)| (f, false)));
    let compiled = inst.compile(&CQNeg::new(atoms.to_vec()));
    let world = vec![true; inst.len()];
    let mut out = BTreeSet::new();
    let mut overflow = false;
    compiled.for_each_match(&inst, &world, None, &mut |m| {
        let b = inst.binding(&compiled, m.values);
        out.insert(vars.iter().map(|v| b[v].clone()).collect::<Vec<_>>());
        overflow = out.len() as u128 > cap;
        overflow
    });
    if overflow {
        check_size(relation, out.len() as u128, cap)?;
    }
    Ok(out)
}

fn var_atom(relation: &str, vars: &[String]) -> Atom {
    Atom::new(relation, vars.iter().map(|v| Term::var(v)).collect(), Polarity::Positive)
}

fn install(db: &mut Database, relation: &str, arity: usize, tuples: impl IntoIterator<Item = Vec<String>>) -> usize {
    db.schema_mut().declare(RelationSym::new(relation, arity, true));
    let mut n = 0;
    for t in tuples {
        n += db.insert(Fact::new(relation, t), FactInfo::exogenous()) as usize;
    }
    n
}

fn replace_atoms(q: &CQNeg, consumed: &[Atom], produced: &Atom) -> CQNeg {
    let mut atoms = Vec::with_capacity(q.atoms.len());
    let mut placed = false;
    for a in &q.atoms {
        if consumed.contains(a) {
            if !placed {
                atoms.push(produced.clone());
                placed = true;
            }
        } else {
            atoms.push(a.clone());
        }
    }
    CQNeg::new(atoms)
}

impl Rewriter {
    pub fn new(cap: u128) -> Self {
        Rewriter { cap }
    }

    /// Apply one recorded step; consumed relations are dropped from the database.
    pub fn apply(&self, db: &Database, q: &CQNeg, step: &RewriteStep, domain: &BTreeSet<String>) -> Result<(Database, CQNeg)> {
        let mut out = db.clone();
        let name = step.produced.relation.as_str();
        match step.kind {
            StepKind::ComplementNegatedExo => {
                let source = &step.consumed[0];
                let sym = db.schema().get(&source.relation).cloned().unwrap_or_else(|| {
                    RelationSym::new(source.relation.clone(), source.terms.len(), true)
                });
                let facts: BTreeSet<Fact> = db.relation(&source.relation).map(|(f, _)| f.clone()).collect();
                let co = complement_relation(&sym, &facts, domain, self.cap)?;
                install(&mut out, name, sym.arity, co.into_iter().map(|f| f.args));
            }
            StepKind::JoinComponent => {
                let vars: Vec<String> = step.produced.terms.iter().filter_map(|t| t.as_var().map(String::from)).collect();
                let tuples = join(db, &step.consumed, &vars, name, self.cap)?;
                install(&mut out, name, vars.len(), tuples);
            }
            StepKind::PadToContainingAtom => {
                let source = &step.consumed[0];
                let target: Vec<String> = step.produced.terms.iter().filter_map(|t| t.as_var().map(String::from)).collect();
                let kept: Vec<String> = target.iter().filter(|v| source.has_var(v)).cloned().collect();
                let projected = join(db, std::slice::from_ref(source), &kept, name, self.cap)?;
                let extra: Vec<&String> = target.iter().filter(|v| !source.has_var(v)).collect();
                let total = (projected.len() as u128).saturating_mul(domain_power(domain.len(), extra.len()));
                check_size(name, total, self.cap)?;
                let dom: Vec<&str> = domain.iter().map(String::as_str).collect();
                let fills = all_tuples(&dom, extra.len());
                let mut tuples = Vec::new();
                for p in &projected {
                    let known: Binding = kept.iter().cloned().zip(p.iter().cloned()).collect();
                    for fill in &fills {
                        let mut b = known.clone();
                        b.extend(extra.iter().map(|v| v.to_string()).zip(fill.iter().cloned()));
                        tuples.push(target.iter().map(|v| b[v].clone()).collect::<Vec<_>>());
                    }
                }
                install(&mut out, name, target.len(), tuples);
            }
        }
        let next = replace_atoms(q, &step.consumed, &step.produced);
        for a in &step.consumed {
            if !next.atoms.iter().any(|b| b.relation == a.relation) {
                out.remove_relation(&a.relation);
            }
        }
        Ok((out, next))
    }

    fn record(&self, db: &Database, step: &mut RewriteStep, result: &Database) {
        step.sizes_before = step.consumed.iter().map(|a| db.relation_len(&a.relation)).collect();
        step.size_after = result.relation_len(&step.produced.relation);
    }

    /// Hierarchical instance with the same Shapley value for every endogenous fact.
    pub fn rewrite(&self, db: &Database, q: &CQNeg, exogenous: &BTreeSet<String>) -> Result<(Database, CQNeg, RewriteTrace)> {
        if let Some(var) = q.unsafe_vars().into_iter().next() {
            return Err(Error::Unsafe { var });
        }
        if let Some(rel) = self_join_relation(q) {
            return Err(Error::SelfJoin(rel));
        }
        if let Some(p) = has_non_hierarchical_path(q, exogenous) {
            return Err(Error::HasNonHierPath(Box::new(p)));
        }
        for rel in exogenous {
            if let Some((f, _)) = db.relation(rel).find(|(_, i)| i.provenance == crate::model::Provenance::Endogenous) {
                return Err(Error::EndogenousInExogenous { relation: rel.clone(), fact: f.clone() });
            }
        }
        let domain: BTreeSet<String> = db.constants().into_iter().chain(q.constants()).collect();
        let mut trace = RewriteTrace { domain: domain.clone(), exogenous: exogenous.clone(), steps: Vec::new() };
        let mut x = exogenous.clone();
        let (mut db, mut q) = (db.clone(), q.clone());
        let mut push = |this: &Self, db: &mut Database, q: &mut CQNeg, mut step: RewriteStep| -> Result<()> {
            let (d2, q2) = this.apply(db, q, &step, &domain)?;
            this.record(db, &mut step, &d2);
            trace.steps.push(step);
            (*db, *q) = (d2, q2);
            Ok(())
        };

        let negated: Vec<Atom> = q.negative().filter(|a| x.contains(&a.relation)).cloned().collect();
        for a in negated {
            let name = format!("{RESERVED_PREFIX}co_{}", a.relation);
            let produced = Atom::new(&name, a.terms.clone(), Polarity::Positive);
            x.insert(name);
            let step = RewriteStep { kind: StepKind::ComplementNegatedExo, consumed: vec![a], produced, sizes_before: vec![], size_after: 0 };
            push(self, &mut db, &mut q, step)?;
        }

        let mut joined = Vec::new();
        let components: Vec<Vec<Atom>> = exogenous_atom_components(&q, &x)
            .into_iter()
            .map(|comp| comp.iter().map(|&k| q.atoms[k].clone()).collect())
            .collect();
        for (i, consumed) in components.into_iter().enumerate() {
            let mut vars: Vec<String> = Vec::new();
            for v in consumed.iter().flat_map(Atom::var_list) {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            let name = format!("{RESERVED_PREFIX}join_{i}");
            let produced = var_atom(&name, &vars);
            joined.push(produced.clone());
            let step = RewriteStep { kind: StepKind::JoinComponent, consumed, produced, sizes_before: vec![], size_after: 0 };
            push(self, &mut db, &mut q, step)?;
        }
        x.extend(joined.iter().map(|a| a.relation.clone()));

        let exo_vars = exogenous_vars(&q, &x);
        for (i, alpha) in joined.into_iter().enumerate() {
            let kept: Vec<String> = alpha.var_list().into_iter().filter(|v| !exo_vars.contains(v)).collect();
            let target = if kept.is_empty() {
                Vec::new()
            } else {
                let beta = q
                    .atoms
                    .iter()
                    .find(|b| !x.contains(&b.relation) && kept.iter().all(|v| b.has_var(v)))
                    .ok_or(Error::InternalNotHierarchical)?;
                beta.var_list()
            };
            let name = format!("{RESERVED_PREFIX}pad_{i}");
            let produced = var_atom(&name, &target);
            let step = RewriteStep { kind: StepKind::PadToContainingAtom, consumed: vec![alpha], produced, sizes_before: vec![], size_after: 0 };
            push(self, &mut db, &mut q, step)?;
        }

        if !is_hierarchical(&q) {
            return Err(Error::InternalNotHierarchical);
        }
        Ok((db, q, trace))
    }
}

impl RewriteTrace {
    /// Re-run the recorded steps on the original input.
    pub fn replay(&self, db: &Database, q: &CQNeg, rewriter: &Rewriter) -> Result<(Database, CQNeg)> {
        Ok(self.stages(db, q, rewriter)?.pop().unwrap_or_else(|| (db.clone(), q.clone())))
    }

    /// The instance after each step, in order.
    pub fn stages(&self, db: &Database, q: &CQNeg, rewriter: &Rewriter) -> Result<Vec<(Database, CQNeg)>> {
        let mut out = Vec::with_capacity(self.steps.len());
        let (mut d, mut c) = (db.clone(), q.clone());
        for step in &self.steps {
            (d, c) = rewriter.apply(&d, &c, step, &self.domain)?;
            out.push((d.clone(), c.clone()));
        }
        Ok(out)
    }
}

pub fn rewrite(db: &Database, q: &CQNeg, exogenous: &BTreeSet<String>) -> Result<(Database, CQNeg, RewriteTrace)> {
    Rewriter::default().rewrite(db, q, exogenous)
}

pub fn shapley_exo(db: &Database, q: &CQNeg, exogenous: &BTreeSet<String>, f: &Fact) -> Result<Rational> {
    if !db.is_endogenous(f) {
        return Err(Error::FactNotEndogenous(f.clone()));
    }
    let (d, q, _) = rewrite(db, q, exogenous)?;
    shapley_exact(&d, &q, f)
}

/// Values of all endogenous facts, sharing one rewrite.
pub fn shapley_exo_all(db: &Database, q: &CQNeg, exogenous: &BTreeSet<String>) -> Result<(Vec<(Fact, Rational)>, RewriteTrace)> {
    let (d, q, trace) = rewrite(db, q, exogenous)?;
    let values = crate::exact::shapley_exact_all(&d, &q)?;
    Ok((values, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Brute;
    use crate::fixtures::{self, exo_set, running_fact};
    use crate::model::{Provenance, Schema};

    #[test]
    fn complement() {
        let rel = RelationSym::new("R", 1, true);
        let dom: BTreeSet<String> = ["a", "b", "c"].map(String::from).into();
        let facts = BTreeSet::from([Fact::new("R", ["a"])]);
        let co = complement_relation(&rel, &facts, &dom, 100).unwrap();
        assert_eq!(co, BTreeSet::from([Fact::new("R", ["b"]), Fact::new("R", ["c"])]));
        let rel2 = RelationSym::new("E", 2, true);
        assert_eq!(complement_relation(&rel2, &BTreeSet::new(), &dom, 100).unwrap().len(), 9);
        let full: BTreeSet<Fact> = complement_relation(&rel2, &BTreeSet::new(), &dom, 100).unwrap();
        assert!(complement_relation(&rel2, &full, &dom, 100).unwrap().is_empty());
        assert!(matches!(complement_relation(&rel2, &full, &dom, 8), Err(Error::BlowupExceeded { .. })));
    }

    #[test]
    fn q2_matches_oracle() {
        let db = fixtures::running_db_exo();
        let q2 = fixtures::q2();
        let x = exo_set(&["Stud", "Course"]);
        let (d, q, trace) = rewrite(&db, &q2, &x).unwrap();
        assert!(is_hierarchical(&q));
        assert_eq!(d.endogenous().collect::<Vec<_>>(), db.endogenous().collect::<Vec<_>>());
        assert_eq!(trace.replay(&db, &q2, &Rewriter::default()).unwrap(), (d, q));
        let brute = Brute::default();
        for name in fixtures::RUNNING_NAMES {
            let f = running_fact(name);
            assert_eq!(shapley_exo(&db, &q2, &x, &f).unwrap(), brute.shapley(&db, &q2, &f).unwrap(), "{name}");
        }
    }

    #[test]
    fn identity_without_exogenous_atoms() {
        let db = fixtures::running_db();
        let (_, q, trace) = rewrite(&db, &fixtures::q1(), &BTreeSet::new()).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(q, fixtures::q1());
        assert_eq!(shapley_exo(&db, &q, &BTreeSet::new(), &running_fact("ft2")).unwrap(), Rational::new(-2, 35));
    }

    #[test]
    fn refusals() {
        let db = fixtures::running_db_exo();
        let stud = Fact::new("Stud", ["Adam"]);
        assert!(matches!(shapley_exo(&db, &fixtures::q2(), &exo_set(&["Stud", "Course"]), &stud), Err(Error::FactNotEndogenous(_))));
        let q = fixtures::exo_path_q();
        let db = Database::new(Schema::new());
        assert!(matches!(rewrite(&db, &q, &exo_set(&["S", "P"])), Err(Error::HasNonHierPath(_))));
        let db = fixtures::running_db();
        assert!(matches!(
            rewrite(&db, &fixtures::q2(), &exo_set(&["TA"])),
            Err(Error::EndogenousInExogenous { .. }) | Err(Error::HasNonHierPath(_))
        ));
    }

    #[test]
    fn join_then_pad() {
        let schema = Schema::new().with("Author", 2, false).with("Pub", 2, true).with("Citations", 2, true);
        let db = Database::new(schema)
            .with(Fact::new("Author", ["A1", "X"]), Provenance::Endogenous)
            .with(Fact::new("Author", ["A2", "Y"]), Provenance::Endogenous)
            .with(Fact::new("Pub", ["A1", "P1"]), Provenance::Exogenous)
            .with(Fact::new("Citations", ["P1", "5"]), Provenance::Exogenous);
        let q = fixtures::citations_q();
        let x = exo_set(&["Pub", "Citations"]);
        let (_, out, trace) = rewrite(&db, &q, &x).unwrap();
        let kinds: Vec<StepKind> = trace.steps.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![StepKind::JoinComponent, StepKind::PadToContainingAtom]);
        assert!(is_hierarchical(&out));
        for f in db.endogenous() {
            assert_eq!(shapley_exo(&db, &q, &x, f).unwrap(), Brute::default().shapley(&db, &q, f).unwrap());
        }
    }
}
