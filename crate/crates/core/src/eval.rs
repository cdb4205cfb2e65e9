//! Ground-truth semantics: Boolean evaluation and exponential brute-force oracles.

use std::collections::{BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::combin::{shapley_from_diffs, CountVector};
use crate::error::{Error, Result};
use crate::model::{Binding, CQNeg, Database, Disjuncts, Fact, Provenance, Schema, Term};
use crate::parse::print_schema;
use crate::rational::Rational;
use crate::relevance::{Flip, RelevanceResult, RelevanceWitness};

pub const DEFAULT_CAP: usize = 20;
const UNBOUND: u32 = u32::MAX;

/// Interned view of a fact set for repeated evaluation over sub-worlds.
pub(crate) struct Instance {
    pub facts: Vec<Fact>,
    pub endogenous: Vec<bool>,
    consts: HashMap<String, u32>,
    const_names: Vec<String>,
    rels: HashMap<String, u32>,
    args: Vec<Vec<u32>>,
    lookup: HashMap<(u32, Vec<u32>), usize>,
    by_rel: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
enum CTerm {
    Var(usize),
    /// None when the constant occurs in no fact.
    Const(Option<u32>),
}

#[derive(Clone, Debug)]
struct CAtom {
    rel: Option<u32>,
    terms: Vec<CTerm>,
}

/// A conjunctive query compiled against one instance.
pub(crate) struct CompiledCq {
    var_names: Vec<String>,
    /// Positive atoms in join order, with their source index among positives.
    pos: Vec<(usize, CAtom)>,
    neg: Vec<CAtom>,
    /// Some positive atom can never match.
    dead: bool,
}

impl Instance {
    pub fn new<'a>(facts: impl IntoIterator<Item = (&'a Fact, bool)>) -> Self {
        let mut inst = Instance {
            facts: Vec::new(),
            endogenous: Vec::new(),
            consts: HashMap::new(),
            const_names: Vec::new(),
            rels: HashMap::new(),
            args: Vec::new(),
            lookup: HashMap::new(),
            by_rel: Vec::new(),
        };
        for (f, endo) in facts {
            let rel = inst.rels.len() as u32;
            let rel = *inst.rels.entry(f.relation.clone()).or_insert(rel);
            if rel as usize == inst.by_rel.len() {
                inst.by_rel.push(Vec::new());
            }
            let args: Vec<u32> = f
                .args
                .iter()
                .map(|a| {
                    let next = inst.consts.len() as u32;
                    let id = *inst.consts.entry(a.clone()).or_insert(next);
                    if id == next {
                        inst.const_names.push(a.clone());
                    }
                    id
                })
                .collect();
            let id = inst.facts.len();
            if inst.lookup.insert((rel, args.clone()), id).is_some() {
                continue;
            }
            inst.facts.push(f.clone());
            inst.endogenous.push(endo);
            inst.args.push(args);
            inst.by_rel[rel as usize].push(id);
        }
        inst
    }

    pub fn from_db(db: &Database) -> Self {
        Instance::new(db.iter().map(|(f, i)| (f, i.provenance == Provenance::Endogenous)))
    }

    pub fn id(&self, f: &Fact) -> Option<usize> {
        let rel = *self.rels.get(&f.relation)?;
        let args: Option<Vec<u32>> = f.args.iter().map(|a| self.consts.get(a).copied()).collect();
        self.lookup.get(&(rel, args?)).copied()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn endogenous_ids(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.endogenous[i]).collect()
    }

    /// World with exactly the exogenous facts present.
    pub fn exogenous_world(&self) -> Vec<bool> {
        self.endogenous.iter().map(|e| !e).collect()
    }

    fn compile_atom(&self, a: &crate::model::Atom, vars: &mut Vec<String>) -> CAtom {
        let terms = a
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => CTerm::Const(self.consts.get(c).copied()),
                Term::Var(v) => {
                    let i = vars.iter().position(|x| x == v).unwrap_or_else(|| {
                        vars.push(v.clone());
                        vars.len() - 1
                    });
                    CTerm::Var(i)
                }
            })
            .collect();
        CAtom { rel: self.rels.get(&a.relation).copied(), terms }
    }

    pub fn compile(&self, q: &CQNeg) -> CompiledCq {
        let mut vars = Vec::new();
        let mut pos: Vec<(usize, CAtom)> =
            q.positive().enumerate().map(|(i, a)| (i, self.compile_atom(a, &mut vars))).collect();
        let neg: Vec<CAtom> = q.negative().map(|a| self.compile_atom(a, &mut vars)).collect();
        let dead = pos
            .iter()
            .any(|(_, a)| a.rel.is_none() || a.terms.iter().any(|t| matches!(t, CTerm::Const(None))));
        let size = |a: &CAtom| a.rel.map(|r| self.by_rel[r as usize].len()).unwrap_or(0);
        pos.sort_by_key(|(i, a)| (size(a), *i));
        CompiledCq { var_names: vars, pos, neg, dead }
    }

    pub fn compile_all<Q: Disjuncts + ?Sized>(&self, q: &Q) -> Vec<CompiledCq> {
        q.disjuncts().iter().map(|d| self.compile(d)).collect()
    }

    pub fn satisfies(&self, q: &[CompiledCq], world: &[bool]) -> bool {
        q.iter().any(|c| c.satisfied(self, world))
    }

    pub fn binding(&self, c: &CompiledCq, values: &[u32]) -> Binding {
        c.var_names
            .iter()
            .zip(values)
            .filter(|(_, &v)| v != UNBOUND)
            .map(|(n, &v)| (n.clone(), self.const_names[v as usize].clone()))
            .collect()
    }
}

/// Result of a full match of the positive atoms.
pub(crate) struct Match<'a> {
    pub values: &'a [u32],
    /// Fact matched by each positive atom, indexed by source order among positives.
    pub positive_facts: &'a [usize],
}

impl CompiledCq {
    fn unify(&self, inst: &Instance, atom: &CAtom, fact: usize, values: &mut [u32], trail: &mut Vec<usize>) -> bool {
        let mark = trail.len();
        for (t, &a) in atom.terms.iter().zip(&inst.args[fact]) {
            let ok = match *t {
                CTerm::Const(c) => c == Some(a),
                CTerm::Var(v) if values[v] == UNBOUND => {
                    values[v] = a;
                    trail.push(v);
                    true
                }
                CTerm::Var(v) => values[v] == a,
            };
            if !ok {
                for v in trail.drain(mark..) {
                    values[v] = UNBOUND;
                }
                return false;
            }
        }
        true
    }

    /// Fact id of a negative atom under a full binding, if that fact exists.
    pub fn negative_fact(&self, inst: &Instance, i: usize, values: &[u32]) -> Option<usize> {
        let atom = &self.neg[i];
        let rel = atom.rel?;
        let mut key = Vec::with_capacity(atom.terms.len());
        for t in &atom.terms {
            key.push(match *t {
                CTerm::Const(c) => c?,
                CTerm::Var(v) => values[v],
            });
        }
        inst.lookup.get(&(rel, key)).copied()
    }

    pub fn negative_count(&self) -> usize {
        self.neg.len()
    }

    fn negatives_absent(&self, inst: &Instance, world: &[bool], values: &[u32]) -> bool {
        (0..self.neg.len()).all(|i| !matches!(self.negative_fact(inst, i, values), Some(id) if world[id]))
    }

    pub fn satisfied(&self, inst: &Instance, world: &[bool]) -> bool {
        let mut found = false;
        self.for_each_match(inst, world, None, &mut |m| {
            found = self.negatives_absent(inst, world, m.values);
            found
        });
        found
    }

    /// Enumerate matches of the positive atoms into the world; `pin` fixes the
    /// positive atom with that source index to one fact. The visitor returns
    /// true to stop.
    pub fn for_each_match(
        &self,
        inst: &Instance,
        world: &[bool],
        pin: Option<(usize, usize)>,
        visit: &mut dyn FnMut(&Match) -> bool,
    ) {
        if self.dead {
            return;
        }
        let mut values = vec![UNBOUND; self.var_names.len()];
        let mut chosen = vec![usize::MAX; self.pos.len()];
        let mut trail = Vec::new();
        self.search(inst, world, pin, 0, &mut values, &mut chosen, &mut trail, visit);
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        inst: &Instance,
        world: &[bool],
        pin: Option<(usize, usize)>,
        depth: usize,
        values: &mut Vec<u32>,
        chosen: &mut Vec<usize>,
        trail: &mut Vec<usize>,
        visit: &mut dyn FnMut(&Match) -> bool,
    ) -> bool {
        if depth == self.pos.len() {
            return visit(&Match { values, positive_facts: chosen });
        }
        let (src, atom) = &self.pos[depth];
        let rel = atom.rel.expect("live query");
        let pinned;
        let candidates: &[usize] = match pin {
            Some((p, fact)) if p == *src => {
                pinned = [fact];
                &pinned
            }
            _ => &inst.by_rel[rel as usize],
        };
        for &fact in candidates {
            if !world[fact] || inst.args[fact].len() != atom.terms.len() {
                continue;
            }
            let mark = trail.len();
            if !self.unify(inst, atom, fact, values, trail) {
                continue;
            }
            chosen[*src] = fact;
            let stop = self.search(inst, world, pin, depth + 1, values, chosen, trail, visit);
            for v in trail.drain(mark..) {
                values[v] = UNBOUND;
            }
            if stop {
                return true;
            }
        }
        false
    }
}

/// Does the fact set satisfy the query?
pub fn eval_boolean<'a, Q: Disjuncts + ?Sized>(facts: impl IntoIterator<Item = &'a Fact>, q: &Q) -> bool {
    let inst = Instance::new(facts.into_iter().map(|f| (f, false)));
    let world = vec![true; inst.len()];
    inst.satisfies(&inst.compile_all(q), &world)
}

/// Does the whole database (Dx together with Dn) satisfy the query?
pub fn satisfies<Q: Disjuncts + ?Sized>(db: &Database, q: &Q) -> bool {
    eval_boolean(db.facts(), q)
}

/// Satisfaction of Dx ∪ E for every E ⊆ Dn, indexed by bitmask over `endogenous`.
pub struct SatTable {
    pub endogenous: Vec<Fact>,
    sat: Vec<bool>,
}

impl SatTable {
    pub fn n(&self) -> usize {
        self.endogenous.len()
    }

    pub fn sat(&self, mask: usize) -> bool {
        self.sat[mask]
    }

    pub fn bit_of(&self, f: &Fact) -> Option<usize> {
        self.endogenous.iter().position(|e| e == f)
    }

    pub fn subset(&self, mask: usize) -> Vec<Fact> {
        (0..self.n()).filter(|i| mask >> i & 1 == 1).map(|i| self.endogenous[i].clone()).collect()
    }

    pub fn counts(&self) -> CountVector {
        let mut c = vec![BigUint::zero(); self.n() + 1];
        for (mask, &s) in self.sat.iter().enumerate() {
            if s {
                c[mask.count_ones() as usize] += 1u32;
            }
        }
        c
    }

    pub fn shapley_of_bit(&self, bit: usize) -> Rational {
        let n = self.n();
        let b = 1usize << bit;
        let mut diffs = vec![0i64; n];
        for mask in 0..self.sat.len() {
            if mask & b != 0 {
                continue;
            }
            let d = self.sat[mask | b] as i64 - self.sat[mask] as i64;
            diffs[mask.count_ones() as usize] += d;
        }
        let diffs: Vec<BigInt> = diffs.into_iter().map(BigInt::from).collect();
        shapley_from_diffs(n, &diffs)
    }

    pub fn relevance_of_bit(&self, bit: usize) -> RelevanceResult {
        let b = 1usize << bit;
        let mut pos: Option<usize> = None;
        let mut neg: Option<usize> = None;
        for mask in (0..self.sat.len()).filter(|m| m & b == 0) {
            let (before, after) = (self.sat[mask], self.sat[mask | b]);
            if !before && after && pos.is_none() {
                pos = Some(mask);
            }
            if before && !after && neg.is_none() {
                neg = Some(mask);
            }
        }
        let witness = pos
            .map(|m| (m, Flip::FalseToTrue))
            .or(neg.map(|m| (m, Flip::TrueToFalse)))
            .map(|(m, flip)| RelevanceWitness { flip, mapping: None, subset: self.subset(m) });
        RelevanceResult { pos_relevant: pos.is_some(), neg_relevant: neg.is_some(), witness }
    }
}

/// Exponential oracles over all subsets of the endogenous facts.
#[derive(Clone, Copy, Debug)]
pub struct Brute {
    pub cap: usize,
}

impl Default for Brute {
    fn default() -> Self {
        Brute { cap: DEFAULT_CAP }
    }
}

impl Brute {
    pub fn new(cap: usize) -> Self {
        Brute { cap }
    }

    pub fn sat_table<Q: Disjuncts + ?Sized>(&self, db: &Database, q: &Q) -> Result<SatTable> {
        let inst = Instance::from_db(db);
        let endo = inst.endogenous_ids();
        let n = endo.len();
        if n > self.cap || n >= usize::BITS as usize - 1 {
            return Err(Error::CapExceeded { endogenous: n, cap: self.cap });
        }
        let compiled = inst.compile_all(q);
        let total = 1usize << n;
        let workers = if n >= 12 { std::thread::available_parallelism().map(|w| w.get()).unwrap_or(1) } else { 1 };
        let chunk = total.div_ceil(workers);
        let mut sat = vec![false; total];
        let fill = |w: usize, slice: &mut [bool]| {
            let mut world = inst.exogenous_world();
            for (off, out) in slice.iter_mut().enumerate() {
                let mask = w * chunk + off;
                for (i, &id) in endo.iter().enumerate() {
                    world[id] = mask >> i & 1 == 1;
                }
                *out = inst.satisfies(&compiled, &world);
            }
        };
        if workers == 1 {
            fill(0, &mut sat);
        } else {
            std::thread::scope(|s| {
                for (w, slice) in sat.chunks_mut(chunk).enumerate() {
                    s.spawn(move || fill(w, slice));
                }
            });
        }
        let endogenous = endo.iter().map(|&i| inst.facts[i].clone()).collect();
        Ok(SatTable { endogenous, sat })
    }

    pub fn shapley<Q: Disjuncts + ?Sized>(&self, db: &Database, q: &Q, f: &Fact) -> Result<Rational> {
        if !db.is_endogenous(f) {
            return Err(Error::FactNotEndogenous(f.clone()));
        }
        let t = self.sat_table(db, q)?;
        Ok(t.shapley_of_bit(t.bit_of(f).expect("endogenous fact in table")))
    }

    /// Values for every endogenous fact in canonical order.
    pub fn shapley_all<Q: Disjuncts + ?Sized>(&self, db: &Database, q: &Q) -> Result<Vec<(Fact, Rational)>> {
        let t = self.sat_table(db, q)?;
        Ok((0..t.n()).map(|b| (t.endogenous[b].clone(), t.shapley_of_bit(b))).collect())
    }

    pub fn cntsat<Q: Disjuncts + ?Sized>(&self, db: &Database, q: &Q) -> Result<CountVector> {
        Ok(self.sat_table(db, q)?.counts())
    }

    pub fn relevance<Q: Disjuncts + ?Sized>(&self, db: &Database, q: &Q, f: &Fact) -> Result<RelevanceResult> {
        if !db.is_endogenous(f) {
            return Err(Error::FactNotEndogenous(f.clone()));
        }
        let t = self.sat_table(db, q)?;
        Ok(t.relevance_of_bit(t.bit_of(f).expect("endogenous fact in table")))
    }
}

pub fn brute_shapley<Q: Disjuncts + ?Sized>(db: &Database, q: &Q, f: &Fact) -> Result<Rational> {
    Brute::default().shapley(db, q, f)
}

pub fn brute_cntsat<Q: Disjuncts + ?Sized>(db: &Database, q: &Q, k: usize) -> Result<BigUint> {
    Ok(Brute::default().cntsat(db, q)?.get(k).cloned().unwrap_or_default())
}

pub fn brute_relevance<Q: Disjuncts + ?Sized>(db: &Database, q: &Q, f: &Fact) -> Result<RelevanceResult> {
    Brute::default().relevance(db, q, f)
}

/// Instance whose distinguished fact has a positive but tiny Shapley value.
pub struct GapInstance {
    pub db: Database,
    pub query: CQNeg,
    pub fact: Fact,
}

impl GapInstance {
    /// Schema and facts in the file formats, schema lines first.
    pub fn files(&self) -> (String, String, String) {
        (print_schema(self.db.schema()), crate::parse::print_facts(&self.db), format!("{}\n", self.query))
    }
}

pub fn gen_gap_instance(n: usize) -> GapInstance {
    assert!(n >= 1, "gap instances start at n = 1");
    let schema = Schema::new().with("R", 1, false).with("S", 2, true);
    let mut db = Database::new(schema);
    let cx = |i: usize| format!("cx_{i}");
    let cy = |i: usize| format!("cy_{i}");
    for i in 0..=2 * n {
        db.insert(Fact::new("S", [cx(i), cy(i)]), crate::model::FactInfo::exogenous());
    }
    for i in 1..=n {
        db.insert(Fact::new("R", [cx(i)]), crate::model::FactInfo::exogenous());
        db.insert(Fact::new("R", [cy(i)]), crate::model::FactInfo::endogenous());
    }
    for i in std::iter::once(0).chain(n + 1..=2 * n) {
        db.insert(Fact::new("R", [cx(i)]), crate::model::FactInfo::endogenous());
    }
    let query = crate::parse::parse_query("q() :- R(x), S(x,y), not R(y).").unwrap().disjuncts.remove(0);
    GapInstance { db, query, fact: Fact::new("R", [cx(0)]) }
}

/// The facts of Dx ∪ E.
pub fn world_facts<'a>(db: &'a Database, subset: &'a [Fact]) -> BTreeSet<&'a Fact> {
    db.exogenous().chain(subset.iter()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, running_fact};
    use num_traits::One;

    #[test]
    fn running_example_evaluation() {
        let db = fixtures::running_db();
        let q1 = fixtures::q1();
        assert!(!eval_boolean(db.exogenous(), &q1));
        let fr4 = running_fact("fr4");
        assert!(eval_boolean(db.exogenous().chain([&fr4]), &q1));
        assert!(!eval_boolean(std::iter::empty(), &q1));
    }

    #[test]
    fn absent_constant_in_negation_does_not_kill() {
        let db = Database::new(Schema::new().with("R", 1, false)).with(Fact::new("R", ["a"]), Provenance::Exogenous);
        let q = crate::parse::parse_query("q() :- R(x), not S(x, Zed).").unwrap();
        assert!(satisfies(&db, &q));
        let q = crate::parse::parse_query("q() :- R(Zed).").unwrap();
        assert!(!satisfies(&db, &q));
    }

    #[test]
    fn running_example_counts() {
        let db = fixtures::running_db();
        let q1 = fixtures::q1();
        assert_eq!(brute_cntsat(&db, &q1, 1).unwrap(), BigUint::from(5u32));
        assert_eq!(brute_cntsat(&db, &q1, 0).unwrap(), BigUint::zero());
        assert_eq!(brute_cntsat(&db, &q1, 8).unwrap(), BigUint::one());
    }

    #[test]
    fn running_example_values() {
        let db = fixtures::running_db();
        let q1 = fixtures::q1();
        let v = |n: &str| brute_shapley(&db, &q1, &running_fact(n)).unwrap();
        assert_eq!(v("ft1"), Rational::new(-3, 28));
        assert_eq!(v("ft2"), Rational::new(-2, 35));
        assert_eq!(v("ft3"), Rational::zero());
        assert_eq!(v("fr3"), Rational::new(27, 140));
        assert_eq!(v("fr4"), Rational::new(13, 42));
        assert_eq!(v("fr5"), Rational::new(13, 42));
        assert_eq!(v("fr1"), Rational::new(37, 210));
        assert_eq!(v("fr2"), Rational::new(37, 210));
    }

    #[test]
    fn inverse_pair_relevance() {
        let r = brute_relevance(&fixtures::inverse_pair_db(), &fixtures::inverse_pair_q(), &Fact::new("R", ["1", "2"]))
            .unwrap();
        assert!(r.pos_relevant && r.neg_relevant);
        assert_eq!(r.witness.unwrap().subset, Vec::<Fact>::new());
    }

    #[test]
    fn absent_relation_is_irrelevant() {
        let db = fixtures::running_db();
        let q = crate::parse::parse_query("q() :- Stud(x), Reg(x,y).").unwrap();
        let r = brute_relevance(&db, &q, &running_fact("ft1")).unwrap();
        assert!(!r.pos_relevant && !r.neg_relevant);
    }

    #[test]
    fn refusals() {
        let db = fixtures::running_db();
        assert!(matches!(Brute::new(4).cntsat(&db, &fixtures::q1()), Err(Error::CapExceeded { .. })));
        let stud = Fact::new("Stud", ["Adam"]);
        assert!(matches!(brute_shapley(&db, &fixtures::q1(), &stud), Err(Error::FactNotEndogenous(_))));
    }

    #[test]
    fn gap_shape() {
        let g = gen_gap_instance(1);
        assert_eq!(g.db.endogenous_count(), 3);
        assert_eq!(g.db.relation_len("S"), 3);
        assert_eq!(brute_shapley(&g.db, &g.query, &g.fact).unwrap(), Rational::new(1, 6));
    }
}
