//! Seeded generators of small random instances for oracle comparisons.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Atom, CQNeg, Database, Fact, FactInfo, Polarity, Provenance, Schema, Term};
use crate::rational::Rational;
use crate::structure::{has_non_hierarchical_path, is_hierarchical, is_self_join_free};

/// Relation names and arities drawn from.
const RELATIONS: [(&str, usize); 6] = [("A", 1), ("B", 2), ("C", 1), ("D", 2), ("E", 2), ("F", 1)];
const VARS: [&str; 4] = ["x", "y", "z", "w"];
const DOMAIN: [&str; 3] = ["0", "1", "2"];

#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub db: Database,
    pub query: CQNeg,
    pub exogenous: BTreeSet<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct QueryOptions {
    pub max_atoms: usize,
    pub negation: f64,
    pub constants: f64,
    pub self_joins: bool,
    /// Every relation keeps one polarity throughout.
    pub consistent: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions { max_atoms: 4, negation: 0.3, constants: 0.1, self_joins: false, consistent: false }
    }
}

fn term<R: Rng + ?Sized>(rng: &mut R, opts: &QueryOptions) -> Term {
    if rng.gen_bool(opts.constants) {
        Term::constant(DOMAIN.choose(rng).unwrap())
    } else {
        Term::var(VARS.choose(rng).unwrap())
    }
}

/// A safe query built from the fixed relation pool.
pub fn random_query<R: Rng + ?Sized>(rng: &mut R, opts: &QueryOptions) -> CQNeg {
    loop {
        let n = rng.gen_range(1..=opts.max_atoms);
        let neg_rel: Vec<bool> = RELATIONS.iter().map(|_| rng.gen_bool(opts.negation)).collect();
        let mut pool: Vec<usize> = (0..RELATIONS.len()).collect();
        pool.shuffle(rng);
        let mut atoms = Vec::with_capacity(n);
        for k in 0..n {
            let r = if opts.self_joins { rng.gen_range(0..RELATIONS.len()) } else { pool[k % pool.len()] };
            let (name, arity) = RELATIONS[r];
            let negative = if opts.consistent { neg_rel[r] } else { rng.gen_bool(opts.negation) };
            let polarity = if negative { Polarity::Negative } else { Polarity::Positive };
            atoms.push(Atom::new(name, (0..arity).map(|_| term(rng, opts)).collect(), polarity));
        }
        let q = CQNeg::new(atoms);
        if q.is_safe() && q.positive().next().is_some() && (opts.self_joins || is_self_join_free(&q)) {
            return q;
        }
    }
}

/// Facts over the query's relations plus one unrelated relation; at most `max_endo` endogenous.
pub fn random_database<R: Rng + ?Sized>(rng: &mut R, q: &CQNeg, exogenous: &BTreeSet<String>, max_endo: usize) -> Database {
    let used: BTreeSet<&str> = q.relations();
    let mut schema = Schema::new().with("Z", 1, false);
    for (name, arity) in RELATIONS.iter().filter(|(n, _)| used.contains(n)) {
        schema = schema.with(name, *arity, exogenous.contains(*name));
    }
    let mut chosen = Vec::new();
    for rel in schema.relations() {
        let density = rng.gen_range(0.15..0.5);
        let mut tuples = vec![Vec::new()];
        for _ in 0..rel.arity {
            tuples = tuples
                .into_iter()
                .flat_map(|t: Vec<&str>| DOMAIN.iter().map(move |c| [t.clone(), vec![*c]].concat()))
                .collect();
        }
        for t in tuples {
            if rng.gen_bool(density) {
                chosen.push((Fact::new(rel.name.clone(), t), rel.exogenous_only));
            }
        }
    }
    chosen.shuffle(rng);
    let mut db = Database::new(schema);
    let mut endo = 0;
    for (f, exo_only) in chosen {
        let is_endo = !exo_only && endo < max_endo && rng.gen_bool(0.8);
        endo += is_endo as usize;
        db.insert(f, if is_endo { FactInfo::endogenous() } else { FactInfo::exogenous() });
    }
    db
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, opts: &QueryOptions, max_endo: usize) -> RandomInstance {
    let query = random_query(rng, opts);
    let db = random_database(rng, &query, &BTreeSet::new(), max_endo);
    RandomInstance { db, query, exogenous: BTreeSet::new() }
}

/// Hierarchical, self-join-free and safe.
pub fn random_hierarchical<R: Rng + ?Sized>(rng: &mut R, max_endo: usize) -> RandomInstance {
    loop {
        let q = random_query(rng, &QueryOptions::default());
        if is_hierarchical(&q) {
            let db = random_database(rng, &q, &BTreeSet::new(), max_endo);
            return RandomInstance { db, query: q, exogenous: BTreeSet::new() };
        }
    }
}

/// Some exogenous relations in the query and no non-hierarchical path; half of
/// the draws insist on a non-hierarchical query so the rewrite has work to do.
pub fn random_exo<R: Rng + ?Sized>(rng: &mut R, max_endo: usize) -> RandomInstance {
    let want_hard = rng.gen_bool(0.5);
    let opts = QueryOptions { max_atoms: 5, ..Default::default() };
    loop {
        let q = random_query(rng, &opts);
        let rels: Vec<&str> = q.relations().into_iter().collect();
        let x: BTreeSet<String> = rels.iter().filter(|_| rng.gen_bool(0.5)).map(|s| s.to_string()).collect();
        if x.is_empty() || x.len() == rels.len() || (want_hard && is_hierarchical(&q)) {
            continue;
        }
        if has_non_hierarchical_path(&q, &x).is_none() {
            let db = random_database(rng, &q, &x, max_endo);
            return RandomInstance { db, query: q, exogenous: x };
        }
    }
}

/// Polarity-consistent, possibly with self-joins.
pub fn random_polarity_consistent<R: Rng + ?Sized>(rng: &mut R, max_endo: usize) -> RandomInstance {
    let opts = QueryOptions { self_joins: rng.gen_bool(0.5), consistent: true, ..Default::default() };
    random_instance(rng, &opts, max_endo)
}

/// Probabilities for a fraction of the facts; at most `max_uncertain` facts strictly inside (0,1).
pub fn with_probabilities<R: Rng + ?Sized>(rng: &mut R, db: &Database, max_uncertain: usize) -> Database {
    const PROBS: [(i64, i64); 7] = [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (1, 5), (0, 1)];
    let mut out = Database::new(db.schema().clone());
    let mut uncertain = 0;
    for (f, info) in db.iter() {
        let exo_rel = db.schema().get(&f.relation).is_some_and(|r| r.exogenous_only);
        if info.provenance == Provenance::Exogenous || exo_rel || uncertain >= max_uncertain {
            out.insert(f.clone(), FactInfo::exogenous());
            continue;
        }
        let (n, d) = *PROBS.choose(rng).unwrap();
        uncertain += (n != 0) as usize;
        out.insert(f.clone(), FactInfo::probabilistic(Rational::new(n, d)));
    }
    out
}
