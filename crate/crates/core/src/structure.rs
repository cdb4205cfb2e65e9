//! Structural analysis of queries: self-joins, hierarchy, non-hierarchical
//! paths, exogenous components, polarity.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::model::{Atom, CQNeg, Polarity, UCQNeg};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triplet {
    pub x: String,
    pub y: String,
    pub alpha_x: Atom,
    pub alpha_xy: Atom,
    pub alpha_y: Atom,
    /// Source positions of (alpha_x, alpha_xy, alpha_y).
    pub indices: [usize; 3],
}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "triplet ({}, {}, {}) on {} and {}", self.alpha_x, self.alpha_xy, self.alpha_y, self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonHierPath {
    pub alpha_x: Atom,
    pub alpha_y: Atom,
    /// Variables from x to y.
    pub path: Vec<String>,
    pub indices: [usize; 2],
}

impl fmt::Display for NonHierPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "path {} between {} and {}", self.path.join("-"), self.alpha_x, self.alpha_y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Triplet(Triplet),
    Path(NonHierPath),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Triplet(t) => t.fmt(f),
            Witness::Path(p) => p.fmt(f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    PTimeHierarchical,
    PTimeExoRewrite,
    HardNonHierPath,
    HardNonHierarchical,
    UnknownSelfJoin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn is_tractable(&self) -> bool {
        matches!(self.kind, VerdictKind::PTimeHierarchical | VerdictKind::PTimeExoRewrite)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(w) = &self.witness {
            write!(f, " ({w})")?;
        }
        Ok(())
    }
}

/// First relation that occurs in two distinct atoms.
pub fn self_join_relation(q: &CQNeg) -> Option<String> {
    let mut seen = BTreeSet::new();
    q.atoms.iter().find(|a| !seen.insert(a.relation.as_str())).map(|a| a.relation.clone())
}

pub fn is_self_join_free(q: &CQNeg) -> bool {
    self_join_relation(q).is_none()
}

fn triplet_for(q: &CQNeg, x: &str, y: &str) -> Option<Triplet> {
    let ax = q.atoms_with(x);
    let ay = q.atoms_with(y);
    let only_x = ax.difference(&ay).next()?;
    let only_y = ay.difference(&ax).next()?;
    let both = ax.intersection(&ay).next()?;
    Some(Triplet {
        x: x.to_string(),
        y: y.to_string(),
        alpha_x: q.atoms[*only_x].clone(),
        alpha_xy: q.atoms[*both].clone(),
        alpha_y: q.atoms[*only_y].clone(),
        indices: [*only_x, *both, *only_y],
    })
}

pub fn is_hierarchical(q: &CQNeg) -> bool {
    let vars: Vec<&str> = q.vars().into_iter().collect();
    let sets: Vec<BTreeSet<usize>> = vars.iter().map(|v| q.atoms_with(v)).collect();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let (a, b) = (&sets[i], &sets[j]);
            if !(a.is_subset(b) || b.is_subset(a) || a.is_disjoint(b)) {
                return false;
            }
        }
    }
    true
}

/// Variable pairs are tried in lexicographic order, atoms in source order.
pub fn find_non_hierarchical_triplet(q: &CQNeg) -> Option<Triplet> {
    let vars: Vec<&str> = q.vars().into_iter().collect();
    for (i, x) in vars.iter().enumerate() {
        for y in &vars[i + 1..] {
            if let Some(t) = triplet_for(q, x, y) {
                return Some(t);
            }
        }
    }
    None
}

/// Every triplet of the query, for every ordered variable pair.
pub fn non_hierarchical_triplets(q: &CQNeg) -> Vec<Triplet> {
    let mut out = Vec::new();
    for x in q.vars() {
        for y in q.vars() {
            if x == y {
                continue;
            }
            let ax = q.atoms_with(x);
            let ay = q.atoms_with(y);
            for &i in ax.difference(&ay) {
                for &k in ax.intersection(&ay) {
                    for &j in ay.difference(&ax) {
                        out.push(Triplet {
                            x: x.to_string(),
                            y: y.to_string(),
                            alpha_x: q.atoms[i].clone(),
                            alpha_xy: q.atoms[k].clone(),
                            alpha_y: q.atoms[j].clone(),
                            indices: [i, k, j],
                        });
                    }
                }
            }
        }
    }
    out
}

/// Variables as vertices, an edge whenever two variables share an atom.
pub fn gaifman_graph(q: &CQNeg) -> BTreeMap<String, BTreeSet<String>> {
    let mut g: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for a in &q.atoms {
        let vs = a.vars();
        for v in &vs {
            let entry = g.entry(v.to_string()).or_default();
            for w in &vs {
                if v != w {
                    entry.insert(w.to_string());
                }
            }
        }
    }
    g
}

fn bfs(g: &BTreeMap<String, BTreeSet<String>>, from: &str, to: &str, removed: &BTreeSet<&str>) -> Option<Vec<String>> {
    let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to.to_string()];
            let mut cur = to;
            while let Some(p) = parent.get(cur) {
                path.push(p.to_string());
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for w in g.get(v).into_iter().flatten() {
            let w = w.as_str();
            if removed.contains(w) || !seen.insert(w) {
                continue;
            }
            parent.insert(w, v);
            queue.push_back(w);
        }
    }
    None
}

/// Path between atoms `i` and `j` in the sense of the hardness criterion, if any.
pub fn path_induced_by(q: &CQNeg, exogenous: &BTreeSet<String>, i: usize, j: usize) -> Option<NonHierPath> {
    let (ai, aj) = (&q.atoms[i], &q.atoms[j]);
    if i == j || exogenous.contains(&ai.relation) || exogenous.contains(&aj.relation) {
        return None;
    }
    let g = gaifman_graph(q);
    let vi = ai.vars();
    let vj = aj.vars();
    let all: BTreeSet<&str> = vi.union(&vj).copied().collect();
    for x in vi.difference(&vj) {
        for y in vj.difference(&vi) {
            let removed: BTreeSet<&str> = all.iter().copied().filter(|v| v != x && v != y).collect();
            if let Some(path) = bfs(&g, x, y, &removed) {
                return Some(NonHierPath { alpha_x: ai.clone(), alpha_y: aj.clone(), path, indices: [i, j] });
            }
        }
    }
    None
}

/// First non-hierarchical path with respect to the exogenous relations, if any.
pub fn has_non_hierarchical_path(q: &CQNeg, exogenous: &BTreeSet<String>) -> Option<NonHierPath> {
    let n = q.atoms.len();
    for i in 0..n {
        for j in i + 1..n {
            if let Some(p) = path_induced_by(q, exogenous, i, j) {
                return Some(p);
            }
        }
    }
    None
}

/// Variables that occur only in atoms over exogenous relations.
pub fn exogenous_vars(q: &CQNeg, exogenous: &BTreeSet<String>) -> BTreeSet<String> {
    let inside: BTreeSet<&str> =
        q.atoms.iter().filter(|a| exogenous.contains(&a.relation)).flat_map(|a| a.vars()).collect();
    let outside: BTreeSet<&str> =
        q.atoms.iter().filter(|a| !exogenous.contains(&a.relation)).flat_map(|a| a.vars()).collect();
    inside.difference(&outside).map(|v| v.to_string()).collect()
}

/// Connected components of the exogenous atom graph, as sorted atom indices,
/// ordered by their first atom.
pub fn exogenous_atom_components(q: &CQNeg, exogenous: &BTreeSet<String>) -> Vec<Vec<usize>> {
    let exo_vars = exogenous_vars(q, exogenous);
    let exo_atoms: Vec<usize> = (0..q.atoms.len()).filter(|&i| exogenous.contains(&q.atoms[i].relation)).collect();
    let mut comp: BTreeMap<usize, usize> = exo_atoms.iter().map(|&i| (i, i)).collect();
    fn find(comp: &mut BTreeMap<usize, usize>, i: usize) -> usize {
        let p = comp[&i];
        if p == i {
            return i;
        }
        let r = find(comp, p);
        comp.insert(i, r);
        r
    }
    for (k, &i) in exo_atoms.iter().enumerate() {
        for &j in &exo_atoms[k + 1..] {
            let shares = q.atoms[i].vars().iter().any(|v| exo_vars.contains(*v) && q.atoms[j].has_var(v));
            if shares {
                let (ri, rj) = (find(&mut comp, i), find(&mut comp, j));
                comp.insert(ri.max(rj), ri.min(rj));
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in &exo_atoms {
        let r = find(&mut comp, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PolarityUse {
    Positive,
    Negative,
    Mixed,
}

/// Polarity with which each relation occurs across the whole union.
pub fn polarity_map(q: &UCQNeg) -> BTreeMap<String, PolarityUse> {
    let mut m: BTreeMap<String, PolarityUse> = BTreeMap::new();
    for a in q.disjuncts.iter().flat_map(|d| d.atoms.iter()) {
        let p = match a.polarity {
            Polarity::Positive => PolarityUse::Positive,
            Polarity::Negative => PolarityUse::Negative,
        };
        m.entry(a.relation.clone())
            .and_modify(|e| {
                if *e != p {
                    *e = PolarityUse::Mixed;
                }
            })
            .or_insert(p);
    }
    m
}

pub fn mixed_relation(q: &UCQNeg) -> Option<String> {
    polarity_map(q).into_iter().find(|(_, p)| *p == PolarityUse::Mixed).map(|(r, _)| r)
}

pub fn is_polarity_consistent(q: &UCQNeg) -> bool {
    mixed_relation(q).is_none()
}

/// True when positive atoms alone connect all variables.
pub fn is_positively_connected(q: &CQNeg) -> bool {
    let vars: Vec<&str> = q.vars().into_iter().collect();
    let Some(start) = vars.first() else { return true };
    let positive = CQNeg::new(q.positive().cloned().collect());
    let g = gaifman_graph(&positive);
    let mut seen = BTreeSet::from([start.to_string()]);
    let mut stack = vec![start.to_string()];
    while let Some(v) = stack.pop() {
        for w in g.get(&v).into_iter().flatten() {
            if seen.insert(w.clone()) {
                stack.push(w.clone());
            }
        }
    }
    vars.iter().all(|v| seen.contains(*v))
}

pub fn classify(q: &CQNeg, exogenous: &BTreeSet<String>) -> Verdict {
    if !is_self_join_free(q) {
        return Verdict { kind: VerdictKind::UnknownSelfJoin, witness: None };
    }
    let Some(triplet) = find_non_hierarchical_triplet(q) else {
        return Verdict { kind: VerdictKind::PTimeHierarchical, witness: None };
    };
    let relevant_x = q.atoms.iter().any(|a| exogenous.contains(&a.relation));
    if !relevant_x {
        return Verdict { kind: VerdictKind::HardNonHierarchical, witness: Some(Witness::Triplet(triplet)) };
    }
    match has_non_hierarchical_path(q, exogenous) {
        None => Verdict { kind: VerdictKind::PTimeExoRewrite, witness: None },
        Some(p) => Verdict { kind: VerdictKind::HardNonHierPath, witness: Some(Witness::Path(p)) },
    }
}

/// Per-disjunct classification.
pub fn classify_ucq(q: &UCQNeg, exogenous: &BTreeSet<String>) -> Vec<Verdict> {
    q.disjuncts.iter().map(|d| classify(d, exogenous)).collect()
}
