//! Branch-and-bound search for Stabbing Planes refutations with embedded Farkas certificates.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::arith::{half, LinearInequality, Point, Rational};
use crate::formula::{php_var, Charging, Family, Formula, Graph};
use crate::lp::{lp_feasible, Feasibility};
use crate::sp::{leaf_system, Query, SpNode, SpProof};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// `(e_i, 1)` on the lowest-indexed variable not yet fixed on the path.
    VariableOrder,
    /// `(e_i, 1)` on the variable whose witness value is nearest 1/2.
    MostFractional,
    /// Group-sum queries on the first group with a fractional witness sum, then `MostFractional`.
    Hybrid,
    /// Tseitin only: `(e_i, 1)` on the edges of a balanced separator of the
    /// smallest odd-charge component of the unfixed edges. Other families use `MostFractional`.
    Separator,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::VariableOrder => "var",
            Strategy::MostFractional => "frac",
            Strategy::Hybrid => "hybrid",
            Strategy::Separator => "sep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "var" => Some(Strategy::VariableOrder),
            "frac" => Some(Strategy::MostFractional),
            "hybrid" => Some(Strategy::Hybrid),
            "sep" => Some(Strategy::Separator),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of tree nodes (internal and leaves).
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_nodes: 1_000_000, max_depth: 256 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("search limit exceeded; partial tree has {} open nodes", .open)]
    LimitExceeded { partial: Box<SpProof>, open: usize },
    #[error("formula has the 0/1 solution ({})", .0.to_strings().join(", "))]
    FormulaSatisfiable(Point),
}

/// Variable groups used by [`Strategy::Hybrid`].
pub fn variable_groups(formula: &Formula) -> Vec<Vec<usize>> {
    match &formula.family {
        Family::Sphp { n } => vec![(0..*n).collect()],
        Family::Php { pigeons, holes } => {
            let by_hole = (0..*holes).map(|j| (0..*pigeons).map(|i| php_var(*holes, i, j)).collect());
            let by_pigeon = (0..*pigeons).map(|i| (0..*holes).map(|j| php_var(*holes, i, j)).collect());
            by_hole.chain(by_pigeon).collect()
        }
        Family::Tseitin { graph, .. } => (0..graph.num_vertices()).map(|v| graph.incident(v)).collect(),
        Family::Lop { .. } | Family::Custom => Vec::new(),
    }
}

struct Search<'a> {
    formula: &'a Formula,
    strategy: Strategy,
    limits: Limits,
    groups: Vec<Vec<usize>>,
    nodes: AtomicUsize,
}

/// Subtrees above this depth are explored in parallel.
const PARALLEL_DEPTH: usize = 10;

enum Outcome {
    Done(SpNode),
    Satisfiable(Point),
}

/// Lowest unit-query variable not yet fixed by the path.
fn unfixed(n: usize, edges: &[LinearInequality]) -> Option<usize> {
    let mut fixed = vec![false; n];
    for e in edges {
        if e.coeffs.len() == 1 {
            let (&v, _) = e.coeffs.iter().next().expect("one coefficient");
            fixed[v] = true;
        }
    }
    fixed.iter().position(|f| !f)
}

/// 0/1 values pinned by single-variable edges on the path (over the box).
fn fixed_values(n: usize, edges: &[LinearInequality]) -> Vec<Option<u8>> {
    let mut out = vec![None; n];
    for e in edges {
        let g = e.to_ge();
        if let Some((&v, &c)) = g.coeffs.iter().next().filter(|_| g.coeffs.len() == 1) {
            // c x >= b: forces x = 1 when c > 0 and b > 0, x = 0 when c < 0 and b > c
            if c > 0 && g.bound > 0 {
                out[v] = Some(1);
            } else if c < 0 && g.bound > c {
                out[v] = Some(0);
            }
        }
    }
    out
}

/// First edge of a balanced separator of the smallest component (of the graph
/// of unfixed edges) whose boundary parity contradicts its charge.
fn separator_edge(graph: &Graph, charge: &Charging, fixed: &[Option<u8>]) -> Option<usize> {
    let n = graph.num_vertices();
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut i = 0;
        while i < members.len() {
            let u = members[i];
            i += 1;
            for (w, e) in graph.neighbors(u) {
                if fixed[e].is_none() && comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                }
            }
        }
        comps.push(members);
    }
    let mut parity = vec![0u8; comps.len()];
    for v in 0..n {
        parity[comp[v]] ^= charge.get(v);
    }
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        if let Some(x) = fixed[e] {
            parity[comp[u]] ^= x;
            parity[comp[v]] ^= x;
        }
    }
    let odd = (0..comps.len()).filter(|&c| parity[c] == 1 && comps[c].len() > 1).min_by_key(|&c| (comps[c].len(), c))?;
    let members = &comps[odd];
    let inside: Vec<bool> = (0..n).map(|v| comp[v] == odd).collect();
    let free_in = |e: usize| {
        let (u, v) = graph.edges()[e];
        fixed[e].is_none() && inside[u] && inside[v]
    };
    let side = balanced_side(graph, members);
    (0..graph.edges().len()).find(|&e| {
        let (u, v) = graph.edges()[e];
        free_in(e) && side[u] != side[v]
    })
}

/// Splits `members` into two parts, returning a side flag per vertex.
/// Grids use the cheapest axis-parallel cut leaving a third on each side;
/// other graphs split a breadth-first order in half.
fn balanced_side(graph: &Graph, members: &[usize]) -> Vec<bool> {
    let n = graph.num_vertices();
    let mut side = vec![false; n];
    if let Some(w) = graph.grid_side() {
        let k = members.len();
        let mut best: Option<((usize, usize), usize, usize)> = None;
        for axis in 0..2 {
            let coord = |v: usize| if axis == 0 { v % w } else { v / w };
            for c in 0..w.saturating_sub(1) {
                let left = members.iter().filter(|&&v| coord(v) <= c).count();
                if 3 * left < k || 3 * (k - left) < k {
                    continue;
                }
                let cut = graph
                    .edges()
                    .iter()
                    .filter(|&&(u, v)| {
                        members.contains(&u) && members.contains(&v) && (coord(u) <= c) != (coord(v) <= c)
                    })
                    .count();
                let key = (cut, left.abs_diff(k - left));
                if best.is_none_or(|(b, _, _)| key < b) {
                    best = Some((key, axis, c));
                }
            }
        }
        if let Some((_, axis, c)) = best {
            for &v in members {
                side[v] = if axis == 0 { v % w <= c } else { v / w <= c };
            }
            return side;
        }
    }
    let mut order = vec![members[0]];
    let mut seen = vec![false; n];
    seen[members[0]] = true;
    let in_set: Vec<bool> = (0..n).map(|v| members.contains(&v)).collect();
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        for (w, _) in graph.neighbors(u) {
            if in_set[w] && !seen[w] {
                seen[w] = true;
                order.push(w);
            }
        }
    }
    for &v in &order[..order.len() / 2] {
        side[v] = true;
    }
    side
}

fn most_fractional(p: &Point) -> Option<usize> {
    let h = half();
    let mut best: Option<(Rational, usize)> = None;
    for (v, x) in p.0.iter().enumerate() {
        if x.is_integer() {
            continue;
        }
        let d = (x - &h).abs();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, v));
        }
    }
    best.map(|(_, v)| v)
}

impl Search<'_> {
    fn pick(&self, p: &Point, edges: &[LinearInequality]) -> Option<Query> {
        match self.strategy {
            Strategy::VariableOrder => unfixed(self.formula.nu(), edges).map(|v| Query::unit(v, 1)),
            Strategy::MostFractional => most_fractional(p).map(|v| Query::unit(v, 1)),
            Strategy::Hybrid => {
                for g in &self.groups {
                    let sigma: Rational = g.iter().map(|&v| &p.0[v]).sum();
                    if !sigma.is_integer() {
                        return Some(Query::new(g.iter().map(|&v| (v, 1)), sigma.ceil().to_integer().try_into().ok()?));
                    }
                }
                most_fractional(p).map(|v| Query::unit(v, 1))
            }
            Strategy::Separator => match &self.formula.family {
                Family::Tseitin { graph, charge } => {
                    let mut fixed = fixed_values(self.formula.nu(), edges);
                    for (v, x) in p.0.iter().enumerate() {
                        if fixed[v].is_none() && x.is_integer() {
                            fixed[v] = Some(u8::from(!x.is_zero()));
                        }
                    }
                    separator_edge(graph, charge, &fixed)
                        .or_else(|| most_fractional(p))
                        .map(|e| Query::unit(e, 1))
                }
                _ => most_fractional(p).map(|v| Query::unit(v, 1)),
            },
        }
    }

    fn run(&self, edges: &mut Vec<LinearInequality>) -> Outcome {
        let depth = edges.len();
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.limits.max_nodes {
            return Outcome::Done(SpNode::Open);
        }
        let sys = leaf_system(&self.formula.system, edges).expect("queries use formula variables");
        let p = match lp_feasible(&sys) {
            Feasibility::Infeasible(c) => return Outcome::Done(SpNode::leaf(Some(c))),
            Feasibility::Feasible(p) => p,
        };
        if p.is_binary() {
            return Outcome::Satisfiable(p);
        }
        if depth >= self.limits.max_depth {
            return Outcome::Done(SpNode::Open);
        }
        let Some(query) = self.pick(&p, edges) else {
            // every variable fixed yet the LP is feasible: its witness is 0/1
            return Outcome::Satisfiable(p);
        };
        let (ge, le) = if depth < PARALLEL_DEPTH {
            let mut ge_edges = edges.clone();
            let mut le_edges = edges.clone();
            ge_edges.push(query.ge_edge());
            le_edges.push(query.le_edge());
            rayon::join(|| self.run(&mut ge_edges), || self.run(&mut le_edges))
        } else {
            edges.push(query.ge_edge());
            let ge = self.run(edges);
            edges.pop();
            if let Outcome::Satisfiable(_) = ge {
                return ge;
            }
            edges.push(query.le_edge());
            let le = self.run(edges);
            edges.pop();
            (ge, le)
        };
        match (ge, le) {
            (Outcome::Satisfiable(p), _) | (_, Outcome::Satisfiable(p)) => Outcome::Satisfiable(p),
            (Outcome::Done(g), Outcome::Done(l)) => Outcome::Done(SpNode::internal(query, g, l)),
        }
    }
}

/// Searches for a refutation. Complete proofs do not depend on scheduling:
/// each subtree is a function of its path alone.
pub fn solve(formula: &Formula, strategy: Strategy, limits: Limits) -> Result<SpProof, SolveError> {
    let search = Search { formula, strategy, limits, groups: variable_groups(formula), nodes: AtomicUsize::new(0) };
    match search.run(&mut Vec::new()) {
        Outcome::Satisfiable(p) => Err(SolveError::FormulaSatisfiable(p)),
        Outcome::Done(root) => {
            let proof = SpProof::new(formula, root);
            let open = proof.leaves().iter().filter(|l| l.open).count();
            if open > 0 {
                Err(SolveError::LimitExceeded { partial: Box::new(proof), open })
            } else {
                Ok(proof)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileRow {
    pub label: String,
    pub n: usize,
    pub length: usize,
    pub depth: usize,
    pub leaves: usize,
    /// `ceil(log2 n)`
    pub log_ref: u32,
}

/// `(n, length, depth)` per instance; instances must be listed in increasing `n`.
pub fn depth_profile(
    instances: &[(String, usize, Formula)],
    strategy: Strategy,
    limits: Limits,
) -> Result<Vec<ProfileRow>, SolveError> {
    instances
        .iter()
        .map(|(label, n, f)| {
            let m = solve(f, strategy, limits)?.metrics();
            Ok(ProfileRow {
                label: label.clone(),
                n: *n,
                length: m.length,
                depth: m.depth,
                leaves: m.leaves,
                log_ref: usize::BITS - (n.max(&1) - 1).leading_zeros(),
            })
        })
        .collect()
}
