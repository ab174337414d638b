//! Stabbing Planes proofs: queries, proof trees, the verifier, slab audits and restrictions.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::arith::{format_rational, parse_rational, ArithError, LinearInequality, LinearSystem, Point, Rational};
use crate::formula::Formula;
use crate::lp::{farkas_check, lp_feasible, FarkasCertificate, Feasibility};
use crate::words::{scan_words, Compiled, ValueSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("query coefficient or bound {0} is not an integer")]
    NonIntegralQuery(String),
    #[error("restriction assigns variable {0} twice")]
    DomainOverlap(usize),
    #[error("variable {0} was removed by the restriction but still occurs in the proof")]
    RemovedVariable(usize),
    #[error("malformed proof JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Integer query `(a, b)`: branches `a·x >= b` and `a·x <= b - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Query {
    pub coeffs: BTreeMap<usize, i64>,
    pub b: i64,
}

impl Query {
    pub fn new(coeffs: impl IntoIterator<Item = (usize, i64)>, b: i64) -> Self {
        let q = LinearInequality::ge(coeffs, b);
        Query { coeffs: q.coeffs, b }
    }

    /// `(e_v, b)`.
    pub fn unit(v: usize, b: i64) -> Self {
        Query::new([(v, 1)], b)
    }

    pub fn width(&self) -> usize {
        self.coeffs.len()
    }

    pub fn ge_edge(&self) -> LinearInequality {
        LinearInequality::ge(self.coeffs.iter().map(|(&v, &c)| (v, c)), self.b)
    }

    pub fn le_edge(&self) -> LinearInequality {
        LinearInequality::le(self.coeffs.iter().map(|(&v, &c)| (v, c)), self.b - 1)
    }

    pub fn value(&self, p: &Point) -> Result<Rational, ArithError> {
        self.ge_edge().lhs(p)
    }

    /// `a·s` for a scaled word.
    pub fn scaled_value(&self, s: &[i64]) -> i64 {
        self.coeffs.iter().map(|(&v, &c)| c * s[v]).sum()
    }

    pub fn display_with(&self, names: &[String]) -> String {
        self.ge_edge().display_with(names)
    }
}

/// Open slab `b - 1 < a·p < b`.
pub fn slab_contains(q: &Query, p: &Point) -> Result<bool, ArithError> {
    let v = q.value(p)?;
    Ok(v > Rational::from_integer((q.b - 1).into()) && v < Rational::from_integer(q.b.into()))
}

fn slab_contains_scaled(q: &Query, s: &[i64], scale: i64) -> bool {
    let v = q.scaled_value(s);
    (q.b - 1) * scale < v && v < q.b * scale
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpNode {
    Internal { query: Query, ge: Box<SpNode>, le: Box<SpNode> },
    Leaf { certificate: Option<FarkasCertificate> },
    /// Unexpanded node of a partial tree.
    Open,
}

impl SpNode {
    pub fn leaf(certificate: Option<FarkasCertificate>) -> Self {
        SpNode::Leaf { certificate }
    }

    pub fn internal(query: Query, ge: SpNode, le: SpNode) -> Self {
        SpNode::Internal { query, ge: Box::new(ge), le: Box::new(le) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Metrics {
    /// Number of queries.
    pub length: usize,
    /// Longest root-leaf path.
    pub depth: usize,
    /// Total bits of all query coefficients and bounds.
    pub bitsize: u64,
    pub leaves: usize,
}

fn bits(c: i64) -> u64 {
    1 + (64 - c.unsigned_abs().leading_zeros()) as u64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpProof {
    /// Hash of the formula this proof refutes.
    pub formula: String,
    pub root: SpNode,
}

/// Direction taken at an internal node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Ge,
    Le,
}

pub fn path_label(path: &[Side]) -> String {
    if path.is_empty() {
        return "root".to_string();
    }
    path.iter().map(|s| if *s == Side::Ge { "ge" } else { "le" }).collect::<Vec<_>>().join(".")
}

/// A leaf together with the edge inequalities on its root path.
#[derive(Clone, Debug)]
pub struct LeafView<'a> {
    pub path: Vec<Side>,
    pub edges: Vec<LinearInequality>,
    pub certificate: Option<&'a FarkasCertificate>,
    pub open: bool,
}

impl SpProof {
    pub fn new(formula: &Formula, root: SpNode) -> Self {
        SpProof { formula: formula.hash(), root }
    }

    pub fn metrics(&self) -> Metrics {
        fn walk(n: &SpNode, d: usize, m: &mut Metrics) {
            match n {
                SpNode::Internal { query, ge, le } => {
                    m.length += 1;
                    m.bitsize += query.coeffs.values().map(|&c| bits(c)).sum::<u64>() + bits(query.b);
                    walk(ge, d + 1, m);
                    walk(le, d + 1, m);
                }
                SpNode::Leaf { .. } | SpNode::Open => {
                    m.leaves += 1;
                    m.depth = m.depth.max(d);
                }
            }
        }
        let mut m = Metrics::default();
        walk(&self.root, 0, &mut m);
        m
    }

    /// Queries in preorder (ge subtree before le subtree).
    pub fn queries(&self) -> Vec<&Query> {
        fn walk<'a>(n: &'a SpNode, out: &mut Vec<&'a Query>) {
            if let SpNode::Internal { query, ge, le } = n {
                out.push(query);
                walk(ge, out);
                walk(le, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Distinct queries in first-occurrence preorder.
    pub fn distinct_queries(&self) -> Vec<Query> {
        let mut seen = BTreeSet::new();
        self.queries().into_iter().filter(|q| seen.insert((*q).clone())).cloned().collect()
    }

    pub fn leaves(&self) -> Vec<LeafView<'_>> {
        fn walk<'a>(n: &'a SpNode, path: &mut Vec<Side>, edges: &mut Vec<LinearInequality>, out: &mut Vec<LeafView<'a>>) {
            match n {
                SpNode::Internal { query, ge, le } => {
                    path.push(Side::Ge);
                    edges.push(query.ge_edge());
                    walk(ge, path, edges, out);
                    path.pop();
                    edges.pop();
                    path.push(Side::Le);
                    edges.push(query.le_edge());
                    walk(le, path, edges, out);
                    path.pop();
                    edges.pop();
                }
                SpNode::Leaf { certificate } => out.push(LeafView {
                    path: path.clone(),
                    edges: edges.clone(),
                    certificate: certificate.as_ref(),
                    open: false,
                }),
                SpNode::Open => out.push(LeafView { path: path.clone(), edges: edges.clone(), certificate: None, open: true }),
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut Vec::new(), &mut out);
        out
    }

    pub fn is_complete(&self) -> bool {
        self.leaves().iter().all(|l| !l.open)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.queries().iter().filter_map(|q| q.coeffs.keys().next_back().copied()).max()
    }

    /// Renames variables; `map[old] = Some(new)`.
    pub fn renamed(&self, map: &[Option<usize>]) -> Result<SpProof, SpError> {
        fn walk(n: &SpNode, map: &[Option<usize>]) -> Result<SpNode, SpError> {
            Ok(match n {
                SpNode::Internal { query, ge, le } => {
                    let coeffs = query
                        .coeffs
                        .iter()
                        .map(|(&v, &c)| match map.get(v).copied().flatten() {
                            Some(w) => Ok((w, c)),
                            None => Err(SpError::RemovedVariable(v)),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    SpNode::internal(Query::new(coeffs, query.b), walk(ge, map)?, walk(le, map)?)
                }
                other => other.clone(),
            })
        }
        Ok(SpProof { formula: self.formula.clone(), root: walk(&self.root, map)? })
    }

    pub fn to_json(&self, vars: &[String]) -> Value {
        fn node(n: &SpNode, vars: &[String]) -> Value {
            match n {
                SpNode::Internal { query, ge, le } => {
                    let mut coeffs = Map::new();
                    for (&v, &c) in &query.coeffs {
                        coeffs.insert(vars.get(v).cloned().unwrap_or_else(|| format!("#{v}")), json!(c));
                    }
                    json!({ "q": { "coeffs": coeffs, "b": query.b }, "ge": node(ge, vars), "le": node(le, vars) })
                }
                SpNode::Leaf { certificate: Some(c) } => {
                    let f: Vec<String> = c.multipliers.iter().map(format_rational).collect();
                    json!({ "leaf": { "farkas": f } })
                }
                SpNode::Leaf { certificate: None } => json!({ "leaf": {} }),
                SpNode::Open => json!({ "open": {} }),
            }
        }
        json!({ "formula": self.formula, "root": node(&self.root, vars) })
    }

    pub fn from_json(v: &Value, vars: &[String]) -> Result<SpProof, SpError> {
        let index: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let err = |m: &str| SpError::Json(m.to_string());
        fn integer(v: &Value) -> Result<i64, SpError> {
            v.as_i64().ok_or_else(|| SpError::NonIntegralQuery(v.to_string()))
        }
        fn node(v: &Value, index: &BTreeMap<&str, usize>) -> Result<SpNode, SpError> {
            let err = |m: &str| SpError::Json(m.to_string());
            if let Some(q) = v.get("q") {
                let coeffs = q
                    .get("coeffs")
                    .and_then(Value::as_object)
                    .ok_or_else(|| err("query without coeffs"))?
                    .iter()
                    .map(|(name, c)| {
                        let var = *index.get(name.as_str()).ok_or_else(|| SpError::UnknownVariable(name.clone()))?;
                        Ok((var, integer(c)?))
                    })
                    .collect::<Result<Vec<_>, SpError>>()?;
                let b = integer(q.get("b").ok_or_else(|| err("query without b"))?)?;
                let ge = node(v.get("ge").ok_or_else(|| err("internal node without ge"))?, index)?;
                let le = node(v.get("le").ok_or_else(|| err("internal node without le"))?, index)?;
                Ok(SpNode::internal(Query::new(coeffs, b), ge, le))
            } else if let Some(l) = v.get("leaf") {
                let certificate = match l.get("farkas") {
                    Some(f) => Some(FarkasCertificate {
                        multipliers: f
                            .as_array()
                            .ok_or_else(|| err("farkas is not an array"))?
                            .iter()
                            .map(|x| Ok(parse_rational(x.as_str().ok_or_else(|| err("multiplier is not a string"))?)?))
                            .collect::<Result<_, SpError>>()?,
                    }),
                    None => None,
                };
                Ok(SpNode::Leaf { certificate })
            } else if v.get("open").is_some() {
                Ok(SpNode::Open)
            } else {
                Err(err("unrecognised node"))
            }
        }
        let formula = v.get("formula").and_then(Value::as_str).ok_or_else(|| err("missing formula hash"))?;
        let root = node(v.get("root").ok_or_else(|| err("missing root"))?, &index)?;
        Ok(SpProof { formula: formula.to_string(), root })
    }
}

/// LP at a leaf: formula rows, then `0 <= x <= 1` per variable, then the path edges root to leaf.
pub fn leaf_system(system: &LinearSystem, edges: &[LinearInequality]) -> Result<LinearSystem, ArithError> {
    system.extended(system.box_rows().into_iter().chain(edges.iter().cloned()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Certificate,
    Lp,
    Unexpanded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafReport {
    pub path: String,
    pub provenance: Provenance,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub path: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub ok: bool,
    pub metrics: Metrics,
    pub leaves: Vec<LeafReport>,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn to_json(&self) -> Value {
        json!({
            "ok": self.ok,
            "length": self.metrics.length,
            "depth": self.metrics.depth,
            "bitsize": self.metrics.bitsize,
            "leaves": self.metrics.leaves,
            "failures": self.failures.iter().map(|f| json!({ "path": f.path, "reason": f.reason })).collect::<Vec<_>>(),
        })
    }
}

fn check_vars(proof: &SpProof, n: usize) -> Result<(), SpError> {
    match proof.max_var() {
        Some(v) if v >= n => Err(SpError::UnknownVariable(format!("#{v}"))),
        _ => Ok(()),
    }
}

pub fn verify(proof: &SpProof, formula: &Formula) -> Result<VerifyReport, SpError> {
    check_vars(proof, formula.nu())?;
    let leaves = proof.leaves();
    let results: Vec<(LeafReport, Option<Failure>)> = leaves
        .par_iter()
        .map(|leaf| {
            let path = path_label(&leaf.path);
            if leaf.open {
                let f = Failure { path: path.clone(), reason: "unexpanded node".into() };
                return Ok((LeafReport { path, provenance: Provenance::Unexpanded, ok: false }, Some(f)));
            }
            let sys = leaf_system(&formula.system, &leaf.edges)?;
            let (provenance, failure) = match leaf.certificate {
                Some(c) => {
                    let ok = c.multipliers.len() == sys.len() && farkas_check(&sys, c)?;
                    (Provenance::Certificate, (!ok).then(|| "Farkas certificate does not derive 0 >= c > 0".to_string()))
                }
                None => match lp_feasible(&sys) {
                    Feasibility::Infeasible(_) => (Provenance::Lp, None),
                    Feasibility::Feasible(p) => {
                        (Provenance::Lp, Some(format!("leaf LP is feasible at ({})", p.to_strings().join(", "))))
                    }
                },
            };
            let ok = failure.is_none();
            Ok((LeafReport { path: path.clone(), provenance, ok }, failure.map(|reason| Failure { path, reason })))
        })
        .collect::<Result<_, ArithError>>()?;
    let (leaves, failures): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let failures: Vec<Failure> = failures.into_iter().flatten().collect();
    Ok(VerifyReport { ok: failures.is_empty(), metrics: proof.metrics(), leaves, failures })
}

/// Fills every certificate-free leaf with a Farkas certificate from the LP engine.
/// Leaves whose LP turns out feasible are left without one.
pub fn certify(proof: &SpProof, formula: &Formula) -> Result<SpProof, SpError> {
    fn walk(n: &SpNode, sys: &LinearSystem, edges: &mut Vec<LinearInequality>) -> Result<SpNode, ArithError> {
        Ok(match n {
            SpNode::Internal { query, ge, le } => {
                edges.push(query.ge_edge());
                let g = walk(ge, sys, edges)?;
                edges.pop();
                edges.push(query.le_edge());
                let l = walk(le, sys, edges)?;
                edges.pop();
                SpNode::internal(query.clone(), g, l)
            }
            SpNode::Leaf { certificate: None } => match lp_feasible(&leaf_system(sys, edges)?) {
                Feasibility::Infeasible(c) => SpNode::leaf(Some(c)),
                Feasibility::Feasible(_) => SpNode::leaf(None),
            },
            other => other.clone(),
        })
    }
    check_vars(proof, formula.nu())?;
    Ok(SpProof { formula: formula.hash(), root: walk(&proof.root, &formula.system, &mut Vec::new())? })
}

/// Partial 0/1 assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Restriction {
    pub assignment: BTreeMap<usize, bool>,
}

impl Restriction {
    pub fn new(pairs: impl IntoIterator<Item = (usize, bool)>) -> Result<Self, SpError> {
        let mut assignment = BTreeMap::new();
        for (v, b) in pairs {
            if assignment.insert(v, b).is_some() {
                return Err(SpError::DomainOverlap(v));
            }
        }
        Ok(Restriction { assignment })
    }

    pub fn empty() -> Self {
        Restriction::default()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Substitutes into `a·x (sense) b`, folding constants into the bound.
    pub fn apply(&self, q: &LinearInequality) -> LinearInequality {
        let mut bound = q.bound;
        let mut coeffs = Vec::new();
        for (&v, &c) in &q.coeffs {
            match self.assignment.get(&v) {
                Some(true) => bound -= c,
                Some(false) => {}
                None => coeffs.push((v, c)),
            }
        }
        LinearInequality::new(coeffs, q.sense, bound)
    }

    /// Survivor renaming `old -> new` over `n` variables.
    pub fn renaming(&self, n: usize) -> Vec<Option<usize>> {
        let mut next = 0;
        (0..n)
            .map(|v| {
                if self.assignment.contains_key(&v) {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    }
}

/// `F|rho` over the surviving variables (renamed in order). Constraints that
/// lose all variables and hold are dropped; all others are kept.
pub fn restrict_formula(formula: &Formula, rho: &Restriction) -> Result<(Formula, Vec<Option<usize>>), SpError> {
    let n = formula.nu();
    if let Some(&v) = rho.assignment.keys().find(|&&v| v >= n) {
        return Err(SpError::UnknownVariable(format!("#{v}")));
    }
    let map = rho.renaming(n);
    let vars = formula.vars().iter().enumerate().filter(|(i, _)| map[*i].is_some()).map(|(_, s)| s.clone()).collect();
    let ineqs = formula
        .system
        .ineqs()
        .iter()
        .map(|q| rho.apply(q))
        .filter(|q| !(q.coeffs.is_empty() && q.holds_at(&Rational::from_integer(0.into()))))
        .map(|q| LinearInequality::new(q.coeffs.iter().map(|(&v, &c)| (map[v].expect("survivor"), c)), q.sense, q.bound))
        .collect();
    Ok((Formula::custom(LinearSystem::new(vars, ineqs)?), map))
}

/// Applies `rho` to every query. Queries left without variables are spliced
/// out in favour of the child whose edge became trivially true. Leaf
/// certificates are dropped (the leaf systems change); see [`certify`].
pub fn restrict_proof(proof: &SpProof, rho: &Restriction) -> SpProof {
    fn walk(n: &SpNode, rho: &Restriction) -> SpNode {
        match n {
            SpNode::Internal { query, ge, le } => {
                let r = rho.apply(&query.ge_edge());
                if r.coeffs.is_empty() {
                    // 0 >= b' holds iff b' <= 0; otherwise 0 <= b' - 1 holds
                    if r.bound <= 0 {
                        walk(ge, rho)
                    } else {
                        walk(le, rho)
                    }
                } else {
                    SpNode::internal(Query { coeffs: r.coeffs, b: r.bound }, walk(ge, rho), walk(le, rho))
                }
            }
            SpNode::Leaf { .. } => SpNode::leaf(None),
            SpNode::Open => SpNode::Open,
        }
    }
    if rho.is_empty() {
        return proof.clone();
    }
    SpProof { formula: proof.formula.clone(), root: walk(&proof.root, rho) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditMethod {
    /// Every word of `W^n` was evaluated.
    Sweep,
    /// Words were searched leaf by leaf, restricted to each leaf's path.
    LeafSearch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub w: ValueSet,
    pub method: AuditMethod,
    /// Admissible word count (sweep only).
    pub admissible: Option<u64>,
    pub uncovered_count: u64,
    /// First uncovered points found (at most [`AUDIT_SAMPLE`]).
    pub uncovered: Vec<Point>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.uncovered_count == 0
    }
}

pub const AUDIT_SAMPLE: usize = 16;

/// Largest `k^n` audited by a full sweep.
pub const AUDIT_SWEEP_LIMIT: u64 = 1 << 22;

/// Checks that every admissible `W`-point lies in the slab of some query.
pub fn audit_slab_cover(proof: &SpProof, formula: &Formula, w: ValueSet) -> AuditReport {
    let n = formula.nu();
    let queries = proof.distinct_queries();
    let scale = w.ell();
    if w.word_count(n).is_some_and(|t| t <= AUDIT_SWEEP_LIMIT) {
        let sys = Compiled::system(&formula.system, scale);
        let chunks = scan_words(
            n,
            w,
            || (0u64, 0u64, Vec::new()),
            |acc: &mut (u64, u64, Vec<Vec<i64>>), s| {
                if !sys.holds(s) {
                    return;
                }
                acc.0 += 1;
                if !queries.iter().any(|q| slab_contains_scaled(q, s, scale)) {
                    acc.1 += 1;
                    if acc.2.len() < AUDIT_SAMPLE {
                        acc.2.push(s.to_vec());
                    }
                }
            },
        )
        .expect("sweep size checked");
        let mut admissible = 0;
        let mut uncovered_count = 0;
        let mut uncovered = Vec::new();
        for (a, u, pts) in chunks {
            admissible += a;
            uncovered_count += u;
            uncovered.extend(pts.iter().map(|s| w.point(s)));
        }
        uncovered.truncate(AUDIT_SAMPLE);
        return AuditReport { w, method: AuditMethod::Sweep, admissible: Some(admissible), uncovered_count, uncovered };
    }

    // An uncovered admissible point avoids every slab, so it follows a unique
    // root-leaf path and satisfies that leaf's LP. Search each leaf for such points.
    let per_leaf: Vec<Vec<Vec<i64>>> = proof
        .leaves()
        .par_iter()
        .map(|leaf| {
            let sys = leaf_system(&formula.system, &leaf.edges).expect("variables checked by construction");
            if !leaf.open {
                if let Some(c) = leaf.certificate {
                    if c.multipliers.len() == sys.len() && farkas_check(&sys, c).unwrap_or(false) {
                        return Vec::new();
                    }
                }
            }
            let mut found = Vec::new();
            let mut fixed = Vec::new();
            search_leaf(&sys, w, &queries, &mut fixed, &mut found);
            found
        })
        .collect();
    let mut uncovered_count = 0;
    let mut uncovered = Vec::new();
    for pts in per_leaf {
        uncovered_count += pts.len() as u64;
        uncovered.extend(pts.iter().map(|s| w.point(s)));
    }
    uncovered.truncate(AUDIT_SAMPLE);
    AuditReport { w, method: AuditMethod::LeafSearch, admissible: None, uncovered_count, uncovered }
}

/// Depth-first search over W-values with LP pruning; records slab-free points.
fn search_leaf(sys: &LinearSystem, w: ValueSet, queries: &[Query], fixed: &mut Vec<i64>, found: &mut Vec<Vec<i64>>) {
    if found.len() >= AUDIT_SAMPLE {
        return;
    }
    let ell = w.ell();
    let pins: Vec<LinearInequality> = fixed
        .iter()
        .enumerate()
        .flat_map(|(v, &s)| [LinearInequality::ge([(v, ell)], s), LinearInequality::le([(v, ell)], s)])
        .collect();
    let pinned = sys.extended(pins).expect("pinned variables exist");
    if !lp_feasible(&pinned).is_feasible() {
        return;
    }
    if fixed.len() == sys.num_vars() {
        if !queries.iter().any(|q| slab_contains_scaled(q, fixed, ell)) {
            found.push(fixed.clone());
        }
        return;
    }
    for &s in w.scaled() {
        fixed.push(s);
        search_leaf(sys, w, queries, fixed, found);
        fixed.pop();
    }
}
