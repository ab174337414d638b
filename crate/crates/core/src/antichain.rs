//! The antichain method at desk scale: admissible-word enumeration, the
//! Sperner-type counting bound, slab casualty counts, self-reductions of the
//! four families and a brute-force search for minimal refutations.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::arith::{rat, ArithError, LinearInequality, Point, Rational};
use crate::formula::{gen_lop, gen_php, gen_sphp, gen_tseitin, lop_var, php_var, Charging, Family, Formula, FormulaError, Graph};
use crate::lp::{lp_feasible, Feasibility};
use crate::sp::{leaf_system, restrict_formula, Query, Restriction, SpError, SpNode, SpProof};
use crate::words::{scan_words, Compiled, ValueSet, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AntichainError {
    #[error(transparent)]
    Words(#[from] WordError),
    #[error("{what} of size {size} exceeds the supported maximum {max}")]
    TooLarge { what: &'static str, size: usize, max: usize },
    #[error("query coefficient vector is zero")]
    ZeroVector,
    #[error("variable {var} out of range for {n} variables")]
    UnknownVariable { var: usize, n: usize },
    #[error("{given} variables exceed the self-reduction bound {max}")]
    TooManyVars { given: usize, max: usize },
    #[error("self-reduction is not available for {0}")]
    UnsupportedFamily(String),
    #[error("restricted formula differs from the smaller family instance")]
    NotSelfReduced,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("vertex {0} out of range")]
    BadVertex(usize),
    #[error("element {element} out of range for n = {n}")]
    BadElement { element: usize, n: usize },
    #[error("|X| = {size} exceeds n - 3 = {max}")]
    XTooLarge { size: usize, max: usize },
    #[error("pairs of D are not disjoint")]
    DNotDisjoint,
    #[error("|D| = {size} exceeds (n - 3)/2 = {max}")]
    DTooLarge { size: usize, max: usize },
    #[error("assignment length {got} does not match {expected} pairs")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Sp(#[from] SpError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Exact admissible-word count of one formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullnessReport {
    /// Family size parameter, if the formula belongs to a family.
    pub n: Option<usize>,
    pub nu: usize,
    pub w: ValueSet,
    pub total: u64,
    pub admissible: u64,
    /// `k^nu / admissible`; `None` when nothing is admissible.
    pub ratio: Option<Rational>,
}

impl FullnessReport {
    pub fn ratio_at_most(&self, bound: i64) -> bool {
        self.ratio.as_ref().is_some_and(|r| *r <= rat(bound, 1))
    }
}

/// Counts the `W`-words satisfying every inequality of `formula`.
pub fn enumerate_admissible(formula: &Formula, w: ValueSet) -> Result<FullnessReport, AntichainError> {
    let nu = formula.nu();
    let sys = Compiled::system(&formula.system, w.ell());
    let chunks = scan_words(nu, w, || 0u64, |acc, s| *acc += sys.holds(s) as u64)?;
    let admissible = chunks.into_iter().sum::<u64>();
    let total = w.word_count(nu).expect("sweep succeeded");
    let ratio = (admissible > 0).then(|| Rational::new(total.into(), admissible.into()));
    Ok(FullnessReport { n: formula.family.size(), nu, w, total, admissible, ratio })
}

/// The first `limit` admissible words in lexicographic order.
pub fn admissible_points(formula: &Formula, w: ValueSet, limit: usize) -> Result<Vec<Point>, AntichainError> {
    let sys = Compiled::system(&formula.system, w.ell());
    let chunks = scan_words(formula.nu(), w, Vec::new, |acc: &mut Vec<Vec<i64>>, s| {
        if acc.len() < limit && sys.holds(s) {
            acc.push(s.to_vec());
        }
    })?;
    Ok(chunks.into_iter().flatten().take(limit).map(|s| w.point(&s)).collect())
}

/// Smallest `n` from which every later report has ratio at most 2.
pub fn empirical_nf(reports: &[FullnessReport]) -> Option<usize> {
    let mut sorted: Vec<&FullnessReport> = reports.iter().filter(|r| r.n.is_some()).collect();
    sorted.sort_by_key(|r| r.n);
    let mut nf = None;
    for r in sorted.iter().rev() {
        if !r.ratio_at_most(2) {
            break;
        }
        nf = r.n;
    }
    nf
}

const SPERNER_MAX_HALF: usize = 18;
const SPERNER_MAX_TRIPLE: usize = 11;

fn check_sperner_size(n: usize, w: ValueSet) -> Result<(), AntichainError> {
    let max = match w {
        ValueSet::Half => SPERNER_MAX_HALF,
        ValueSet::Triple => SPERNER_MAX_TRIPLE,
    };
    if n > max {
        return Err(AntichainError::TooLarge { what: "word length", size: n, max });
    }
    Ok(())
}

/// Distribution of `a·s` (scaled by `ell`) over all `s in W^n`.
pub fn level_counts(a: &[i64], w: ValueSet) -> BTreeMap<i64, u64> {
    let mut dist = BTreeMap::from([(0i64, 1u64)]);
    for &c in a {
        let mut next = BTreeMap::new();
        for (&sum, &cnt) in &dist {
            for &s in w.scaled() {
                *next.entry(sum + c * s).or_insert(0) += cnt;
            }
        }
        dist = next;
    }
    dist
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpernerReport {
    pub count: u64,
    /// Width `w(a)`.
    pub width: usize,
    /// `k^n / sqrt(w(a))`, for display.
    pub bound: f64,
    /// `count <= k^n / sqrt(w)`, decided exactly as `count^2 * w <= k^(2n)`.
    pub ok: bool,
}

/// `count <= k^n / sqrt(width)`, decided in integers.
pub fn sperner_ok(count: u64, width: usize, k: usize, n: usize) -> bool {
    let lhs = u128::from(count) * u128::from(count) * width as u128;
    let rhs = (k as u128).pow(2 * n as u32);
    lhs <= rhs
}

/// Number of words `s in W^n` with `a·s = b`, against the Sperner bound.
pub fn sperner_count(a: &[i64], b: &Rational, w: ValueSet) -> Result<SpernerReport, AntichainError> {
    let n = a.len();
    check_sperner_size(n, w)?;
    let width = a.iter().filter(|c| **c != 0).count();
    if width == 0 {
        return Err(AntichainError::ZeroVector);
    }
    let target = b * Rational::from_integer(w.ell().into());
    let count = if target.is_integer() {
        let t = target.to_integer().to_i64().unwrap_or(i64::MAX);
        level_counts(a, w).get(&t).copied().unwrap_or(0)
    } else {
        0
    };
    let total = w.word_count(n).expect("size checked") as f64;
    Ok(SpernerReport { count, width, bound: total / (width as f64).sqrt(), ok: sperner_ok(count, width, w.k(), n) })
}

/// Largest level count of `a` and whether it respects the Sperner bound.
pub fn sperner_worst(a: &[i64], w: ValueSet) -> Result<SpernerReport, AntichainError> {
    let n = a.len();
    check_sperner_size(n, w)?;
    let width = a.iter().filter(|c| **c != 0).count();
    if width == 0 {
        return Err(AntichainError::ZeroVector);
    }
    let count = level_counts(a, w).values().copied().max().unwrap_or(0);
    let total = w.word_count(n).expect("size checked") as f64;
    Ok(SpernerReport { count, width, bound: total / (width as f64).sqrt(), ok: sperner_ok(count, width, w.k(), n) })
}

/// Number of words of `W^n` strictly inside the slab `b - 1 < a·x < b`.
pub fn slab_casualties(q: &Query, n: usize, w: ValueSet) -> Result<u64, AntichainError> {
    check_sperner_size(n, w)?;
    if let Some((&v, _)) = q.coeffs.iter().next_back().filter(|(&v, _)| v >= n) {
        return Err(AntichainError::UnknownVariable { var: v, n });
    }
    if q.coeffs.is_empty() {
        return Err(AntichainError::ZeroVector);
    }
    let a: Vec<i64> = (0..n).map(|v| q.coeffs.get(&v).copied().unwrap_or(0)).collect();
    let ell = w.ell();
    let (lo, hi) = ((q.b - 1) * ell, q.b * ell);
    Ok(level_counts(&a, w).range(lo + 1..hi).map(|(_, c)| c).sum())
}

/// A restriction collapsing a family member onto a smaller member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelfReduction {
    pub restriction: Restriction,
    /// Survivor renaming `old -> new`.
    pub renaming: Vec<Option<usize>>,
    pub target: Formula,
}

/// Equality of two formulas after discarding inequalities that every point
/// of the box satisfies; rows are compared in `>=`-form and in order.
pub fn structurally_equal(a: &Formula, b: &Formula) -> bool {
    let rows = |f: &Formula| -> Vec<LinearInequality> {
        f.system.ineqs().iter().filter(|q| !q.is_box_trivial()).map(LinearInequality::to_ge).collect()
    };
    a.nu() == b.nu() && rows(a) == rows(b)
}

/// Builds the self-reducing restriction for `vars` (variable ids) and checks
/// that `formula` restricted by it is the smaller instance up to renaming.
pub fn self_reduce(formula: &Formula, vars: &[usize]) -> Result<SelfReduction, AntichainError> {
    let nu = formula.nu();
    let vars: BTreeSet<usize> = vars.iter().copied().collect();
    if let Some(&v) = vars.iter().find(|&&v| v >= nu) {
        return Err(AntichainError::UnknownVariable { var: v, n: nu });
    }
    let (pairs, target) = match &formula.family {
        Family::Sphp { n } => reduce_sphp(*n, &vars)?,
        Family::Php { pigeons, holes } => reduce_php(*pigeons, *holes, &vars)?,
        Family::Tseitin { graph, charge } => {
            let n = graph.num_vertices();
            if *graph != Graph::complete(n) {
                return Err(AntichainError::UnsupportedFamily("Tseitin on a non-complete graph".into()));
            }
            reduce_tseitin(n, charge, &vars)?
        }
        Family::Lop { n, paper_literal: false } => reduce_lop(*n, &vars)?,
        Family::Lop { paper_literal: true, .. } => {
            return Err(AntichainError::UnsupportedFamily("literal-RHS ordering principle".into()))
        }
        Family::Custom => return Err(AntichainError::UnsupportedFamily("custom formulas".into())),
    };
    let restriction = Restriction::new(pairs)?;
    let (restricted, renaming) = restrict_formula(formula, &restriction)?;
    if !structurally_equal(&restricted, &target) {
        return Err(AntichainError::NotSelfReduced);
    }
    Ok(SelfReduction { restriction, renaming, target })
}

type Reduction = (Vec<(usize, bool)>, Formula);

fn reduce_sphp(n: usize, vars: &BTreeSet<usize>) -> Result<Reduction, AntichainError> {
    let max = n.saturating_sub(3);
    if vars.len() > max {
        return Err(AntichainError::TooManyVars { given: vars.len(), max });
    }
    Ok((vars.iter().map(|&v| (v, false)).collect(), gen_sphp(n - vars.len())?))
}

/// Lowest elements of `0..n` outside `set`, appended until `set` has `size` elements.
fn pad(set: &mut BTreeSet<usize>, n: usize, size: usize) {
    for e in 0..n {
        if set.len() >= size {
            break;
        }
        set.insert(e);
    }
}

fn reduce_php(m: usize, holes: usize, vars: &BTreeSet<usize>) -> Result<Reduction, AntichainError> {
    let t = vars.len();
    let max = holes - 1;
    if t > max {
        return Err(AntichainError::TooManyVars { given: t, max });
    }
    let mut pigeons: BTreeSet<usize> = vars.iter().map(|v| v / holes).collect();
    let mut hs: BTreeSet<usize> = vars.iter().map(|v| v % holes).collect();
    pad(&mut pigeons, m, t);
    pad(&mut hs, holes, t);
    let sigma: BTreeMap<usize, usize> = pigeons.iter().copied().zip(hs.iter().copied()).collect();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in 0..holes {
            let value = match sigma.get(&i) {
                Some(&h) => Some(h == j),
                None => hs.contains(&j).then_some(false),
            };
            if let Some(b) = value {
                pairs.push((php_var(holes, i, j), b));
            }
        }
    }
    Ok((pairs, gen_php(m - t, holes - t)?))
}

fn reduce_tseitin(n: usize, charge: &Charging, vars: &BTreeSet<usize>) -> Result<Reduction, AntichainError> {
    let g = Graph::complete(n);
    let t = vars.len();
    let max = n.saturating_sub(3) / 2;
    if t > max {
        return Err(AntichainError::TooManyVars { given: t, max });
    }
    let mut s: BTreeSet<usize> = vars.iter().flat_map(|&e| [g.edges()[e].0, g.edges()[e].1]).collect();
    pad(&mut s, n, 2 * t);
    let mut charged: Vec<usize> = s.iter().copied().filter(|&v| charge.get(v) == 1).collect();
    let mut ones = Vec::new();
    let mut flipped = None;
    if charged.len() % 2 == 1 {
        let l = charged.remove(0);
        let r = (0..n).find(|v| !s.contains(v)).expect("2t < n");
        ones.push(g.edge_index(l, r).expect("complete graph"));
        flipped = Some(r);
    }
    for p in charged.chunks(2) {
        ones.push(g.edge_index(p[0], p[1]).expect("complete graph"));
    }
    let pairs = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, (u, v))| s.contains(u) || s.contains(v))
        .map(|(e, _)| (e, ones.contains(&e)))
        .collect();
    let rest: Vec<usize> = (0..n).filter(|v| !s.contains(v)).collect();
    let bits = rest.iter().map(|&v| charge.get(v) ^ u8::from(flipped == Some(v))).collect();
    Ok((pairs, gen_tseitin(&Graph::complete(rest.len()), &Charging::new(bits)?)?))
}

fn lop_pair(n: usize, v: usize) -> (usize, usize) {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).nth(v).expect("variable in range")
}

fn reduce_lop(n: usize, vars: &BTreeSet<usize>) -> Result<Reduction, AntichainError> {
    let x: BTreeSet<usize> = vars.iter().flat_map(|&v| {
        let (i, j) = lop_pair(n, v);
        [i, j]
    }).collect();
    let max = n.saturating_sub(3);
    if x.len() > max {
        return Err(AntichainError::TooManyVars { given: x.len(), max });
    }
    let order: Vec<usize> = x.iter().copied().collect();
    let p = lop_ordered_point(n, &order);
    let pairs = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|(i, j)| x.contains(i) || x.contains(j))
        .map(|(i, j)| {
            let v = lop_var(n, i, j);
            (v, p[v] == 2)
        })
        .collect();
    Ok((pairs, gen_lop(n - x.len(), false)?))
}

/// Scaled point (by 2) placing `order` as a chain above all other elements,
/// which stay at 1/2 among themselves.
fn lop_ordered_point(n: usize, order: &[usize]) -> Vec<i64> {
    let rank: HashMap<usize, usize> = order.iter().enumerate().map(|(r, &e)| (e, r)).collect();
    let mut s = vec![1; n * (n - 1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            // P_ij = 1: i precedes j
            let value = match (rank.get(&i), rank.get(&j)) {
                (Some(ri), Some(rj)) => ri < rj,
                (None, Some(_)) => true,
                (Some(_), None) => false,
                (None, None) => continue,
            };
            s[lop_var(n, i, j)] = if value { 2 } else { 0 };
        }
    }
    s
}

/// Constructions of admissible ordering-principle points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LopMode {
    /// Elements listed in increasing order, placed above everything else.
    MentionedSet(Vec<usize>),
    /// Disjoint pairs and the binary value of `P_{l,r}` (`l < r`) for each.
    HypercubePoint(Vec<(usize, usize)>, Vec<bool>),
}

pub fn lop_admissible_point(n: usize, mode: &LopMode) -> Result<Point, AntichainError> {
    if n < 3 {
        return Err(FormulaError::NTooSmall { n, min: 3 }.into());
    }
    let scaled = match mode {
        LopMode::MentionedSet(x) => {
            let max = n - 3;
            if x.len() > max {
                return Err(AntichainError::XTooLarge { size: x.len(), max });
            }
            let mut seen = BTreeSet::new();
            for &e in x {
                if e >= n {
                    return Err(AntichainError::BadElement { element: e, n });
                }
                if !seen.insert(e) {
                    return Err(AntichainError::DNotDisjoint);
                }
            }
            lop_ordered_point(n, x)
        }
        LopMode::HypercubePoint(d, b) => {
            let max = (n - 3) / 2;
            if d.len() > max {
                return Err(AntichainError::DTooLarge { size: d.len(), max });
            }
            if b.len() != d.len() {
                return Err(AntichainError::LengthMismatch { expected: d.len(), got: b.len() });
            }
            let mut seen = BTreeSet::new();
            let mut s = vec![1; n * (n - 1) / 2];
            for (&(l, r), &bit) in d.iter().zip(b) {
                for e in [l, r] {
                    if e >= n {
                        return Err(AntichainError::BadElement { element: e, n });
                    }
                    if !seen.insert(e) {
                        return Err(AntichainError::DNotDisjoint);
                    }
                }
                let (lo, hi) = (l.min(r), l.max(r));
                s[lop_var(n, lo, hi)] = if bit { 2 } else { 0 };
            }
            s
        }
    };
    Ok(Point::from_scaled(&scaled, 2))
}

/// Binary edge assignment satisfying every parity constraint except at `v`.
/// Built on a BFS spanning tree rooted at `v`, fixing tree edges from the
/// leaves up; non-tree edges are 0.
pub fn critical_assignment(g: &Graph, charge: &Charging, v: usize) -> Result<Point, AntichainError> {
    let n = g.num_vertices();
    if v >= n {
        return Err(AntichainError::BadVertex(v));
    }
    if charge.len() != n {
        return Err(FormulaError::ChargingSize { expected: n, got: charge.len() }.into());
    }
    if !g.is_connected() {
        return Err(AntichainError::Disconnected);
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([v]);
    seen[v] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for (w, e) in g.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some((u, e));
                queue.push_back(w);
            }
        }
    }
    let mut x = vec![0u8; g.edges().len()];
    let mut parity = vec![0u8; n];
    for &u in order.iter().rev() {
        if let Some((p, e)) = parent[u] {
            if parity[u] != charge.get(u) {
                x[e] = 1;
                parity[u] ^= 1;
                parity[p] ^= 1;
            }
        }
    }
    Ok(Point(x.into_iter().map(|b| rat(i64::from(b), 1)).collect()))
}

pub const MIN_SEARCH_MAX_VARS: usize = 5;
pub const MIN_SEARCH_MAX_COEFF: i64 = 2;
pub const MIN_SEARCH_MAX_LEN: usize = 3;

/// Outcome of [`min_proof_search`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinProof {
    /// Exact minimum length, `None` when the budget ran out or no proof of
    /// length at most `max_len` exists.
    pub min_length: Option<usize>,
    /// Largest length shown to admit no refutation.
    pub refuted_below: Option<usize>,
    pub proof: Option<SpProof>,
    pub lp_calls: u64,
    pub budget_exhausted: bool,
}

struct MinSearch<'a> {
    formula: &'a Formula,
    queries: Vec<Query>,
    cache: HashMap<Vec<LinearInequality>, Option<SpNode>>,
    calls: u64,
    budget: u64,
}

struct OutOfBudget;

impl MinSearch<'_> {
    fn leaf(&mut self, edges: &[LinearInequality]) -> Result<Option<SpNode>, OutOfBudget> {
        let mut key = edges.to_vec();
        key.sort();
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        if self.calls >= self.budget {
            return Err(OutOfBudget);
        }
        self.calls += 1;
        let sys = leaf_system(&self.formula.system, edges).expect("query variables checked");
        let out = match lp_feasible(&sys) {
            Feasibility::Feasible(_) => None,
            Feasibility::Infeasible(c) => Some(SpNode::leaf(Some(c))),
        };
        self.cache.insert(key, out.clone());
        Ok(out)
    }

    /// A refutation below `edges` with at most `len` queries and its length.
    fn refute(&mut self, edges: &mut Vec<LinearInequality>, len: usize) -> Result<Option<(SpNode, usize)>, OutOfBudget> {
        if let Some(leaf) = self.leaf(edges)? {
            return Ok(Some((leaf, 0)));
        }
        if len == 0 {
            return Ok(None);
        }
        for qi in 0..self.queries.len() {
            let q = self.queries[qi].clone();
            let mut ge = None;
            edges.push(q.ge_edge());
            for l in 0..len {
                if let Some(found) = self.refute(edges, l)? {
                    ge = Some(found);
                    break;
                }
            }
            edges.pop();
            let Some((ge, used)) = ge else { continue };
            edges.push(q.le_edge());
            let le = self.refute(edges, len - 1 - used)?;
            edges.pop();
            if let Some((le, used_le)) = le {
                return Ok(Some((SpNode::internal(q, ge, le), 1 + used + used_le)));
            }
        }
        Ok(None)
    }
}

/// Canonical queries with coefficients in `[-c, c]` over `n` variables:
/// first nonzero coefficient positive, `b` such that both sides meet the box.
/// Ordered by width, then coefficients, then `b`.
pub fn canonical_queries(n: usize, c: i64) -> Vec<Query> {
    let mut out = Vec::new();
    let k = (2 * c + 1) as usize;
    let total = k.pow(n as u32);
    for code in 0..total {
        let mut rest = code;
        let a: Vec<i64> = (0..n)
            .map(|_| {
                let d = (rest % k) as i64 - c;
                rest /= k;
                d
            })
            .collect();
        match a.iter().find(|x| **x != 0) {
            Some(&first) if first > 0 => {}
            _ => continue,
        }
        let lo: i64 = a.iter().filter(|x| **x < 0).sum();
        let hi: i64 = a.iter().filter(|x| **x > 0).sum();
        for b in lo + 1..=hi {
            out.push(Query::new(a.iter().enumerate().map(|(v, &x)| (v, x)), b));
        }
    }
    out.sort_by(|p, q| p.width().cmp(&q.width()).then_with(|| p.cmp(q)));
    out
}

/// Iterative deepening over refutations built from canonical queries.
pub fn min_proof_search(formula: &Formula, coeff_bound: i64, max_len: usize, lp_budget: u64) -> Result<MinProof, AntichainError> {
    let n = formula.nu();
    if n > MIN_SEARCH_MAX_VARS {
        return Err(AntichainError::TooLarge { what: "variable count", size: n, max: MIN_SEARCH_MAX_VARS });
    }
    if !(1..=MIN_SEARCH_MAX_COEFF).contains(&coeff_bound) {
        return Err(AntichainError::TooLarge {
            what: "coefficient bound",
            size: coeff_bound.unsigned_abs() as usize,
            max: MIN_SEARCH_MAX_COEFF as usize,
        });
    }
    if max_len > MIN_SEARCH_MAX_LEN {
        return Err(AntichainError::TooLarge { what: "length", size: max_len, max: MIN_SEARCH_MAX_LEN });
    }
    let mut search =
        MinSearch { formula, queries: canonical_queries(n, coeff_bound), cache: HashMap::new(), calls: 0, budget: lp_budget };
    let mut refuted_below = None;
    for len in 0..=max_len {
        match search.refute(&mut Vec::new(), len) {
            Ok(Some((root, used))) => {
                return Ok(MinProof {
                    min_length: Some(used),
                    refuted_below,
                    proof: Some(SpProof::new(formula, root)),
                    lp_calls: search.calls,
                    budget_exhausted: false,
                })
            }
            Ok(None) => refuted_below = Some(len),
            Err(OutOfBudget) => {
                return Ok(MinProof { min_length: None, refuted_below, proof: None, lp_calls: search.calls, budget_exhausted: true })
            }
        }
    }
    Ok(MinProof { min_length: None, refuted_below, proof: None, lp_calls: search.calls, budget_exhausted: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::half;
    use num_traits::Zero;
    use crate::formula::gen_sphp;
    use crate::sp::{restrict_proof, verify};

    #[test]
    fn sphp6_half_fullness() {
        let r = enumerate_admissible(&gen_sphp(6).unwrap(), ValueSet::Half).unwrap();
        assert_eq!(r.admissible, 22);
        assert_eq!(r.ratio, Some(Rational::new(64.into(), 22.into())));
    }

    #[test]
    fn sperner_examples() {
        let r = sperner_count(&[1, 1], &rat(1, 1), ValueSet::Half).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.ok);
        let r = sperner_count(&[1, -1], &rat(0, 1), ValueSet::Half).unwrap();
        assert_eq!(r.count, 2);
        assert!(r.ok);
        assert!(sperner_count(&[0, 0], &rat(0, 1), ValueSet::Half).is_err());
        assert!(sperner_count(&[1; 19], &rat(0, 1), ValueSet::Half).is_err());
        // a·s is a multiple of 1/2 only
        assert_eq!(sperner_count(&[1, 1], &rat(1, 3), ValueSet::Triple).unwrap().count, 0);
    }

    #[test]
    fn casualty_examples() {
        assert_eq!(slab_casualties(&Query::unit(0, 1), 2, ValueSet::Half).unwrap(), 2);
        assert_eq!(slab_casualties(&Query::new([(0, 2)], 1), 2, ValueSet::Half).unwrap(), 0);
        assert!(slab_casualties(&Query::unit(3, 1), 2, ValueSet::Half).is_err());
    }

    #[test]
    fn sphp_self_reduction() {
        let f = gen_sphp(6).unwrap();
        let r = self_reduce(&f, &[4, 5]).unwrap();
        assert_eq!(r.target, gen_sphp(4).unwrap());
        assert_eq!(r.restriction.assignment, BTreeMap::from([(4, false), (5, false)]));
        assert!(matches!(self_reduce(&f, &[0, 1, 2, 3]), Err(AntichainError::TooManyVars { .. })));
    }

    #[test]
    fn php_self_reduction() {
        let f = gen_php(5, 4).unwrap();
        let r = self_reduce(&f, &[php_var(4, 0, 0)]).unwrap();
        assert_eq!(r.target, gen_php(4, 3).unwrap());
        assert_eq!(r.restriction.assignment.get(&php_var(4, 0, 0)), Some(&true));
        assert_eq!(r.restriction.len(), 4 + 5 - 1);
    }

    #[test]
    fn tseitin_self_reduction() {
        let g = Graph::complete(6);
        for bits in [vec![1, 0, 0, 0, 0, 0], vec![0, 0, 1, 0, 0, 0], vec![1, 1, 1, 0, 0, 0]] {
            let f = gen_tseitin(&g, &Charging::new(bits).unwrap()).unwrap();
            let r = self_reduce(&f, &[g.edge_index(0, 1).unwrap()]).unwrap();
            assert_eq!(r.target.nu(), 6);
            let Family::Tseitin { charge, .. } = &r.target.family else { panic!() };
            assert_eq!(charge.bits().iter().map(|&b| b as usize).sum::<usize>() % 2, 1);
        }
    }

    #[test]
    fn lop_self_reduction_and_points() {
        let f = gen_lop(6, false).unwrap();
        let r = self_reduce(&f, &[lop_var(6, 1, 4)]).unwrap();
        assert_eq!(r.target, gen_lop(4, false).unwrap());
        let p = lop_admissible_point(6, &LopMode::MentionedSet(vec![0, 1])).unwrap();
        assert_eq!(p.0[lop_var(6, 0, 1)], rat(1, 1));
        assert!(f.system.is_satisfied_by(&p).unwrap());
        let p = lop_admissible_point(5, &LopMode::HypercubePoint(vec![], vec![])).unwrap();
        assert!(p.0.iter().all(|x| *x == half()));
        assert!(matches!(
            lop_admissible_point(7, &LopMode::HypercubePoint(vec![(0, 1), (1, 2)], vec![true, false])),
            Err(AntichainError::DNotDisjoint)
        ));
        assert!(matches!(lop_admissible_point(5, &LopMode::MentionedSet(vec![0, 1, 2])), Err(AntichainError::XTooLarge { .. })));
    }

    #[test]
    fn restricted_proof_refutes_target() {
        let f = gen_sphp(5).unwrap();
        let p = crate::solver::solve(&f, crate::solver::Strategy::VariableOrder, Default::default()).unwrap();
        let r = self_reduce(&f, &[0]).unwrap();
        let q = restrict_proof(&p, &r.restriction).renamed(&r.renaming).unwrap();
        assert!(verify(&q, &r.target).unwrap().ok);
    }

    #[test]
    fn critical_assignment_k3() {
        let g = Graph::complete(3);
        let p = critical_assignment(&g, &Charging::indicator(3, 0), 0).unwrap();
        assert!(p.0.iter().all(Zero::is_zero));
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(critical_assignment(&g, &Charging::indicator(4, 0), 0), Err(AntichainError::Disconnected));
    }

    #[test]
    fn min_search_small() {
        assert_eq!(min_proof_search(&gen_sphp(3).unwrap(), 2, 3, 100_000).unwrap().min_length, Some(0));
        assert_eq!(min_proof_search(&gen_php(2, 1).unwrap(), 2, 3, 100_000).unwrap().min_length, Some(0));
        let r = min_proof_search(&gen_sphp(4).unwrap(), 2, 3, 100_000).unwrap();
        assert_eq!(r.min_length, Some(1));
        assert_eq!(r.refuted_below, Some(0));
        assert!(verify(r.proof.as_ref().unwrap(), &gen_sphp(4).unwrap()).unwrap().ok);
        let r = min_proof_search(&gen_sphp(4).unwrap(), 2, 3, 1).unwrap();
        assert!(r.budget_exhausted);
        assert!(min_proof_search(&gen_sphp(6).unwrap(), 2, 3, 1).is_err());
    }
}
