//! Hypercube covers by linear polynomials and the grid-square projection of
//! Tseitin refutations onto them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::arith::{format_rational, half, int, parse_rational, rat, ArithError, Point, Rational};
use crate::formula::{Charging, Family, Formula, Graph};
use crate::sp::{Query, SpProof};

/// Largest cube swept by [`cover_check`].
pub const MAX_CUBE_VARS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverError {
    #[error("cube of dimension {0} exceeds the sweep limit {MAX_CUBE_VARS}")]
    TooLarge(usize),
    #[error("polynomial {poly} mentions variable {var} outside the cube")]
    ForeignVariable { poly: usize, var: usize },
    #[error("the polynomials do not cover the cube")]
    NotACover,
    #[error("grid side {0} is not a multiple of 3 (at least 6)")]
    NotMultipleOf3(usize),
    #[error("square index {0} out of range")]
    BadSquare(usize),
    #[error("formula is not a Tseitin formula on a grid")]
    NotGridTseitin,
    #[error("charge of a component without a free vertex is odd")]
    ChargeRepairImpossible,
    #[error("charging has {got} entries, grid has {expected} vertices")]
    ChargingSize { expected: usize, got: usize },
    #[error("malformed cover JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// `constant + sum coeffs[v] * x_v`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinearPolynomial {
    pub coeffs: BTreeMap<usize, Rational>,
    pub constant: Rational,
}

impl LinearPolynomial {
    pub fn new(coeffs: impl IntoIterator<Item = (usize, Rational)>, constant: Rational) -> Self {
        let mut map: BTreeMap<usize, Rational> = BTreeMap::new();
        for (v, c) in coeffs {
            *map.entry(v).or_insert_with(Rational::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        LinearPolynomial { coeffs: map, constant }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn eval(&self, x: impl Fn(usize) -> Rational) -> Rational {
        self.coeffs.iter().fold(self.constant.clone(), |acc, (&v, c)| acc + c * x(v))
    }

    pub fn to_json(&self) -> Value {
        let coeffs: Map<String, Value> =
            self.coeffs.iter().map(|(v, c)| (v.to_string(), Value::String(format_rational(c)))).collect();
        json!({ "coeffs": coeffs, "const": format_rational(&self.constant) })
    }

    pub fn from_json(v: &Value) -> Result<Self, CoverError> {
        let err = |m: &str| CoverError::Json(m.to_string());
        let coeffs = v
            .get("coeffs")
            .and_then(Value::as_object)
            .ok_or_else(|| err("coeffs"))?
            .iter()
            .map(|(k, c)| {
                let var = k.parse::<usize>().map_err(|_| err("variable id"))?;
                let c = parse_rational(c.as_str().ok_or_else(|| err("coefficient"))?)?;
                Ok((var, c))
            })
            .collect::<Result<Vec<_>, CoverError>>()?;
        let constant = parse_rational(v.get("const").and_then(Value::as_str).ok_or_else(|| err("const"))?)?;
        Ok(LinearPolynomial::new(coeffs, constant))
    }
}

/// Polynomials together with the coordinates of the cube they should cover.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Cover {
    pub vars: Vec<usize>,
    pub polys: Vec<LinearPolynomial>,
}

impl Cover {
    pub fn new(vars: Vec<usize>, polys: Vec<LinearPolynomial>) -> Self {
        Cover { vars, polys }
    }

    /// Variables appearing with a nonzero coefficient, sorted.
    pub fn mentioned(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.polys.iter().flat_map(LinearPolynomial::vars).collect();
        set.into_iter().collect()
    }

    pub fn to_json(&self) -> Value {
        json!({ "vars": self.vars, "polys": self.polys.iter().map(LinearPolynomial::to_json).collect::<Vec<_>>() })
    }

    pub fn from_json(v: &Value) -> Result<Self, CoverError> {
        let err = |m: &str| CoverError::Json(m.to_string());
        let vars = v
            .get("vars")
            .and_then(Value::as_array)
            .ok_or_else(|| err("vars"))?
            .iter()
            .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| err("variable id")))
            .collect::<Result<Vec<_>, _>>()?;
        let polys = v
            .get("polys")
            .and_then(Value::as_array)
            .ok_or_else(|| err("polys"))?
            .iter()
            .map(LinearPolynomial::from_json)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cover { vars, polys })
    }
}

/// Integer form of a polynomial over cube positions (same zero set).
struct IntPoly {
    terms: Vec<(usize, i128)>,
    constant: i128,
}

impl IntPoly {
    fn vanishes(&self, mask: u64) -> bool {
        self.terms.iter().filter(|(p, _)| (mask >> p) & 1 == 1).map(|(_, c)| c).sum::<i128>() + self.constant == 0
    }
}

fn compile(cover: &Cover) -> Result<Vec<IntPoly>, CoverError> {
    if cover.vars.len() > MAX_CUBE_VARS {
        return Err(CoverError::TooLarge(cover.vars.len()));
    }
    let pos: BTreeMap<usize, usize> = cover.vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    cover
        .polys
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let scale = p.coeffs.values().chain([&p.constant]).fold(num_bigint::BigInt::one(), |acc, c| acc.lcm(c.denom()));
            let scaled = |c: &Rational| -> i128 {
                (c * Rational::from_integer(scale.clone())).to_integer().to_i128().expect("coefficient fits in i128")
            };
            let terms = p
                .coeffs
                .iter()
                .map(|(v, c)| pos.get(v).map(|&q| (q, scaled(c))).ok_or(CoverError::ForeignVariable { poly: i, var: *v }))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(IntPoly { terms, constant: scaled(&p.constant) })
        })
        .collect()
}

/// Binary point of the cube as a list of `(variable, bit)`.
pub fn mask_point(vars: &[usize], mask: u64) -> Vec<(usize, u8)> {
    vars.iter().enumerate().map(|(i, &v)| (v, ((mask >> i) & 1) as u8)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverCheck {
    /// First uncovered point (bit `i` is `vars[i]`), if any.
    pub uncovered: Option<u64>,
    /// First polynomial that never vanishes alone, if any.
    pub redundant: Option<usize>,
    /// First cube variable with zero coefficient everywhere, if any.
    pub missing: Option<usize>,
}

impl CoverCheck {
    pub fn e1(&self) -> bool {
        self.uncovered.is_none()
    }

    pub fn e2(&self) -> bool {
        self.redundant.is_none()
    }

    pub fn e3(&self) -> bool {
        self.missing.is_none()
    }

    pub fn is_essential(&self) -> bool {
        self.e1() && self.e2() && self.e3()
    }
}

const SWEEP_CHUNK: u64 = 1 << 12;

/// Per-chunk sweep: first uncovered mask and polynomials that vanish alone somewhere.
fn sweep(polys: &[IntPoly], m: usize) -> (Option<u64>, Vec<bool>) {
    let total = 1u64 << m;
    let parts: Vec<(Option<u64>, Vec<bool>)> = (0..total.div_ceil(SWEEP_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut uncovered = None;
            let mut alone = vec![false; polys.len()];
            for mask in c * SWEEP_CHUNK..((c + 1) * SWEEP_CHUNK).min(total) {
                let mut zeros = polys.iter().enumerate().filter(|(_, p)| p.vanishes(mask)).map(|(i, _)| i);
                match (zeros.next(), zeros.next()) {
                    (None, _) => {
                        uncovered.get_or_insert(mask);
                    }
                    (Some(i), None) => alone[i] = true,
                    _ => {}
                }
            }
            (uncovered, alone)
        })
        .collect();
    let mut uncovered = None;
    let mut alone = vec![false; polys.len()];
    for (u, a) in parts {
        if uncovered.is_none() {
            uncovered = u;
        }
        for (x, y) in alone.iter_mut().zip(a) {
            *x |= y;
        }
    }
    (uncovered, alone)
}

/// Checks (E1) covering, (E2) irredundancy and (E3) full support by sweeping `{0,1}^vars`.
pub fn cover_check(cover: &Cover) -> Result<CoverCheck, CoverError> {
    let polys = compile(cover)?;
    let (uncovered, alone) = sweep(&polys, cover.vars.len());
    let mentioned = cover.mentioned();
    Ok(CoverCheck {
        uncovered,
        redundant: alone.iter().position(|a| !a),
        missing: cover.vars.iter().copied().find(|v| mentioned.binary_search(v).is_err()),
    })
}

pub fn covers(cover: &Cover) -> Result<bool, CoverError> {
    let polys = compile(cover)?;
    let m = cover.vars.len();
    Ok((0..1u64 << m).into_par_iter().all(|mask| polys.iter().any(|p| p.vanishes(mask))))
}

/// A minimal covering subset of a cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Essentialisation {
    /// Kept polynomials over the mentioned variables.
    pub cover: Cover,
    /// Indices of the kept polynomials in the input.
    pub kept: Vec<usize>,
}

/// Removes polynomials greedily, last-added first, while the rest still covers.
pub fn essentialise(cover: &Cover) -> Result<Essentialisation, CoverError> {
    let polys = compile(cover)?;
    let m = cover.vars.len();
    let covered_by = |keep: &[bool]| {
        (0..1u64 << m).into_par_iter().all(|mask| polys.iter().zip(keep).any(|(p, &k)| k && p.vanishes(mask)))
    };
    let mut keep = vec![true; polys.len()];
    if !covered_by(&keep) {
        return Err(CoverError::NotACover);
    }
    for i in (0..polys.len()).rev() {
        keep[i] = false;
        if !covered_by(&keep) {
            keep[i] = true;
        }
    }
    let kept: Vec<usize> = (0..polys.len()).filter(|&i| keep[i]).collect();
    let polys: Vec<LinearPolynomial> = kept.iter().map(|&i| cover.polys[i].clone()).collect();
    let mut out = Cover::new(Vec::new(), polys);
    out.vars = out.mentioned();
    Ok(Essentialisation { cover: out, kept })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinCoverReport {
    pub n: usize,
    /// Size of the smallest essential cover found.
    pub min_found: Option<usize>,
    pub witness: Option<Cover>,
    /// Every size below this admits no essential cover within the budget space.
    pub none_below: usize,
    pub nodes: u64,
    pub budget_exhausted: bool,
}

/// Polynomial class: zero set on the cube plus mentioned variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Class {
    zeros: u64,
    support: u32,
}

struct CoverSearch<'a> {
    classes: &'a [Class],
    full: u64,
    all_vars: u32,
    nodes: u64,
    budget: u64,
}

impl CoverSearch<'_> {
    fn has_alone(&self, chosen: &[usize], i: usize) -> bool {
        let others = chosen.iter().filter(|&&j| j != i).fold(0u64, |acc, &j| acc | self.classes[j].zeros);
        self.classes[i].zeros & !others != 0
    }

    /// Extends `chosen` to an essential cover with at most `size` classes.
    fn extend(&mut self, chosen: &mut Vec<usize>, covered: u64, size: usize) -> Result<bool, ()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(());
        }
        if covered == self.full {
            let support = chosen.iter().fold(0u32, |acc, &j| acc | self.classes[j].support);
            return Ok(support == self.all_vars);
        }
        if chosen.len() == size {
            return Ok(false);
        }
        let point = (!covered & self.full).trailing_zeros();
        for i in 0..self.classes.len() {
            if (self.classes[i].zeros >> point) & 1 == 0 || chosen.contains(&i) {
                continue;
            }
            chosen.push(i);
            if chosen.iter().all(|&j| self.has_alone(chosen, j)) && self.extend(chosen, covered | self.classes[i].zeros, size)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
}

/// Smallest essential cover of `{0,1}^n` using integer coefficients in
/// `[-coeff_bound, coeff_bound]` and constants in `(1/2)Z` within `[-const_bound, const_bound]`.
/// Polynomials with an empty zero set on the cube can never vanish alone and are skipped.
pub fn min_essential_cover(n: usize, coeff_bound: i64, const_bound: i64, max_size: usize, node_budget: u64) -> MinCoverReport {
    assert!((1..=5).contains(&n), "cube dimension must be between 1 and 5");
    let k = (2 * coeff_bound + 1) as usize;
    let mut seen: BTreeMap<Class, (Vec<i64>, i64)> = BTreeMap::new();
    for code in 0..k.pow(n as u32) {
        let mut rest = code;
        let a: Vec<i64> = (0..n)
            .map(|_| {
                let d = (rest % k) as i64 - coeff_bound;
                rest /= k;
                d
            })
            .collect();
        // constants c/2
        for c2 in -2 * const_bound..=2 * const_bound {
            let mut zeros = 0u64;
            for mask in 0..1u64 << n {
                let v: i64 = a.iter().enumerate().filter(|(i, _)| (mask >> i) & 1 == 1).map(|(_, x)| 2 * x).sum::<i64>() + c2;
                if v == 0 {
                    zeros |= 1 << mask;
                }
            }
            if zeros == 0 {
                continue;
            }
            let support = a.iter().enumerate().filter(|(_, x)| **x != 0).fold(0u32, |acc, (i, _)| acc | 1 << i);
            let norm = |a: &[i64], c2: i64| (a.iter().map(|x| x.abs()).sum::<i64>(), c2.abs());
            let entry = seen.entry(Class { zeros, support }).or_insert((a.clone(), c2));
            if norm(&a, c2) < norm(&entry.0, entry.1) {
                *entry = (a.clone(), c2);
            }
        }
    }
    // the zero polynomial is not allowed
    let entries: Vec<(Class, (Vec<i64>, i64))> =
        seen.into_iter().filter(|(_, (a, c2))| a.iter().any(|x| *x != 0) || *c2 != 0).collect();
    let classes: Vec<Class> = entries.iter().map(|(c, _)| *c).collect();
    let mut search = CoverSearch {
        classes: &classes,
        full: (1u64 << (1 << n)) - 1,
        all_vars: (1u32 << n) - 1,
        nodes: 0,
        budget: node_budget,
    };
    let mut none_below = 0;
    for size in 0..=max_size {
        let mut chosen = Vec::new();
        match search.extend(&mut chosen, 0, size) {
            Ok(true) => {
                let polys = chosen
                    .iter()
                    .map(|&i| {
                        let (a, c2) = &entries[i].1;
                        LinearPolynomial::new(a.iter().enumerate().map(|(v, &x)| (v, int(x))), rat(*c2, 2))
                    })
                    .collect();
                return MinCoverReport {
                    n,
                    min_found: Some(chosen.len()),
                    witness: Some(Cover::new((0..n).collect(), polys)),
                    none_below,
                    nodes: search.nodes,
                    budget_exhausted: false,
                };
            }
            Ok(false) => none_below = size + 1,
            Err(()) => {
                return MinCoverReport { n, min_found: None, witness: None, none_below, nodes: search.nodes, budget_exhausted: true }
            }
        }
    }
    MinCoverReport { n, min_found: None, witness: None, none_below, nodes: search.nodes, budget_exhausted: false }
}

/// Selected squares of the `n x n` grid: indices (1-based, over the
/// `(n-1)^2` unit squares) that are `2 (mod 3)` in both coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareSystem {
    pub n: usize,
    pub graph: Graph,
    /// `(row, column)` indices, row-major.
    pub squares: Vec<(usize, usize)>,
    /// Edge ids of each selected square: top, bottom, left, right.
    pub edges: Vec<[usize; 4]>,
}

/// Edge ids of unit square `(i, j)` (1-based) of `grid`: top, bottom, left, right.
pub fn square_edges(g: &Graph, n: usize, (i, j): (usize, usize)) -> [usize; 4] {
    let v = |r: usize, c: usize| r * n + c;
    let e = |a, b| g.edge_index(a, b).expect("grid edge");
    [
        e(v(i - 1, j - 1), v(i - 1, j)),
        e(v(i, j - 1), v(i, j)),
        e(v(i - 1, j - 1), v(i, j - 1)),
        e(v(i - 1, j), v(i, j)),
    ]
}

/// Unit squares of the `n x n` grid containing edge `e`.
pub fn squares_containing(g: &Graph, n: usize, e: usize) -> Vec<(usize, usize)> {
    let (a, b) = g.edges()[e];
    let (r, c) = (a / n, a % n);
    let mut out = Vec::new();
    if b == a + 1 {
        // horizontal edge on row r between columns c and c+1
        if r >= 1 {
            out.push((r, c + 1));
        }
        if r + 1 < n {
            out.push((r + 1, c + 1));
        }
    } else {
        if c >= 1 {
            out.push((r + 1, c));
        }
        if c + 1 < n {
            out.push((r + 1, c + 1));
        }
    }
    out
}

pub fn grid_squares(n: usize) -> Result<SquareSystem, CoverError> {
    if n < 6 || n % 3 != 0 {
        return Err(CoverError::NotMultipleOf3(n));
    }
    let graph = Graph::grid(n);
    let idx: Vec<usize> = (1..n).filter(|i| i % 3 == 2).collect();
    let squares: Vec<(usize, usize)> = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).collect();
    let edges = squares.iter().map(|&s| square_edges(&graph, n, s)).collect();
    Ok(SquareSystem { n, graph, squares, edges })
}

impl SquareSystem {
    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    /// Edges of the selected squares other than square `s`.
    pub fn k_s(&self, s: usize) -> BTreeSet<usize> {
        self.edges.iter().enumerate().filter(|(t, _)| *t != s).flat_map(|(_, e)| e.iter().copied()).collect()
    }

    /// Selected square owning edge `e`, if any.
    pub fn owner(&self, e: usize) -> Option<usize> {
        self.edges.iter().position(|es| es.contains(&e))
    }

    /// Whether square `s` has an edge on the outer face of the grid.
    pub fn on_perimeter(&self, s: usize) -> bool {
        let (i, j) = self.squares[s];
        i == 1 || j == 1 || i == self.n - 1 || j == self.n - 1
    }

    /// Minimum number of unit squares strictly between two selected squares
    /// sharing a row or column.
    pub fn min_gap(&self) -> Option<usize> {
        let mut gap = None;
        for (a, &(i, j)) in self.squares.iter().enumerate() {
            for &(k, l) in &self.squares[a + 1..] {
                let d = if i == k {
                    l.abs_diff(j)
                } else if j == l {
                    k.abs_diff(i)
                } else {
                    continue;
                };
                gap = Some(gap.map_or(d - 1, |g: usize| g.min(d - 1)));
            }
        }
        gap
    }

    /// Top-left corner vertex of square `s`.
    pub fn corner(&self, s: usize) -> usize {
        let (i, j) = self.squares[s];
        (i - 1) * self.n + (j - 1)
    }

    pub fn corners(&self, s: usize) -> [usize; 4] {
        let (i, j) = self.squares[s];
        let n = self.n;
        [(i - 1) * n + j - 1, (i - 1) * n + j, i * n + j - 1, i * n + j]
    }
}

/// How [`build_bs`] cleared the other selected squares.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsRoute {
    /// Critical assignment plus square flips only.
    Flips,
    /// A one-valued edge of another selected square lies on the outer face,
    /// so no second square contains it; the binary part was recomputed on a
    /// spanning forest avoiding the selected squares.
    Repair,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePoint {
    /// Values scaled by 2 per edge.
    pub scaled: Vec<i64>,
    pub route: BsRoute,
    pub flips: usize,
}

impl BasePoint {
    pub fn point(&self) -> Point {
        Point::from_scaled(&self.scaled, 2)
    }
}

/// Half-integral admissible point for square `s`: zero on the other selected
/// squares and fractional exactly on `s`.
pub fn build_bs(sys: &SquareSystem, charge: &Charging, s: usize) -> Result<BasePoint, CoverError> {
    if s >= sys.len() {
        return Err(CoverError::BadSquare(s));
    }
    let g = &sys.graph;
    if charge.len() != g.num_vertices() {
        return Err(CoverError::ChargingSize { expected: g.num_vertices(), got: charge.len() });
    }
    let crit = crate::antichain::critical_assignment(g, charge, sys.corner(s)).expect("grid is connected");
    let mut x: Vec<i64> = crit.0.iter().map(|v| if v.is_zero() { 0 } else { 2 }).collect();
    for &e in &sys.edges[s] {
        x[e] = 1;
    }
    let ks = sys.k_s(s);
    let mut flips = 0;
    let mut stuck = false;
    while let Some(&e) = ks.iter().find(|&&e| x[e] == 2) {
        let owner = sys.owner(e).expect("edge of a selected square");
        let Some(&other) = squares_containing(g, sys.n, e).iter().find(|&&q| q != sys.squares[owner]) else {
            stuck = true;
            break;
        };
        for f in square_edges(g, sys.n, other) {
            x[f] = 2 - x[f];
        }
        flips += 1;
    }
    if !stuck {
        return Ok(BasePoint { scaled: x, route: BsRoute::Flips, flips });
    }
    Ok(BasePoint { scaled: repair_bs(sys, charge, s)?, route: BsRoute::Repair, flips })
}

/// Binary values on edges outside `s` and the other selected squares,
/// satisfying the parity of every vertex except the corners of `s`.
fn repair_bs(sys: &SquareSystem, charge: &Charging, s: usize) -> Result<Vec<i64>, CoverError> {
    let g = &sys.graph;
    let nv = g.num_vertices();
    let ks = sys.k_s(s);
    let blocked = |e: usize| ks.contains(&e) || sys.edges[s].contains(&e);
    let free: BTreeSet<usize> = sys.corners(s).into_iter().collect();
    let mut x = vec![0i64; g.edges().len()];
    for &e in &sys.edges[s] {
        x[e] = 1;
    }
    let mut comp_seen = vec![false; nv];
    let starts: Vec<usize> = free.iter().copied().chain(0..nv).collect();
    for root in starts {
        if comp_seen[root] {
            continue;
        }
        let mut order = Vec::new();
        let mut parent = vec![None; nv];
        let mut queue = VecDeque::from([root]);
        comp_seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for (w, e) in g.neighbors(u) {
                if !blocked(e) && !comp_seen[w] {
                    comp_seen[w] = true;
                    parent[w] = Some((u, e));
                    queue.push_back(w);
                }
            }
        }
        let mut parity = vec![0u8; nv];
        for &u in order.iter().rev() {
            if let Some((p, e)) = parent[u] {
                if !free.contains(&u) && parity[u] != charge.get(u) {
                    x[e] = 2;
                    parity[u] ^= 1;
                    parity[p] ^= 1;
                }
            }
        }
        if !free.contains(&root) && parity[root] != charge.get(root) {
            return Err(CoverError::ChargeRepairImpossible);
        }
    }
    Ok(x)
}

/// Postconditions of a base point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BsCheck {
    pub admissible: bool,
    pub zero_on_ks: bool,
    pub fractional_exactly_on_s: bool,
}

impl BsCheck {
    pub fn ok(&self) -> bool {
        self.admissible && self.zero_on_ks && self.fractional_exactly_on_s
    }
}

pub fn check_bs(sys: &SquareSystem, formula: &Formula, s: usize, bs: &BasePoint) -> Result<BsCheck, CoverError> {
    let admissible = formula.system.is_satisfied_by(&bs.point())?;
    let ks = sys.k_s(s);
    let zero_on_ks = ks.iter().all(|&e| bs.scaled[e] == 0);
    let fractional_exactly_on_s = bs.scaled.iter().enumerate().all(|(e, &v)| (v == 1) == sys.edges[s].contains(&e));
    Ok(BsCheck { admissible, zero_on_ks, fractional_exactly_on_s })
}

/// Projection of a refutation's slab equations through `h_s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    /// Polynomials over `V_S` minus `s` (variable `t` is the selected square `t`).
    pub cover: Cover,
    /// Index (into the distinct queries) of the query behind each polynomial.
    pub sources: Vec<usize>,
    /// Queries dropped for an even coefficient sum on `s`.
    pub dropped_even: usize,
}

impl Projection {
    /// The sub-cube on `keep`, with the remaining square variables fixed to 0.
    pub fn restrict_to(&self, keep: &BTreeSet<usize>) -> Projection {
        let polys = self
            .cover
            .polys
            .iter()
            .map(|p| LinearPolynomial::new(p.coeffs.iter().filter(|(v, _)| keep.contains(v)).map(|(&v, c)| (v, c.clone())), p.constant.clone()))
            .collect();
        Projection {
            cover: Cover::new(self.cover.vars.iter().copied().filter(|v| keep.contains(v)).collect(), polys),
            sources: self.sources.clone(),
            dropped_even: self.dropped_even,
        }
    }
}

/// Polynomial `a·x - b + 1/2`, whose zero set is the slab of `(a, b)` on half-integral points.
pub fn slab_polynomial(q: &Query) -> LinearPolynomial {
    LinearPolynomial::new(q.coeffs.iter().map(|(&v, &c)| (v, int(c))), int(-q.b) + half())
}

/// Substitutes `h_s` into the slab polynomial of every query and keeps those
/// with an odd coefficient sum on the edges of `s`.
pub fn project_queries(queries: &[Query], sys: &SquareSystem, s: usize, bs: &BasePoint) -> Projection {
    let mut polys = Vec::new();
    let mut sources = Vec::new();
    let mut dropped_even = 0;
    for (qi, q) in queries.iter().enumerate() {
        let s_sum: i64 = sys.edges[s].iter().map(|e| q.coeffs.get(e).copied().unwrap_or(0)).sum();
        if s_sum.rem_euclid(2) == 0 {
            dropped_even += 1;
            continue;
        }
        let mut coeffs: Vec<(usize, Rational)> = Vec::new();
        let mut constant = int(-q.b) + half();
        for (&e, &mu) in &q.coeffs {
            match sys.owner(e) {
                Some(t) if t != s => coeffs.push((t, int(mu))),
                _ => constant += rat(mu * bs.scaled[e], 2),
            }
        }
        polys.push(LinearPolynomial::new(coeffs, constant));
        sources.push(qi);
    }
    let vars = (0..sys.len()).filter(|&t| t != s).collect();
    Projection { cover: Cover::new(vars, polys), sources, dropped_even }
}

pub fn project_proof(proof: &SpProof, sys: &SquareSystem, s: usize, bs: &BasePoint) -> Projection {
    project_queries(&proof.distinct_queries(), sys, s, bs)
}

/// Side of the grid and charge of a Tseitin formula on a grid.
pub fn grid_tseitin(formula: &Formula) -> Result<(usize, &Charging), CoverError> {
    match &formula.family {
        Family::Tseitin { graph, charge } => graph.grid_side().map(|n| (n, charge)).ok_or(CoverError::NotGridTseitin),
        _ => Err(CoverError::NotGridTseitin),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditStage {
    pub s: usize,
    /// Whether the projected polynomials cover the stage's sub-cube.
    pub covered: bool,
    /// Query indices of the essentialisation.
    pub l: Vec<usize>,
    /// Square variables mentioned by the essentialisation.
    pub m: Vec<usize>,
    /// `|L| >= |M|^0.52`.
    pub bound_ok: bool,
    pub essential: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridAudit {
    pub n: usize,
    pub squares: usize,
    pub stages: Vec<AuditStage>,
    pub sum_m: usize,
    pub disjoint: bool,
    pub exhausted: bool,
}

impl GridAudit {
    pub fn ok(&self) -> bool {
        self.disjoint && self.exhausted && self.stages.iter().all(|s| s.covered && s.bound_ok && s.essential)
    }
}

/// `l >= m^(13/25)`, decided exactly.
pub fn power_bound_ok(l: usize, m: usize) -> bool {
    if m <= 1 || l >= m {
        return l >= m.min(1);
    }
    // l < m <= 24 here, so both powers fit in u128
    (l as u128).pow(25) >= (m as u128).pow(13)
}

/// Greedy staging: pick the lowest remaining square `s`, essentialise the
/// projection onto the remaining squares' sub-cube, record `(L, M)` and drop
/// `M` and `s` from the remaining squares.
pub fn grid_lowerbound_audit(proof: &SpProof, formula: &Formula) -> Result<GridAudit, CoverError> {
    let (n, charge) = grid_tseitin(formula)?;
    let sys = grid_squares(n)?;
    let queries = proof.distinct_queries();
    let mut remaining: BTreeSet<usize> = (0..sys.len()).collect();
    let mut stages = Vec::new();
    while let Some(&s) = remaining.iter().next() {
        let bs = build_bs(&sys, charge, s)?;
        let mut keep = remaining.clone();
        keep.remove(&s);
        let proj = project_queries(&queries, &sys, s, &bs).restrict_to(&keep);
        remaining.remove(&s);
        match essentialise(&proj.cover) {
            Ok(ess) => {
                let l: Vec<usize> = ess.kept.iter().map(|&i| proj.sources[i]).collect();
                let m = ess.cover.vars.clone();
                for t in &m {
                    remaining.remove(t);
                }
                stages.push(AuditStage {
                    s,
                    covered: true,
                    bound_ok: power_bound_ok(l.len(), m.len()),
                    essential: cover_check(&ess.cover)?.is_essential(),
                    l,
                    m,
                });
            }
            Err(CoverError::NotACover) => {
                stages.push(AuditStage { s, covered: false, l: Vec::new(), m: Vec::new(), bound_ok: false, essential: false });
            }
            Err(e) => return Err(e),
        }
    }
    let mut seen = BTreeSet::new();
    let disjoint = stages.iter().flat_map(|st| st.l.iter()).all(|q| seen.insert(*q));
    let union: BTreeSet<usize> = stages.iter().flat_map(|st| st.m.iter().copied().chain([st.s])).collect();
    let exhausted = union == (0..sys.len()).collect();
    let sum_m = stages.iter().map(|st| st.m.len()).sum();
    Ok(GridAudit { n, squares: sys.len(), stages, sum_m, disjoint, exhausted })
}
