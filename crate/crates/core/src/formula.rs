//! Generators for the formula families: simple pigeonhole, pigeonhole,
//! Tseitin over complete and grid graphs, and the linear ordering principle.

use std::collections::BTreeSet;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arith::{ArithError, LinearInequality, LinearSystem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("parameter n = {n} is below the minimum {min}")]
    NTooSmall { n: usize, min: usize },
    #[error("pigeonhole needs m > n >= 1, got m = {m}, n = {n}")]
    BadDimensions { m: usize, n: usize },
    #[error("charging has even total weight")]
    EvenCharging,
    #[error("charging has {got} entries but the graph has {expected} vertices")]
    ChargingSize { expected: usize, got: usize },
    #[error("vertex {vertex} has degree {degree} > {max}")]
    DegreeTooHigh { vertex: usize, degree: usize, max: usize },
    #[error("graph edge ({0}, {1}) is a loop, duplicate or out of range")]
    BadEdge(usize, usize),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("malformed formula JSON: {0}")]
    Json(String),
}

/// Simple undirected graph on vertices `0..n`, edges stored as sorted `(u, v)` with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    grid_side: Option<usize>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, FormulaError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if u == v || v >= n || !set.insert((u, v)) {
                return Err(FormulaError::BadEdge(a, b));
            }
        }
        Ok(Graph { n, edges: set.into_iter().collect(), grid_side: None })
    }

    /// `K_n`.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph { n, edges, grid_side: None }
    }

    /// The `n x n` grid `H_n`; vertex `(r, c)` (0-based) has id `r * n + c`.
    pub fn grid(n: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let u = r * n + c;
                if c + 1 < n {
                    edges.push((u, u + 1));
                }
                if r + 1 < n {
                    edges.push((u, u + n));
                }
            }
        }
        edges.sort_unstable();
        Graph { n: n * n, edges, grid_side: Some(n) }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn grid_side(&self) -> Option<usize> {
        self.grid_side
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search(&key).ok()
    }

    /// Indices of edges incident to `v`, ascending.
    pub fn incident(&self, v: usize) -> Vec<usize> {
        self.edges.iter().enumerate().filter(|(_, &(a, b))| a == v || b == v).map(|(i, _)| i).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn neighbors(&self, v: usize) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, &(a, b))| {
                if a == v {
                    Some((b, i))
                } else if b == v {
                    Some((a, i))
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for (w, _) in self.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertex_name(&self, v: usize) -> String {
        match self.grid_side {
            Some(s) => format!("{}_{}", v / s + 1, v % s + 1),
            None => (v + 1).to_string(),
        }
    }

    /// Variable name of edge `i`: `h{r}_{c}` / `v{r}_{c}` on grids, `x{u}_{v}` otherwise (1-based).
    pub fn edge_name(&self, i: usize) -> String {
        let (u, v) = self.edges[i];
        match self.grid_side {
            Some(s) => {
                let (r, c) = (u / s + 1, u % s + 1);
                if v == u + 1 {
                    format!("h{r}_{c}")
                } else {
                    format!("v{r}_{c}")
                }
            }
            None => format!("x{}_{}", u + 1, v + 1),
        }
    }
}

/// Odd 0/1 vertex labelling.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Charging(Vec<u8>);

impl Charging {
    pub fn new(bits: Vec<u8>) -> Result<Self, FormulaError> {
        let bits: Vec<u8> = bits.into_iter().map(|b| b & 1).collect();
        if bits.iter().map(|&b| b as usize).sum::<usize>() % 2 == 0 {
            return Err(FormulaError::EvenCharging);
        }
        Ok(Charging(bits))
    }

    /// Charge 1 on `v` only.
    pub fn indicator(n: usize, v: usize) -> Self {
        let mut bits = vec![0; n];
        bits[v] = 1;
        Charging(bits)
    }

    pub fn get(&self, v: usize) -> u8 {
        self.0[v]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Sphp { n: usize },
    Php { pigeons: usize, holes: usize },
    Tseitin { graph: Graph, charge: Charging },
    Lop { n: usize, paper_literal: bool },
    Custom,
}

impl Family {
    /// Domain-size parameter of the family instance.
    pub fn size(&self) -> Option<usize> {
        match self {
            Family::Sphp { n } | Family::Lop { n, .. } => Some(*n),
            Family::Php { holes, .. } => Some(*holes),
            Family::Tseitin { graph, .. } => Some(graph.num_vertices()),
            Family::Custom => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Sphp { .. } => "sphp",
            Family::Php { .. } => "php",
            Family::Tseitin { .. } => "tseitin",
            Family::Lop { .. } => "lop",
            Family::Custom => "custom",
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Family::Sphp { n } => json!({ "kind": "sphp", "n": n }),
            Family::Php { pigeons, holes } => json!({ "kind": "php", "m": pigeons, "n": holes }),
            Family::Tseitin { graph, charge } => {
                let edges: Vec<Value> = graph.edges().iter().map(|&(u, v)| json!([u, v])).collect();
                json!({
                    "kind": "tseitin",
                    "vertices": graph.num_vertices(),
                    "grid_side": graph.grid_side(),
                    "edges": edges,
                    "charge": charge.bits(),
                })
            }
            Family::Lop { n, paper_literal } => json!({ "kind": "lop", "n": n, "paper_literal": paper_literal }),
            Family::Custom => json!({ "kind": "custom" }),
        }
    }

    fn from_json(v: &Value) -> Result<Self, FormulaError> {
        let err = |m: &str| FormulaError::Json(m.to_string());
        let usize_of = |k: &str| v.get(k).and_then(Value::as_u64).map(|x| x as usize).ok_or_else(|| err(k));
        match v.get("kind").and_then(Value::as_str) {
            Some("sphp") => Ok(Family::Sphp { n: usize_of("n")? }),
            Some("php") => Ok(Family::Php { pigeons: usize_of("m")?, holes: usize_of("n")? }),
            Some("lop") => Ok(Family::Lop {
                n: usize_of("n")?,
                paper_literal: v.get("paper_literal").and_then(Value::as_bool).unwrap_or(false),
            }),
            Some("tseitin") => {
                let n = usize_of("vertices")?;
                let side = v.get("grid_side").and_then(Value::as_u64).map(|x| x as usize);
                let graph = match side {
                    Some(s) if s * s == n => Graph::grid(s),
                    _ => {
                        let edges = v
                            .get("edges")
                            .and_then(Value::as_array)
                            .ok_or_else(|| err("edges"))?
                            .iter()
                            .map(|e| {
                                let a = e.get(0).and_then(Value::as_u64).ok_or_else(|| err("edge"))?;
                                let b = e.get(1).and_then(Value::as_u64).ok_or_else(|| err("edge"))?;
                                Ok((a as usize, b as usize))
                            })
                            .collect::<Result<Vec<_>, FormulaError>>()?;
                        Graph::new(n, edges)?
                    }
                };
                let bits = v
                    .get("charge")
                    .and_then(Value::as_array)
                    .ok_or_else(|| err("charge"))?
                    .iter()
                    .map(|b| b.as_u64().map(|b| b as u8).ok_or_else(|| err("charge bit")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Family::Tseitin { graph, charge: Charging::new(bits)? })
            }
            Some("custom") | None => Ok(Family::Custom),
            Some(k) => Err(FormulaError::Json(format!("unknown family {k:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    pub system: LinearSystem,
    pub family: Family,
}

impl Formula {
    pub fn custom(system: LinearSystem) -> Self {
        Formula { system, family: Family::Custom }
    }

    /// Number of variables (the family's variable-count function at this size).
    pub fn nu(&self) -> usize {
        self.system.num_vars()
    }

    pub fn vars(&self) -> &[String] {
        self.system.vars()
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.system.to_json();
        v.as_object_mut().expect("object").insert("family".into(), self.family.to_json());
        v
    }

    pub fn from_json(v: &Value) -> Result<Self, FormulaError> {
        let system = LinearSystem::from_json(v)?;
        let family = match v.get("family") {
            Some(f) => Family::from_json(f)?,
            None => Family::Custom,
        };
        Ok(Formula { system, family })
    }

    /// Canonical compact JSON text.
    pub fn canonical_text(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("serializable")
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Pairwise caps `x_i + x_j <= 1` (lexicographic) followed by `sum x_i >= 2`.
pub fn gen_sphp(n: usize) -> Result<Formula, FormulaError> {
    if n < 3 {
        return Err(FormulaError::NTooSmall { n, min: 3 });
    }
    let mut ineqs = Vec::with_capacity(1 + n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            ineqs.push(LinearInequality::le([(i, 1), (j, 1)], 1));
        }
    }
    ineqs.push(LinearInequality::ge((0..n).map(|i| (i, 1)), 2));
    Ok(Formula { system: LinearSystem::new(names("x", n), ineqs)?, family: Family::Sphp { n } })
}

/// Variable id of `P_{i,j}` (pigeon `i`, hole `j`, both 0-based) in `gen_php`.
pub fn php_var(holes: usize, i: usize, j: usize) -> usize {
    i * holes + j
}

/// `m` pigeon axioms, then the hole axioms grouped by hole.
pub fn gen_php(m: usize, n: usize) -> Result<Formula, FormulaError> {
    if n < 1 || m <= n {
        return Err(FormulaError::BadDimensions { m, n });
    }
    let vars = (1..=m).flat_map(|i| (1..=n).map(move |j| format!("P{i}_{j}"))).collect();
    let mut ineqs = Vec::new();
    for i in 0..m {
        ineqs.push(LinearInequality::ge((0..n).map(|j| (php_var(n, i, j), 1)), 1));
    }
    for k in 0..n {
        for i in 0..m {
            for j in i + 1..m {
                ineqs.push(LinearInequality::le([(php_var(n, i, k), 1), (php_var(n, j, k), 1)], 1));
            }
        }
    }
    Ok(Formula { system: LinearSystem::new(vars, ineqs)?, family: Family::Php { pigeons: m, holes: n } })
}

pub const MAX_TSEITIN_DEGREE: usize = 8;

/// Clause inequalities of the parity constraint `sum x_e = charge (mod 2)` over `edges`.
///
/// Falsifying patterns are enumerated in binary order with the first edge as
/// the most significant bit.
pub fn parity_clauses(edges: &[usize], charge: u8) -> Vec<LinearInequality> {
    let d = edges.len();
    let mut out = Vec::new();
    for t in 0u32..(1 << d) {
        if (t.count_ones() as u8 & 1) == (charge & 1) {
            continue;
        }
        let mut coeffs = Vec::with_capacity(d);
        let mut negated = 0i64;
        for (k, &e) in edges.iter().enumerate() {
            if (t >> (d - 1 - k)) & 1 == 1 {
                coeffs.push((e, -1));
                negated += 1;
            } else {
                coeffs.push((e, 1));
            }
        }
        out.push(LinearInequality::ge(coeffs, 1 - negated));
    }
    out
}

pub fn gen_tseitin(graph: &Graph, charge: &Charging) -> Result<Formula, FormulaError> {
    if charge.len() != graph.num_vertices() {
        return Err(FormulaError::ChargingSize { expected: graph.num_vertices(), got: charge.len() });
    }
    if charge.bits().iter().map(|&b| b as usize).sum::<usize>() % 2 == 0 {
        return Err(FormulaError::EvenCharging);
    }
    let mut ineqs = Vec::new();
    for v in 0..graph.num_vertices() {
        let inc = graph.incident(v);
        if inc.len() > MAX_TSEITIN_DEGREE {
            return Err(FormulaError::DegreeTooHigh { vertex: v, degree: inc.len(), max: MAX_TSEITIN_DEGREE });
        }
        ineqs.extend(parity_clauses(&inc, charge.get(v)));
    }
    let vars = (0..graph.edges().len()).map(|i| graph.edge_name(i)).collect();
    Ok(Formula {
        system: LinearSystem::new(vars, ineqs)?,
        family: Family::Tseitin { graph: graph.clone(), charge: charge.clone() },
    })
}

/// Variable id of `P_{i,j}`, `i < j` (0-based), in `gen_lop`.
pub fn lop_var(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // pairs (0,1)..(0,n-1), (1,2).. in lexicographic order
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Accumulates `coeff * P_{a,b}` for ordered `a != b`, rewriting `P_{a,b}`
/// with `a > b` as `1 - P_{b,a}`. Returns the constant moved out.
fn lop_term(n: usize, a: usize, b: usize, coeff: i64, acc: &mut Vec<(usize, i64)>) -> i64 {
    if a < b {
        acc.push((lop_var(n, a, b), coeff));
        0
    } else {
        acc.push((lop_var(n, b, a), -coeff));
        coeff
    }
}

/// Linear ordering principle over `P_{i,j}`, `i < j` only (`P_{i,j} = 1` means
/// `i` precedes `j`). Transitivity is emitted for every ordered triple with
/// right-hand side -1; `paper_literal` uses +1 instead.
pub fn gen_lop(n: usize, paper_literal: bool) -> Result<Formula, FormulaError> {
    if n < 3 {
        return Err(FormulaError::NTooSmall { n, min: 3 });
    }
    let vars = (0..n).flat_map(|i| (i + 1..n).map(move |j| format!("P{}_{}", i + 1, j + 1))).collect();
    let rhs = if paper_literal { 1 } else { -1 };
    let mut ineqs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                // P_ik - P_ij - P_jk >= rhs
                let mut acc = Vec::new();
                let mut constant = 0;
                constant += lop_term(n, i, k, 1, &mut acc);
                constant += lop_term(n, i, j, -1, &mut acc);
                constant += lop_term(n, j, k, -1, &mut acc);
                ineqs.push(LinearInequality::ge(acc, rhs - constant));
            }
        }
    }
    for j in 0..n {
        let mut acc = Vec::new();
        let mut constant = 0;
        for i in 0..n {
            if i != j {
                constant += lop_term(n, i, j, 1, &mut acc);
            }
        }
        ineqs.push(LinearInequality::ge(acc, 1 - constant));
    }
    Ok(Formula { system: LinearSystem::new(vars, ineqs)?, family: Family::Lop { n, paper_literal } })
}
