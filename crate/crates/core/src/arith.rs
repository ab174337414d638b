//! Exact rational arithmetic and integer linear inequalities.
//!
//! Every verifier in the crate bottoms out here: values are `BigRational`,
//! inequality coefficients are machine integers, and nothing is ever rounded.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Map, Value};
use thiserror::Error;

pub type Rational = BigRational;

/// Builds `num/den` in lowest terms. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// Renders a rational as `"p"` or `"p/q"`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    let bad = || ArithError::BadRational(s.to_string());
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("inequality references undeclared variable id {0}")]
    UndeclaredVariable(usize),
    #[error("point has no value for variable id {0}")]
    MissingAssignment(usize),
    #[error("expected {expected} multipliers, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed rational {0:?}")]
    BadRational(String),
    #[error("malformed system JSON: {0}")]
    Json(String),
    #[error("duplicate variable name {0:?}")]
    DuplicateVariable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sense {
    Ge,
    Le,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Ge => "GE",
            Sense::Le => "LE",
        }
    }
}

/// `sum coeffs[v] * x_v (>= | <=) bound` with integral data.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearInequality {
    pub coeffs: BTreeMap<usize, i64>,
    pub sense: Sense,
    pub bound: i64,
}

impl LinearInequality {
    pub fn new(coeffs: impl IntoIterator<Item = (usize, i64)>, sense: Sense, bound: i64) -> Self {
        let mut map = BTreeMap::new();
        for (v, c) in coeffs {
            *map.entry(v).or_insert(0) += c;
        }
        map.retain(|_, c| *c != 0);
        LinearInequality { coeffs: map, sense, bound }
    }

    pub fn ge(coeffs: impl IntoIterator<Item = (usize, i64)>, bound: i64) -> Self {
        Self::new(coeffs, Sense::Ge, bound)
    }

    pub fn le(coeffs: impl IntoIterator<Item = (usize, i64)>, bound: i64) -> Self {
        Self::new(coeffs, Sense::Le, bound)
    }

    /// The same half-space written as `a·x >= b`.
    pub fn to_ge(&self) -> LinearInequality {
        match self.sense {
            Sense::Ge => self.clone(),
            Sense::Le => LinearInequality {
                coeffs: self.coeffs.iter().map(|(&v, &c)| (v, -c)).collect(),
                sense: Sense::Ge,
                bound: -self.bound,
            },
        }
    }

    pub fn width(&self) -> usize {
        self.coeffs.len()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn lhs(&self, point: &Point) -> Result<Rational, ArithError> {
        let mut acc = Rational::zero();
        for (&v, &c) in &self.coeffs {
            let x = point.get(v).ok_or(ArithError::MissingAssignment(v))?;
            acc += x * BigInt::from(c);
        }
        Ok(acc)
    }

    pub fn holds_at(&self, value: &Rational) -> bool {
        let b = int(self.bound);
        match self.sense {
            Sense::Ge => *value >= b,
            Sense::Le => *value <= b,
        }
    }

    pub fn is_satisfied_by(&self, point: &Point) -> Result<bool, ArithError> {
        Ok(self.holds_at(&self.lhs(point)?))
    }

    /// Integer evaluation on a point given as integers scaled by `scale`.
    /// Returns whether the inequality holds at `scaled / scale`.
    pub fn holds_scaled(&self, scaled: &[i64], scale: i64) -> bool {
        let lhs: i128 = self.coeffs.iter().map(|(&v, &c)| i128::from(c) * i128::from(scaled[v])).sum();
        let rhs = i128::from(self.bound) * i128::from(scale);
        match self.sense {
            Sense::Ge => lhs >= rhs,
            Sense::Le => lhs <= rhs,
        }
    }

    /// True when every point of the box `[0,1]^vars` satisfies the inequality.
    pub fn is_box_trivial(&self) -> bool {
        let ge = self.to_ge();
        let min: i64 = ge.coeffs.values().filter(|c| **c < 0).sum();
        min >= ge.bound
    }

    pub fn display_with(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (i, (&v, &c)) in self.coeffs.iter().enumerate() {
            let name = names.get(v).map(String::as_str).unwrap_or("?");
            if i == 0 {
                match c {
                    1 => s.push_str(name),
                    -1 => s.push_str(&format!("-{name}")),
                    _ => s.push_str(&format!("{c}{name}")),
                }
            } else if c == 1 {
                s.push_str(&format!(" + {name}"));
            } else if c == -1 {
                s.push_str(&format!(" - {name}"));
            } else if c < 0 {
                s.push_str(&format!(" - {}{name}", -c));
            } else {
                s.push_str(&format!(" + {c}{name}"));
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        let op = match self.sense {
            Sense::Ge => ">=",
            Sense::Le => "<=",
        };
        format!("{s} {op} {}", self.bound)
    }
}

/// A dense assignment indexed by variable id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point(pub Vec<Rational>);

impl Point {
    pub fn get(&self, v: usize) -> Option<&Rational> {
        self.0.get(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn constant(n: usize, value: Rational) -> Self {
        Point(vec![value; n])
    }

    pub fn from_scaled(scaled: &[i64], scale: i64) -> Self {
        Point(scaled.iter().map(|&x| rat(x, scale)).collect())
    }

    pub fn is_binary(&self) -> bool {
        self.0.iter().all(|x| x.is_zero() || *x == int(1))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub satisfied: bool,
    pub value: Rational,
}

pub fn evaluate(ineq: &LinearInequality, point: &Point) -> Result<Evaluation, ArithError> {
    let value = ineq.lhs(point)?;
    Ok(Evaluation { satisfied: ineq.holds_at(&value), value })
}

/// An ordered list of inequalities over a declared, named variable set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSystem {
    vars: Vec<String>,
    ineqs: Vec<LinearInequality>,
}

impl LinearSystem {
    pub fn new(vars: Vec<String>, ineqs: Vec<LinearInequality>) -> Result<Self, ArithError> {
        let mut seen = std::collections::HashSet::new();
        for v in &vars {
            if !seen.insert(v.as_str()) {
                return Err(ArithError::DuplicateVariable(v.clone()));
            }
        }
        for q in &ineqs {
            if let Some(v) = q.max_var() {
                if v >= vars.len() {
                    return Err(ArithError::UndeclaredVariable(v));
                }
            }
        }
        Ok(LinearSystem { vars, ineqs })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn ineqs(&self) -> &[LinearInequality] {
        &self.ineqs
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        self.ineqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ineqs.is_empty()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Appends inequalities over the same variables.
    pub fn extended(&self, extra: impl IntoIterator<Item = LinearInequality>) -> Result<Self, ArithError> {
        let mut ineqs = self.ineqs.clone();
        ineqs.extend(extra);
        LinearSystem::new(self.vars.clone(), ineqs)
    }

    /// `0 <= x_v <= 1` for every variable, in variable order (lower first).
    pub fn box_rows(&self) -> Vec<LinearInequality> {
        (0..self.vars.len())
            .flat_map(|v| [LinearInequality::ge([(v, 1)], 0), LinearInequality::le([(v, 1)], 1)])
            .collect()
    }

    pub fn is_satisfied_by(&self, point: &Point) -> Result<bool, ArithError> {
        for q in &self.ineqs {
            if !q.is_satisfied_by(point)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> Value {
        let ineqs: Vec<Value> = self.ineqs.iter().map(|q| ineq_to_json(q, &self.vars)).collect();
        json!({ "vars": self.vars, "ineqs": ineqs })
    }

    pub fn from_json(v: &Value) -> Result<Self, ArithError> {
        let err = |m: &str| ArithError::Json(m.to_string());
        let vars: Vec<String> = v
            .get("vars")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing vars"))?
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| err("var name not a string")))
            .collect::<Result<_, _>>()?;
        let index: std::collections::HashMap<&str, usize> =
            vars.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let ineqs = v
            .get("ineqs")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing ineqs"))?
            .iter()
            .map(|q| ineq_from_json(q, &index))
            .collect::<Result<_, _>>()?;
        LinearSystem::new(vars, ineqs)
    }
}

pub(crate) fn ineq_from_json(
    q: &Value,
    index: &std::collections::HashMap<&str, usize>,
) -> Result<LinearInequality, ArithError> {
    let err = |m: &str| ArithError::Json(m.to_string());
    let coeffs = q.get("coeffs").and_then(Value::as_object).ok_or_else(|| err("missing coeffs"))?;
    let mut cs = Vec::new();
    for (name, c) in coeffs {
        let id = *index.get(name.as_str()).ok_or_else(|| ArithError::Json(format!("undeclared variable {name:?}")))?;
        cs.push((id, c.as_i64().ok_or_else(|| err("coefficient not an integer"))?));
    }
    let sense = match q.get("sense").and_then(Value::as_str) {
        Some("GE") => Sense::Ge,
        Some("LE") => Sense::Le,
        _ => return Err(err("sense must be GE or LE")),
    };
    let bound = q.get("bound").and_then(Value::as_i64).ok_or_else(|| err("bound not an integer"))?;
    Ok(LinearInequality::new(cs, sense, bound))
}

pub(crate) fn ineq_to_json(q: &LinearInequality, names: &[String]) -> Value {
    let mut coeffs = Map::new();
    for (&v, &c) in &q.coeffs {
        coeffs.insert(names[v].clone(), json!(c));
    }
    json!({ "coeffs": coeffs, "sense": q.sense.as_str(), "bound": q.bound })
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.ineqs {
            writeln!(f, "{}", q.display_with(&self.vars))?;
        }
        Ok(())
    }
}
