//! Cutting Planes derivations: lines in `>=`-form, the checker with rank
//! accounting, and the rank-1 refutation of the simple pigeonhole formula.

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Value};
use thiserror::Error;

use crate::arith::{ineq_from_json, ineq_to_json, ArithError, LinearInequality};
use crate::formula::{gen_sphp, Formula, FormulaError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CpError {
    #[error("line {line}: rounding by {alpha} does not divide every coefficient")]
    BadDivisibility { line: usize, alpha: i64 },
    #[error("line {line}: multiplier {value} is not a positive integer")]
    NonPositiveMultiplier { line: usize, value: i64 },
    #[error("line {line}: parent {parent} is not an earlier line")]
    BadParent { line: usize, parent: usize },
    #[error("line {line}: axiom index {index} out of range")]
    AxiomOutOfRange { line: usize, index: usize },
    #[error("line {line}: variable {var} is not declared")]
    UnknownVariable { line: usize, var: usize },
    #[error("line {line}: stated inequality differs from the rule's conclusion")]
    LineMismatch { line: usize },
    #[error("sink {0} is not a line of the proof")]
    BadSink(usize),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("malformed CP proof JSON: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CpRule {
    /// Formula inequality by index.
    Axiom(usize),
    /// `x >= 0`, or `-x >= -1` when `upper`.
    BooleanAxiom { var: usize, upper: bool },
    /// `alpha * first + beta * second`.
    Combination { first: usize, alpha: i64, second: usize, beta: i64 },
    /// Divide by `alpha` and round the bound up.
    Rounding { parent: usize, alpha: i64 },
}

/// Proof line; the inequality is always stored in `>=`-form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpLine {
    pub ineq: LinearInequality,
    pub rule: CpRule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpProof {
    pub lines: Vec<CpLine>,
    pub sink: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpReport {
    /// Every rule checked and the sink is `0 >= c` with `c >= 1`.
    pub ok: bool,
    pub rank: usize,
    pub length: usize,
    /// Total bits over all line coefficients and bounds.
    pub size: u64,
}

fn combine(a: &LinearInequality, alpha: i64, b: &LinearInequality, beta: i64) -> LinearInequality {
    let coeffs = a.coeffs.iter().map(|(&v, &c)| (v, alpha * c)).chain(b.coeffs.iter().map(|(&v, &c)| (v, beta * c)));
    LinearInequality::ge(coeffs, alpha * a.bound + beta * b.bound)
}

fn round(a: &LinearInequality, alpha: i64) -> Option<LinearInequality> {
    if alpha < 1 || a.coeffs.values().any(|c| c % alpha != 0) {
        return None;
    }
    let bound = a.bound.div_euclid(alpha) + i64::from(a.bound.rem_euclid(alpha) != 0);
    Some(LinearInequality::ge(a.coeffs.iter().map(|(&v, &c)| (v, c / alpha)), bound))
}

fn bits(c: i64) -> u64 {
    1 + (64 - c.unsigned_abs().leading_zeros()) as u64
}

/// Rechecks every rule application and computes the rank by longest path over rounding counts.
pub fn cp_verify(proof: &CpProof, formula: &Formula) -> Result<CpReport, CpError> {
    let axioms = formula.system.ineqs();
    let n = formula.nu();
    let mut rank = vec![0usize; proof.lines.len()];
    let mut size = 0;
    for (i, line) in proof.lines.iter().enumerate() {
        let parent = |p: usize| if p < i { Ok(&proof.lines[p].ineq) } else { Err(CpError::BadParent { line: i, parent: p }) };
        let expected = match line.rule {
            CpRule::Axiom(k) => axioms.get(k).ok_or(CpError::AxiomOutOfRange { line: i, index: k })?.to_ge(),
            CpRule::BooleanAxiom { var, upper } => {
                if var >= n {
                    return Err(CpError::UnknownVariable { line: i, var });
                }
                if upper {
                    LinearInequality::ge([(var, -1)], -1)
                } else {
                    LinearInequality::ge([(var, 1)], 0)
                }
            }
            CpRule::Combination { first, alpha, second, beta } => {
                for m in [alpha, beta] {
                    if m < 1 {
                        return Err(CpError::NonPositiveMultiplier { line: i, value: m });
                    }
                }
                rank[i] = rank[first.min(i)].max(rank[second.min(i)]);
                combine(parent(first)?, alpha, parent(second)?, beta)
            }
            CpRule::Rounding { parent: p, alpha } => {
                if alpha < 1 {
                    return Err(CpError::NonPositiveMultiplier { line: i, value: alpha });
                }
                let r = round(parent(p)?, alpha).ok_or(CpError::BadDivisibility { line: i, alpha })?;
                rank[i] = rank[p] + 1;
                r
            }
        };
        if line.ineq.to_ge() != expected {
            return Err(CpError::LineMismatch { line: i });
        }
        if let Some(&var) = line.ineq.coeffs.keys().find(|&&v| v >= n) {
            return Err(CpError::UnknownVariable { line: i, var });
        }
        size += line.ineq.coeffs.values().map(|&c| bits(c)).sum::<u64>() + bits(line.ineq.bound);
    }
    let sink = proof.lines.get(proof.sink).ok_or(CpError::BadSink(proof.sink))?;
    let sink_ge = sink.ineq.to_ge();
    let ok = sink_ge.coeffs.is_empty() && sink_ge.bound >= 1;
    Ok(CpReport { ok, rank: rank[proof.sink], length: proof.lines.len(), size })
}

struct Builder {
    lines: Vec<CpLine>,
}

impl Builder {
    fn push(&mut self, ineq: LinearInequality, rule: CpRule) -> usize {
        self.lines.push(CpLine { ineq, rule });
        self.lines.len() - 1
    }

    fn axiom(&mut self, f: &Formula, k: usize) -> usize {
        self.push(f.system.ineqs()[k].to_ge(), CpRule::Axiom(k))
    }

    fn add(&mut self, first: usize, second: usize) -> usize {
        let ineq = combine(&self.lines[first].ineq, 1, &self.lines[second].ineq, 1);
        self.push(ineq, CpRule::Combination { first, alpha: 1, second, beta: 1 })
    }

    fn round(&mut self, parent: usize, alpha: i64) -> usize {
        let ineq = round(&self.lines[parent].ineq, alpha).expect("divisible");
        self.push(ineq, CpRule::Rounding { parent, alpha })
    }
}

/// For each `i`: the caps on `x_i` plus `S >= 2` give `-(n-2) x_i >= -(n-3)`,
/// one rounding gives `-x_i >= 0`; summing these against `S >= 2` yields `0 >= 2`.
pub fn build_sphp_rank1(n: usize) -> Result<(Formula, CpProof), CpError> {
    let f = gen_sphp(n)?;
    let mut cap = BTreeMap::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            cap.insert((i, j), k);
            k += 1;
        }
    }
    let sum_axiom = k;
    let mut b = Builder { lines: Vec::new() };
    let axiom_line: Vec<usize> = (0..=sum_axiom).map(|k| b.axiom(&f, k)).collect();
    let mut zeros = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = axiom_line[sum_axiom];
        for j in (0..n).filter(|&j| j != i) {
            acc = b.add(acc, axiom_line[cap[&(i.min(j), i.max(j))]]);
        }
        // acc: -(n-2) x_i >= -(n-3)
        let line = if n > 3 { b.round(acc, n as i64 - 2) } else { acc };
        zeros.push(line);
    }
    let mut acc = axiom_line[sum_axiom];
    for z in zeros {
        acc = b.add(acc, z);
    }
    Ok((f, CpProof { lines: b.lines, sink: acc }))
}

impl CpProof {
    pub fn to_json(&self, formula: &Formula) -> Value {
        let vars = formula.vars();
        let lines: Vec<Value> = self
            .lines
            .iter()
            .map(|l| {
                let mut v = match &l.rule {
                    CpRule::Axiom(k) => json!({ "rule": "axiom", "index": k }),
                    CpRule::BooleanAxiom { var, upper } => json!({ "rule": "boolean", "var": vars[*var], "upper": upper }),
                    CpRule::Combination { first, alpha, second, beta } => {
                        json!({ "rule": "combination", "parents": [first, second], "multipliers": [alpha, beta] })
                    }
                    CpRule::Rounding { parent, alpha } => json!({ "rule": "rounding", "parent": parent, "alpha": alpha }),
                };
                v.as_object_mut().expect("object").insert("ineq".into(), ineq_to_json(&l.ineq, vars));
                v
            })
            .collect();
        json!({ "formula": formula.hash(), "sink": self.sink, "lines": lines })
    }

    pub fn from_json(v: &Value, formula: &Formula) -> Result<CpProof, CpError> {
        let err = |m: &str| CpError::Json(m.to_string());
        let index: HashMap<&str, usize> = formula.vars().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let uint = |l: &Value, k: &str| l.get(k).and_then(Value::as_u64).map(|x| x as usize).ok_or_else(|| err(k));
        let int_pair = |l: &Value, k: &str| -> Result<(i64, i64), CpError> {
            let a = l.get(k).and_then(Value::as_array).filter(|a| a.len() == 2).ok_or_else(|| err(k))?;
            Ok((a[0].as_i64().ok_or_else(|| err(k))?, a[1].as_i64().ok_or_else(|| err(k))?))
        };
        let mut lines = Vec::new();
        for l in v.get("lines").and_then(Value::as_array).ok_or_else(|| err("lines"))? {
            let rule = match l.get("rule").and_then(Value::as_str) {
                Some("axiom") => CpRule::Axiom(uint(l, "index")?),
                Some("boolean") => {
                    let name = l.get("var").and_then(Value::as_str).ok_or_else(|| err("var"))?;
                    CpRule::BooleanAxiom {
                        var: *index.get(name).ok_or_else(|| CpError::Json(format!("undeclared variable {name:?}")))?,
                        upper: l.get("upper").and_then(Value::as_bool).ok_or_else(|| err("upper"))?,
                    }
                }
                Some("combination") => {
                    let (first, second) = int_pair(l, "parents")?;
                    let (alpha, beta) = int_pair(l, "multipliers")?;
                    CpRule::Combination { first: first as usize, alpha, second: second as usize, beta }
                }
                Some("rounding") => CpRule::Rounding {
                    parent: uint(l, "parent")?,
                    alpha: l.get("alpha").and_then(Value::as_i64).ok_or_else(|| err("alpha"))?,
                },
                _ => return Err(err("unknown rule")),
            };
            let ineq = ineq_from_json(l.get("ineq").ok_or_else(|| err("ineq"))?, &index)?;
            lines.push(CpLine { ineq, rule });
        }
        Ok(CpProof { lines, sink: uint(v, "sink")? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::LinearSystem;

    fn contradiction() -> Formula {
        Formula::custom(
            LinearSystem::new(
                vec!["x".into()],
                vec![LinearInequality::ge([(0, 1)], 0), LinearInequality::ge([(0, -1)], 1)],
            )
            .unwrap(),
        )
    }

    #[test]
    fn direct_combination() {
        let f = contradiction();
        let p = CpProof {
            lines: vec![
                CpLine { ineq: LinearInequality::ge([(0, 1)], 0), rule: CpRule::Axiom(0) },
                CpLine { ineq: LinearInequality::ge([(0, -1)], 1), rule: CpRule::Axiom(1) },
                CpLine {
                    ineq: LinearInequality::ge([], 1),
                    rule: CpRule::Combination { first: 0, alpha: 1, second: 1, beta: 1 },
                },
            ],
            sink: 2,
        };
        let r = cp_verify(&p, &f).unwrap();
        assert!(r.ok);
        assert_eq!((r.rank, r.length), (0, 3));
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(round(&LinearInequality::ge([(0, 2)], 1), 2), Some(LinearInequality::ge([(0, 1)], 1)));
        assert_eq!(round(&LinearInequality::ge([(0, -3)], -2), 3), Some(LinearInequality::ge([(0, -1)], 0)));
        assert_eq!(round(&LinearInequality::ge([(0, 2), (1, 3)], 1), 2), None);
    }

    #[test]
    fn rule_errors() {
        let f = contradiction();
        let ax = CpLine { ineq: LinearInequality::ge([(0, 1)], 0), rule: CpRule::Axiom(0) };
        let bad_div = CpProof {
            lines: vec![ax.clone(), CpLine { ineq: LinearInequality::ge([(0, 1)], 0), rule: CpRule::Rounding { parent: 0, alpha: 2 } }],
            sink: 1,
        };
        assert!(matches!(cp_verify(&bad_div, &f), Err(CpError::BadDivisibility { line: 1, alpha: 2 })));
        let bad_mult = CpProof {
            lines: vec![
                ax.clone(),
                CpLine {
                    ineq: LinearInequality::ge([], 0),
                    rule: CpRule::Combination { first: 0, alpha: 0, second: 0, beta: 1 },
                },
            ],
            sink: 1,
        };
        assert!(matches!(cp_verify(&bad_mult, &f), Err(CpError::NonPositiveMultiplier { line: 1, value: 0 })));
        let forward = CpProof {
            lines: vec![CpLine {
                ineq: LinearInequality::ge([], 0),
                rule: CpRule::Combination { first: 0, alpha: 1, second: 0, beta: 1 },
            }],
            sink: 0,
        };
        assert!(matches!(cp_verify(&forward, &f), Err(CpError::BadParent { .. })));
        let wrong = CpProof { lines: vec![CpLine { ineq: LinearInequality::ge([(0, 1)], 1), rule: CpRule::Axiom(0) }], sink: 0 };
        assert!(matches!(cp_verify(&wrong, &f), Err(CpError::LineMismatch { line: 0 })));
        let not_sink = CpProof { lines: vec![ax], sink: 0 };
        assert!(!cp_verify(&not_sink, &f).unwrap().ok);
    }

    #[test]
    fn sphp_rank1_small() {
        let (f, p) = build_sphp_rank1(4).unwrap();
        let r = cp_verify(&p, &f).unwrap();
        assert!(r.ok);
        assert_eq!(r.rank, 1);
        // the pre-cut line for x_1 is -2 x_1 >= -1, i.e. 2 x_1 <= 1
        let pre = p.lines.iter().find(|l| matches!(l.rule, CpRule::Rounding { .. })).unwrap();
        let CpRule::Rounding { parent, alpha } = pre.rule else { unreachable!() };
        assert_eq!(alpha, 2);
        assert_eq!(p.lines[parent].ineq, LinearInequality::ge([(0, -2)], -1));
        assert_eq!(pre.ineq, LinearInequality::ge([(0, -1)], 0));

        let (f, p) = build_sphp_rank1(3).unwrap();
        let r = cp_verify(&p, &f).unwrap();
        assert!(r.ok);
        assert_eq!(r.rank, 0);
        assert!(build_sphp_rank1(2).is_err());
    }

    #[test]
    fn json_round_trip() {
        let (f, p) = build_sphp_rank1(5).unwrap();
        let text = serde_json::to_string(&p.to_json(&f)).unwrap();
        let back = CpProof::from_json(&serde_json::from_str(&text).unwrap(), &f).unwrap();
        assert_eq!(back, p);
    }
}
