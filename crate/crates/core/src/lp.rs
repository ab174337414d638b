//! LP feasibility with Farkas certificates.
//!
//! The engine is Fourier–Motzkin elimination with multiplier bookkeeping:
//! every row carries the nonnegative combination of input rows that produced
//! it, so an infeasible system hands back its certificate for free. Two cheap
//! layers run first (bound propagation with fixed-variable substitution, and a
//! midpoint witness probe), and a Bland-rule phase-1 simplex takes over when
//! elimination outgrows its row budget. Whatever layer answers, `Infeasible`
//! results are rechecked with [`farkas_check`] before they are returned.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{ArithError, LinearSystem, Point, Rational};

/// Nonnegative multipliers, one per inequality of the target system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub multipliers: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Point),
    Infeasible(FarkasCertificate),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

/// Sum of `multipliers[i] * (row i in >=-form)`: returns `(coeffs, bound)`.
pub fn farkas_combination(
    system: &LinearSystem,
    cert: &FarkasCertificate,
) -> Result<(BTreeMap<usize, Rational>, Rational), ArithError> {
    if cert.multipliers.len() != system.len() {
        return Err(ArithError::LengthMismatch { expected: system.len(), got: cert.multipliers.len() });
    }
    let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
    let mut bound = Rational::zero();
    for (q, m) in system.ineqs().iter().zip(&cert.multipliers) {
        if m.is_zero() {
            continue;
        }
        let g = q.to_ge();
        for (&v, &c) in &g.coeffs {
            *coeffs.entry(v).or_insert_with(Rational::zero) += m * BigInt::from(c);
        }
        bound += m * BigInt::from(g.bound);
    }
    coeffs.retain(|_, c| !c.is_zero());
    Ok((coeffs, bound))
}

/// True iff the certificate is nonnegative and combines the system into `0 >= c` with `c > 0`.
pub fn farkas_check(system: &LinearSystem, cert: &FarkasCertificate) -> Result<bool, ArithError> {
    let (coeffs, bound) = farkas_combination(system, cert)?;
    if cert.multipliers.iter().any(Signed::is_negative) {
        return Ok(false);
    }
    Ok(coeffs.is_empty() && bound.is_positive())
}

/// Decides feasibility of `system` over the rationals.
pub fn lp_feasible(system: &LinearSystem) -> Feasibility {
    let rows = input_rows(system);
    let result = match presolve(&rows, system.num_vars()) {
        Presolved::Infeasible(d) => Feasibility::Infeasible(certificate(system, &d)),
        Presolved::Reduced(red) => {
            if let Some(p) = red.probe(system) {
                Feasibility::Feasible(p)
            } else {
                solve_reduced(system, &rows, &red)
            }
        }
    };
    debug_assert!(check_result(system, &result));
    if let Feasibility::Infeasible(c) = &result {
        assert!(farkas_check(system, c).unwrap_or(false), "internal error: invalid Farkas certificate");
    }
    result
}

/// Plain Fourier–Motzkin on the whole system, eliminating in `order` when
/// given (remaining variables follow in the default heuristic order).
pub fn fourier_motzkin(system: &LinearSystem, order: Option<&[usize]>) -> Feasibility {
    let rows = input_rows(system);
    match fm_rows(&rows, system.num_vars(), order, usize::MAX) {
        FmOutcome::Infeasible(d) => Feasibility::Infeasible(certificate(system, &d)),
        FmOutcome::Feasible(x) => Feasibility::Feasible(Point(x)),
        FmOutcome::Budget => unreachable!("unbounded budget"),
    }
}

/// Phase-1 simplex with Bland's rule on the whole system.
pub fn simplex(system: &LinearSystem) -> Feasibility {
    let rows = input_rows(system);
    match simplex_rows(&rows, system.num_vars()) {
        FmOutcome::Infeasible(d) => Feasibility::Infeasible(certificate(system, &d)),
        FmOutcome::Feasible(x) => Feasibility::Feasible(Point(x)),
        FmOutcome::Budget => unreachable!(),
    }
}

fn check_result(system: &LinearSystem, r: &Feasibility) -> bool {
    match r {
        Feasibility::Feasible(p) => system.is_satisfied_by(p).unwrap_or(false),
        Feasibility::Infeasible(c) => farkas_check(system, c).unwrap_or(false),
    }
}

type Lin = BTreeMap<usize, Rational>;
type Deriv = BTreeMap<usize, Rational>;

/// `a·x >= b`, derived as the combination `deriv` of input rows.
#[derive(Clone, Debug)]
struct Row {
    a: Lin,
    b: Rational,
    deriv: Deriv,
}

fn input_rows(system: &LinearSystem) -> Vec<Row> {
    system
        .ineqs()
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let g = q.to_ge();
            Row {
                a: g.coeffs.iter().map(|(&v, &c)| (v, Rational::from_integer(BigInt::from(c)))).collect(),
                b: Rational::from_integer(BigInt::from(g.bound)),
                deriv: BTreeMap::from([(i, Rational::one())]),
            }
        })
        .collect()
}

fn certificate(system: &LinearSystem, d: &Deriv) -> FarkasCertificate {
    let mut multipliers = vec![Rational::zero(); system.len()];
    for (&i, m) in d {
        multipliers[i] = m.clone();
    }
    FarkasCertificate { multipliers }
}

fn add_scaled(acc: &mut Deriv, other: &Deriv, k: &Rational) {
    for (&i, m) in other {
        let e = acc.entry(i).or_insert_with(Rational::zero);
        *e += m * k;
    }
    acc.retain(|_, m| !m.is_zero());
}

fn scaled(d: &Deriv, k: &Rational) -> Deriv {
    d.iter().map(|(&i, m)| (i, m * k)).collect()
}

/// Rewrites a derivation over intermediate rows into one over input rows.
fn expand(d: &Deriv, rows: &[Row]) -> Deriv {
    let mut out = Deriv::new();
    for (&t, m) in d {
        add_scaled(&mut out, &rows[t].deriv, m);
    }
    out
}

#[derive(Clone, Debug)]
struct Bound {
    val: Rational,
    deriv: Deriv,
}

struct Reduced {
    lower: Vec<Option<Bound>>,
    upper: Vec<Option<Bound>>,
    /// Remaining rows over the unfixed variables, derivations over input rows.
    rows: Vec<Row>,
}

enum Presolved {
    Infeasible(Deriv),
    Reduced(Reduced),
}

impl Reduced {
    fn fixed(&self, v: usize) -> Option<&Rational> {
        match (&self.lower[v], &self.upper[v]) {
            (Some(l), Some(u)) if l.val == u.val => Some(&l.val),
            _ => None,
        }
    }

    fn midpoint(&self, v: usize) -> Rational {
        match (&self.lower[v], &self.upper[v]) {
            (Some(l), Some(u)) => (&l.val + &u.val) / Rational::from_integer(BigInt::from(2)),
            (Some(l), None) => l.val.clone(),
            (None, Some(u)) => u.val.clone(),
            (None, None) => Rational::zero(),
        }
    }

    fn probe(&self, system: &LinearSystem) -> Option<Point> {
        let p = Point((0..self.lower.len()).map(|v| self.midpoint(v)).collect());
        if let Some((scaled, scale)) = small_scaled(&p) {
            return system.ineqs().iter().all(|q| q.holds_scaled(&scaled, scale)).then_some(p);
        }
        system.is_satisfied_by(&p).ok()?.then_some(p)
    }
}

/// `p` as integers over a common denominator, when everything stays small
/// enough for overflow-free `i64` evaluation of integer rows.
fn small_scaled(p: &Point) -> Option<(Vec<i64>, i64)> {
    const LIMIT: i64 = 1 << 24;
    let mut scale: i64 = 1;
    for x in &p.0 {
        let d = i64::try_from(x.denom()).ok()?;
        scale = num_integer::lcm(scale, d);
        if scale > LIMIT {
            return None;
        }
    }
    let scaled = p
        .0
        .iter()
        .map(|x| {
            let v = i64::try_from(&(x.numer() * BigInt::from(scale) / x.denom())).ok()?;
            (v.abs() <= LIMIT).then_some(v)
        })
        .collect::<Option<Vec<i64>>>()?;
    Some((scaled, scale))
}

fn presolve(rows: &[Row], n: usize) -> Presolved {
    let mut lower: Vec<Option<Bound>> = vec![None; n];
    let mut upper: Vec<Option<Bound>> = vec![None; n];
    for r in rows {
        if r.a.is_empty() && r.b.is_positive() {
            return Presolved::Infeasible(r.deriv.clone());
        }
    }
    // worklist propagation; the visit cap stops slow convergence on cyclic chains
    let mut by_var: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in rows.iter().enumerate() {
        for &v in r.a.keys() {
            by_var[v].push(i);
        }
    }
    let mut queued = vec![true; rows.len()];
    let mut queue: VecDeque<usize> = (0..rows.len()).collect();
    let mut budget = (2 * n + 8) * rows.len();
    while let Some(i) = queue.pop_front() {
        queued[i] = false;
        if budget == 0 {
            break;
        }
        budget -= 1;
        let r = &rows[i];
        for _ in 0..=r.a.len() {
            let mut touched = None;
            if let Some(d) = propagate_row(r, &mut lower, &mut upper, &mut touched) {
                return Presolved::Infeasible(d);
            }
            let Some(k) = touched else { break };
            for &j in &by_var[k] {
                if j != i && !queued[j] {
                    queued[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }

    let red_fixed = |v: usize, lower: &[Option<Bound>], upper: &[Option<Bound>]| match (&lower[v], &upper[v]) {
        (Some(l), Some(u)) => l.val == u.val,
        _ => false,
    };

    let mut out = Vec::new();
    for r in rows {
        if r.a.len() <= 1 {
            // replaced by the propagated bound rows below
            continue;
        }
        let mut a = Lin::new();
        let mut b = r.b.clone();
        let mut deriv = r.deriv.clone();
        for (&v, c) in &r.a {
            if red_fixed(v, &lower, &upper) {
                let (bd, val) = if c.is_positive() {
                    let u = upper[v].as_ref().unwrap();
                    (&u.deriv, &u.val)
                } else {
                    let l = lower[v].as_ref().unwrap();
                    (&l.deriv, &l.val)
                };
                add_scaled(&mut deriv, bd, &c.abs());
                b -= c * val;
            } else {
                a.insert(v, c.clone());
            }
        }
        if a.is_empty() {
            if b.is_positive() {
                return Presolved::Infeasible(deriv);
            }
            continue;
        }
        // implied by the variable bounds alone
        let mut min = Some(Rational::zero());
        for (&v, c) in &a {
            let bnd = if c.is_positive() { &lower[v] } else { &upper[v] };
            match (bnd, &mut min) {
                (Some(bv), Some(m)) => *m += c * &bv.val,
                _ => min = None,
            }
        }
        if matches!(&min, Some(m) if *m >= b) {
            continue;
        }
        out.push(Row { a, b, deriv });
    }
    for v in 0..n {
        if red_fixed(v, &lower, &upper) {
            continue;
        }
        if let Some(l) = &lower[v] {
            out.push(Row { a: Lin::from([(v, Rational::one())]), b: l.val.clone(), deriv: l.deriv.clone() });
        }
        if let Some(u) = &upper[v] {
            out.push(Row { a: Lin::from([(v, -Rational::one())]), b: -u.val.clone(), deriv: u.deriv.clone() });
        }
    }
    Presolved::Reduced(Reduced { lower, upper, rows: out })
}

/// Tightens variable bounds implied by one row. Returns a contradiction derivation if found.
fn propagate_row(
    r: &Row,
    lower: &mut [Option<Bound>],
    upper: &mut [Option<Bound>],
    changed: &mut Option<usize>,
) -> Option<Deriv> {
    // contribution of each variable at its most favourable bound
    let mut missing: Option<usize> = None;
    let mut missing_count = 0;
    let mut total = Rational::zero();
    for (&v, c) in &r.a {
        let bnd = if c.is_positive() { &upper[v] } else { &lower[v] };
        match bnd {
            Some(b) => total += c * &b.val,
            None => {
                missing_count += 1;
                missing = Some(v);
            }
        }
    }
    if missing_count >= 2 {
        return None;
    }
    let keys: Vec<usize> = r.a.keys().copied().collect();
    for k in keys {
        if missing_count == 1 && missing != Some(k) {
            continue;
        }
        let ak = &r.a[&k];
        let mut rest = total.clone();
        if missing_count == 0 {
            let own = if ak.is_positive() { &upper[k] } else { &lower[k] };
            rest -= ak * &own.as_ref().unwrap().val;
        }
        let newval = (&r.b - &rest) / ak;
        let improves = if ak.is_positive() {
            lower[k].as_ref().is_none_or(|l| newval > l.val)
        } else {
            upper[k].as_ref().is_none_or(|u| newval < u.val)
        };
        if !improves {
            continue;
        }
        let mut d = r.deriv.clone();
        for (&j, c) in &r.a {
            if j == k {
                continue;
            }
            let bnd = if c.is_positive() { &upper[j] } else { &lower[j] };
            add_scaled(&mut d, &bnd.as_ref().unwrap().deriv, &c.abs());
        }
        let d = scaled(&d, &(Rational::one() / ak.abs()));
        let nb = Bound { val: newval, deriv: d };
        *changed = Some(k);
        if ak.is_positive() {
            lower[k] = Some(nb);
        } else {
            upper[k] = Some(nb);
        }
        if let (Some(l), Some(u)) = (&lower[k], &upper[k]) {
            if l.val > u.val {
                let mut d = l.deriv.clone();
                add_scaled(&mut d, &u.deriv, &Rational::one());
                return Some(d);
            }
        }
        // bounds used by later variables of this row changed; recompute next pass
        return None;
    }
    None
}

/// Row budget for elimination before handing over to the simplex.
const FM_ROW_BUDGET: usize = 4000;

fn solve_reduced(system: &LinearSystem, input: &[Row], red: &Reduced) -> Feasibility {
    let n = system.num_vars();
    let fm = fm_rows(&red.rows, n, None, FM_ROW_BUDGET);
    let fm = match fm {
        FmOutcome::Budget => simplex_rows(&red.rows, n),
        other => other,
    };
    match fm {
        FmOutcome::Infeasible(d) => Feasibility::Infeasible(certificate(system, &expand(&d, &red.rows))),
        FmOutcome::Feasible(mut x) => {
            for (v, xv) in x.iter_mut().enumerate() {
                if let Some(f) = red.fixed(v) {
                    *xv = f.clone();
                }
            }
            let p = Point(x);
            if system.is_satisfied_by(&p).unwrap_or(false) {
                Feasibility::Feasible(p)
            } else {
                // never expected; fall back to the unreduced system
                match simplex_rows(input, n) {
                    FmOutcome::Infeasible(d) => Feasibility::Infeasible(certificate(system, &d)),
                    FmOutcome::Feasible(x) => Feasibility::Feasible(Point(x)),
                    FmOutcome::Budget => unreachable!(),
                }
            }
        }
        FmOutcome::Budget => unreachable!(),
    }
}

enum FmOutcome {
    /// Derivation over the rows handed to the engine.
    Infeasible(Deriv),
    Feasible(Vec<Rational>),
    Budget,
}

/// Divides the row by the absolute value of its leading coefficient.
fn normalize(r: &mut Row) {
    let lead = match r.a.values().next() {
        Some(c) => c.abs(),
        None => return,
    };
    if lead.is_one() {
        return;
    }
    let inv = Rational::one() / lead;
    for c in r.a.values_mut() {
        *c *= &inv;
    }
    r.b *= &inv;
    r.deriv = scaled(&r.deriv, &inv);
}

fn fm_rows(input: &[Row], n: usize, order: Option<&[usize]>, budget: usize) -> FmOutcome {
    // derivations inside the elimination are over `input` indices; their
    // support size doubles as the Chernikov history
    let mut current: Vec<Row> = input
        .iter()
        .enumerate()
        .map(|(i, r)| Row { a: r.a.clone(), b: r.b.clone(), deriv: BTreeMap::from([(i, Rational::one())]) })
        .collect();
    for r in &current {
        if r.a.is_empty() && r.b.is_positive() {
            return FmOutcome::Infeasible(r.deriv.clone());
        }
    }
    current.retain(|r| !r.a.is_empty());
    current.iter_mut().for_each(normalize);

    let mut remaining: Vec<bool> = vec![true; n];
    let mut forced = order.map(|o| o.to_vec()).unwrap_or_default().into_iter();
    let mut stages: Vec<(usize, Vec<Row>)> = Vec::new();
    for step in 0..n {
        let v = loop {
            match forced.next() {
                Some(v) if v < n && remaining[v] => break Some(v),
                Some(_) => continue,
                None => break None,
            }
        }
        .unwrap_or_else(|| pick_var(&current, &remaining));
        remaining[v] = false;

        let (with, without): (Vec<Row>, Vec<Row>) = current.into_iter().partition(|r| r.a.contains_key(&v));
        let (pos, neg): (Vec<&Row>, Vec<&Row>) = with.iter().partition(|r| r.a[&v].is_positive());
        let mut next = without;
        let limit = step + 2;
        for p in &pos {
            for q in &neg {
                let mut support = p.deriv.len();
                support += q.deriv.keys().filter(|k| !p.deriv.contains_key(k)).count();
                if support > limit {
                    continue;
                }
                let mp = -q.a[&v].clone();
                let mq = p.a[&v].clone();
                let mut a = Lin::new();
                for (&j, c) in &p.a {
                    if j != v {
                        a.insert(j, c * &mp);
                    }
                }
                for (&j, c) in &q.a {
                    if j != v {
                        *a.entry(j).or_insert_with(Rational::zero) += c * &mq;
                    }
                }
                a.retain(|_, c| !c.is_zero());
                let b = &p.b * &mp + &q.b * &mq;
                let mut deriv = scaled(&p.deriv, &mp);
                add_scaled(&mut deriv, &q.deriv, &mq);
                if a.is_empty() {
                    if b.is_positive() {
                        return FmOutcome::Infeasible(deriv);
                    }
                    continue;
                }
                let mut row = Row { a, b, deriv };
                normalize(&mut row);
                next.push(row);
            }
        }
        stages.push((v, with));
        current = dedupe(next);
        if current.len() > budget {
            return FmOutcome::Budget;
        }
    }

    let mut x = vec![Rational::zero(); n];
    for (v, rows) in stages.iter().rev() {
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for r in rows {
            let av = &r.a[v];
            let mut rest = r.b.clone();
            for (&j, c) in &r.a {
                if j != *v {
                    rest -= c * &x[j];
                }
            }
            let t = rest / av;
            if av.is_positive() {
                if lo.as_ref().is_none_or(|l| t > *l) {
                    lo = Some(t);
                }
            } else if hi.as_ref().is_none_or(|h| t < *h) {
                hi = Some(t);
            }
        }
        x[*v] = match (lo, hi) {
            (Some(l), Some(h)) => (l + h) / Rational::from_integer(BigInt::from(2)),
            (Some(l), None) => l,
            (None, Some(h)) => h,
            (None, None) => Rational::zero(),
        };
    }
    FmOutcome::Feasible(x)
}

fn pick_var(rows: &[Row], remaining: &[bool]) -> usize {
    let n = remaining.len();
    let mut pos = vec![0usize; n];
    let mut neg = vec![0usize; n];
    for r in rows {
        for (&v, c) in &r.a {
            if c.is_positive() {
                pos[v] += 1;
            } else {
                neg[v] += 1;
            }
        }
    }
    (0..n)
        .filter(|&v| remaining[v])
        .min_by_key(|&v| ((pos[v] * neg[v]) as i64 - (pos[v] + neg[v]) as i64, v))
        .expect("a variable remains")
}

/// Keeps the tightest row per (normalized) direction.
fn dedupe(rows: Vec<Row>) -> Vec<Row> {
    let mut best: HashMap<Vec<(usize, Rational)>, usize> = HashMap::new();
    let mut out: Vec<Row> = Vec::new();
    for r in rows {
        let key: Vec<(usize, Rational)> = r.a.iter().map(|(&v, c)| (v, c.clone())).collect();
        match best.get(&key) {
            Some(&i) => {
                if r.b > out[i].b || (r.b == out[i].b && r.deriv.len() < out[i].deriv.len()) {
                    out[i] = r;
                }
            }
            None => {
                best.insert(key, out.len());
                out.push(r);
            }
        }
    }
    out
}

/// Phase-1 simplex on `a_i·x >= b_i` with free variables split as `x+ - x-`.
fn simplex_rows(rows: &[Row], n: usize) -> FmOutcome {
    let m = rows.len();
    if m == 0 {
        return FmOutcome::Feasible(vec![Rational::zero(); n]);
    }
    let cols = 2 * n + 2 * m;
    let art0 = 2 * n + m;
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rational> = Vec::with_capacity(m);
    let mut sign: Vec<bool> = Vec::with_capacity(m);
    for (i, r) in rows.iter().enumerate() {
        let neg = r.b.is_negative();
        let s = if neg { -Rational::one() } else { Rational::one() };
        let mut row = vec![Rational::zero(); cols];
        for (&v, c) in &r.a {
            row[v] = c * &s;
            row[n + v] = -(c * &s);
        }
        row[2 * n + i] = -s.clone();
        row[art0 + i] = Rational::one();
        t.push(row);
        rhs.push(&r.b * &s);
        sign.push(neg);
    }
    let mut basis: Vec<usize> = (0..m).map(|i| art0 + i).collect();
    // reduced costs for min sum(art)
    let mut d: Vec<Rational> = (0..cols)
        .map(|j| {
            let c = if j >= art0 { Rational::one() } else { Rational::zero() };
            c - t.iter().map(|row| row[j].clone()).sum::<Rational>()
        })
        .collect();

    loop {
        let entering = (0..cols).find(|&j| d[j].is_negative());
        let Some(col) = entering else { break };
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if t[i][col].is_positive() {
                let ratio = &rhs[i] / &t[i][col];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            unreachable!("phase-1 objective is bounded below")
        };
        let piv = t[r][col].clone();
        for x in t[r].iter_mut() {
            *x /= &piv;
        }
        rhs[r] /= &piv;
        let prow = t[r].clone();
        let prhs = rhs[r].clone();
        for i in 0..m {
            if i == r || t[i][col].is_zero() {
                continue;
            }
            let f = t[i][col].clone();
            for (x, p) in t[i].iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
            rhs[i] -= &f * &prhs;
        }
        let f = d[col].clone();
        for (x, p) in d.iter_mut().zip(&prow) {
            if !p.is_zero() {
                *x -= &f * p;
            }
        }
        basis[r] = col;
    }

    let obj: Rational = (0..m).filter(|&i| basis[i] >= art0).map(|i| rhs[i].clone()).sum();
    if obj.is_positive() {
        let mut deriv = Deriv::new();
        for i in 0..m {
            let y = Rational::one() - &d[art0 + i];
            let lam = if sign[i] { -y } else { y };
            if !lam.is_zero() {
                deriv.insert(i, lam);
            }
        }
        FmOutcome::Infeasible(deriv)
    } else {
        let mut x = vec![Rational::zero(); n];
        for (i, &bv) in basis.iter().enumerate() {
            if bv < n {
                x[bv] += &rhs[i];
            } else if bv < 2 * n {
                x[bv - n] -= &rhs[i];
            }
        }
        FmOutcome::Feasible(x)
    }
}
