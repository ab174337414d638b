//! W-valued words: value sets, compiled integer systems and parallel sweeps over `W^n`.
//!
//! Words are stored scaled by `ell = 2`, so `{0, 1/2, 1}` becomes `{0, 1, 2}`.

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{rat, LinearInequality, LinearSystem, Point, Rational, Sense};

/// Sweeps larger than this are refused.
pub const MAX_SWEEP: u64 = 300_000_000;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("sweep of {k}^{n} words exceeds the enumeration guard")]
    TooLarge { k: usize, n: usize },
    #[error("unknown value set {0:?} (expected half or triple)")]
    UnknownValueSet(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueSet {
    /// `{0, 1/2}`
    Half,
    /// `{0, 1/2, 1}`
    Triple,
}

impl ValueSet {
    pub fn k(self) -> usize {
        match self {
            ValueSet::Half => 2,
            ValueSet::Triple => 3,
        }
    }

    /// Common denominator of the values.
    pub fn ell(self) -> i64 {
        2
    }

    /// Values multiplied by `ell`.
    pub fn scaled(self) -> &'static [i64] {
        match self {
            ValueSet::Half => &[0, 1],
            ValueSet::Triple => &[0, 1, 2],
        }
    }

    pub fn values(self) -> Vec<Rational> {
        self.scaled().iter().map(|&s| rat(s, self.ell())).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueSet::Half => "half",
            ValueSet::Triple => "triple",
        }
    }

    pub fn parse(s: &str) -> Result<Self, WordError> {
        match s {
            "half" => Ok(ValueSet::Half),
            "triple" => Ok(ValueSet::Triple),
            _ => Err(WordError::UnknownValueSet(s.to_string())),
        }
    }

    /// `k^n`, or `None` on overflow.
    pub fn word_count(self, n: usize) -> Option<u64> {
        (self.k() as u64).checked_pow(u32::try_from(n).ok()?)
    }

    pub fn point(self, scaled: &[i64]) -> Point {
        Point::from_scaled(scaled, self.ell())
    }
}

/// A system in dense `>=`-form over scaled words: row holds iff `sum a_i s_i >= bound * scale`.
#[derive(Clone, Debug)]
pub struct Compiled {
    rows: Vec<(Vec<(usize, i64)>, i64)>,
    scale: i64,
}

impl Compiled {
    pub fn new<'a>(ineqs: impl IntoIterator<Item = &'a LinearInequality>, scale: i64) -> Self {
        let rows = ineqs
            .into_iter()
            .map(|q| {
                let g = q.to_ge();
                debug_assert_eq!(g.sense, Sense::Ge);
                (g.coeffs.iter().map(|(&v, &c)| (v, c)).collect(), g.bound * scale)
            })
            .collect();
        Compiled { rows, scale }
    }

    pub fn system(sys: &LinearSystem, scale: i64) -> Self {
        Compiled::new(sys.ineqs(), scale)
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn holds(&self, s: &[i64]) -> bool {
        self.rows.iter().all(|(a, b)| a.iter().map(|&(v, c)| c * s[v]).sum::<i64>() >= *b)
    }

    /// Index of the first violated row.
    pub fn first_violated(&self, s: &[i64]) -> Option<usize> {
        self.rows.iter().position(|(a, b)| a.iter().map(|&(v, c)| c * s[v]).sum::<i64>() < *b)
    }
}

/// Visits every word of `W^n` in parallel chunks. Returns one accumulator per
/// chunk in lexicographic chunk order (variable 0 varies slowest), so merging
/// the result front to back is deterministic.
pub fn scan_words<A, M, F>(n: usize, w: ValueSet, make: M, visit: F) -> Result<Vec<A>, WordError>
where
    A: Send,
    M: Fn() -> A + Sync,
    F: Fn(&mut A, &[i64]) + Sync,
{
    let total = w.word_count(n).filter(|&t| t <= MAX_SWEEP).ok_or(WordError::TooLarge { k: w.k(), n })?;
    let chunks = total.div_ceil(CHUNK);
    let vals = w.scaled();
    let k = vals.len() as u64;
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = make();
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut digits = vec![0usize; n];
            let mut rest = start;
            for d in digits.iter_mut().rev() {
                *d = (rest % k) as usize;
                rest /= k;
            }
            let mut word: Vec<i64> = digits.iter().map(|&d| vals[d]).collect();
            for _ in start..end {
                visit(&mut acc, &word);
                for i in (0..n).rev() {
                    digits[i] += 1;
                    if digits[i] < vals.len() {
                        word[i] = vals[digits[i]];
                        break;
                    }
                    digits[i] = 0;
                    word[i] = vals[0];
                }
            }
            acc
        })
        .collect())
}

/// Number of words satisfying `pred`.
pub fn count_words<F>(n: usize, w: ValueSet, pred: F) -> Result<u64, WordError>
where
    F: Fn(&[i64]) -> bool + Sync,
{
    Ok(scan_words(n, w, || 0u64, |acc, s| *acc += pred(s) as u64)?.into_iter().sum())
}
