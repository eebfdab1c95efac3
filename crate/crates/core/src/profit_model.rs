//! Solutions and chance-constrained profit estimates.
//!
//! For a selection `x` with expected profit `mu(x)` and variance `v(x)` the
//! one-sided Chebyshev bound gives
//!
//! ```text
//! P_cheb(x, alpha) = mu(x) - sqrt((1 - alpha) / alpha) * sqrt(v(x))
//! ```
//!
//! and, for independent uniform profits of half-width `delta`, Hoeffding's
//! inequality gives
//!
//! ```text
//! P_hoef(x, alpha) = mu(x) - delta * sqrt(2 * |x|_1 * ln(1 / alpha))
//! ```
//!
//! Both are the largest `P` with `Pr[p(x) < P] <= alpha` under the respective
//! bound.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::instance::KnapsackInstance;

const WORD: usize = 64;

/// A bit vector over the instance items with cached weight, expected profit
/// and cardinality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Solution {
    words: Vec<u64>,
    len: usize,
    weight: u64,
    expectation: u64,
    cardinality: u32,
}

impl Solution {
    /// The all-zeros selection.
    pub fn empty(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
            weight: 0,
            expectation: 0,
            cardinality: 0,
        }
    }

    pub fn from_bits(instance: &KnapsackInstance, bits: &[bool]) -> Result<Self> {
        if bits.len() != instance.len() {
            return Err(Error::LengthMismatch {
                expected: instance.len(),
                found: bits.len(),
            });
        }
        let mut x = Self::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                x.flip(instance, i);
            }
        }
        Ok(x)
    }

    /// Selection of the given item indices.
    pub fn from_indices(instance: &KnapsackInstance, indices: &[usize]) -> Result<Self> {
        let mut x = Self::empty(instance.len());
        for &i in indices {
            if i >= instance.len() {
                return Err(Error::LengthMismatch {
                    expected: instance.len(),
                    found: i + 1,
                });
            }
            if !x.get(i) {
                x.flip(instance, i);
            }
        }
        Ok(x)
    }

    /// Subset encoded by the low `n` bits of `mask` (bit `i` selects item `i`).
    pub fn from_mask(instance: &KnapsackInstance, mask: u64) -> Self {
        let mut x = Self::empty(instance.len());
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            x.flip(instance, i);
            rest &= rest - 1;
        }
        x
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    /// Flips bit `i` and updates the caches.
    pub fn flip(&mut self, instance: &KnapsackInstance, i: usize) {
        let item = &instance.items()[i];
        let mask = 1u64 << (i % WORD);
        let word = &mut self.words[i / WORD];
        *word ^= mask;
        if *word & mask != 0 {
            self.weight += item.weight;
            self.expectation += item.expected_profit;
            self.cardinality += 1;
        } else {
            self.weight -= item.weight;
            self.expectation -= item.expected_profit;
            self.cardinality -= 1;
        }
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn expectation(&self) -> u64 {
        self.expectation
    }

    pub fn cardinality(&self) -> u32 {
        self.cardinality
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD + b)
                }
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// True when the cached weight, expectation and cardinality agree with a
    /// full recomputation from the bits.
    pub fn caches_consistent(&self, instance: &KnapsackInstance) -> bool {
        if self.len != instance.len() {
            return false;
        }
        let (mut w, mut p, mut c) = (0u64, 0u64, 0u32);
        for i in self.ones() {
            let item = &instance.items()[i];
            w += item.weight;
            p += item.expected_profit;
            c += 1;
        }
        w == self.weight && p == self.expectation && c == self.cardinality
    }

    /// Lexicographic order of the bit strings read from item 0 onwards, with
    /// `0 < 1`.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let pos = diff.trailing_zeros();
                return if (a >> pos) & 1 == 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        self.len.cmp(&other.len)
    }

    /// Hex encoding: one digit per four items, item `4j` in the most
    /// significant bit of digit `j`.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in 0..digits {
            let mut nibble = 0u32;
            for k in 0..4 {
                let i = 4 * d + k;
                if i < self.len && self.get(i) {
                    nibble |= 8 >> k;
                }
            }
            out.push(char::from_digit(nibble, 16).unwrap());
        }
        out
    }

    pub fn from_hex(instance: &KnapsackInstance, hex: &str) -> Result<Self> {
        let n = instance.len();
        if hex.len() != n.div_ceil(4) {
            return Err(Error::LengthMismatch {
                expected: n.div_ceil(4),
                found: hex.len(),
            });
        }
        let mut x = Self::empty(n);
        for (d, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::InvalidParameter(format!("bad hex digit {c:?}")))?;
            for k in 0..4 {
                if nibble & (8 >> k) != 0 {
                    let i = 4 * d + k;
                    if i >= n {
                        return Err(Error::InvalidParameter(
                            "hex string sets bits past the instance size".into(),
                        ));
                    }
                    x.flip(instance, i);
                }
            }
        }
        Ok(x)
    }
}

impl fmt::Debug for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Solution({} w={} mu={} k={})",
            self.to_hex(),
            self.weight,
            self.expectation,
            self.cardinality
        )
    }
}

/// Tail-bound used to turn `(mu, v)` into a chance-constrained profit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Cheb,
    Hoef,
}

impl Estimator {
    pub const ALL: [Estimator; 2] = [Estimator::Cheb, Estimator::Hoef];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Cheb => "cheb",
            Estimator::Hoef => "hoef",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cheb" => Ok(Estimator::Cheb),
            "hoef" => Ok(Estimator::Hoef),
            other => Err(Error::InvalidParameter(format!("unknown estimator {other:?}"))),
        }
    }
}

pub fn check_alpha(alpha: f64, estimator: Estimator) -> Result<()> {
    let ok = match estimator {
        Estimator::Cheb => alpha > 0.0 && alpha < 0.5,
        Estimator::Hoef => alpha > 0.0 && alpha < 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha = {alpha} is outside the admissible range for {estimator}"
        )))
    }
}

/// `mean - sqrt((1 - alpha) / alpha) * sqrt(variance)`.
pub fn cheb_estimate(mean: f64, variance: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha, Estimator::Cheb)?;
    Ok(mean - ((1.0 - alpha) / alpha).sqrt() * variance.sqrt())
}

/// `mean - dispersion * sqrt(2 * cardinality * ln(1 / alpha))`.
pub fn hoef_estimate(mean: f64, cardinality: u32, dispersion: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha, Estimator::Hoef)?;
    Ok(mean - dispersion * (2.0 * cardinality as f64 * (1.0 / alpha).ln()).sqrt())
}

/// Profit statistics of solutions for one dispersion value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitModel {
    dispersion: f64,
    n: usize,
}

impl ProfitModel {
    pub fn new(instance: &KnapsackInstance) -> Self {
        Self {
            dispersion: instance.dispersion(),
            n: instance.len(),
        }
    }

    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }

    fn check_len(&self, x: &Solution) -> Result<()> {
        if x.len() != self.n {
            Err(Error::LengthMismatch {
                expected: self.n,
                found: x.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn expected_profit(&self, x: &Solution) -> Result<u64> {
        self.check_len(x)?;
        Ok(x.expectation())
    }

    pub fn variance(&self, x: &Solution) -> f64 {
        profit_variance(x, self.dispersion)
    }

    pub fn cheb(&self, x: &Solution, alpha: f64) -> Result<f64> {
        self.check_len(x)?;
        cheb_estimate(x.expectation() as f64, self.variance(x), alpha)
    }

    pub fn hoef(&self, x: &Solution, alpha: f64) -> Result<f64> {
        self.check_len(x)?;
        hoef_estimate(
            x.expectation() as f64,
            x.cardinality(),
            self.dispersion,
            alpha,
        )
    }

    pub fn estimate(&self, x: &Solution, alpha: f64, estimator: Estimator) -> Result<f64> {
        match estimator {
            Estimator::Cheb => self.cheb(x, alpha),
            Estimator::Hoef => self.hoef(x, alpha),
        }
    }

    /// Member with the largest estimate. Ties go to the lighter solution, then
    /// to the lexicographically smaller bit string.
    pub fn best_profit<'a, I>(
        &self,
        solutions: I,
        alpha: f64,
        estimator: Estimator,
    ) -> Result<(&'a Solution, f64)>
    where
        I: IntoIterator<Item = &'a Solution>,
    {
        let mut best: Option<(&'a Solution, f64)> = None;
        for x in solutions {
            let value = self.estimate(x, alpha, estimator)?;
            best = match best {
                None => Some((x, value)),
                Some((incumbent, best_value)) => {
                    let better = value > best_value
                        || (value == best_value
                            && (x.weight(), x) < (incumbent.weight(), incumbent));
                    if better {
                        Some((x, value))
                    } else {
                        Some((incumbent, best_value))
                    }
                }
            };
        }
        best.ok_or(Error::EmptyPopulation)
    }
}

impl PartialOrd for Solution {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Solution {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_cmp(other)
    }
}

/// `|x|_1 * delta^2 / 3`, the variance of `x`'s profit under uniform item
/// profits.
pub fn profit_variance(x: &Solution, dispersion: f64) -> f64 {
    x.cardinality() as f64 * (dispersion * dispersion / 3.0)
}
