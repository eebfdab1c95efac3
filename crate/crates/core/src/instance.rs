//! Knapsack instances with stochastic profits.
//!
//! Every item carries a deterministic integer weight and an integer expected
//! profit. Realised profits are uniform on `[mu_i - delta, mu_i + delta]` with a
//! dispersion `delta` shared by all items, so the per-item variance is
//! `delta^2 / 3` and is derived rather than stored.
//!
//! The text format is line oriented:
//!
//! ```text
//! # comment
//! name uncorr-100
//! class uncorr
//! n 3
//! capacity 40
//! dispersion 25
//! 0 <expected_profit> <weight>
//! 1 <expected_profit> <weight>
//! 2 <expected_profit> <weight>
//! ```
//!
//! Only `n` is mandatory. A missing `capacity` falls back to half the total
//! weight, rounded.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Item {
    pub id: usize,
    pub weight: u64,
    pub expected_profit: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorrelationClass {
    Uncorrelated,
    BoundedStronglyCorrelated,
}

impl CorrelationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationClass::Uncorrelated => "uncorr",
            CorrelationClass::BoundedStronglyCorrelated => "strong",
        }
    }
}

impl fmt::Display for CorrelationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrelationClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncorr" => Ok(CorrelationClass::Uncorrelated),
            "strong" => Ok(CorrelationClass::BoundedStronglyCorrelated),
            other => Err(Error::InvalidParameter(format!(
                "unknown correlation class {other:?} (expected uncorr or strong)"
            ))),
        }
    }
}

/// Capacity used when none is given: half the total weight, rounded half up.
pub fn default_capacity(total_weight: u64) -> u64 {
    total_weight.div_ceil(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackInstance {
    name: String,
    class: CorrelationClass,
    items: Vec<Item>,
    base_capacity: u64,
    dispersion: f64,
    total_weight: u64,
    total_profit: u64,
}

impl KnapsackInstance {
    /// Builds an instance from `(expected_profit, weight)` pairs. Ids are
    /// assigned in order.
    pub fn new(
        name: impl Into<String>,
        class: CorrelationClass,
        items: &[(u64, u64)],
        base_capacity: u64,
        dispersion: f64,
    ) -> Result<Self> {
        let items: Vec<Item> = items
            .iter()
            .enumerate()
            .map(|(id, &(expected_profit, weight))| Item {
                id,
                weight,
                expected_profit,
            })
            .collect();
        Self::from_items(name.into(), class, items, base_capacity, dispersion)
    }

    fn from_items(
        name: String,
        class: CorrelationClass,
        items: Vec<Item>,
        base_capacity: u64,
        dispersion: f64,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInstance("n must be ≥ 1".into()));
        }
        if let Some(item) = items.iter().find(|i| i.weight == 0) {
            return Err(Error::InvalidInstance(format!(
                "item {} has non-positive weight",
                item.id
            )));
        }
        if let Some(item) = items.iter().find(|i| i.expected_profit == 0) {
            return Err(Error::InvalidInstance(format!(
                "item {} has non-positive expected profit",
                item.id
            )));
        }
        if !(dispersion.is_finite() && dispersion >= 0.0) {
            return Err(Error::InvalidInstance(format!(
                "dispersion must be a finite non-negative number, got {dispersion}"
            )));
        }
        if base_capacity == 0 {
            return Err(Error::InvalidInstance("capacity must be ≥ 1".into()));
        }
        let total_weight: u64 = items.iter().map(|i| i.weight).sum();
        let total_profit: u64 = items.iter().map(|i| i.expected_profit).sum();
        if base_capacity >= total_weight {
            return Err(Error::InvalidInstance(format!(
                "vacuous capacity: {base_capacity} ≥ total weight {total_weight}"
            )));
        }
        Ok(Self {
            name,
            class,
            items,
            base_capacity,
            dispersion,
            total_weight,
            total_profit,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> CorrelationClass {
        self.class
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn base_capacity(&self) -> u64 {
        self.base_capacity
    }

    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }

    /// Variance of a single item's profit, `delta^2 / 3`.
    pub fn item_variance(&self) -> f64 {
        self.dispersion * self.dispersion / 3.0
    }

    /// Sum of all weights (the three-objective penalty ceiling).
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn total_profit(&self) -> u64 {
        self.total_profit
    }

    pub fn average_weight(&self) -> f64 {
        self.total_weight as f64 / self.items.len() as f64
    }

    pub fn with_capacity(self, capacity: u64) -> Result<Self> {
        Self::from_items(self.name, self.class, self.items, capacity, self.dispersion)
    }

    pub fn with_dispersion(self, dispersion: f64) -> Result<Self> {
        Self::from_items(
            self.name,
            self.class,
            self.items,
            self.base_capacity,
            dispersion,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Renders the instance in the text format accepted by [`parse_instance`].
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(16 * self.items.len() + 64);
        out.push_str(&format!("name {}\n", self.name));
        out.push_str(&format!("class {}\n", self.class));
        out.push_str(&format!("n {}\n", self.items.len()));
        out.push_str(&format!("capacity {}\n", self.base_capacity));
        out.push_str(&format!("dispersion {}\n", self.dispersion));
        for item in &self.items {
            out.push_str(&format!(
                "{} {} {}\n",
                item.id, item.expected_profit, item.weight
            ));
        }
        out
    }
}

impl FromStr for KnapsackInstance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_instance(s)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_positive(token: &str, line: usize, what: &str) -> Result<u64> {
    let value: u64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("{what} {token:?} is not a non-negative integer")))?;
    if value == 0 {
        return Err(parse_err(line, format!("{what} must be positive")));
    }
    Ok(value)
}

pub fn parse_instance(text: &str) -> Result<KnapsackInstance> {
    let mut seen = HashSet::new();
    let mut name = None;
    let mut class = CorrelationClass::Uncorrelated;
    let mut declared_n: Option<(usize, usize)> = None;
    let mut capacity: Option<(u64, usize)> = None;
    let mut dispersion = 0.0;
    let mut items = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        let is_header = matches!(key, "n" | "capacity" | "dispersion" | "class" | "name");
        if is_header {
            if !seen.insert(key.to_string()) {
                return Err(parse_err(line_no, format!("duplicate header key {key:?}")));
            }
            if rest.is_empty() {
                return Err(parse_err(line_no, format!("header {key:?} has no value")));
            }
            match key {
                "n" => {
                    let n: usize = rest
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad item count {rest:?}")))?;
                    if n == 0 {
                        return Err(parse_err(line_no, "n must be ≥ 1"));
                    }
                    declared_n = Some((n, line_no));
                }
                "capacity" => {
                    capacity = Some((parse_positive(rest, line_no, "capacity")?, line_no));
                }
                "dispersion" => {
                    let d: f64 = rest
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad dispersion {rest:?}")))?;
                    if !(d.is_finite() && d >= 0.0) {
                        return Err(parse_err(line_no, "dispersion must be non-negative"));
                    }
                    dispersion = d;
                }
                "class" => {
                    class = rest.parse().map_err(|e: Error| parse_err(line_no, e.to_string()))?;
                }
                "name" => name = Some(rest.to_string()),
                _ => unreachable!(),
            }
            continue;
        }

        let tokens: Vec<&str> = line.split(' ').collect();
        if tokens.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected `<id> <expected_profit> <weight>`, got {line:?}"),
            ));
        }
        let id: usize = tokens[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad item id {:?}", tokens[0])))?;
        if id != items.len() {
            return Err(parse_err(
                line_no,
                format!("item id {id} out of order (expected {})", items.len()),
            ));
        }
        let expected_profit = parse_positive(tokens[1], line_no, "expected profit")?;
        let weight = parse_positive(tokens[2], line_no, "weight")?;
        items.push(Item {
            id,
            weight,
            expected_profit,
        });
    }

    let (n, n_line) = declared_n.ok_or_else(|| parse_err(last_line.max(1), "missing `n` header"))?;
    if items.len() != n {
        return Err(parse_err(
            n_line,
            format!("header declares n = {n} but {} items follow", items.len()),
        ));
    }
    let total_weight: u64 = items.iter().map(|i| i.weight).sum();
    let (capacity, cap_line) = capacity.unwrap_or((default_capacity(total_weight), n_line));
    if capacity >= total_weight {
        return Err(parse_err(
            cap_line,
            format!("vacuous capacity: {capacity} ≥ total weight {total_weight}"),
        ));
    }
    KnapsackInstance::from_items(
        name.unwrap_or_else(|| "unnamed".to_string()),
        class,
        items,
        capacity,
        dispersion,
    )
    .map_err(|e| parse_err(n_line, e.to_string()))
}

/// Profit band of the strongly correlated generator: `mu_i - w_i` lies in
/// `[offset - jitter, offset + jitter]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelationBand {
    pub offset: u64,
    pub jitter: u64,
}

impl CorrelationBand {
    pub fn contains(&self, profit_minus_weight: i64) -> bool {
        let lo = self.offset as i64 - self.jitter as i64;
        let hi = self.offset as i64 + self.jitter as i64;
        (lo..=hi).contains(&profit_minus_weight)
    }
}

fn check_generator_params(n: usize, range: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be ≥ 1".into()));
    }
    if range < 2 {
        return Err(Error::InvalidParameter(
            "profit/weight range must be ≥ 2".into(),
        ));
    }
    Ok(())
}

/// Draws weights and profits until the default capacity rule yields a
/// non-vacuous, positive capacity. Only tiny instances ever redraw.
fn generate_with(
    n: usize,
    seed: u64,
    class: CorrelationClass,
    name: String,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> (u64, u64),
) -> Result<KnapsackInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let items: Vec<Item> = (0..n)
            .map(|id| {
                let (expected_profit, weight) = draw(&mut rng);
                Item {
                    id,
                    weight,
                    expected_profit,
                }
            })
            .collect();
        let total: u64 = items.iter().map(|i| i.weight).sum();
        let capacity = default_capacity(total);
        if capacity >= 1 && capacity < total {
            return KnapsackInstance::from_items(name, class, items, capacity, 0.0);
        }
    }
}

/// Weights and expected profits independently uniform on `[1, range]`.
pub fn generate_uncorrelated(n: usize, seed: u64, range: u64) -> Result<KnapsackInstance> {
    check_generator_params(n, range)?;
    generate_with(
        n,
        seed,
        CorrelationClass::Uncorrelated,
        format!("uncorr-{n}"),
        |rng| (rng.random_range(1..=range), rng.random_range(1..=range)),
    )
}

/// Strongly correlated instance with `mu_i = w_i + bound_offset`.
pub fn generate_bounded_strongly_correlated(
    n: usize,
    seed: u64,
    range: u64,
    bound_offset: u64,
) -> Result<KnapsackInstance> {
    generate_strongly_correlated_with(
        n,
        seed,
        range,
        CorrelationBand {
            offset: bound_offset,
            jitter: 0,
        },
    )
}

/// Strongly correlated instance where `mu_i - w_i` is uniform on the band.
/// Weights are redrawn whenever the perturbed profit would drop below 1.
pub fn generate_strongly_correlated_with(
    n: usize,
    seed: u64,
    range: u64,
    band: CorrelationBand,
) -> Result<KnapsackInstance> {
    check_generator_params(n, range)?;
    if band.offset == 0 {
        return Err(Error::InvalidParameter("bound offset must be positive".into()));
    }
    generate_with(
        n,
        seed,
        CorrelationClass::BoundedStronglyCorrelated,
        format!("strong-{n}"),
        |rng| loop {
            let weight = rng.random_range(1..=range);
            let shift = if band.jitter == 0 {
                0
            } else {
                rng.random_range(-(band.jitter as i64)..=band.jitter as i64)
            };
            let profit = weight as i64 + band.offset as i64 + shift;
            if profit >= 1 {
                return (profit as u64, weight);
            }
        },
    )
}
