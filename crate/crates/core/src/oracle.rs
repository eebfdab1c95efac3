//! Exact reference values: the deterministic optimum over expected profits by
//! dynamic programming, and exhaustive scans used to validate the evolvers on
//! small instances.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instance::KnapsackInstance;
use crate::objectives::{Evaluator, Formulation, ObjectiveVector};
use crate::profit_model::{check_alpha, cheb_estimate, hoef_estimate, Estimator, Solution};

/// Default upper limit on the capacity range a table may cover.
pub const DEFAULT_CAPACITY_LIMIT: u64 = 50_000_000;

pub const BRUTE_FORCE_BEST_MAX_ITEMS: usize = 24;
pub const BRUTE_FORCE_PARETO_MAX_ITEMS: usize = 20;

/// Best expected profit for every capacity in `[0, max_capacity]`.
#[derive(Debug, Clone)]
pub struct DpTable {
    best: Vec<u64>,
    total_weight: u64,
    total_profit: u64,
}

impl DpTable {
    pub fn build(instance: &KnapsackInstance, max_capacity: u64) -> Result<Self> {
        Self::build_with_limit(instance, max_capacity, DEFAULT_CAPACITY_LIMIT)
    }

    pub fn build_with_limit(
        instance: &KnapsackInstance,
        max_capacity: u64,
        limit: u64,
    ) -> Result<Self> {
        // Capacities past the total weight all share the all-items optimum.
        let cap = max_capacity.min(instance.total_weight());
        if cap > limit {
            return Err(Error::CapacityTooLarge {
                capacity: cap,
                limit,
            });
        }
        let cap = cap as usize;
        let mut best = vec![0u64; cap + 1];
        for item in instance.items() {
            let w = item.weight as usize;
            if w > cap {
                continue;
            }
            for c in (w..=cap).rev() {
                let with = best[c - w] + item.expected_profit;
                if with > best[c] {
                    best[c] = with;
                }
            }
        }
        Ok(Self {
            best,
            total_weight: instance.total_weight(),
            total_profit: instance.total_profit(),
        })
    }

    /// Largest capacity answerable without rebuilding.
    pub fn max_capacity(&self) -> u64 {
        if self.best.len() as u64 > self.total_weight {
            u64::MAX
        } else {
            self.best.len() as u64 - 1
        }
    }

    pub fn optimum(&self, capacity: u64) -> Option<u64> {
        if capacity >= self.total_weight {
            Some(self.total_profit)
        } else {
            self.best.get(capacity as usize).copied()
        }
    }
}

/// `max sum mu_i x_i` subject to `sum w_i x_i <= capacity`.
pub fn deterministic_optimum(instance: &KnapsackInstance, capacity: u64) -> Result<u64> {
    let table = DpTable::build(instance, capacity)?;
    Ok(table.optimum(capacity).expect("table covers the requested capacity"))
}

/// Deterministic optima for a list of capacities from a single table sweep.
pub fn optimum_for_bounds(
    instance: &KnapsackInstance,
    bounds: &[u64],
) -> Result<BTreeMap<u64, u64>> {
    let Some(&max) = bounds.iter().max() else {
        return Ok(BTreeMap::new());
    };
    let table = DpTable::build(instance, max)?;
    Ok(bounds
        .iter()
        .map(|&b| (b, table.optimum(b).expect("table covers all bounds")))
        .collect())
}

/// Memoising front end that grows its table when a larger bound is queried.
#[derive(Debug, Clone)]
pub struct OptimumCache<'a> {
    instance: &'a KnapsackInstance,
    table: Option<DpTable>,
}

impl<'a> OptimumCache<'a> {
    pub fn new(instance: &'a KnapsackInstance) -> Self {
        Self {
            instance,
            table: None,
        }
    }

    pub fn optimum(&mut self, capacity: u64) -> Result<u64> {
        if let Some(v) = self.table.as_ref().and_then(|t| t.optimum(capacity)) {
            return Ok(v);
        }
        let table = DpTable::build(self.instance, capacity)?;
        let v = table.optimum(capacity).expect("fresh table covers capacity");
        self.table = Some(table);
        Ok(v)
    }

    pub fn covered_capacity(&self) -> Option<u64> {
        self.table.as_ref().map(DpTable::max_capacity)
    }
}

/// Visits every subset in Gray-code order, passing running `(weight, mu,
/// cardinality, mask)`.
fn for_each_subset(instance: &KnapsackInstance, mut visit: impl FnMut(u64, u64, u32, u64)) {
    let n = instance.len();
    let items = instance.items();
    let (mut w, mut p, mut k, mut mask) = (0u64, 0u64, 0u32, 0u64);
    visit(w, p, k, mask);
    for step in 1u64..(1u64 << n) {
        let bit = step.trailing_zeros() as usize;
        mask ^= 1 << bit;
        let item = &items[bit];
        if mask & (1 << bit) != 0 {
            w += item.weight;
            p += item.expected_profit;
            k += 1;
        } else {
            w -= item.weight;
            p -= item.expected_profit;
            k -= 1;
        }
        visit(w, p, k, mask);
    }
}

/// Largest chance-constrained profit over all subsets with weight at most
/// `capacity`, found by exhaustive enumeration.
pub fn brute_force_best(
    instance: &KnapsackInstance,
    capacity: u64,
    alpha: f64,
    estimator: Estimator,
) -> Result<f64> {
    if instance.len() > BRUTE_FORCE_BEST_MAX_ITEMS {
        return Err(Error::InvalidParameter(format!(
            "exhaustive search limited to {BRUTE_FORCE_BEST_MAX_ITEMS} items, got {}",
            instance.len()
        )));
    }
    check_alpha(alpha, estimator)?;
    let delta = instance.dispersion();
    let unit_var = instance.item_variance();
    let mut best = f64::NEG_INFINITY;
    for_each_subset(instance, |w, p, k, _| {
        if w > capacity {
            return;
        }
        let value = match estimator {
            Estimator::Cheb => cheb_estimate(p as f64, k as f64 * unit_var, alpha),
            Estimator::Hoef => hoef_estimate(p as f64, k, delta, alpha),
        }
        .expect("alpha checked above");
        if value > best {
            best = value;
        }
    });
    Ok(best)
}

/// Exact non-dominated set of objective vectors over all `2^n` selections.
pub fn brute_force_pareto(
    instance: &KnapsackInstance,
    formulation: Formulation,
    bound: u64,
) -> Result<Vec<ObjectiveVector>> {
    if instance.len() > BRUTE_FORCE_PARETO_MAX_ITEMS {
        return Err(Error::InvalidParameter(format!(
            "exhaustive front limited to {BRUTE_FORCE_PARETO_MAX_ITEMS} items, got {}",
            instance.len()
        )));
    }
    let evaluator = Evaluator::new(instance, formulation);
    let mut all = Vec::with_capacity(1 << instance.len());
    for_each_subset(instance, |_, _, _, mask| {
        let x = Solution::from_mask(instance, mask);
        all.push(evaluator.evaluate(&x, bound));
    });
    Ok(non_dominated(all))
}

/// Distinct vectors not strongly dominated by any other vector in `points`.
pub fn non_dominated(mut points: Vec<ObjectiveVector>) -> Vec<ObjectiveVector> {
    // mu descending, then variance and weight ascending: any dominator sorts
    // before the vectors it dominates.
    points.sort_by(|a, b| {
        b.mu()
            .total_cmp(&a.mu())
            .then(a.variance().total_cmp(&b.variance()))
            .then(a.weight().total_cmp(&b.weight()))
    });
    points.dedup();
    let mut front: Vec<ObjectiveVector> = Vec::new();
    for p in points {
        if !front
            .iter()
            .any(|f| crate::objectives::weakly_dominates(f, &p))
        {
            front.push(p);
        }
    }
    front
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_uncorrelated, CorrelationClass};
    use crate::profit_model::ProfitModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exhaustive_optimum(instance: &KnapsackInstance, capacity: u64) -> u64 {
        let n = instance.len();
        let mut best = 0;
        for mask in 0u64..(1 << n) {
            let (mut w, mut p) = (0, 0);
            for (i, item) in instance.items().iter().enumerate() {
                if mask >> i & 1 == 1 {
                    w += item.weight;
                    p += item.expected_profit;
                }
            }
            if w <= capacity && p > best {
                best = p;
            }
        }
        best
    }

    fn greedy(instance: &KnapsackInstance, capacity: u64) -> u64 {
        let mut items = instance.items().to_vec();
        items.sort_by(|a, b| {
            (b.expected_profit * a.weight).cmp(&(a.expected_profit * b.weight))
        });
        let (mut w, mut p) = (0, 0);
        for item in items {
            if w + item.weight <= capacity {
                w += item.weight;
                p += item.expected_profit;
            }
        }
        p
    }

    #[test]
    fn zero_capacity() {
        let inst = generate_uncorrelated(8, 1, 50).unwrap();
        assert_eq!(deterministic_optimum(&inst, 0).unwrap(), 0);
        assert_eq!(
            brute_force_best(&inst.clone().with_dispersion(5.0).unwrap(), 0, 0.1, Estimator::Cheb)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn two_item_example() {
        let inst =
            KnapsackInstance::new("t", CorrelationClass::Uncorrelated, &[(10, 3), (7, 4)], 5, 0.0)
                .unwrap();
        assert_eq!(deterministic_optimum(&inst, 5).unwrap(), 10);
        assert_eq!(exhaustive_optimum(&inst, 5), 10);
    }

    #[test]
    fn dp_matches_exhaustive_scan() {
        let inst = generate_uncorrelated(16, 11, 100).unwrap();
        for cap in [0, 1, 17, inst.base_capacity(), inst.total_weight() - 1, inst.total_weight() + 9] {
            assert_eq!(
                deterministic_optimum(&inst, cap).unwrap(),
                exhaustive_optimum(&inst, cap),
                "capacity {cap}"
            );
        }
    }

    #[test]
    fn dp_beats_greedy_and_is_monotone() {
        for seed in 0..20 {
            let inst = generate_uncorrelated(40, seed, 500).unwrap();
            let table = DpTable::build(&inst, inst.total_weight()).unwrap();
            let mut prev = 0;
            for cap in (0..inst.total_weight()).step_by(37) {
                let v = table.optimum(cap).unwrap();
                assert!(v >= prev);
                assert!(v >= greedy(&inst, cap));
                prev = v;
            }
        }
    }

    #[test]
    fn bounds_share_one_table() {
        let inst = generate_uncorrelated(12, 5, 60).unwrap();
        let map = optimum_for_bounds(&inst, &[30, 10, 30, 55]).unwrap();
        assert_eq!(map.len(), 3);
        for (b, v) in &map {
            assert_eq!(*v, deterministic_optimum(&inst, *b).unwrap());
        }
        let mut cache = OptimumCache::new(&inst);
        assert_eq!(cache.optimum(10).unwrap(), map[&10]);
        assert_eq!(cache.covered_capacity(), Some(10));
        assert_eq!(cache.optimum(55).unwrap(), map[&55]);
        assert_eq!(cache.covered_capacity(), Some(55));
        assert_eq!(cache.optimum(30).unwrap(), map[&30]);
        assert_eq!(cache.covered_capacity(), Some(55));
    }

    #[test]
    fn capacity_limit_enforced() {
        let inst = generate_uncorrelated(10, 5, 1000).unwrap();
        assert!(matches!(
            DpTable::build_with_limit(&inst, 500, 100),
            Err(Error::CapacityTooLarge { .. })
        ));
    }

    #[test]
    fn brute_force_best_zero_dispersion_is_dp() {
        let inst = generate_uncorrelated(12, 2, 90).unwrap();
        let cap = inst.base_capacity();
        for est in Estimator::ALL {
            let v = brute_force_best(&inst, cap, 0.01, est).unwrap();
            assert_eq!(v, deterministic_optimum(&inst, cap).unwrap() as f64);
        }
    }

    #[test]
    fn brute_force_best_matches_naive_scan() {
        let inst = generate_uncorrelated(10, 4, 100)
            .unwrap()
            .with_dispersion(25.0)
            .unwrap();
        let model = ProfitModel::new(&inst);
        let cap = inst.base_capacity();
        let all: Vec<Solution> = (0u64..1 << 10)
            .map(|m| Solution::from_mask(&inst, m))
            .filter(|x| x.weight() <= cap)
            .collect();
        for alpha in [0.1, 0.01, 0.001] {
            for est in Estimator::ALL {
                let (_, expect) = model.best_profit(&all, alpha, est).unwrap();
                let got = brute_force_best(&inst, cap, alpha, est).unwrap();
                assert!((got - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_item_front() {
        let inst =
            KnapsackInstance::new("t", CorrelationClass::Uncorrelated, &[(5, 4)], 3, 1.0).unwrap();
        // the single item does not fit: its penalised vector is dominated by the empty one
        let front = brute_force_pareto(&inst, Formulation::Static2D, 3).unwrap();
        assert_eq!(front, vec![ObjectiveVector::two(0.0, 0.0)]);
        // with slack it fits and trades profit against variance
        let front = brute_force_pareto(&inst, Formulation::Dyn2D { gamma: 1 }, 3).unwrap();
        assert_eq!(front.len(), 2);
    }

    #[test]
    fn static_2d_front_has_one_point_per_cardinality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let inst = generate_uncorrelated(12, rng.random(), 100)
                .unwrap()
                .with_dispersion(10.0)
                .unwrap();
            let front = brute_force_pareto(&inst, Formulation::Static2D, inst.base_capacity()).unwrap();
            assert!(front.len() <= inst.len() + 1);
            let mut vars: Vec<f64> = front.iter().map(|v| v.variance()).collect();
            vars.dedup();
            assert_eq!(vars.len(), front.len());
        }
    }

    #[test]
    fn size_caps() {
        let inst = generate_uncorrelated(25, 1, 10).unwrap();
        assert!(brute_force_best(&inst, 5, 0.1, Estimator::Cheb).is_err());
        assert!(brute_force_pareto(&inst, Formulation::Static2D, 5).is_err());
    }
}
