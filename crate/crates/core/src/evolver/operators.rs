//! Standard bit mutation and parent selection.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::archive::{Archive, Member};
use crate::error::{Error, Result};
use crate::instance::KnapsackInstance;
use crate::profit_model::Solution;

/// Flips every bit independently with probability `1/n`.
///
/// Flip positions are generated by geometric skips, which has the same
/// distribution as `n` Bernoulli trials but costs one draw per flipped bit.
pub fn mutate<R: Rng + ?Sized>(x: &Solution, instance: &KnapsackInstance, rng: &mut R) -> Solution {
    let n = x.len();
    let mut y = x.clone();
    if n == 0 {
        return y;
    }
    let skip = Geometric::new(1.0 / n as f64).expect("1/n is a valid probability");
    let mut pos = skip.sample(rng);
    while pos < n as u64 {
        y.flip(instance, pos as usize);
        pos += 1 + skip.sample(rng);
    }
    debug_assert!(y.caches_consistent(instance));
    y
}

/// One archive or the union of two, addressed as a single sequence.
#[derive(Debug, Clone, Copy)]
pub struct Population<'a> {
    parts: [Option<&'a Archive>; 2],
}

impl<'a> Population<'a> {
    pub fn single(archive: &'a Archive) -> Self {
        Self {
            parts: [Some(archive), None],
        }
    }

    pub fn union(first: &'a Archive, second: &'a Archive) -> Self {
        Self {
            parts: [Some(first), Some(second)],
        }
    }

    fn part(&self, i: usize) -> &'a [Member] {
        self.parts[i].map_or(&[], |a| a.members())
    }

    pub fn len(&self) -> usize {
        self.part(0).len() + self.part(1).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> &'a Member {
        let first = self.part(0);
        if i < first.len() {
            &first[i]
        } else {
            &self.part(1)[i - first.len()]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a Member> + 'a {
        let (a, b) = (self.part(0), self.part(1));
        a.iter().chain(b.iter())
    }
}

pub fn select_uniform<'a, R: Rng + ?Sized>(
    population: Population<'a>,
    rng: &mut R,
) -> Result<&'a Solution> {
    if population.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let i = rng.random_range(0..population.len());
    Ok(&population.get(i).solution)
}

/// Weight window `[floor(b), ceil(b + len_sw)]` with `b = (t / t_max) * bound`.
pub fn sliding_window(bound: u64, t: u64, t_max: u64, len_sw: f64) -> (f64, f64) {
    let centre = (t as f64 / t_max as f64) * bound as f64;
    (centre.floor(), (centre + len_sw).ceil())
}

/// Uniform choice among members whose weight lies in the sliding window, or
/// among all members when the window is empty or the budget is spent.
pub fn select_sliding_window<'a, R: Rng + ?Sized>(
    population: Population<'a>,
    bound: u64,
    t: u64,
    t_max: u64,
    len_sw: f64,
    rng: &mut R,
) -> Result<&'a Solution> {
    if population.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if t >= t_max {
        return select_uniform(population, rng);
    }
    let (lo, hi) = sliding_window(bound, t, t_max, len_sw);
    // both ends are integral; weights are non-negative integers
    let (lo, hi) = (lo.max(0.0) as u64, hi.max(0.0) as u64);
    let counts = [0, 1].map(|i| {
        population.parts[i].map_or(0, |a| a.slots_in_weight_range(lo, hi).len())
    });
    let count = counts[0] + counts[1];
    if count == 0 {
        return select_uniform(population, rng);
    }
    let mut k = rng.random_range(0..count);
    let part = if k < counts[0] { 0 } else {
        k -= counts[0];
        1
    };
    let archive = population.parts[part].expect("non-empty part");
    let slot = archive
        .slots_in_weight_range(lo, hi)
        .nth(k)
        .expect("k < count");
    Ok(&archive.members()[slot].solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_uncorrelated, CorrelationClass};
    use crate::objectives::ObjectiveVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Archive holding `xs` in order; the objectives keep them incomparable.
    fn archive(xs: Vec<Solution>) -> Archive {
        let mut a = Archive::new();
        for (i, x) in xs.into_iter().enumerate() {
            assert!(a
                .insert(x, ObjectiveVector::three(i as f64, 0.0, i as f64))
                .accepted());
        }
        a
    }

    #[test]
    fn single_bit_always_flips() {
        let inst =
            KnapsackInstance::new("t", CorrelationClass::Uncorrelated, &[(3, 2)], 1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Solution::empty(1);
        let flips = (0..10_000)
            .filter(|_| mutate(&x, &inst, &mut rng).get(0))
            .count();
        assert_eq!(flips, 10_000);
    }

    #[test]
    fn mean_flip_count_is_one() {
        let inst = generate_uncorrelated(100, 5, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Solution::from_indices(&inst, &[1, 5, 9, 50, 99]).unwrap();
        let trials = 100_000;
        let mut total = 0usize;
        let mut per_bit = vec![0usize; 100];
        for _ in 0..trials {
            let y = mutate(&x, &inst, &mut rng);
            assert!(y.caches_consistent(&inst));
            for i in 0..100 {
                if x.get(i) != y.get(i) {
                    total += 1;
                    per_bit[i] += 1;
                }
            }
        }
        let mean = total as f64 / trials as f64;
        // binomial(100, 0.01): mean 1, sd of the sample mean ~0.003
        assert!((mean - 1.0).abs() < 0.1, "mean flips {mean}");
        // each position flips with rate 0.01 (sd ~3e-4 per position)
        for (i, &c) in per_bit.iter().enumerate() {
            let rate = c as f64 / trials as f64;
            assert!((rate - 0.01).abs() < 0.0025, "bit {i} rate {rate}");
        }
    }

    #[test]
    fn uniform_selection_frequencies() {
        let inst = generate_uncorrelated(8, 5, 100).unwrap();
        let members = archive(
            (0..4)
                .map(|i| Solution::from_indices(&inst, &[i]).unwrap())
                .collect(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            let s = select_uniform(Population::single(&members), &mut rng).unwrap();
            counts[s.ones().next().unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 0.01);
        }
        let one = archive(vec![Solution::from_indices(&inst, &[0]).unwrap()]);
        assert_eq!(
            select_uniform(Population::single(&one), &mut rng).unwrap(),
            &one.members()[0].solution
        );
        assert!(select_uniform(Population::single(&Archive::new()), &mut rng).is_err());
    }

    fn weighted(weights: &[u64]) -> (KnapsackInstance, Archive) {
        let items: Vec<(u64, u64)> = weights.iter().map(|&w| (1, w)).collect();
        let inst =
            KnapsackInstance::new("t", CorrelationClass::Uncorrelated, &items, 1, 0.0).unwrap();
        let members = archive(
            (0..weights.len())
                .map(|i| Solution::from_indices(&inst, &[i]).unwrap())
                .collect(),
        );
        (inst, members)
    }

    #[test]
    fn window_picks_matching_member() {
        let (_, members) = weighted(&[10, 50, 90]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(sliding_window(100, 50, 100, 10.0), (50.0, 60.0));
        for _ in 0..100 {
            let s =
                select_sliding_window(Population::single(&members), 100, 50, 100, 10.0, &mut rng)
                    .unwrap();
            assert_eq!(s.weight(), 50);
        }
    }

    #[test]
    fn window_at_start_selects_empty_solution() {
        let empty = archive(vec![Solution::empty(3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(sliding_window(100, 0, 100, 7.5), (0.0, 8.0));
        let s = select_sliding_window(Population::single(&empty), 100, 0, 100, 7.5, &mut rng)
            .unwrap();
        assert_eq!(s.weight(), 0);
    }

    #[test]
    fn window_falls_back_to_whole_population() {
        let (_, members) = weighted(&[10, 50, 90]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws = 60_000;
        for (t, t_max) in [(100u64, 100u64), (30, 100)] {
            // t = t_max: whole population; t = 30: window [3, 4] holds nobody
            let mut counts = [0usize; 3];
            for _ in 0..draws {
                let s = select_sliding_window(
                    Population::single(&members),
                    10,
                    t,
                    t_max,
                    1.0,
                    &mut rng,
                )
                .unwrap();
                counts[s.ones().next().unwrap()] += 1;
            }
            for c in counts {
                assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.01);
            }
        }
        let none = Archive::new();
        assert!(select_sliding_window(Population::single(&none), 1, 0, 1, 1.0, &mut rng).is_err());
    }

    #[test]
    fn union_view_spans_both_parts() {
        let (_, members) = weighted(&[10, 50, 90]);
        let first = archive(vec![members.members()[0].solution.clone()]);
        let rest = archive(
            members.members()[1..]
                .iter()
                .map(|m| m.solution.clone())
                .collect(),
        );
        let pop = Population::union(&first, &rest);
        assert_eq!(pop.len(), 3);
        assert_eq!(pop.get(2).solution.weight(), 90);
        assert_eq!(pop.iter().count(), 3);
        // a window spanning both parts draws from each in proportion
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            let s = select_sliding_window(pop, 100, 0, 100, 60.0, &mut rng).unwrap();
            counts[s.ones().next().unwrap()] += 1;
        }
        assert_eq!(counts[2], 0);
        assert!((counts[0] as f64 / 30_000.0 - 0.5).abs() < 0.015);
    }
}
