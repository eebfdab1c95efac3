//! Pareto archive with the GSEMO acceptance rule.
//!
//! An offspring `y` is rejected if some member strongly dominates it;
//! otherwise every member weakly dominated by `y` is removed and `y` joins.
//! A member with the same objective vector is therefore replaced by `y`, and
//! an offspring whose bit string is already present is rejected as a
//! duplicate.
//!
//! Members live in a flat vector (the order used by parent selection). A
//! secondary index groups them by variance; inside a group the members form a
//! staircase, sorted by ascending weight objective with strictly ascending
//! expected profit. Dominance tests then need one binary search per group.
//! A third structure lists members by the weight of their bit string, which
//! lets the sliding window find its members with two binary searches.

use std::collections::BTreeMap;

use crate::objectives::{strongly_dominates, weakly_dominates, ObjectiveVector};
use crate::profit_model::Solution;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub solution: Solution,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// Accepted; `removed` members were weakly dominated by the newcomer.
    Inserted { removed: usize },
    /// Some member strongly dominates the offspring.
    Dominated,
    /// The same bit string is already a member.
    Duplicate,
}

impl InsertOutcome {
    pub fn accepted(&self) -> bool {
        matches!(self, InsertOutcome::Inserted { .. })
    }
}

/// Order-preserving map from `f64` to `u64`.
fn ord_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    weight: f64,
    mu: f64,
    slot: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Archive {
    members: Vec<Member>,
    index: BTreeMap<u64, Vec<Entry>>,
    /// `(solution weight, slot)`, sorted by weight.
    by_weight: Vec<(u64, usize)>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Member> {
        self.members.iter()
    }

    pub fn solutions(&self) -> impl Iterator<Item = &Solution> + Clone {
        self.members.iter().map(|m| &m.solution)
    }

    pub fn into_members(self) -> Vec<Member> {
        self.members
    }

    /// Slots of the members whose bit-string weight lies in `[lo, hi]`, in
    /// ascending weight order.
    pub fn slots_in_weight_range(&self, lo: u64, hi: u64) -> impl ExactSizeIterator<Item = usize> + '_ {
        let a = self.by_weight.partition_point(|&(w, _)| w < lo);
        let b = self.by_weight.partition_point(|&(w, _)| w <= hi).max(a);
        self.by_weight[a..b].iter().map(|&(_, slot)| slot)
    }

    /// Removes and returns the members matching `pred`; the rest keep their
    /// relative order.
    pub fn extract_if(&mut self, mut pred: impl FnMut(&Member) -> bool) -> Vec<Member> {
        if !self.members.iter().any(&mut pred) {
            return Vec::new();
        }
        let (taken, kept): (Vec<Member>, Vec<Member>) =
            std::mem::take(&mut self.members).into_iter().partition(|m| pred(m));
        *self = Self::from_non_dominated(kept);
        taken
    }

    /// Builds an archive from members that are already mutually
    /// non-dominated, skipping the dominance tests.
    fn from_non_dominated(members: Vec<Member>) -> Self {
        let mut index: BTreeMap<u64, Vec<Entry>> = BTreeMap::new();
        let mut by_weight = Vec::with_capacity(members.len());
        for (slot, m) in members.iter().enumerate() {
            index.entry(ord_key(m.objectives.variance())).or_default().push(Entry {
                weight: m.objectives.weight(),
                mu: m.objectives.mu(),
                slot,
            });
            by_weight.push((m.solution.weight(), slot));
        }
        for stairs in index.values_mut() {
            stairs.sort_by(|a, b| a.weight.total_cmp(&b.weight));
        }
        by_weight.sort_unstable();
        Self {
            members,
            index,
            by_weight,
        }
    }

    fn weight_entry(&self, slot: usize) -> usize {
        let w = self.members[slot].solution.weight();
        let start = self.by_weight.partition_point(|&(x, _)| x < w);
        start
            + self.by_weight[start..]
                .iter()
                .position(|&(_, s)| s == slot)
                .expect("member is listed by weight")
    }

    /// True if some member strongly dominates `y`.
    pub fn is_strongly_dominated(&self, y: &ObjectiveVector) -> bool {
        let key = ord_key(y.variance());
        for (&k, stairs) in self.index.range(..=key) {
            let p = stairs.partition_point(|e| e.weight <= y.weight());
            if p == 0 {
                continue;
            }
            let c = &stairs[p - 1];
            if c.mu >= y.mu() && (k < key || c.weight < y.weight() || c.mu > y.mu()) {
                return true;
            }
        }
        false
    }

    fn find_equal(&self, y: &ObjectiveVector) -> Option<usize> {
        let stairs = self.index.get(&ord_key(y.variance()))?;
        let p = stairs.partition_point(|e| e.weight < y.weight());
        stairs
            .get(p)
            .filter(|e| e.weight == y.weight() && e.mu == y.mu())
            .map(|e| e.slot)
    }

    pub fn insert(&mut self, solution: Solution, objectives: ObjectiveVector) -> InsertOutcome {
        if self.is_strongly_dominated(&objectives) {
            return InsertOutcome::Dominated;
        }
        if let Some(slot) = self.find_equal(&objectives) {
            if self.members[slot].solution == solution {
                return InsertOutcome::Duplicate;
            }
        }

        let key = ord_key(objectives.variance());
        let (w, mu) = (objectives.weight(), objectives.mu());
        let mut doomed = Vec::new();
        let mut emptied = Vec::new();
        for (&k, stairs) in self.index.range_mut(key..) {
            let start = stairs.partition_point(|e| e.weight < w);
            let end = stairs.partition_point(|e| e.mu <= mu).max(start);
            if start < end {
                doomed.extend(stairs.drain(start..end).map(|e| e.slot));
                if stairs.is_empty() {
                    emptied.push(k);
                }
            }
        }
        for k in emptied {
            self.index.remove(&k);
        }
        let removed = doomed.len();
        doomed.sort_unstable_by(|a, b| b.cmp(a));
        for slot in doomed {
            let e = self.weight_entry(slot);
            self.by_weight.remove(e);
            let last = self.members.len() - 1;
            if slot < last {
                let e = self.weight_entry(last);
                self.by_weight[e].1 = slot;
            }
            self.members.swap_remove(slot);
            if slot < self.members.len() {
                let moved = self.members[slot].objectives;
                self.entry_mut(&moved).slot = slot;
            }
        }

        let slot = self.members.len();
        let stairs = self.index.entry(key).or_default();
        let pos = stairs.partition_point(|e| e.weight < w);
        stairs.insert(
            pos,
            Entry {
                weight: w,
                mu,
                slot,
            },
        );
        let sw = solution.weight();
        let pos = self.by_weight.partition_point(|&(x, _)| x <= sw);
        self.by_weight.insert(pos, (sw, slot));
        self.members.push(Member {
            solution,
            objectives,
        });
        InsertOutcome::Inserted { removed }
    }

    fn entry_mut(&mut self, y: &ObjectiveVector) -> &mut Entry {
        let stairs = self
            .index
            .get_mut(&ord_key(y.variance()))
            .expect("member is indexed");
        let p = stairs.partition_point(|e| e.weight < y.weight());
        &mut stairs[p]
    }

    /// Exhaustive pairwise check: no member strongly dominates another and no
    /// bit string appears twice.
    pub fn audit(&self) -> bool {
        for (i, a) in self.members.iter().enumerate() {
            for (j, b) in self.members.iter().enumerate() {
                if i == j {
                    continue;
                }
                if strongly_dominates(&a.objectives, &b.objectives)
                    || weakly_dominates(&a.objectives, &b.objectives)
                    || a.solution == b.solution
                {
                    return false;
                }
            }
        }
        let indexed: usize = self.index.values().map(Vec::len).sum();
        let mut slots: Vec<usize> = self.by_weight.iter().map(|&(_, s)| s).collect();
        slots.sort_unstable();
        indexed == self.members.len()
            && slots.iter().copied().eq(0..self.members.len())
            && self
                .by_weight
                .windows(2)
                .all(|p| p[0].0 <= p[1].0)
            && self
                .by_weight
                .iter()
                .all(|&(w, s)| self.members[s].solution.weight() == w)
    }
}
