//! Dynamic weight bound.
//!
//! The bound starts at `B_0` and, every `tau` fitness evaluations, moves by an
//! integer drawn uniformly from `[-gamma, gamma]`. The walk is clamped at a
//! floor (default 1) so the capacity never becomes non-positive. All draws come
//! from a ChaCha8 stream seeded with the schedule seed, so `bound_at` is a pure
//! function of the schedule and the time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundSchedule {
    initial: u64,
    interval: u64,
    magnitude: u64,
    seed: u64,
    floor: u64,
}

impl BoundSchedule {
    pub fn new(initial: u64, interval: u64, magnitude: u64, seed: u64) -> Result<Self> {
        Self::with_floor(initial, interval, magnitude, seed, 1)
    }

    pub fn with_floor(
        initial: u64,
        interval: u64,
        magnitude: u64,
        seed: u64,
        floor: u64,
    ) -> Result<Self> {
        if interval == 0 {
            return Err(Error::InvalidParameter("change interval must be ≥ 1".into()));
        }
        if floor == 0 {
            return Err(Error::InvalidParameter("bound floor must be ≥ 1".into()));
        }
        if initial < floor {
            return Err(Error::InvalidParameter(format!(
                "initial bound {initial} is below the floor {floor}"
            )));
        }
        if magnitude > i64::MAX as u64 {
            return Err(Error::InvalidParameter("change magnitude too large".into()));
        }
        Ok(Self {
            initial,
            interval,
            magnitude,
            seed,
            floor,
        })
    }

    pub fn initial(&self) -> u64 {
        self.initial
    }

    pub fn interval(&self) -> u64 {
        self.interval
    }

    pub fn magnitude(&self) -> u64 {
        self.magnitude
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn floor(&self) -> u64 {
        self.floor
    }

    pub fn cursor(&self) -> BoundCursor {
        BoundCursor {
            schedule: *self,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            next_change: self.interval,
            current: self.initial,
            time: 0,
        }
    }

    /// `B_t`, replayed from the start of the stream.
    pub fn bound_at(&self, t: u64) -> u64 {
        self.cursor().bound_at(t)
    }

    /// Change points `(t, B_t)` with `0 < t <= t_max`; there are exactly
    /// `t_max / tau` of them.
    pub fn changes_in(&self, t_max: u64) -> Vec<(u64, u64)> {
        let mut cursor = self.cursor();
        (1..=t_max / self.interval)
            .map(|k| {
                let t = k * self.interval;
                (t, cursor.bound_at(t))
            })
            .collect()
    }

    /// Largest bound reached up to `t_max`.
    pub fn max_bound(&self, t_max: u64) -> u64 {
        self.changes_in(t_max)
            .into_iter()
            .map(|(_, b)| b)
            .fold(self.initial, u64::max)
    }

    /// `t,bound` CSV of the step curve: the initial bound at `t = 0` followed by
    /// every change point up to `t_max`.
    pub fn to_csv(&self, t_max: u64) -> String {
        let mut out = String::from("t,bound\n");
        out.push_str(&format!("0,{}\n", self.initial));
        for (t, b) in self.changes_in(t_max) {
            out.push_str(&format!("{t},{b}\n"));
        }
        out
    }
}

/// Forward-only replay of a schedule. Queries must be non-decreasing in `t`.
#[derive(Debug, Clone)]
pub struct BoundCursor {
    schedule: BoundSchedule,
    rng: ChaCha8Rng,
    next_change: u64,
    current: u64,
    time: u64,
}

impl BoundCursor {
    pub fn bound_at(&mut self, t: u64) -> u64 {
        assert!(t >= self.time, "bound cursor queried backwards ({t} < {})", self.time);
        self.time = t;
        while self.next_change <= t {
            let gamma = self.schedule.magnitude as i64;
            let step = if gamma == 0 {
                0
            } else {
                self.rng.random_range(-gamma..=gamma)
            };
            let moved = self.current as i128 + step as i128;
            self.current = moved.max(self.schedule.floor as i128) as u64;
            self.next_change += self.schedule.interval;
        }
        self.current
    }

    pub fn current(&self) -> u64 {
        self.current
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_before_first_change() {
        let s = BoundSchedule::new(1000, 10, 5, 42).unwrap();
        for t in 0..10 {
            assert_eq!(s.bound_at(t), 1000);
        }
    }

    #[test]
    fn zero_magnitude_is_constant() {
        let s = BoundSchedule::new(777, 3, 0, 1).unwrap();
        for t in [0, 1, 3, 4, 100, 10_000] {
            assert_eq!(s.bound_at(t), 777);
        }
    }

    #[test]
    fn first_change_matches_independent_replay() {
        let s = BoundSchedule::new(1000, 10, 5, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let first: i64 = rand::Rng::random_range(&mut rng, -5i64..=5);
        let second: i64 = rand::Rng::random_range(&mut rng, -5i64..=5);
        assert_eq!(s.bound_at(10) as i64, 1000 + first);
        assert_eq!(s.bound_at(19) as i64, 1000 + first);
        assert_eq!(s.bound_at(20) as i64, 1000 + first + second);
    }

    #[test]
    fn change_point_counts() {
        let s = BoundSchedule::new(5000, 1000, 500, 3).unwrap();
        assert_eq!(s.changes_in(50_000).len(), 50);
        assert!(s.changes_in(999).is_empty());
        for (t, b) in s.changes_in(50_000) {
            assert_eq!(s.bound_at(t), b);
        }
    }

    #[test]
    fn floor_clamps_the_walk() {
        let s = BoundSchedule::new(2, 1, 1000, 9).unwrap();
        for t in 0..500 {
            assert!(s.bound_at(t) >= 1);
        }
        let s = BoundSchedule::with_floor(50, 1, 100, 9, 40).unwrap();
        assert!((0..500).all(|t| s.bound_at(t) >= 40));
    }

    #[test]
    fn invalid_parameters() {
        assert!(BoundSchedule::new(10, 0, 1, 0).is_err());
        assert!(BoundSchedule::new(0, 1, 1, 0).is_err());
        assert!(BoundSchedule::with_floor(5, 1, 1, 0, 6).is_err());
    }

    #[test]
    fn csv_export() {
        let s = BoundSchedule::new(100, 10, 0, 0).unwrap();
        assert_eq!(s.to_csv(25), "t,bound\n0,100\n10,100\n20,100\n");
    }

    proptest! {
        #[test]
        fn steps_are_bounded(initial in 1u64..5000, tau in 1u64..50, gamma in 0u64..300, seed in any::<u64>()) {
            let s = BoundSchedule::new(initial, tau, gamma, seed).unwrap();
            let mut prev = initial;
            let changes = s.changes_in(40 * tau);
            prop_assert_eq!(changes.len(), 40);
            for (t, b) in changes {
                prop_assert_eq!(t % tau, 0);
                prop_assert!(b >= 1);
                prop_assert!(b.abs_diff(prev) <= gamma);
                prop_assert_eq!(s.bound_at(t - 1), prev);
                prev = b;
            }
        }
    }
}
