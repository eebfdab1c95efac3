//! GSEMO and its variants.
//!
//! [`run_gsemo`] is the classic algorithm: start from the empty selection,
//! repeatedly pick a parent, apply standard bit mutation and offer the
//! offspring to the archive. [`run_gsemo_dynamic`] keeps two archives for a
//! moving bound `B_t`: `S1` holds feasible solutions and `S2` solutions that
//! exceed `B_t` by at most `gamma`, which may become feasible after the next
//! change. Both variants support uniform and sliding-window parent selection.
//!
//! Time is the number of objective evaluations. The initial solution is
//! evaluation 1 and every offspring adds one, so a run performs exactly
//! `t_max` evaluations. Re-evaluations during repair are not counted.

pub mod archive;
pub mod operators;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use archive::{Archive, InsertOutcome, Member};
pub use operators::{mutate, select_sliding_window, select_uniform, sliding_window, Population};

use crate::dynamics::BoundSchedule;
use crate::error::{Error, Result};
use crate::instance::KnapsackInstance;
use crate::metrics::{RunTrace, TraceConfig, TraceRecorder};
use crate::objectives::{Evaluator, Formulation, ObjectiveVector};
use crate::profit_model::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Selection {
    Uniform,
    SlidingWindow,
}

impl Selection {
    pub fn as_str(self) -> &'static str {
        match self {
            Selection::Uniform => "uniform",
            Selection::SlidingWindow => "sliding",
        }
    }

    /// `GS` for uniform selection, `SW` for the sliding window.
    pub fn prefix(self) -> &'static str {
        match self {
            Selection::Uniform => "GS",
            Selection::SlidingWindow => "SW",
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "gs" => Ok(Selection::Uniform),
            "sliding" | "sw" => Ok(Selection::SlidingWindow),
            other => Err(Error::InvalidParameter(format!(
                "unknown selection {other:?} (expected uniform or sliding)"
            ))),
        }
    }
}

/// Bound used to position the sliding window in dynamic runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowBound {
    /// The current bound `B_t`.
    #[default]
    Current,
    /// The initial bound `B_0`.
    Initial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolverConfig {
    pub t_max: u64,
    pub selection: Selection,
    pub formulation: Formulation,
    /// Sliding-window length; defaults to the average item weight.
    pub len_sw: Option<f64>,
    pub seed: u64,
    pub window_bound: WindowBound,
    pub trace: TraceConfig,
}

impl EvolverConfig {
    pub fn new(t_max: u64, selection: Selection, formulation: Formulation, seed: u64) -> Self {
        Self {
            t_max,
            selection,
            formulation,
            len_sw: None,
            seed,
            window_bound: WindowBound::Current,
            trace: TraceConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::Config("t_max must be ≥ 1".into()));
        }
        if let Some(len) = self.len_sw {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::Config(format!(
                    "sliding-window length must be positive, got {len}"
                )));
            }
        }
        self.trace.validate()
    }

    fn window_length(&self, instance: &KnapsackInstance) -> f64 {
        self.len_sw.unwrap_or_else(|| instance.average_weight())
    }
}

/// Where an offspring was offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Primary(InsertOutcome),
    Backlog(InsertOutcome),
    /// Heavier than `B_t + gamma`; kept by neither archive.
    Discarded,
}

/// What an observer sees after each evaluation.
#[derive(Debug)]
pub struct Step<'a> {
    pub t: u64,
    pub bound: u64,
    pub bound_changed: bool,
    pub offspring: &'a Solution,
    pub objectives: ObjectiveVector,
    pub destination: Destination,
    pub primary: &'a Archive,
    pub backlog: Option<&'a Archive>,
}

pub trait Observer {
    fn observe(&mut self, step: &Step<'_>);
}

impl<F: FnMut(&Step<'_>)> Observer for F {
    fn observe(&mut self, step: &Step<'_>) {
        self(step)
    }
}

fn notify(observers: &mut [&mut dyn Observer], step: &Step<'_>) {
    for o in observers.iter_mut() {
        o.observe(step);
    }
}

#[derive(Debug, Clone)]
pub struct StaticOutcome {
    pub archive: Archive,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct DynamicOutcome {
    pub state: DynamicState,
    pub trace: RunTrace,
}

struct Selector {
    selection: Selection,
    len_sw: f64,
    t_max: u64,
}

impl Selector {
    fn pick<'a>(
        &self,
        population: Population<'a>,
        bound: u64,
        t: u64,
        rng: &mut ChaCha8Rng,
    ) -> &'a Solution {
        match self.selection {
            Selection::Uniform => select_uniform(population, rng),
            Selection::SlidingWindow => {
                select_sliding_window(population, bound, t, self.t_max, self.len_sw, rng)
            }
        }
        .expect("population always holds at least the empty selection")
    }
}

/// GSEMO under the static bound of `instance`.
pub fn run_gsemo(
    instance: &KnapsackInstance,
    config: &EvolverConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<StaticOutcome> {
    config.validate()?;
    if config.formulation.is_dynamic() {
        return Err(Error::Config(
            "static runs need a static formulation".into(),
        ));
    }
    let bound = instance.base_capacity();
    let evaluator = Evaluator::new(instance, config.formulation);
    let selector = Selector {
        selection: config.selection,
        len_sw: config.window_length(instance),
        t_max: config.t_max,
    };
    let mut recorder =
        TraceRecorder::new(instance, config.trace.clone(), bound, None, config.t_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut archive = Archive::new();
    let watching = !observers.is_empty();

    let mut evaluations = 0u64;
    let x0 = Solution::empty(instance.len());
    let f0 = evaluator.evaluate(&x0, bound);
    evaluations += 1;
    let outcome = archive.insert(x0.clone(), f0);
    let mut emit = |t: u64,
                    y: &Solution,
                    f: ObjectiveVector,
                    outcome: InsertOutcome,
                    archive: &Archive,
                    observers: &mut [&mut dyn Observer]| {
        if watching {
            notify(
                observers,
                &Step {
                    t,
                    bound,
                    bound_changed: false,
                    offspring: y,
                    objectives: f,
                    destination: Destination::Primary(outcome),
                    primary: archive,
                    backlog: None,
                },
            );
        }
        if recorder.should_sample(t) {
            let feasible = archive.solutions().filter(|x| x.weight() <= bound);
            recorder.record(t, bound, feasible, archive.len(), 0);
        }
    };
    emit(1, &x0, f0, outcome, &archive, observers);

    for t in 2..=config.t_max {
        let parent = selector.pick(Population::single(&archive), bound, t - 1, &mut rng);
        let y = mutate(parent, instance, &mut rng);
        let f = evaluator.evaluate(&y, bound);
        evaluations += 1;
        if watching {
            let outcome = archive.insert(y.clone(), f);
            emit(t, &y, f, outcome, &archive, observers);
        } else {
            let outcome = archive.insert(y, f);
            emit(t, &Solution::empty(0), f, outcome, &archive, observers);
        }
    }

    Ok(StaticOutcome {
        archive,
        trace: recorder.finish(evaluations),
    })
}

/// Feasible archive `S1`, slack archive `S2` and the bound they refer to.
#[derive(Debug, Clone)]
pub struct DynamicState {
    pub s1: Archive,
    pub s2: Archive,
    pub bound: u64,
    pub gamma: u64,
}

impl DynamicState {
    pub fn new(bound: u64, gamma: u64) -> Self {
        Self {
            s1: Archive::new(),
            s2: Archive::new(),
            bound,
            gamma,
        }
    }

    /// Routes `y` by weight: `S1` if feasible, `S2` if within the slack,
    /// otherwise nowhere.
    pub fn offer(&mut self, y: Solution, f: ObjectiveVector) -> Destination {
        let w = y.weight();
        if w <= self.bound {
            Destination::Primary(self.s1.insert(y, f))
        } else if w <= self.bound + self.gamma {
            Destination::Backlog(self.s2.insert(y, f))
        } else {
            Destination::Discarded
        }
    }

    /// Moves members across the new bound and drops those that fell out of
    /// the slack band, so that both archives again hold non-dominated sets.
    ///
    /// Below `B_t + gamma` the dynamic objectives do not depend on the bound,
    /// so only members changing archive need to be re-evaluated.
    pub fn repair(&mut self, evaluator: &Evaluator, new_bound: u64) {
        if new_bound == self.bound {
            return;
        }
        let limit = new_bound + self.gamma;
        let down = self.s1.extract_if(|m| m.solution.weight() > new_bound);
        let up = self
            .s2
            .extract_if(|m| m.solution.weight() <= new_bound || m.solution.weight() > limit);
        self.bound = new_bound;
        for m in up.into_iter().chain(down) {
            let f = evaluator.evaluate(&m.solution, new_bound);
            self.offer(m.solution, f);
        }
        debug_assert!(self
            .s1
            .iter()
            .chain(self.s2.iter())
            .all(|m| evaluator.evaluate(&m.solution, new_bound) == m.objectives));
    }

    /// `S1` members are feasible and `S2` members lie in `(B_t, B_t + gamma]`.
    pub fn invariants_hold(&self) -> bool {
        self.s1.solutions().all(|x| x.weight() <= self.bound)
            && self
                .s2
                .solutions()
                .all(|x| x.weight() > self.bound && x.weight() <= self.bound + self.gamma)
    }

    pub fn feasible(&self) -> impl Iterator<Item = &Solution> + Clone {
        self.s1.solutions()
    }
}

/// Stand-alone form of [`DynamicState::repair`].
pub fn repair_populations(
    mut state: DynamicState,
    evaluator: &Evaluator,
    new_bound: u64,
) -> DynamicState {
    state.repair(evaluator, new_bound);
    state
}

/// Two-population GSEMO under the bound schedule.
pub fn run_gsemo_dynamic(
    instance: &KnapsackInstance,
    config: &EvolverConfig,
    schedule: &BoundSchedule,
    observers: &mut [&mut dyn Observer],
) -> Result<DynamicOutcome> {
    config.validate()?;
    let gamma = config
        .formulation
        .gamma()
        .ok_or_else(|| Error::Config("dynamic runs need a dynamic formulation".into()))?;
    if gamma != schedule.magnitude() {
        return Err(Error::Config(format!(
            "formulation gamma {gamma} differs from schedule magnitude {}",
            schedule.magnitude()
        )));
    }
    let evaluator = Evaluator::new(instance, config.formulation);
    let selector = Selector {
        selection: config.selection,
        len_sw: config.window_length(instance),
        t_max: config.t_max,
    };
    let mut recorder = TraceRecorder::new(
        instance,
        config.trace.clone(),
        schedule.max_bound(config.t_max),
        Some(schedule.interval()),
        config.t_max,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cursor = schedule.cursor();
    let initial_bound = schedule.initial();

    let mut evaluations = 0u64;
    let mut state = DynamicState::new(cursor.bound_at(1), gamma);
    let x0 = Solution::empty(instance.len());
    let f0 = evaluator.evaluate(&x0, state.bound);
    evaluations += 1;
    let destination = state.offer(x0.clone(), f0);

    let watching = !observers.is_empty();
    let mut emit = |t: u64,
                    changed: bool,
                    y: &Solution,
                    f: ObjectiveVector,
                    destination: Destination,
                    state: &DynamicState,
                    observers: &mut [&mut dyn Observer]| {
        if watching {
            notify(
                observers,
                &Step {
                    t,
                    bound: state.bound,
                    bound_changed: changed,
                    offspring: y,
                    objectives: f,
                    destination,
                    primary: &state.s1,
                    backlog: Some(&state.s2),
                },
            );
        }
        if recorder.should_sample(t) {
            recorder.record(t, state.bound, state.feasible(), state.s1.len(), state.s2.len());
        }
    };
    emit(1, false, &x0, f0, destination, &state, observers);

    for t in 2..=config.t_max {
        let bound = cursor.bound_at(t);
        let changed = bound != state.bound;
        if changed {
            state.repair(&evaluator, bound);
        }
        let window_bound = match config.window_bound {
            WindowBound::Current => bound,
            WindowBound::Initial => initial_bound,
        };
        let parent = selector.pick(
            Population::union(&state.s1, &state.s2),
            window_bound,
            t - 1,
            &mut rng,
        );
        let y = mutate(parent, instance, &mut rng);
        let f = evaluator.evaluate(&y, bound);
        evaluations += 1;
        if watching {
            let destination = state.offer(y.clone(), f);
            emit(t, changed, &y, f, destination, &state, observers);
        } else {
            let destination = state.offer(y, f);
            emit(t, changed, &Solution::empty(0), f, destination, &state, observers);
        }
    }

    Ok(DynamicOutcome {
        state,
        trace: recorder.finish(evaluations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_uncorrelated, CorrelationClass};
    use crate::oracle::deterministic_optimum;
    use crate::profit_model::Estimator;

    fn small_config(t_max: u64, selection: Selection, formulation: Formulation) -> EvolverConfig {
        let mut c = EvolverConfig::new(t_max, selection, formulation, 17);
        c.trace.stride = 50;
        c
    }

    #[test]
    fn reaches_dp_optimum_without_noise() {
        // capacity close to the total weight, zero dispersion
        let base = generate_uncorrelated(10, 8, 100).unwrap();
        let inst = base.clone().with_capacity(base.total_weight() - 1).unwrap();
        let cfg = small_config(100_000, Selection::Uniform, Formulation::Static2D);
        let out = run_gsemo(&inst, &cfg, &mut []).unwrap();
        let best = out.trace.final_best(0.1, Estimator::Cheb).unwrap();
        let opt = deterministic_optimum(&inst, inst.base_capacity()).unwrap();
        assert_eq!(best, opt as f64);
        assert_eq!(out.trace.evaluations, 100_000);
        assert_eq!(out.trace.last_t(), Some(100_000));
    }

    #[test]
    fn archive_audited_every_iteration() {
        let inst = generate_uncorrelated(15, 3, 100)
            .unwrap()
            .with_dispersion(25.0)
            .unwrap();
        for formulation in [Formulation::Static2D, Formulation::Static3D] {
            let cfg = small_config(3_000, Selection::SlidingWindow, formulation);
            let mut audits = 0;
            let mut check = |s: &Step<'_>| {
                assert!(s.primary.audit());
                audits += 1;
            };
            run_gsemo(&inst, &cfg, &mut [&mut check]).unwrap();
            assert_eq!(audits, 3_000);
        }
    }

    #[test]
    fn equal_seeds_give_equal_traces() {
        let inst = generate_uncorrelated(30, 3, 100)
            .unwrap()
            .with_dispersion(25.0)
            .unwrap();
        let cfg = small_config(5_000, Selection::SlidingWindow, Formulation::Static3D);
        let a = run_gsemo(&inst, &cfg, &mut []).unwrap();
        let b = run_gsemo(&inst, &cfg, &mut []).unwrap();
        assert_eq!(a.trace, b.trace);
        let mut other = cfg.clone();
        other.seed += 1;
        let c = run_gsemo(&inst, &other, &mut []).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn config_mismatches_rejected() {
        let inst = generate_uncorrelated(10, 3, 100).unwrap();
        let cfg = small_config(10, Selection::Uniform, Formulation::Dyn2D { gamma: 5 });
        assert!(matches!(run_gsemo(&inst, &cfg, &mut []), Err(Error::Config(_))));
        let schedule = BoundSchedule::new(inst.base_capacity(), 10, 6, 1).unwrap();
        assert!(matches!(
            run_gsemo_dynamic(&inst, &cfg, &schedule, &mut []),
            Err(Error::Config(_))
        ));
        let cfg = small_config(10, Selection::Uniform, Formulation::Static2D);
        assert!(run_gsemo_dynamic(&inst, &cfg, &schedule, &mut []).is_err());
        let cfg = small_config(0, Selection::Uniform, Formulation::Static2D);
        assert!(run_gsemo(&inst, &cfg, &mut []).is_err());
    }

    #[test]
    fn zero_gamma_dynamic_run_matches_static_run() {
        let inst = generate_uncorrelated(25, 9, 100)
            .unwrap()
            .with_dispersion(25.0)
            .unwrap();
        for (stat, dynamic) in [
            (Formulation::Static2D, Formulation::Dyn2D { gamma: 0 }),
            (Formulation::Static3D, Formulation::Dyn3D { gamma: 0 }),
        ] {
            for selection in [Selection::Uniform, Selection::SlidingWindow] {
                let s_cfg = small_config(8_000, selection, stat);
                let d_cfg = small_config(8_000, selection, dynamic);
                let schedule = BoundSchedule::new(inst.base_capacity(), 500, 0, 4).unwrap();
                let s = run_gsemo(&inst, &s_cfg, &mut []).unwrap();
                let d = run_gsemo_dynamic(&inst, &d_cfg, &schedule, &mut []).unwrap();
                assert_eq!(s.trace, d.trace);
                assert!(d.state.s2.is_empty());
            }
        }
    }

    #[test]
    fn dynamic_invariants_after_every_change() {
        let inst = generate_uncorrelated(60, 2, 1000)
            .unwrap()
            .with_dispersion(25.0)
            .unwrap();
        let schedule = BoundSchedule::new(inst.base_capacity(), 1000, 500, 77).unwrap();
        for formulation in [Formulation::Dyn2D { gamma: 500 }, Formulation::Dyn3D { gamma: 500 }] {
            let cfg = small_config(20_000, Selection::SlidingWindow, formulation);
            let mut changes = 0;
            let mut check = |s: &Step<'_>| {
                let gamma = 500;
                assert!(s.primary.solutions().all(|x| x.weight() <= s.bound));
                let backlog = s.backlog.unwrap();
                assert!(backlog
                    .solutions()
                    .all(|x| x.weight() > s.bound && x.weight() <= s.bound + gamma));
                if s.bound_changed {
                    changes += 1;
                }
            };
            let out = run_gsemo_dynamic(&inst, &cfg, &schedule, &mut [&mut check]).unwrap();
            assert!(out.state.invariants_hold());
            let real_changes = schedule
                .changes_in(20_000)
                .iter()
                .scan(schedule.initial(), |prev, &(_, b)| {
                    let moved = b != *prev;
                    *prev = b;
                    Some(moved)
                })
                .filter(|&m| m)
                .count();
            assert_eq!(changes, real_changes);
            assert_eq!(out.trace.evaluations, 20_000);
            for row in &out.trace.rows {
                for e in &row.error {
                    assert!(e.iter().all(|&v| v >= 0.0));
                }
            }
        }
    }

    #[test]
    fn repair_routes_members() {
        let inst = KnapsackInstance::new(
            "t",
            CorrelationClass::Uncorrelated,
            &[(10, 3), (7, 4), (9, 6), (2, 2)],
            8,
            1.0,
        )
        .unwrap();
        let evaluator = Evaluator::new(&inst, Formulation::Dyn3D { gamma: 4 });
        let mut state = DynamicState::new(8, 4);
        for idx in [&[][..], &[0, 1][..], &[0, 3][..], &[0, 1, 3][..], &[0, 2, 3][..]] {
            let x = Solution::from_indices(&inst, idx).unwrap();
            let f = evaluator.evaluate(&x, 8);
            state.offer(x, f);
        }
        // weights: 0, 7, 5 in S1; 9, 11 in S2
        assert_eq!(state.s1.len(), 3);
        assert_eq!(state.s2.len(), 2);
        assert!(state.invariants_hold());

        let same = repair_populations(state.clone(), &evaluator, 8);
        assert_eq!(same.s1.members(), state.s1.members());
        assert_eq!(same.s2.members(), state.s2.members());

        // bound grows by gamma: both backlog members become feasible
        let grown = repair_populations(state.clone(), &evaluator, 12);
        assert!(grown.invariants_hold());
        assert_eq!(grown.s1.len(), 5);
        assert!(grown.s2.is_empty());

        // bound shrinks: members above 5 + 4 are dropped, 7 moves to S2
        let shrunk = repair_populations(state, &evaluator, 5);
        assert!(shrunk.invariants_hold());
        let s1: Vec<u64> = shrunk.s1.solutions().map(|x| x.weight()).collect();
        let mut s2: Vec<u64> = shrunk.s2.solutions().map(|x| x.weight()).collect();
        s2.sort_unstable();
        assert_eq!(s1.len(), 2);
        assert!(s1.contains(&0) && s1.contains(&5));
        assert_eq!(s2, vec![7, 9]);
    }
}
