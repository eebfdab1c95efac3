//! Fitness formulations and dominance.
//!
//! Objective positions have fixed senses: expected profit is maximised,
//! variance minimised and, in the three-objective formulations, weight
//! minimised. Infeasible solutions receive penalty values:
//!
//! | formulation | feasible if          | penalised values                     |
//! |-------------|----------------------|--------------------------------------|
//! | static      | `w(x) <= B`          | `(B - w(x), v_max[, w_max])`         |
//! | dynamic     | `w(x) <= B_t + gamma`| `(abs(B_t - w(x)), v_max[, w_max])`  |
//!
//! The static penalty is negative while the dynamic one is positive.

use std::fmt;

use crate::error::{Error, Result};
use crate::instance::KnapsackInstance;
use crate::profit_model::{profit_variance, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Sense of objective position `i` (0-based).
pub fn sense_of(position: usize) -> Sense {
    if position == 0 {
        Sense::Maximize
    } else {
        Sense::Minimize
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct ObjectiveVector {
    values: [f64; 3],
    arity: u8,
}

impl ObjectiveVector {
    pub fn two(mu: f64, variance: f64) -> Self {
        Self {
            values: [mu, variance, 0.0],
            arity: 2,
        }
    }

    pub fn three(mu: f64, variance: f64, weight: f64) -> Self {
        Self {
            values: [mu, variance, weight],
            arity: 3,
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match *values {
            [a, b] => Ok(Self::two(a, b)),
            [a, b, c] => Ok(Self::three(a, b, c)),
            _ => Err(Error::InvalidParameter(format!(
                "objective vectors have 2 or 3 components, got {}",
                values.len()
            ))),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    pub fn values(&self) -> &[f64] {
        &self.values[..self.arity as usize]
    }

    pub fn mu(&self) -> f64 {
        self.values[0]
    }

    pub fn variance(&self) -> f64 {
        self.values[1]
    }

    /// Third component, or 0 for two-objective vectors.
    pub fn weight(&self) -> f64 {
        self.values[2]
    }

    pub fn truncated(&self) -> Self {
        Self::two(self.values[0], self.values[1])
    }
}

impl fmt::Debug for ObjectiveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.values()).finish()
    }
}

/// Weak dominance without the arity check; callers guarantee equal arity.
#[inline]
pub(crate) fn weakly_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.values[0] >= b.values[0] && a.values[1] <= b.values[1] && a.values[2] <= b.values[2]
}

#[inline]
pub(crate) fn strongly_dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    weakly_dominates(a, b)
        && (a.values[0] > b.values[0] || a.values[1] < b.values[1] || a.values[2] < b.values[2])
}

fn check_arity(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<()> {
    if a.arity != b.arity {
        Err(Error::ArityMismatch(a.arity(), b.arity()))
    } else {
        Ok(())
    }
}

/// `a` is no worse than `b` in every objective.
pub fn dominates_weak(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    check_arity(a, b)?;
    Ok(weakly_dominates(a, b))
}

/// `a` weakly dominates `b` and is strictly better in at least one objective.
pub fn dominates_strong(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    check_arity(a, b)?;
    Ok(strongly_dominates(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formulation {
    Static2D,
    Static3D,
    Dyn2D { gamma: u64 },
    Dyn3D { gamma: u64 },
}

impl Formulation {
    pub fn new(objectives: usize, dynamic: Option<u64>) -> Result<Self> {
        match (objectives, dynamic) {
            (2, None) => Ok(Formulation::Static2D),
            (3, None) => Ok(Formulation::Static3D),
            (2, Some(gamma)) => Ok(Formulation::Dyn2D { gamma }),
            (3, Some(gamma)) => Ok(Formulation::Dyn3D { gamma }),
            (k, _) => Err(Error::Config(format!(
                "number of objectives must be 2 or 3, got {k}"
            ))),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Formulation::Static2D | Formulation::Dyn2D { .. } => 2,
            Formulation::Static3D | Formulation::Dyn3D { .. } => 3,
        }
    }

    pub fn is_dynamic(&self) -> bool {
        self.gamma().is_some()
    }

    pub fn gamma(&self) -> Option<u64> {
        match *self {
            Formulation::Dyn2D { gamma } | Formulation::Dyn3D { gamma } => Some(gamma),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Formulation::Static2D | Formulation::Dyn2D { .. } => "2D".into(),
            Formulation::Static3D | Formulation::Dyn3D { .. } => "3D".into(),
        }
    }
}

/// Evaluates one formulation on one instance. Holds the instance-derived
/// penalty ceilings `v_max = n * delta^2 / 3` and `w_max = sum w_i`.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator {
    formulation: Formulation,
    dispersion: f64,
    v_max: f64,
    w_max: f64,
}

impl Evaluator {
    pub fn new(instance: &KnapsackInstance, formulation: Formulation) -> Self {
        let dispersion = instance.dispersion();
        let v_max = instance.len() as f64 * (dispersion * dispersion / 3.0);
        Self {
            formulation,
            dispersion,
            v_max,
            w_max: instance.total_weight() as f64,
        }
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    /// Evaluates `x` at `bound` (`B` for static, `B_t` for dynamic kinds).
    pub fn evaluate(&self, x: &Solution, bound: u64) -> ObjectiveVector {
        match self.formulation {
            Formulation::Static2D => self.static_2d(x, bound),
            Formulation::Static3D => self.static_3d(x, bound),
            Formulation::Dyn2D { gamma } => self.dyn_2d(x, bound, gamma),
            Formulation::Dyn3D { gamma } => self.dyn_3d(x, bound, gamma),
        }
    }

    fn feasible_pair(&self, x: &Solution) -> (f64, f64) {
        (
            x.expectation() as f64,
            profit_variance(x, self.dispersion),
        )
    }

    pub fn static_2d(&self, x: &Solution, bound: u64) -> ObjectiveVector {
        if x.weight() <= bound {
            let (mu, v) = self.feasible_pair(x);
            ObjectiveVector::two(mu, v)
        } else {
            ObjectiveVector::two(bound as f64 - x.weight() as f64, self.v_max)
        }
    }

    pub fn static_3d(&self, x: &Solution, bound: u64) -> ObjectiveVector {
        if x.weight() <= bound {
            let (mu, v) = self.feasible_pair(x);
            ObjectiveVector::three(mu, v, x.weight() as f64)
        } else {
            ObjectiveVector::three(
                bound as f64 - x.weight() as f64,
                self.v_max,
                self.w_max,
            )
        }
    }

    pub fn dyn_2d(&self, x: &Solution, bound: u64, gamma: u64) -> ObjectiveVector {
        if x.weight() <= bound + gamma {
            let (mu, v) = self.feasible_pair(x);
            ObjectiveVector::two(mu, v)
        } else {
            ObjectiveVector::two(x.weight().abs_diff(bound) as f64, self.v_max)
        }
    }

    pub fn dyn_3d(&self, x: &Solution, bound: u64, gamma: u64) -> ObjectiveVector {
        if x.weight() <= bound + gamma {
            let (mu, v) = self.feasible_pair(x);
            ObjectiveVector::three(mu, v, x.weight() as f64)
        } else {
            ObjectiveVector::three(
                x.weight().abs_diff(bound) as f64,
                self.v_max,
                self.w_max,
            )
        }
    }
}
