//! Evolutionary multi-objective optimisation for the chance-constrained
//! knapsack problem with uniformly distributed profits, under a static or a
//! randomly moving capacity.
//!
//! The crate is organised bottom-up: [`instance`] loads and generates
//! problems, [`profit_model`] holds solutions and the Chebyshev and Hoeffding
//! profit estimates, [`objectives`] builds the 2D/3D objective vectors,
//! [`dynamics`] drives the capacity, [`evolver`] runs GSEMO, [`oracle`]
//! computes exact optima and [`metrics`] turns runs into traces.

pub mod dynamics;
pub mod error;
pub mod evolver;
pub mod instance;
pub mod metrics;
pub mod objectives;
pub mod oracle;
pub mod profit_model;

pub use dynamics::BoundSchedule;
pub use error::{Error, Result};
pub use evolver::{
    run_gsemo, run_gsemo_dynamic, Archive, DynamicState, EvolverConfig, Selection, WindowBound,
};
pub use instance::{parse_instance, CorrelationClass, KnapsackInstance};
pub use metrics::{RunTrace, TraceConfig};
pub use objectives::{Evaluator, Formulation, ObjectiveVector};
pub use profit_model::{Estimator, ProfitModel, Solution};
