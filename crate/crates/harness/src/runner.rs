//! One seeded run and its output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use stochknap::evolver::{run_gsemo, run_gsemo_dynamic, Archive, Member, Observer};
use stochknap::{
    BoundSchedule, EvolverConfig, Formulation, KnapsackInstance, RunTrace, Selection,
    TraceConfig, WindowBound,
};

use crate::error::Result;
use crate::output::write_atomic;
use crate::seeds::{evolver_seed, schedule_seed};

pub const ARCHIVE_HEADER: &str = "population,bits,weight,expected_profit,cardinality,f1,f2,f3";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicParams {
    pub tau: u64,
    pub gamma: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub selection: Selection,
    pub objectives: usize,
    pub dynamic: Option<DynamicParams>,
    /// Run seed; the evolver and the bound schedule each derive their own.
    pub seed: u64,
    pub t_max: u64,
    pub trace: TraceConfig,
    pub len_sw: Option<f64>,
    pub window_bound: WindowBound,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: RunTrace,
    pub archive_csv: String,
    pub bounds_csv: Option<String>,
}

/// Paths of the files [`write_run`] produces for a run named `name`.
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub trace: PathBuf,
    pub archive: PathBuf,
    pub bounds: PathBuf,
}

impl RunFiles {
    pub fn new(dir: &Path, name: &str) -> Self {
        Self {
            trace: dir.join(format!("{name}.trace.csv")),
            archive: dir.join(format!("{name}.archive.csv")),
            bounds: dir.join(format!("{name}.bounds.csv")),
        }
    }
}

impl RunRequest {
    pub fn formulation(&self) -> Result<Formulation> {
        Ok(Formulation::new(
            self.objectives,
            self.dynamic.map(|d| d.gamma),
        )?)
    }

    /// `GS-2D`, `SW-3D`, ...
    pub fn algorithm_label(&self) -> String {
        format!("{}-{}D", self.selection.prefix(), self.objectives)
    }

    fn config(&self) -> Result<EvolverConfig> {
        let mut config = EvolverConfig::new(
            self.t_max,
            self.selection,
            self.formulation()?,
            evolver_seed(self.seed),
        );
        config.len_sw = self.len_sw;
        config.window_bound = self.window_bound;
        config.trace = self.trace.clone();
        Ok(config)
    }

    pub fn schedule(&self, instance: &KnapsackInstance) -> Result<Option<BoundSchedule>> {
        self.dynamic
            .map(|d| {
                BoundSchedule::new(
                    instance.base_capacity(),
                    d.tau,
                    d.gamma,
                    schedule_seed(self.seed),
                )
                .map_err(Into::into)
            })
            .transpose()
    }

    pub fn execute(&self, instance: &KnapsackInstance) -> Result<RunOutput> {
        self.execute_observed(instance, &mut [])
    }

    pub fn execute_observed(
        &self,
        instance: &KnapsackInstance,
        observers: &mut [&mut dyn Observer],
    ) -> Result<RunOutput> {
        let config = self.config()?;
        match self.schedule(instance)? {
            None => {
                let out = run_gsemo(instance, &config, observers)?;
                Ok(RunOutput {
                    archive_csv: archive_csv(&[("s1", &out.archive)]),
                    trace: out.trace,
                    bounds_csv: None,
                })
            }
            Some(schedule) => {
                let out = run_gsemo_dynamic(instance, &config, &schedule, observers)?;
                Ok(RunOutput {
                    archive_csv: archive_csv(&[("s1", &out.state.s1), ("s2", &out.state.s2)]),
                    trace: out.trace,
                    bounds_csv: Some(schedule.to_csv(self.t_max)),
                })
            }
        }
    }
}

fn archive_csv(parts: &[(&str, &Archive)]) -> String {
    let mut out = String::from(ARCHIVE_HEADER);
    out.push('\n');
    for (label, archive) in parts {
        for Member {
            solution,
            objectives,
        } in archive.iter()
        {
            let f = objectives.values();
            let f3 = f.get(2).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{label},{},{},{},{},{},{},{f3}",
                solution.to_hex(),
                solution.weight(),
                solution.expectation(),
                solution.cardinality(),
                f[0],
                f[1],
            );
        }
    }
    out
}

/// Writes archive and schedule first and the trace last: a present trace
/// marks a completed run.
pub fn write_run(files: &RunFiles, output: &RunOutput) -> Result<()> {
    write_atomic(&files.archive, &output.archive_csv)?;
    if let Some(bounds) = &output.bounds_csv {
        write_atomic(&files.bounds, bounds)?;
    }
    write_atomic(&files.trace, &output.trace.to_csv())
}
