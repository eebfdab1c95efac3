//! Experiment sweeps: the cross-product of instances, dispersions, bound
//! settings and algorithms, `repeats` runs per cell.
//!
//! Spec files are TOML:
//!
//! ```toml
//! master_seed = 1
//! t_max = 50000
//! repeats = 3
//! algorithms = ["GS-2D", "GS-3D", "SW-3D"]
//! dispersions = [25, 50]
//! alphas = [0.1, 0.01, 0.001, 0.0001]   # optional
//! stride = 100                          # optional
//! static = true                         # optional, default: no dynamic list
//! dynamic = [{ tau = 1000, gamma = 500 }]
//! output = "results"                    # optional, relative to the sweep file
//!
//! [[instances]]
//! file = "uncorr-100.txt"               # relative to the sweep file
//!
//! [[instances]]
//! class = "strong"
//! n = 100
//! seed = 4
//! ```
//!
//! Per-run seeds hash the master seed with the instance, dispersion, bound
//! setting and repeat index. The algorithm is deliberately left out, so all
//! algorithms of a cell face the same bound schedule.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use stochknap::instance::{
    generate_bounded_strongly_correlated, generate_uncorrelated, parse_instance,
};
use stochknap::metrics::{aggregate, GroupKey, SummaryStats, DEFAULT_ALPHAS, DEFAULT_STRIDE};
use stochknap::{
    CorrelationClass, Estimator, KnapsackInstance, RunTrace, Selection, TraceConfig,
    WindowBound,
};

use crate::error::{HarnessError, Result};
use crate::output::{read_text, write_atomic};
use crate::runner::{write_run, DynamicParams, RunFiles, RunRequest};
use crate::seeds::derive_seed;

pub const WORKERS_ENV: &str = "STOCHKNAP_WORKERS";
pub const DEFAULT_RANGE: u64 = 1000;
pub const DEFAULT_OFFSET: u64 = 100;

pub const SUMMARY_HEADER: &str = "instance,algorithm,dispersion,tau,gamma,alpha,estimator,repeats,\
mean_final_best,std_final_best,mean_avg_offline_error,std_avg_offline_error";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub instances: Vec<InstanceRef>,
    pub algorithms: Vec<String>,
    pub dispersions: Vec<f64>,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub stride: Option<u64>,
    #[serde(default, rename = "static")]
    pub include_static: Option<bool>,
    #[serde(default)]
    pub dynamic: Vec<DynamicParams>,
    pub repeats: u32,
    pub master_seed: u64,
    pub t_max: u64,
    #[serde(default)]
    pub len_sw: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Either an instance file or generator parameters.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRef {
    pub file: Option<PathBuf>,
    pub class: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub range: Option<u64>,
    pub offset: Option<u64>,
    pub capacity: Option<u64>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Algorithm {
    pub selection: Selection,
    pub objectives: usize,
}

impl Algorithm {
    pub fn label(&self) -> String {
        format!("{}-{}D", self.selection.prefix(), self.objectives)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HarnessError::Usage(format!("unknown algorithm {s:?} (expected e.g. GS-2D, SW-3D)"));
        let (sel, obj) = s.split_once('-').ok_or_else(bad)?;
        let selection = match sel {
            "GS" => Selection::Uniform,
            "SW" => Selection::SlidingWindow,
            _ => return Err(bad()),
        };
        let objectives = match obj {
            "2D" => 2,
            "3D" => 3,
            _ => return Err(bad()),
        };
        Ok(Algorithm {
            selection,
            objectives,
        })
    }
}

/// Bound setting of a cell.
pub type BoundSetting = Option<DynamicParams>;

fn bound_label(b: BoundSetting) -> String {
    match b {
        None => "static".into(),
        Some(d) => format!("tau{}-gamma{}", d.tau, d.gamma),
    }
}

pub fn load_instance(reference: &InstanceRef, base: &Path) -> Result<KnapsackInstance> {
    if let Some(file) = &reference.file {
        if reference.class.is_some() || reference.n.is_some() || reference.seed.is_some() {
            return Err(HarnessError::Usage(
                "an instance takes either `file` or generator parameters".into(),
            ));
        }
        let path = base.join(file);
        let mut inst = parse_instance(&read_text(&path)?)
            .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?;
        if let Some(c) = reference.capacity {
            inst = inst.with_capacity(c)?;
        }
        if let Some(name) = &reference.name {
            inst = inst.with_name(name.clone());
        }
        return Ok(inst);
    }
    let class: CorrelationClass = reference
        .class
        .as_deref()
        .ok_or_else(|| HarnessError::Usage("instance needs `file` or `class`".into()))?
        .parse()?;
    let n = reference
        .n
        .ok_or_else(|| HarnessError::Usage("generated instance needs `n`".into()))?;
    let seed = reference.seed.unwrap_or(0);
    generate(
        class,
        n,
        seed,
        reference.range.unwrap_or(DEFAULT_RANGE),
        reference.offset.unwrap_or(DEFAULT_OFFSET),
        reference.capacity,
        reference.name.clone(),
    )
}

/// Generator front end shared by `generate` and sweeps. Generated names carry
/// the seed so that instances of equal size stay distinguishable.
pub fn generate(
    class: CorrelationClass,
    n: usize,
    seed: u64,
    range: u64,
    offset: u64,
    capacity: Option<u64>,
    name: Option<String>,
) -> Result<KnapsackInstance> {
    let mut inst = match class {
        CorrelationClass::Uncorrelated => generate_uncorrelated(n, seed, range)?,
        CorrelationClass::BoundedStronglyCorrelated => {
            generate_bounded_strongly_correlated(n, seed, range, offset)?
        }
    };
    if let Some(c) = capacity {
        inst = inst.with_capacity(c)?;
    }
    let name = name.unwrap_or_else(|| format!("{}-s{seed}", inst.name()));
    Ok(inst.with_name(name))
}

/// One run of the cross-product.
#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub instance: usize,
    pub key: GroupKey,
    pub request: RunRequest,
    pub repeat: u32,
    pub files: RunFiles,
}

pub struct Plan {
    pub instances: Vec<KnapsackInstance>,
    pub runs: Vec<PlannedRun>,
    pub output: PathBuf,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self =
            toml::from_str(text).map_err(|e| HarnessError::Usage(format!("sweep file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(HarnessError::Usage(format!("sweep file: `{what}` is empty")));
        if self.instances.is_empty() {
            return empty("instances");
        }
        if self.algorithms.is_empty() {
            return empty("algorithms");
        }
        if self.dispersions.is_empty() {
            return empty("dispersions");
        }
        if self.bound_settings().is_empty() {
            return Err(HarnessError::Usage(
                "sweep file: neither `static` nor `dynamic` settings selected".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(HarnessError::Usage("sweep file: `repeats` must be ≥ 1".into()));
        }
        if self.t_max == 0 {
            return Err(HarnessError::Usage("sweep file: `t_max` must be ≥ 1".into()));
        }
        for a in &self.algorithms {
            a.parse::<Algorithm>()?;
        }
        for &d in &self.dispersions {
            if !(d.is_finite() && d >= 0.0) {
                return Err(HarnessError::Usage(format!("sweep file: bad dispersion {d}")));
            }
        }
        self.trace_config().validate()?;
        Ok(())
    }

    pub fn bound_settings(&self) -> Vec<BoundSetting> {
        let mut out = Vec::new();
        if self.include_static.unwrap_or(self.dynamic.is_empty()) {
            out.push(None);
        }
        out.extend(self.dynamic.iter().copied().map(Some));
        out
    }

    pub fn trace_config(&self) -> TraceConfig {
        TraceConfig {
            alphas: self.alphas.clone().unwrap_or_else(|| DEFAULT_ALPHAS.to_vec()),
            stride: self.stride.unwrap_or(DEFAULT_STRIDE),
        }
    }

    /// Loads instances and lists every run. `base` resolves relative paths.
    pub fn plan(&self, base: &Path, output: Option<&Path>) -> Result<Plan> {
        let output = match (output, &self.output) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => base.join(o),
            (None, None) => {
                return Err(HarnessError::Usage(
                    "no output directory (use --out or `output` in the sweep file)".into(),
                ))
            }
        };
        let instances = self
            .instances
            .iter()
            .map(|r| load_instance(r, base))
            .collect::<Result<Vec<_>>>()?;
        let mut names = BTreeSet::new();
        for inst in &instances {
            if !names.insert(inst.name().to_string()) {
                return Err(HarnessError::Usage(format!(
                    "sweep file: duplicate instance name {:?}",
                    inst.name()
                )));
            }
        }
        let algorithms: Vec<Algorithm> = self
            .algorithms
            .iter()
            .map(|a| a.parse())
            .collect::<Result<_>>()?;
        let trace = self.trace_config();

        let mut runs = Vec::new();
        for (i, inst) in instances.iter().enumerate() {
            for &dispersion in &self.dispersions {
                let disp = dispersion.to_string();
                for bound in self.bound_settings() {
                    let bound_name = bound_label(bound);
                    for repeat in 0..self.repeats {
                        let seed = derive_seed(
                            self.master_seed,
                            &[inst.name(), &disp, &bound_name, &repeat.to_string()],
                        );
                        for alg in &algorithms {
                            let request = RunRequest {
                                selection: alg.selection,
                                objectives: alg.objectives,
                                dynamic: bound,
                                seed,
                                t_max: self.t_max,
                                trace: trace.clone(),
                                len_sw: self.len_sw,
                                window_bound: WindowBound::Current,
                            };
                            let key = GroupKey {
                                instance: inst.name().to_string(),
                                selection: alg.selection.prefix().to_string(),
                                formulation: format!("{}D", alg.objectives),
                                dispersion: disp.clone(),
                                dynamic: bound.map(|d| (d.tau, d.gamma)),
                            };
                            let name =
                                format!("{}_d{disp}_{bound_name}_r{repeat}", alg.label());
                            let files = RunFiles::new(&output.join("runs").join(inst.name()), &name);
                            runs.push(PlannedRun {
                                instance: i,
                                key,
                                request,
                                repeat,
                                files,
                            });
                        }
                    }
                }
            }
        }
        Ok(Plan {
            instances,
            runs,
            output,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub executed: usize,
    pub skipped: usize,
}

pub fn worker_count() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(HarnessError::Usage(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Executes every run whose trace file is missing, then writes the summary
/// from the traces on disk.
pub fn execute(plan: &Plan, workers: Option<usize>) -> Result<SweepReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Resource(format!("worker pool: {e}")))?;

    let pending: Vec<&PlannedRun> = plan.runs.iter().filter(|r| !r.files.trace.exists()).collect();
    let skipped = plan.runs.len() - pending.len();
    pool.install(|| {
        pending.par_iter().try_for_each(|run| -> Result<()> {
            let inst = plan.instances[run.instance]
                .clone()
                .with_dispersion(run.key.dispersion.parse().expect("rendered from f64"))?;
            let output = run.request.execute(&inst)?;
            write_run(&run.files, &output)
        })
    })?;

    let mut traces = Vec::with_capacity(plan.runs.len());
    for run in &plan.runs {
        let trace = RunTrace::from_csv(&read_text(&run.files.trace)?)
            .map_err(|e| HarnessError::Data(format!("{}: {e}", run.files.trace.display())))?;
        traces.push((run.key.clone(), trace));
    }
    let summary = aggregate(&traces)?;
    write_atomic(&plan.output.join("summary.csv"), &summary_csv(&summary))?;
    Ok(SweepReport {
        executed: pending.len(),
        skipped,
    })
}

pub fn summary_csv(rows: &[SummaryStats]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let (tau, gamma) = match r.key.dynamic {
            Some((t, g)) => (t.to_string(), g.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{}-{},{},{tau},{gamma},{},{},{},{:.9},{:.9},{:.9},{:.9}",
            r.key.instance,
            r.key.selection,
            r.key.formulation,
            r.key.dispersion,
            r.alpha,
            r.estimator.as_str(),
            r.repeats,
            r.mean_final_best,
            r.std_final_best,
            r.mean_avg_offline_error,
            r.std_avg_offline_error,
        );
    }
    out
}

/// One parsed line of a summary file.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub instance: String,
    pub algorithm: String,
    pub dispersion: f64,
    pub dynamic: Option<DynamicParams>,
    pub alpha: f64,
    pub estimator: Estimator,
    pub repeats: usize,
    pub mean_final_best: f64,
    pub std_final_best: f64,
    pub mean_avg_offline_error: f64,
    pub std_avg_offline_error: f64,
}

pub fn parse_summary(text: &str) -> Result<Vec<SummaryLine>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(HarnessError::Data("summary: unexpected header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| HarnessError::Data(format!("summary line {}: {what}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(bad("expected 12 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
            let int = |s: &str| s.parse::<u64>().map_err(|_| bad("bad integer"));
            let dynamic = match (f[3], f[4]) {
                ("", "") => None,
                (t, g) => Some(DynamicParams {
                    tau: int(t)?,
                    gamma: int(g)?,
                }),
            };
            Ok(SummaryLine {
                instance: f[0].to_string(),
                algorithm: f[1].to_string(),
                dispersion: num(f[2])?,
                dynamic,
                alpha: num(f[5])?,
                estimator: f[6].parse().map_err(|_| bad("bad estimator"))?,
                repeats: int(f[7])? as usize,
                mean_final_best: num(f[8])?,
                std_final_best: num(f[9])?,
                mean_avg_offline_error: num(f[10])?,
                std_avg_offline_error: num(f[11])?,
            })
        })
        .collect()
}
