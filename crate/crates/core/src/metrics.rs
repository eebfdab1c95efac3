//! Run traces, offline error and cross-run summaries.
//!
//! The offline error at time `t` is the deterministic optimum at the current
//! bound minus the best chance-constrained profit among the feasible members
//! of the population. Traces are sampled every `stride` evaluations, at every
//! bound change and at the final evaluation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::KnapsackInstance;
use crate::oracle::DpTable;
use crate::profit_model::{check_alpha, Estimator, ProfitModel, Solution};

pub const DEFAULT_ALPHAS: [f64; 4] = [0.1, 0.01, 0.001, 0.0001];
pub const DEFAULT_STRIDE: u64 = 100;

/// Absolute tolerance for comparing profit values.
pub const PROFIT_TOLERANCE: f64 = 1e-9;

pub const TRACE_HEADER: &str =
    "t,bound,alpha,estimator,best_profit,offline_error,archive_s1,archive_s2";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub alphas: Vec<f64>,
    pub stride: u64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            alphas: DEFAULT_ALPHAS.to_vec(),
            stride: DEFAULT_STRIDE,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::Config("alpha list is empty".into()));
        }
        for &a in &self.alphas {
            check_alpha(a, Estimator::Cheb)?;
        }
        if self.stride == 0 {
            return Err(Error::Config("trace stride must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub bound: u64,
    /// `best[e][a]` for estimator index `e` (cheb, hoef) and alpha index `a`.
    pub best: [Vec<f64>; 2],
    pub error: [Vec<f64>; 2],
    pub archive_s1: usize,
    pub archive_s2: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub alphas: Vec<f64>,
    pub rows: Vec<TraceRow>,
    /// Objective evaluations performed by the run.
    pub evaluations: u64,
}

fn est_index(e: Estimator) -> usize {
    match e {
        Estimator::Cheb => 0,
        Estimator::Hoef => 1,
    }
}

impl RunTrace {
    pub fn alpha_index(&self, alpha: f64) -> Result<usize> {
        self.alphas
            .iter()
            .position(|&a| (a - alpha).abs() <= 1e-12 * alpha.max(1.0))
            .ok_or_else(|| Error::InvalidParameter(format!("alpha {alpha} not recorded in trace")))
    }

    pub fn error_column(&self, alpha: f64, estimator: Estimator) -> Result<Vec<f64>> {
        let a = self.alpha_index(alpha)?;
        let e = est_index(estimator);
        Ok(self.rows.iter().map(|r| r.error[e][a]).collect())
    }

    pub fn best_column(&self, alpha: f64, estimator: Estimator) -> Result<Vec<f64>> {
        let a = self.alpha_index(alpha)?;
        let e = est_index(estimator);
        Ok(self.rows.iter().map(|r| r.best[e][a]).collect())
    }

    /// Best profit in the last recorded row.
    pub fn final_best(&self, alpha: f64, estimator: Estimator) -> Result<f64> {
        let a = self.alpha_index(alpha)?;
        let row = self.rows.last().ok_or(Error::EmptyPopulation)?;
        Ok(row.best[est_index(estimator)][a])
    }

    pub fn last_t(&self) -> Option<u64> {
        self.rows.last().map(|r| r.t)
    }

    /// Long-format CSV, one line per `(t, alpha, estimator)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.rows.len() * self.alphas.len() * 2 + 80);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for row in &self.rows {
            for (a, alpha) in self.alphas.iter().enumerate() {
                for est in Estimator::ALL {
                    let e = est_index(est);
                    let _ = writeln!(
                        out,
                        "{},{},{:.9},{},{:.9},{:.9},{},{}",
                        row.t,
                        row.bound,
                        alpha,
                        est,
                        row.best[e][a],
                        row.error[e][a],
                        row.archive_s1,
                        row.archive_s2
                    );
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing trace header".into(),
                })
            }
        }
        let mut alphas: Vec<f64> = Vec::new();
        let mut cells: Vec<(u64, u64, usize, usize, usize, f64, f64, usize, usize)> = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse {
                line: line_no,
                msg: format!("bad {what} in {line:?}"),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad("column count"));
            }
            let t: u64 = f[0].parse().map_err(|_| bad("t"))?;
            let bound: u64 = f[1].parse().map_err(|_| bad("bound"))?;
            let alpha: f64 = f[2].parse().map_err(|_| bad("alpha"))?;
            let est: Estimator = f[3].parse().map_err(|_| bad("estimator"))?;
            let best: f64 = f[4].parse().map_err(|_| bad("best_profit"))?;
            let err: f64 = f[5].parse().map_err(|_| bad("offline_error"))?;
            let s1: usize = f[6].parse().map_err(|_| bad("archive_s1"))?;
            let s2: usize = f[7].parse().map_err(|_| bad("archive_s2"))?;
            let a = match alphas.iter().position(|&x| x == alpha) {
                Some(a) => a,
                None => {
                    alphas.push(alpha);
                    alphas.len() - 1
                }
            };
            cells.push((t, bound, a, est_index(est), line_no, best, err, s1, s2));
        }
        let k = alphas.len();
        let mut rows: Vec<TraceRow> = Vec::new();
        let mut filled: Vec<usize> = Vec::new();
        for (t, bound, a, e, line_no, best, err, s1, s2) in cells {
            let start_new = rows.last().map_or(true, |r| r.t != t);
            if start_new {
                if let Some(r) = rows.last() {
                    if t < r.t {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "trace rows out of order".into(),
                        });
                    }
                }
                rows.push(TraceRow {
                    t,
                    bound,
                    best: [vec![f64::NAN; k], vec![f64::NAN; k]],
                    error: [vec![f64::NAN; k], vec![f64::NAN; k]],
                    archive_s1: s1,
                    archive_s2: s2,
                });
                filled.push(0);
            }
            let row = rows.last_mut().unwrap();
            row.best[e][a] = best;
            row.error[e][a] = err;
            *filled.last_mut().unwrap() += 1;
        }
        if filled.iter().any(|&c| c != 2 * k) {
            return Err(Error::Parse {
                line: 0,
                msg: "trace row is missing alpha/estimator cells".into(),
            });
        }
        let evaluations = rows.last().map_or(0, |r| r.t);
        Ok(Self {
            alphas,
            rows,
            evaluations,
        })
    }
}

/// `p_opt` minus the best estimate over `feasible`; an empty set counts as the
/// empty selection with estimate 0.
pub fn offline_error<'a>(
    model: &ProfitModel,
    feasible: impl IntoIterator<Item = &'a Solution>,
    p_opt: u64,
    alpha: f64,
    estimator: Estimator,
) -> Result<f64> {
    let best = match model.best_profit(feasible, alpha, estimator) {
        Ok((_, v)) => v,
        Err(Error::EmptyPopulation) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(p_opt as f64 - best)
}

/// Mean of the offline-error column over all sampled rows.
pub fn average_offline_error(trace: &RunTrace, alpha: f64, estimator: Estimator) -> Result<f64> {
    let col = trace.error_column(alpha, estimator)?;
    if col.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    Ok(col.iter().sum::<f64>() / col.len() as f64)
}

/// Samples trace rows during a run.
#[derive(Debug)]
pub struct TraceRecorder {
    config: TraceConfig,
    model: ProfitModel,
    table: DpTable,
    change_interval: Option<u64>,
    t_max: u64,
    items: usize,
    trace: RunTrace,
}

impl TraceRecorder {
    /// `max_bound` is the largest capacity the run will see; the optimum table
    /// is built once up to it.
    pub fn new(
        instance: &KnapsackInstance,
        config: TraceConfig,
        max_bound: u64,
        change_interval: Option<u64>,
        t_max: u64,
    ) -> Result<Self> {
        config.validate()?;
        let table = DpTable::build(instance, max_bound)?;
        Ok(Self {
            trace: RunTrace {
                alphas: config.alphas.clone(),
                rows: Vec::new(),
                evaluations: 0,
            },
            config,
            model: ProfitModel::new(instance),
            table,
            change_interval,
            t_max,
            items: instance.len(),
        })
    }

    pub fn should_sample(&self, t: u64) -> bool {
        t == 1
            || t == self.t_max
            || t % self.config.stride == 0
            || self.change_interval.is_some_and(|tau| t % tau == 0)
    }

    pub fn record<'a>(
        &mut self,
        t: u64,
        bound: u64,
        feasible: impl Iterator<Item = &'a Solution> + Clone,
        archive_s1: usize,
        archive_s2: usize,
    ) {
        let p_opt = self
            .table
            .optimum(bound)
            .expect("trace table built up to the largest bound") as f64;
        // Both estimates are the mean minus a term that depends only on the
        // cardinality, so per cardinality only the largest mean can win.
        let mut top: Vec<Option<&Solution>> = vec![None; self.items + 1];
        for x in feasible {
            let slot = &mut top[x.cardinality() as usize];
            if slot.is_none_or(|y| x.expectation() > y.expectation()) {
                *slot = Some(x);
            }
        }
        let candidates = top.iter().flatten().copied();
        let k = self.config.alphas.len();
        let mut best = [vec![0.0; k], vec![0.0; k]];
        let mut error = [vec![0.0; k], vec![0.0; k]];
        for est in Estimator::ALL {
            let e = est_index(est);
            for (a, &alpha) in self.config.alphas.iter().enumerate() {
                let b = match self.model.best_profit(candidates.clone(), alpha, est) {
                    Ok((_, v)) => v,
                    Err(_) => 0.0,
                };
                best[e][a] = b;
                error[e][a] = p_opt - b;
            }
        }
        self.trace.rows.push(TraceRow {
            t,
            bound,
            best,
            error,
            archive_s1,
            archive_s2,
        });
    }

    pub fn finish(mut self, evaluations: u64) -> RunTrace {
        self.trace.evaluations = evaluations;
        self.trace
    }
}

/// Identifies a cell of an experiment: everything but the repeat index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub instance: String,
    pub selection: String,
    pub formulation: String,
    /// Dispersion rendered as text so the key stays totally ordered.
    pub dispersion: String,
    /// `None` for a static bound, otherwise `(tau, gamma)`.
    pub dynamic: Option<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub key: GroupKey,
    pub alpha: f64,
    pub estimator: Estimator,
    pub repeats: usize,
    pub mean_final_best: f64,
    pub std_final_best: f64,
    pub mean_avg_offline_error: f64,
    pub std_avg_offline_error: f64,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Groups traces by key and summarises each `(alpha, estimator)` column.
pub fn aggregate(traces: &[(GroupKey, RunTrace)]) -> Result<Vec<SummaryStats>> {
    let mut groups: BTreeMap<&GroupKey, Vec<&RunTrace>> = BTreeMap::new();
    for (key, trace) in traces {
        groups.entry(key).or_default().push(trace);
    }
    let mut out = Vec::new();
    for (key, runs) in groups {
        let alphas = runs[0].alphas.clone();
        for &alpha in &alphas {
            for est in Estimator::ALL {
                let mut finals = Vec::with_capacity(runs.len());
                let mut errors = Vec::with_capacity(runs.len());
                for run in &runs {
                    finals.push(run.final_best(alpha, est)?);
                    errors.push(average_offline_error(run, alpha, est)?);
                }
                let (mean_final_best, std_final_best) = mean_std(&finals);
                let (mean_avg_offline_error, std_avg_offline_error) = mean_std(&errors);
                out.push(SummaryStats {
                    key: key.clone(),
                    alpha,
                    estimator: est,
                    repeats: runs.len(),
                    mean_final_best,
                    std_final_best,
                    mean_avg_offline_error,
                    std_avg_offline_error,
                });
            }
        }
    }
    Ok(out)
}
