use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stochknap::metrics::{DEFAULT_ALPHAS, DEFAULT_STRIDE};
use stochknap::oracle::optimum_for_bounds;
use stochknap::{parse_instance, CorrelationClass, Selection, TraceConfig, WindowBound};

use crate::error::{HarnessError, Result};
use crate::output::{read_text, write_atomic};
use crate::runner::{write_run, DynamicParams, RunFiles, RunRequest};
use crate::sweep::{self, ExperimentSpec, DEFAULT_OFFSET, DEFAULT_RANGE};

#[derive(Debug, Parser)]
#[command(name = "stochknap", version, about = "Chance-constrained knapsack experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Execute one seeded run.
    Run(RunArgs),
    /// Execute an experiment sweep file.
    Sweep(SweepArgs),
    /// Print deterministic optima for a list of capacities.
    Opt(OptArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub class: CorrelationClass,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_RANGE)]
    pub range: u64,
    /// Profit offset of the strongly correlated class.
    #[arg(long, default_value_t = DEFAULT_OFFSET)]
    pub offset: u64,
    #[arg(long)]
    pub capacity: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    pub dispersion: f64,
    #[arg(long)]
    pub name: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub instance: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// File name prefix inside the output directory.
    #[arg(long, default_value = "run")]
    pub name: String,
    #[arg(long, default_value = "uniform")]
    pub select: Selection,
    #[arg(long, default_value_t = 3)]
    pub objectives: usize,
    #[arg(long = "static")]
    pub static_bound: bool,
    #[arg(long)]
    pub dynamic: bool,
    #[arg(long)]
    pub tau: Option<u64>,
    #[arg(long)]
    pub gamma: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub t_max: u64,
    /// Overrides the dispersion stored in the instance file.
    #[arg(long)]
    pub dispersion: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    pub stride: u64,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub len_sw: Option<f64>,
    /// Bound that positions the sliding window in dynamic runs.
    #[arg(long, default_value = "current", value_parser = parse_window_bound)]
    pub window_bound: WindowBound,
}

fn parse_window_bound(s: &str) -> std::result::Result<WindowBound, String> {
    match s {
        "current" => Ok(WindowBound::Current),
        "initial" => Ok(WindowBound::Initial),
        _ => Err(format!("expected current or initial, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub spec: PathBuf,
    /// Overrides the output directory of the sweep file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptArgs {
    pub instance: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub bounds: Vec<u64>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("stochknap: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Opt(a) => opt(a),
    }
}

fn load(path: &PathBuf) -> Result<stochknap::KnapsackInstance> {
    parse_instance(&read_text(path)?)
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let inst = sweep::generate(a.class, a.n, a.seed, a.range, a.offset, a.capacity, a.name)?
        .with_dispersion(a.dispersion)?;
    let text = inst.serialize();
    match a.out {
        Some(path) => write_atomic(&path, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::Resource(format!("stdout: {e}"))),
    }
}

fn run(a: RunArgs) -> Result<()> {
    let dynamic = match (a.static_bound, a.dynamic, a.tau, a.gamma) {
        (true, true, _, _) => {
            return Err(HarnessError::Usage(
                "config error: --static and --dynamic are exclusive".into(),
            ))
        }
        (true, false, Some(_), _) | (true, false, _, Some(_)) => {
            return Err(HarnessError::Usage(
                "config error: a static run takes no --tau/--gamma (dynamic formulation)".into(),
            ))
        }
        (false, true, Some(tau), Some(gamma)) => Some(DynamicParams { tau, gamma }),
        (false, true, _, _) => {
            return Err(HarnessError::Usage(
                "config error: --dynamic needs --tau and --gamma".into(),
            ))
        }
        (false, false, Some(_), _) | (false, false, _, Some(_)) => {
            return Err(HarnessError::Usage(
                "config error: --tau/--gamma need --dynamic".into(),
            ))
        }
        _ => None,
    };
    let mut inst = load(&a.instance)?;
    if let Some(d) = a.dispersion {
        inst = inst.with_dispersion(d)?;
    }
    let request = RunRequest {
        selection: a.select,
        objectives: a.objectives,
        dynamic,
        seed: a.seed,
        t_max: a.t_max,
        trace: TraceConfig {
            alphas: a.alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec()),
            stride: a.stride,
        },
        len_sw: a.len_sw,
        window_bound: a.window_bound,
    };
    let output = request.execute(&inst)?;
    write_run(&RunFiles::new(&a.out, &a.name), &output)
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let spec = ExperimentSpec::parse(&read_text(&a.spec)?)?;
    let base = a
        .spec
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let plan = spec.plan(&base, a.out.as_deref())?;
    let report = sweep::execute(&plan, sweep::worker_count()?)?;
    eprintln!(
        "sweep: {} runs executed, {} already present, summary at {}",
        report.executed,
        report.skipped,
        plan.output.join("summary.csv").display()
    );
    Ok(())
}

fn opt(a: OptArgs) -> Result<()> {
    let inst = load(&a.instance)?;
    let optima = optimum_for_bounds(&inst, &a.bounds)?;
    let mut out = String::from("capacity,optimum\n");
    for (cap, value) in optima {
        out.push_str(&format!("{cap},{value}\n"));
    }
    std::io::stdout()
        .write_all(out.as_bytes())
        .map_err(|e| HarnessError::Resource(format!("stdout: {e}")))
}
