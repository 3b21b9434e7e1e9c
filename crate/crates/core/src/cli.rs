//! Command-line front end.
//!
//! Four subcommands: `exponent` (one model, key=value report), `schedule`
//! (placement plan), `simulate` (Monte Carlo miss probabilities as CSV) and
//! `sweep` (one CSV table per invocation). CSV numbers use 17 significant
//! digits in exponent notation so output is byte-stable and round-trips
//! exactly.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::detector::min_calibration_trials;
use crate::error::Error;
use crate::exponent::{error_exponent, error_exponent_spectral, DEFAULT_QUADRATURE_POINTS};
use crate::field_model::{DiffusionField, SampledModel};
use crate::montecarlo::{estimate_miss, estimate_perfect_corr_miss, MissEstimate};
use crate::scheduler::{
    make_plan, optimal_spacing, solve_optimal_correlation, Regime, DEFAULT_TOLERANCE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const DEFAULT_ALPHA: f64 = 0.001;
pub const DEFAULT_TRIALS: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Lib(Error::Csv(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Lib(Error::Domain(_)) => EXIT_USAGE,
            CliError::Lib(Error::Numeric { .. }) => EXIT_NUMERIC,
            CliError::Lib(Error::Io(_)) | CliError::Lib(Error::Csv(_)) => EXIT_IO,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "corrdetect",
    version,
    about = "Error exponents, optimal sensor spacing and Monte Carlo detection for sampled Gauss-Markov fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Error exponent and innovation variances for one model
    Exponent(ExponentArgs),
    /// SNR regime and optimal correlation/spacing
    Schedule(ScheduleArgs),
    /// Monte Carlo miss probability of the size-alpha detector
    Simulate(SimulateArgs),
    /// Tabulate one quantity over a grid as CSV
    Sweep(SweepArgs),
}

/// Flags that pin down the field and the sampled model.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Correlation coefficient between adjacent samples
    #[arg(long)]
    pub a: Option<f64>,
    /// SNR in dB (Gamma = 10^(dB/10))
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// SNR as a linear ratio Pi0 / sigma2
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Stationary signal variance
    #[arg(long)]
    pub pi0: Option<f64>,
    /// Sensor noise variance
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Drift rate A of the diffusion
    #[arg(long = "drift-A")]
    pub drift: Option<f64>,
    /// Sensor spacing (requires --drift-A)
    #[arg(long)]
    pub delta: Option<f64>,
}

impl ModelArgs {
    /// Signal variance implied by the SNR flags, if any.
    pub fn pi0(&self) -> CliResult<Option<f64>> {
        let given = [self.snr_db.is_some(), self.gamma.is_some(), self.pi0.is_some()]
            .iter()
            .filter(|&&g| g)
            .count();
        if given > 1 {
            return Err(usage("give at most one of --snr-db, --gamma, --pi0"));
        }
        let pi0 = match (self.snr_db, self.gamma, self.pi0) {
            (Some(db), _, _) => Some(10f64.powf(db / 10.0) * self.sigma2),
            (_, Some(g), _) => Some(g * self.sigma2),
            (_, _, Some(p)) => Some(p),
            _ => None,
        };
        Ok(pi0)
    }

    pub fn require_pi0(&self) -> CliResult<f64> {
        self.pi0()?
            .ok_or_else(|| usage("SNR required: give --snr-db, --gamma or --pi0"))
    }

    pub fn gamma(&self) -> CliResult<Option<f64>> {
        Ok(self.pi0()?.map(|p| p / self.sigma2))
    }

    /// Correlation from `--a`, or from `--drift-A` and `--delta`.
    pub fn correlation(&self) -> CliResult<Option<f64>> {
        match (self.a, self.delta) {
            (Some(_), Some(_)) => Err(usage("give either --a or --delta, not both")),
            (Some(a), None) => Ok(Some(a)),
            (None, Some(delta)) => {
                let drift = self
                    .drift
                    .ok_or_else(|| usage("--delta needs --drift-A to fix the correlation"))?;
                let field = DiffusionField::new(drift, 1.0, 1.0)?;
                Ok(Some(field.discretize(delta)?.a()))
            }
            (None, None) => Ok(None),
        }
    }

    pub fn require_correlation(&self) -> CliResult<f64> {
        self.correlation()?
            .ok_or_else(|| usage("correlation required: give --a, or --drift-A with --delta"))
    }

    pub fn model(&self) -> CliResult<SampledModel> {
        let a = self.require_correlation()?;
        let pi0 = self.require_pi0()?;
        Ok(SampledModel::new(a, pi0, self.sigma2)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Simpson intervals for the spectral cross-check
    #[arg(long = "quadrature-points", default_value_t = DEFAULT_QUADRATURE_POINTS)]
    pub quadrature_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Simulation controls shared by `simulate` and `sweep pm_vs_n`.
#[derive(Debug, Clone, Args)]
pub struct SimulationArgs {
    /// Detector size (false-alarm level)
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// H1 trials per sample count
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// H0 calibration trials per sample count [default: ceil(100 / alpha)]
    #[arg(long = "trials-h0")]
    pub trials_h0: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads [default: all cores]; output does not depend on it
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Default for SimulationArgs {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            trials: DEFAULT_TRIALS,
            trials_h0: None,
            seed: 0,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sim: SimulationArgs,
    /// Sample counts, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    #[value(name = "exponent_vs_a", alias = "exponent-vs-a")]
    ExponentVsA,
    #[value(name = "exponent_vs_snr", alias = "exponent-vs-snr")]
    ExponentVsSnr,
    #[value(name = "am_vs_snr", alias = "am-vs-snr")]
    AmVsSnr,
    #[value(name = "delta_star_vs_snr", alias = "delta-star-vs-snr")]
    DeltaStarVsSnr,
    #[value(name = "pm_vs_n", alias = "pm-vs-n")]
    PmVsN,
}

impl Quantity {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Quantity::ExponentVsA => &["a", "K", "P", "Re", "Rte"],
            Quantity::ExponentVsSnr => &["gamma", "K"],
            Quantity::AmVsSnr => &["gamma", "a_m", "residual", "K_at_am"],
            Quantity::DeltaStarVsSnr => &["gamma", "delta_star"],
            Quantity::PmVsN => &["n", "p_miss", "stderr", "threshold"],
        }
    }
}

/// Swept-variable grid: `count` evenly spaced points from `start` to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Args)]
pub struct Grid {
    #[arg(long, allow_hyphen_values = true)]
    pub start: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub stop: f64,
    #[arg(long)]
    pub count: usize,
    /// Interpret SNR grid endpoints in dB
    #[arg(long)]
    pub db: bool,
}

impl Grid {
    pub fn validate(&self) -> CliResult<()> {
        if self.count < 2 {
            return Err(usage(format!("grid count must be at least 2, got {}", self.count)));
        }
        if !(self.stop > self.start) {
            return Err(usage(format!(
                "grid stop ({}) must exceed start ({})",
                self.stop, self.start
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|j| {
                if j == self.count - 1 {
                    self.stop
                } else {
                    self.start + j as f64 * step
                }
            })
            .collect()
    }

    /// Grid values as linear SNR.
    pub fn snr_points(&self) -> Vec<f64> {
        let pts = self.points();
        if self.db {
            pts.into_iter().map(|d| 10f64.powf(d / 10.0)).collect()
        } else {
            pts
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Quantity to tabulate
    #[arg(value_enum)]
    pub quantity: Quantity,
    #[command(flatten)]
    pub grid: Grid,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sim: SimulationArgs,
    #[arg(long = "quadrature-points", default_value_t = DEFAULT_QUADRATURE_POINTS)]
    pub quadrature_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A fully specified sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub quantity: Quantity,
    pub grid: Grid,
    pub fixed: ModelArgs,
    pub sim: SimulationArgs,
    pub output: Option<PathBuf>,
}

impl From<SweepArgs> for SweepSpec {
    fn from(args: SweepArgs) -> Self {
        Self {
            quantity: args.quantity,
            grid: args.grid,
            fixed: args.model,
            sim: args.sim,
            output: args.out,
        }
    }
}

/// One CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(v),
        }
    }
}

/// 17 significant digits, exponent notation, `.` separator.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, out: W) -> CliResult<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> CliResult<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
    }
}

fn open_output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn with_workers<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> CliResult<T> + Send,
) -> CliResult<T> {
    match workers {
        None => job(),
        Some(0) => Err(usage("--workers must be at least 1")),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| usage(format!("cannot start {k} workers: {e}")))?;
            pool.install(job)
        }
    }
}

fn miss_row(est: &MissEstimate) -> Vec<Cell> {
    vec![
        Cell::Int(est.n as u64),
        Cell::Float(est.p_miss),
        Cell::Float(est.stderr),
        Cell::Float(est.threshold),
    ]
}

fn simulate_point(model: &SampledModel, n: usize, sim: &SimulationArgs) -> CliResult<MissEstimate> {
    if model.a() >= 1.0 {
        return Ok(estimate_perfect_corr_miss(
            model.pi0(),
            model.sigma2(),
            n,
            sim.alpha,
            sim.trials,
            sim.seed,
        )?);
    }
    if !(sim.alpha > 0.0 && sim.alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {}", sim.alpha)));
    }
    let trials_h0 = sim.trials_h0.unwrap_or_else(|| min_calibration_trials(sim.alpha));
    Ok(estimate_miss(model, n, sim.alpha, trials_h0, sim.trials, sim.seed)?)
}

fn miss_table(model: &SampledModel, ns: &[usize], sim: &SimulationArgs) -> CliResult<Table> {
    let rows = ns
        .iter()
        .map(|&n| simulate_point(model, n, sim).map(|e| miss_row(&e)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Table {
        header: Quantity::PmVsN.columns().to_vec(),
        rows,
    })
}

/// Builds the table for a sweep without writing it.
pub fn sweep_table(spec: &SweepSpec) -> CliResult<Table> {
    spec.grid.validate()?;
    let fixed = &spec.fixed;
    let header = spec.quantity.columns().to_vec();
    let rows: Vec<Vec<Cell>> = match spec.quantity {
        Quantity::ExponentVsA => {
            let pi0 = fixed.require_pi0()?;
            if spec.grid.start < 0.0 || spec.grid.stop > 1.0 {
                return Err(usage("correlation grid must lie within [0, 1]"));
            }
            spec.grid
                .points()
                .into_par_iter()
                .map(|a| {
                    let r = error_exponent(&SampledModel::new(a, pi0, fixed.sigma2)?);
                    Ok(vec![
                        Cell::Float(a),
                        Cell::Float(r.k),
                        Cell::Float(r.p),
                        Cell::Float(r.re),
                        Cell::Float(r.rte),
                    ])
                })
                .collect::<CliResult<_>>()?
        }
        Quantity::ExponentVsSnr => {
            let a = fixed.require_correlation()?;
            spec.grid
                .snr_points()
                .into_par_iter()
                .map(|g| {
                    let m = SampledModel::from_snr(a, g, fixed.sigma2)?;
                    Ok(vec![Cell::Float(g), Cell::Float(error_exponent(&m).k)])
                })
                .collect::<CliResult<_>>()?
        }
        Quantity::AmVsSnr => spec
            .grid
            .snr_points()
            .into_par_iter()
            .map(|g| {
                let opt = solve_optimal_correlation(g, DEFAULT_TOLERANCE)?;
                Ok(vec![
                    Cell::Float(g),
                    Cell::Float(opt.a_m),
                    Cell::Float(opt.residual),
                    Cell::Float(opt.k),
                ])
            })
            .collect::<CliResult<_>>()?,
        Quantity::DeltaStarVsSnr => {
            let drift = fixed
                .drift
                .ok_or_else(|| usage("delta_star_vs_snr needs --drift-A"))?;
            spec.grid
                .snr_points()
                .into_par_iter()
                .map(|g| {
                    let d = optimal_spacing(drift, g, DEFAULT_TOLERANCE)?;
                    Ok(vec![Cell::Float(g), Cell::Float(d)])
                })
                .collect::<CliResult<_>>()?
        }
        Quantity::PmVsN => {
            let model = fixed.model()?;
            if spec.grid.start < 1.0 {
                return Err(usage("sample-count grid must start at 1 or above"));
            }
            let mut ns: Vec<usize> = spec
                .grid
                .points()
                .into_iter()
                .map(|v| v.round() as usize)
                .collect();
            ns.dedup();
            if ns.len() < 2 {
                return Err(usage("sample-count grid collapses to fewer than 2 distinct values"));
            }
            return miss_table(&model, &ns, &spec.sim);
        }
    };
    Ok(Table { header, rows })
}

/// Runs a sweep and writes its CSV to the spec's output.
pub fn run_sweep(spec: &SweepSpec) -> CliResult<()> {
    let table = with_workers(spec.sim.workers, || sweep_table(spec))?;
    table.write_csv(open_output(&spec.output)?)
}

/// key=value report for a single parameter point.
pub fn point_report(args: &ExponentArgs) -> CliResult<String> {
    let m = &args.model;
    let pi0 = m.require_pi0()?;
    let gamma = pi0 / m.sigma2;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").expect("writing to String");

    if let Some(a) = m.correlation()? {
        let model = SampledModel::new(a, pi0, m.sigma2)?;
        let r = error_exponent(&model);
        let spectral = error_exponent_spectral(&model, args.quadrature_points)?;
        kv("a", a.to_string());
        kv("gamma", gamma.to_string());
        kv("K", r.k.to_string());
        kv("K_spectral", spectral.k.to_string());
        kv("P", r.p.to_string());
        kv("Re", r.re.to_string());
        kv("Rte", r.rte.to_string());
    } else {
        kv("gamma", gamma.to_string());
    }
    let regime = Regime::classify(gamma);
    kv("regime", regime.to_string());
    if regime == Regime::LowSnr {
        let opt = solve_optimal_correlation(gamma, DEFAULT_TOLERANCE)?;
        kv("a_m", opt.a_m.to_string());
        kv("K_at_am", opt.k.to_string());
        if let Some(drift) = m.drift.filter(|&d| d > 0.0) {
            kv("delta_star", (-opt.a_m.ln() / drift).to_string());
        }
    }
    Ok(out)
}

pub fn schedule_report(args: &ScheduleArgs) -> CliResult<String> {
    let m = &args.model;
    if m.a.is_some() || m.delta.is_some() {
        return Err(usage("schedule chooses the correlation; drop --a / --delta"));
    }
    let pi0 = m.require_pi0()?;
    let field = DiffusionField::new(m.drift.unwrap_or(0.0), pi0, m.sigma2)?;
    let plan = make_plan(&field)?;
    let mut out = String::new();
    writeln!(out, "gamma={}", plan.gamma).unwrap();
    writeln!(out, "regime={}", plan.regime).unwrap();
    match plan.regime {
        Regime::HighSnr => {
            writeln!(out, "advice=maximal_separation").unwrap();
        }
        Regime::Boundary => {
            writeln!(out, "advice=none").unwrap();
        }
        Regime::LowSnr => {
            writeln!(out, "a_m={}", plan.a_m.expect("low SNR plan has a_m")).unwrap();
            if let Some(d) = plan.delta_star {
                writeln!(out, "delta_star={d}").unwrap();
            }
        }
    }
    writeln!(out, "K_at_optimum={}", plan.k_at_optimum).unwrap();
    Ok(out)
}

pub fn simulate_table(args: &SimulateArgs) -> CliResult<Table> {
    let model = args.model.model()?;
    if args.n.contains(&0) {
        return Err(usage("sample counts must be at least 1"));
    }
    with_workers(args.sim.workers, || miss_table(&model, &args.n, &args.sim))
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Exponent(args) => {
            let report = point_report(&args)?;
            open_output(&args.out)?.write_all(report.as_bytes())?;
        }
        Command::Schedule(args) => {
            let report = schedule_report(&args)?;
            open_output(&args.out)?.write_all(report.as_bytes())?;
        }
        Command::Simulate(args) => {
            let table = simulate_table(&args)?;
            table.write_csv(open_output(&args.out)?)?;
        }
        Command::Sweep(args) => run_sweep(&args.into())?,
    }
    Ok(())
}
