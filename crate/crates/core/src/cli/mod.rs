//! The `mlrate` command line.
//!
//! Every subcommand writes `<command>.csv` and `<command>_report.json` into
//! the output directory (`--out`, or `MLRATE_OUT`); curve commands also write
//! `<command>_plot.csv`. Exit status is 0 on success, 2 for input errors and
//! 3 for numerical failures.

pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::constellation::{builtin, decision_region, geometry_summary, BuiltinFamily, Constellation};
use crate::convexity::{classify, derivative_bounds_check, find_inflections, Interval, ReportTarget};
use crate::engine::{ClosedForm, ErrorCurve, Estimate, EstimatorConfig, Target, Variable};
use crate::error::{Error, Result};
use crate::fading::{average_curve, averaged_convexity_check, averaged_curve, jensen_check, FadingModel};
use crate::qcheck::q_function_suite;
use crate::sharing::{budget_grid, SharingPlan};
use crate::systems::{ofdm_compare, vblast_optimize, OfdmScenario, RegimeThresholds};
use output::{Artifacts, Cell, RunMeta, Series, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mlrate", version, about = "Error rates and convexity of ML detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory.
    #[arg(long, global = true, env = "MLRATE_OUT", default_value = ".")]
    pub out: PathBuf,

    /// Worker threads; affects wall time only.
    #[arg(long, global = true, env = "MLRATE_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Decision-region geometry: per-point d_min and d_max.
    Geometry(GeometryArgs),
    /// Error rate on a grid.
    Ser(CurveArgs),
    /// Value, first and second derivative on a grid.
    Derivatives(CurveArgs),
    /// Guaranteed convex and concave regions from the geometry.
    Classify(ClassifyArgs),
    /// Universal derivative bounds on a grid.
    Bounds(CurveArgs),
    /// Locate inflection points of an error curve.
    Inflect(InflectArgs),
    /// Power-time sharing for a noise jammer.
    Jammer(SharingArgs),
    /// Power-time sharing for a transmitter.
    Transmitter(SharingArgs),
    /// V-BLAST power allocation.
    Vblast(VblastArgs),
    /// Fading-averaged error rates and Jensen check.
    Fading(FadingArgs),
    /// OFDM versus single-carrier comparison under zero forcing.
    Ofdm(OfdmArgs),
    /// Property suite for the Gaussian tail function.
    Qcheck(QcheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Geometry(_) => "geometry",
            Command::Ser(_) => "ser",
            Command::Derivatives(_) => "derivatives",
            Command::Classify(_) => "classify",
            Command::Bounds(_) => "bounds",
            Command::Inflect(_) => "inflect",
            Command::Jammer(_) => "jammer",
            Command::Transmitter(_) => "transmitter",
            Command::Vblast(_) => "vblast",
            Command::Fading(_) => "fading",
            Command::Ofdm(_) => "ofdm",
            Command::Qcheck(_) => "qcheck",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstellationArgs {
    /// Built-in family: pam, psk, qam, orthogonal, biorthogonal, sphere_test.
    #[arg(long, value_parser = BuiltinFamily::from_str, conflicts_with = "constellation")]
    pub builtin: Option<BuiltinFamily>,
    /// Number of points of the built-in constellation.
    #[arg(long)]
    pub order: Option<usize>,
    /// Dimension, for families where it follows from the order.
    #[arg(long)]
    pub dimension: Option<usize>,
    /// Constellation document (JSON).
    #[arg(long, value_name = "PATH")]
    pub constellation: Option<PathBuf>,
    /// Rescale the constellation to unit mean energy.
    #[arg(long)]
    pub renormalize: bool,
}

impl ConstellationArgs {
    pub fn load(&self) -> Result<Constellation> {
        let c = match (&self.builtin, &self.constellation) {
            (Some(family), None) => {
                let order = self
                    .order
                    .ok_or_else(|| Error::Domain("--builtin needs --order".into()))?;
                builtin(*family, order, self.dimension)?
            }
            (None, Some(path)) => Constellation::from_path(path)?,
            _ => return Err(Error::Domain("give either --builtin or --constellation".into())),
        };
        Ok(if self.renormalize { c.renormalized() } else { c })
    }

    /// Closed form of a built-in, when one exists for `target`.
    fn closed_form(&self, target: Target) -> Option<ClosedForm> {
        let (family, m) = (self.builtin?, self.order?);
        use BuiltinFamily::*;
        match target {
            Target::Ser | Target::Correct => match family {
                Pam | Psk if m == 2 => Some(ClosedForm::Bpsk),
                Psk if m == 4 => Some(ClosedForm::Qpsk),
                Pam => Some(ClosedForm::Pam { order: m }),
                Qam => Some(ClosedForm::Qam { order: m }),
                Biorthogonal if m % 2 == 0 => Some(ClosedForm::Biorthogonal { dimension: m / 2 }),
                _ => None,
            },
            Target::ConditionalSer { index } | Target::ConditionalCorrect { index } if family == Pam => {
                Some(ClosedForm::PamConditional { order: m, index })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Closed form when the built-in has one, Monte Carlo otherwise.
    Auto,
    /// Monte Carlo.
    Mc,
    /// Closed form only.
    Closed,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo sample count; accepts `1e6`.
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub samples: u64,
    /// Random stream identifier.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Antithetic pairs `(z, -z)`.
    #[arg(long)]
    pub antithetic: bool,
    /// Evaluation method [default: mc for ser, derivatives and bounds;
    /// auto otherwise].
    #[arg(long, value_enum)]
    pub method: Option<Method>,
}

impl SamplingArgs {
    pub fn config(&self) -> EstimatorConfig {
        EstimatorConfig::new(self.samples, self.seed)
            .with_stream(self.stream)
            .with_antithetic(self.antithetic)
    }
}

/// `start:stop:points[:lin|:geo]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub geometric: bool,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                if k == n - 1 {
                    self.stop
                } else if self.geometric {
                    self.start * (self.stop / self.start).powf(t)
                } else {
                    self.start + (self.stop - self.start) * t
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Domain(format!("grid `{s}`: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad("expected start:stop:points[:lin|:geo]"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad("bad number"));
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let points = parse_count(parts[2]).map_err(|_| bad("bad point count"))? as usize;
        let geometric = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") => false,
            Some("geo") => true,
            Some(_) => return Err(bad("scale must be lin or geo")),
        };
        if !(start.is_finite() && stop.is_finite() && start > 0.0) {
            return Err(bad("endpoints must be positive and finite"));
        }
        if points == 0 || (points == 1) != (start == stop) || (points > 1 && stop <= start) {
            return Err(bad("grid must be strictly increasing"));
        }
        let g = GridSpec {
            start,
            stop,
            points,
            geometric,
        };
        if g.values().windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("grid must be strictly increasing"));
        }
        Ok(g)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = if self.geometric { "geo" } else { "lin" };
        write!(f, "{}:{}:{}:{scale}", self.start, self.stop, self.points)
    }
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Positive interval `lo:hi`.
fn parse_interval(s: &str) -> Result<Interval> {
    let bad = || Error::Domain(format!("interval `{s}`: expected lo:hi with 0 < lo < hi"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (lo, hi) = (a.parse::<f64>().map_err(|_| bad())?, b.parse::<f64>().map_err(|_| bad())?);
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(bad());
    }
    Ok(Interval::new(lo, hi))
}

/// Sample counts, accepting `1e6` and `1_000_000`.
pub fn parse_count(s: &str) -> Result<u64> {
    let t = s.trim().replace('_', "");
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    match t.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(Error::Domain(format!("`{s}` is not a non-negative integer"))),
    }
}

/// `ser`, `correct`, `conditional:i`, `conditional-correct:i`, `pep:i:j`
/// or `ber`.
pub fn parse_target(s: &str) -> Result<Target> {
    let bad = || Error::Domain(format!("unknown target `{s}`"));
    let idx = |p: &str| p.parse::<usize>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["ser"] => Target::Ser,
        ["correct"] => Target::Correct,
        ["ber"] => Target::Ber,
        ["conditional", i] => Target::ConditionalSer { index: idx(i)? },
        ["conditional-correct", i] => Target::ConditionalCorrect { index: idx(i)? },
        ["pep", i, j] => Target::Pep {
            from: idx(i)?,
            to: idx(j)?,
        },
        _ => return Err(bad()),
    })
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct GridArgs {
    /// SNR grid `start:stop:points[:lin|:geo]`.
    #[arg(long, value_parser = GridSpec::from_str)]
    pub snr: Option<GridSpec>,
    /// Amplitude grid.
    #[arg(long, value_parser = GridSpec::from_str)]
    pub amplitude: Option<GridSpec>,
    /// Noise-power grid.
    #[arg(long = "noise-power", value_parser = GridSpec::from_str)]
    pub noise_power: Option<GridSpec>,
}

impl GridArgs {
    fn resolve(&self) -> (Variable, Vec<f64>) {
        match (self.snr, self.amplitude, self.noise_power) {
            (Some(g), _, _) => (Variable::Snr, g.values()),
            (_, Some(g), _) => (Variable::Amplitude, g.values()),
            (_, _, Some(g)) => (Variable::NoisePower, g.values()),
            _ => unreachable!("clap requires one grid"),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GeometryArgs {
    #[command(flatten)]
    pub constellation: ConstellationArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurveArgs {
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_parser = parse_target, default_value = "ser")]
    pub target: Target,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_parser = Variable::from_str, default_value = "snr")]
    pub variable: Variable,
    #[arg(long, value_parser = parse_target, default_value = "ser")]
    pub target: Target,
    /// Also search the indeterminate region for inflections.
    #[arg(long)]
    pub locate: bool,
    /// Decades searched past the finite end of an unbounded region.
    #[arg(long, default_value_t = 3.0)]
    pub decades: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InflectArgs {
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_parser = Variable::from_str, default_value = "noise_power")]
    pub variable: Variable,
    #[arg(long, value_parser = parse_target, default_value = "ser")]
    pub target: Target,
    /// Search interval `lo:hi`.
    #[arg(long, value_parser = parse_interval, default_value = "0.001:1000")]
    #[serde(serialize_with = "ser_interval")]
    pub bracket: Interval,
    /// Width of the final bracket.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SharingArgs {
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_parser = parse_target, default_value = "ser")]
    pub target: Target,
    /// Average power budget(s), comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "sweep")]
    pub budget: Vec<f64>,
    /// Log-spaced budget sweep `lo:hi:count`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Inflection search interval.
    #[arg(long, value_parser = parse_interval, default_value = "0.0001:10000")]
    #[serde(serialize_with = "ser_interval")]
    pub search: Interval,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VblastArgs {
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Per-stream SNRs, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub gammas: Vec<f64>,
    /// Fading model applied independently to every stream.
    #[arg(long, value_parser = FadingModel::from_str)]
    pub model: Option<FadingModel>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FadingArgs {
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// `rayleigh`, `rice:K` or `nakagami:m`.
    #[arg(long, value_parser = FadingModel::from_str, default_value = "rayleigh")]
    pub model: FadingModel,
    /// Mean-SNR grid.
    #[arg(long, value_parser = GridSpec::from_str)]
    pub snr: GridSpec,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OfdmArgs {
    #[command(flatten)]
    pub constellation: ConstellationArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Tone gain magnitudes, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required_unless_present = "scenario")]
    pub gains: Vec<f64>,
    /// Noise power before equalization.
    #[arg(long = "noise-power", required_unless_present = "scenario")]
    pub noise_power: Option<f64>,
    /// Scenario document `{"gains": [..], "noise_power": ..}`.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["gains", "noise_power"])]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QcheckArgs {
    /// Grid points per tested interval.
    #[arg(long, default_value_t = crate::qcheck::POINTS_PER_INTERVAL)]
    pub points: usize,
}

fn ser_interval<S: Serializer>(i: &Interval, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{}:{}", i.lo, i.hi))
}

/// Builds the requested curve, preferring the closed form under `auto`.
fn build_curve(
    cons: &ConstellationArgs,
    sampling: &SamplingArgs,
    target: Target,
    variable: Variable,
    default: Method,
) -> Result<(ErrorCurve, Arc<Constellation>)> {
    let c = Arc::new(cons.load()?);
    let method = sampling.method.unwrap_or(default);
    let closed = cons.closed_form(target).filter(|_| !cons.renormalize || c.is_normalized());
    let curve = match (method, closed) {
        (Method::Closed | Method::Auto, Some(family)) => {
            let curve = ErrorCurve::closed_form(family, variable)?;
            if target.is_correct() {
                curve.complement()
            } else {
                curve
            }
        }
        (Method::Closed, None) => {
            return Err(Error::Unsupported(format!("no closed form for this constellation and target {target:?}")))
        }
        _ => ErrorCurve::monte_carlo(c.clone(), target, variable, sampling.config())?,
    };
    Ok((curve, c))
}

fn report_target(target: Target) -> ReportTarget {
    match target {
        Target::Ser | Target::Correct => ReportTarget::SerAverage,
        Target::ConditionalSer { index } | Target::ConditionalCorrect { index } => ReportTarget::SerConditional { index },
        Target::Pep { from, to } => ReportTarget::Pep { from, to },
        Target::Ber => ReportTarget::Ber,
    }
}

fn est_cells(e: &Estimate) -> [Cell; 2] {
    [e.value.into(), e.std_error.into()]
}

/// Arguments that reproduce the run: the raw argv minus the output
/// directory and worker count.
fn reproducible_argv(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" || a == "--workers" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--workers=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &argv) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INPUT
            }
        }
    }
}

/// Runs a parsed command and returns the paths written.
pub fn execute(cli: &Cli, argv: &[String]) -> Result<Vec<PathBuf>> {
    let meta = RunMeta {
        command: cli.command.name().to_string(),
        config: serde_json::to_value(&cli.command).expect("config serializes"),
        argv: reproducible_argv(argv),
    };
    let mut art = Artifacts::new(&cli.out, meta)?;
    let start = Instant::now();
    let mut job = || dispatch(&cli.command, &mut art, start);
    match cli.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Domain(format!("cannot start {n} workers: {e}")))?
            .install(job)?,
        None => job()?,
    }
    Ok(art.written)
}

fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

fn dispatch(cmd: &Command, art: &mut Artifacts, start: Instant) -> Result<()> {
    match cmd {
        Command::Geometry(a) => geometry(a, art, start),
        Command::Ser(a) => ser(a, art, start),
        Command::Derivatives(a) => derivatives(a, art, start),
        Command::Classify(a) => classify_cmd(a, art, start),
        Command::Bounds(a) => bounds(a, art, start),
        Command::Inflect(a) => inflect(a, art, start),
        Command::Jammer(a) => sharing(a, true, art, start),
        Command::Transmitter(a) => sharing(a, false, art, start),
        Command::Vblast(a) => vblast(a, art, start),
        Command::Fading(a) => fading(a, art, start),
        Command::Ofdm(a) => ofdm(a, art, start),
        Command::Qcheck(a) => qcheck(a, art, start),
    }
}

fn geometry(a: &GeometryArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let c = a.constellation.load()?;
    let regions = (0..c.len())
        .into_par_iter()
        .map(|i| decision_region(&c, i))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["index", "prior", "d_min", "d_max", "faces", "bounded"]);
    for (i, r) in regions.iter().enumerate() {
        let d_max = match r.d_max.finite() {
            Some(v) => Cell::Num(v),
            None if r.d_max.is_infinite() => Cell::Num(f64::INFINITY),
            None => Cell::Text("unknown".into()),
        };
        t.push(vec![
            i.into(),
            c.priors()[i].into(),
            r.d_min.into(),
            d_max,
            r.halfspaces.len().into(),
            r.d_max.is_infinite().then_some(false).unwrap_or(true).into(),
        ]);
    }
    art.csv(&t)?;
    let summary = geometry_summary(&c);
    art.report(
        elapsed(start),
        &serde_json::json!({
            "dimension": c.dimension(),
            "points": c.len(),
            "mean_energy": c.mean_energy(),
            "summary": summary,
            "regions": regions,
        }),
    )?;
    Ok(())
}

fn evaluate(curve: &ErrorCurve, grid: &[f64]) -> Result<Vec<crate::engine::Derivatives>> {
    grid.par_iter().map(|&x| curve.derivatives(x)).collect()
}

fn ser(a: &CurveArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let (variable, grid) = a.grid.resolve();
    let (curve, _) = build_curve(&a.constellation, &a.sampling, a.target, variable, Method::Mc)?;
    let values: Vec<Estimate> = grid.par_iter().map(|&x| curve.value(x)).collect::<Result<_>>()?;
    let mut t = Table::new(&["x", "value", "std_error", "samples"]);
    for (x, e) in grid.iter().zip(&values) {
        let [v, s] = est_cells(e);
        t.push(vec![(*x).into(), v, s, (e.samples as usize).into()]);
    }
    art.csv(&t)?;
    let name = curve.name();
    let points: Vec<(f64, Estimate)> = grid.iter().copied().zip(values.iter().copied()).collect();
    art.plotdata(&[Series::new(name.clone(), points)])?;
    art.report(
        elapsed(start),
        &serde_json::json!({
            "curve": name,
            "variable": variable,
            "provenance": curve.provenance(),
            "points": grid.len(),
        }),
    )?;
    Ok(())
}

fn derivatives(a: &CurveArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let (variable, grid) = a.grid.resolve();
    let (curve, _) = build_curve(&a.constellation, &a.sampling, a.target, variable, Method::Mc)?;
    let rows = evaluate(&curve, &grid)?;
    let mut t = Table::new(&["x", "value", "value_se", "first", "first_se", "second", "second_se"]);
    for (x, d) in grid.iter().zip(&rows) {
        let mut row = vec![Cell::Num(*x)];
        row.extend(est_cells(&d.value));
        row.extend(est_cells(&d.first));
        row.extend(est_cells(&d.second));
        t.push(row);
    }
    art.csv(&t)?;
    let pick = |f: fn(&crate::engine::Derivatives) -> Estimate| -> Vec<(f64, Estimate)> {
        grid.iter().copied().zip(rows.iter().map(f)).collect()
    };
    art.plotdata(&[
        Series::new("value", pick(|d| d.value)),
        Series::new("first", pick(|d| d.first)),
        Series::new("second", pick(|d| d.second)),
    ])?;
    art.report(
        elapsed(start),
        &serde_json::json!({
            "curve": curve.name(),
            "variable": variable,
            "provenance": curve.provenance(),
            "points": grid.len(),
        }),
    )?;
    Ok(())
}

fn classify_cmd(a: &ClassifyArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let c = a.constellation.load()?;
    let mut report = classify(&c, a.variable, report_target(a.target))?;
    if a.locate {
        let (curve, _) = build_curve(&a.constellation, &a.sampling, a.target, a.variable, Method::Auto)?;
        report.locate_inflections(&curve, a.decades, a.tol)?;
    }
    let mut t = Table::new(&["kind", "name", "lo", "hi"]);
    for i in &report.guaranteed_convex {
        t.push(vec!["convex".into(), "".into(), i.lo.into(), i.hi.into()]);
    }
    for i in &report.guaranteed_concave {
        t.push(vec!["concave".into(), "".into(), i.lo.into(), i.hi.into()]);
    }
    for i in &report.indeterminate {
        t.push(vec!["indeterminate".into(), "".into(), i.lo.into(), i.hi.into()]);
    }
    for p in &report.inflection_points {
        t.push(vec!["inflection".into(), "".into(), p.bracket.lo.into(), p.bracket.hi.into()]);
    }
    for th in &report.thresholds_used {
        t.push(vec!["threshold".into(), th.name.clone().into(), th.value.into(), th.value.into()]);
    }
    art.csv(&t)?;
    art.report(elapsed(start), &report)?;
    Ok(())
}

fn bounds(a: &CurveArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let (variable, grid) = a.grid.resolve();
    let (curve, c) = build_curve(&a.constellation, &a.sampling, a.target, variable, Method::Mc)?;
    let report = derivative_bounds_check(&curve, c.dimension(), &grid)?;
    let mut t = Table::new(&["x", "order", "value", "std_error", "lower", "upper", "lower_margin", "upper_margin", "ok"]);
    for r in &report.rows {
        t.push(vec![
            r.x.into(),
            (r.order as usize).into(),
            r.value.into(),
            r.std_error.into(),
            r.lower.into(),
            r.upper.into(),
            r.lower_margin.into(),
            r.upper_margin.into(),
            r.ok.into(),
        ]);
    }
    art.csv(&t)?;
    art.report(elapsed(start), &report)?;
    Ok(())
}

fn inflect(a: &InflectArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let (curve, c) = build_curve(&a.constellation, &a.sampling, a.target, a.variable, Method::Auto)?;
    let found = find_inflections(&curve, a.bracket, a.tol)?;
    // theorem brackets, where the geometry provides them
    let classification = classify(&c, a.variable, report_target(a.target)).ok();
    let mut t = Table::new(&["index", "x", "lo", "hi", "in_theorem_bracket"]);
    for (k, p) in found.iter().enumerate() {
        let inside = classification
            .as_ref()
            .map(|r| !r.is_convex_at(p.x) && !r.is_concave_at(p.x));
        let cell = match inside {
            Some(b) => Cell::Bool(b),
            None => Cell::Text("n/a".into()),
        };
        t.push(vec![k.into(), p.x.into(), p.bracket.lo.into(), p.bracket.hi.into(), cell]);
    }
    art.csv(&t)?;
    art.report(
        elapsed(start),
        &serde_json::json!({
            "curve": curve.name(),
            "variable": a.variable,
            "inflections": found,
            "classification": classification,
        }),
    )?;
    Ok(())
}

fn sweep_budgets(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Domain(format!("sweep `{spec}`: expected lo:hi:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n = parse_count(n)? as usize;
    if !(lo > 0.0 && hi > lo && hi.is_finite() && n >= 2) {
        return Err(bad());
    }
    Ok(budget_grid(lo, hi, n))
}

fn sharing(a: &SharingArgs, jammer: bool, art: &mut Artifacts, start: Instant) -> Result<()> {
    let budgets = match &a.sweep {
        Some(s) => sweep_budgets(s)?,
        None if a.budget.is_empty() => return Err(Error::Domain("give --budget or --sweep".into())),
        None => a.budget.clone(),
    };
    let (variable, target) = if jammer {
        (Variable::NoisePower, a.target)
    } else {
        let t = match a.target {
            Target::Ser => Target::Correct,
            Target::ConditionalSer { index } => Target::ConditionalCorrect { index },
            other => other,
        };
        (Variable::Snr, t)
    };
    let (curve, _) = build_curve(&a.constellation, &a.sampling, target, variable, Method::Auto)?;
    let plan = if jammer {
        SharingPlan::jammer(&curve, a.search)?
    } else {
        SharingPlan::transmitter(&curve, a.search)?
    };
    let threshold = match plan.threshold() {
        Ok(v) => Some(v),
        Err(e) if e.is_numerical() => return Err(e),
        Err(_) => None,
    };
    let mut t = Table::new(&[
        "budget",
        "no_sharing",
        "no_sharing_se",
        "suboptimal",
        "suboptimal_se",
        "optimal",
        "optimal_se",
        "on_fraction",
        "on_level",
    ]);
    let mut strategies = Vec::new();
    let (mut s_none, mut s_sub, mut s_opt) = (Vec::new(), Vec::new(), Vec::new());
    for &b in &budgets {
        let sub = plan.suboptimal(b)?;
        let opt = plan.optimal(b)?;
        let top = opt.segments.last().expect("at least one segment");
        let mut row = vec![Cell::Num(b)];
        row.extend(est_cells(&opt.no_sharing_rate));
        row.extend(est_cells(&sub.achieved_rate));
        row.extend(est_cells(&opt.achieved_rate));
        row.extend([top.fraction.into(), top.level.into()]);
        t.push(row);
        s_none.push((b, opt.no_sharing_rate));
        s_sub.push((b, sub.achieved_rate));
        s_opt.push((b, opt.achieved_rate));
        strategies.push(serde_json::json!({ "budget": b, "suboptimal": sub, "optimal": opt }));
    }
    art.csv(&t)?;
    art.plotdata(&[
        Series::new("no_sharing", s_none),
        Series::new("suboptimal", s_sub),
        Series::new("optimal", s_opt),
    ])?;
    art.report(
        elapsed(start),
        &serde_json::json!({
            "role": plan.role(),
            "curve": plan.curve().name(),
            "variable": variable,
            "inflections": plan.inflections(),
            "pieces": plan.pieces(),
            "off_value": plan.off_value(),
            "threshold": threshold,
            "strategies": strategies,
        }),
    )?;
    Ok(())
}

fn vblast(a: &VblastArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let (curve, _) = build_curve(&a.constellation, &a.sampling, Target::Ser, Variable::Snr, Method::Auto)?;
    let curve = match a.model {
        Some(m) => averaged_curve(&curve, m)?,
        None => curve,
    };
    let alloc = vblast_optimize(&curve, &a.gammas)?;
    let mut t = Table::new(&["stream", "gamma", "alpha"]);
    for (i, (g, al)) in a.gammas.iter().zip(&alloc.alphas).enumerate() {
        t.push(vec![i.into(), (*g).into(), (*al).into()]);
    }
    art.csv(&t)?;
    art.report(elapsed(start), &alloc)?;
    Ok(())
}

fn fading(a: &FadingArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let grid = a.snr.values();
    let (curve, _) = build_curve(&a.constellation, &a.sampling, Target::Ser, Variable::Snr, Method::Auto)?;
    let averages = average_curve(&curve, a.model, &grid)?;
    let jensen = jensen_check(&curve, a.model, &grid)?;
    let convexity = averaged_convexity_check(&curve, a.model, &grid)?;
    let mut t = Table::new(&["gamma0", "average", "average_se", "awgn", "gap", "error_bound", "truncation"]);
    let mut s_avg = Vec::new();
    let mut s_awgn = Vec::new();
    for (avg, row) in averages.iter().zip(&jensen.rows) {
        let [v, s] = est_cells(&avg.value);
        t.push(vec![
            avg.gamma0.into(),
            v,
            s,
            row.instantaneous.into(),
            row.gap.into(),
            avg.error_bound().into(),
            avg.truncation.into(),
        ]);
        s_avg.push((avg.gamma0, avg.value));
        s_awgn.push((avg.gamma0, curve.value(avg.gamma0)?));
    }
    art.csv(&t)?;
    art.plotdata(&[Series::new(a.model.to_string(), s_avg), Series::new("awgn", s_awgn)])?;
    art.report(
        elapsed(start),
        &serde_json::json!({
            "model": a.model,
            "curve": curve.name(),
            "jensen": jensen,
            "averaged_convexity": convexity,
        }),
    )?;
    Ok(())
}

fn ofdm(a: &OfdmArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let scenario = match &a.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<OfdmScenario>(&text)
                .map_err(|e| Error::Document {
                    path: format!("{} line {} column {}", path.display(), e.line(), e.column()),
                    message: e.to_string(),
                })?
        }
        None => OfdmScenario {
            gains: a.gains.clone(),
            noise_power: a.noise_power.expect("clap requires the noise power"),
        },
    };
    let (curve, c) = build_curve(&a.constellation, &a.sampling, Target::Ser, Variable::NoisePower, Method::Auto)?;
    let classification = classify(&c, Variable::NoisePower, ReportTarget::SerAverage)?;
    let thresholds = RegimeThresholds::from_report(&classification)?;
    let report = ofdm_compare(&scenario, &curve, thresholds)?;
    let mut t = Table::new(&["tone", "gain", "tone_noise"]);
    for (k, (g, n)) in scenario.gains.iter().zip(&report.tone_noise).enumerate() {
        t.push(vec![k.into(), (*g).into(), (*n).into()]);
    }
    art.csv(&t)?;
    art.report(
        elapsed(start),
        &serde_json::json!({
            "scenario": scenario,
            "thresholds": thresholds,
            "comparison": report,
        }),
    )?;
    Ok(())
}

fn qcheck(a: &QcheckArgs, art: &mut Artifacts, start: Instant) -> Result<()> {
    let checks = q_function_suite(a.points)?;
    let mut t = Table::new(&["check", "evaluations", "min_margin", "passed"]);
    for c in &checks {
        t.push(vec![c.name.into(), c.evaluations.into(), c.min_margin.into(), c.passed.into()]);
    }
    art.csv(&t)?;
    let passed = checks.iter().all(|c| c.passed);
    art.report(elapsed(start), &serde_json::json!({ "passed": passed, "checks": checks }))?;
    Ok(())
}
