//! The `halfflat` command line: one subcommand per module.
//!
//! Every command writes a document (JSON, JSON lines or CSV) that starts with
//! a metadata block holding the program version and the full parsed
//! configuration, so any output file is enough to rerun it. Nothing in the
//! document depends on the clock or on the worker count.

pub mod suites;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::airy::{self, Airy21Query, Airy21Value, AiryQuad, FredholmQuad};
use crate::asep_sim::{self, AsepParams, McEstimate, SimWindow};
use crate::error::{Error, Result};
use crate::exact_series::{self, LogZeta, MomentQuad, Path, SeriesQuad, SeriesResult};
use crate::harness::{self, LimitConfig, ScaledQuery};
use crate::par;

#[derive(Debug, Parser)]
#[command(name = "halfflat", version, about = "Half-flat ASEP: simulation, exact formulas and the Airy2->1 limit")]
pub struct Cli {
    /// Worker threads (default: $HALFFLAT_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; without it the result goes to stdout.
    #[arg(long = "out", global = true)]
    pub out_path: Option<PathBuf>,
    /// Output format. Defaults to text on stdout and json for files.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathArg {
    A,
    B,
}

impl From<PathArg> for Path {
    fn from(p: PathArg) -> Path {
        match p {
            PathArg::A => Path::A,
            PathArg::B => Path::B,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Simulate trajectories and export snapshots.
    Simulate(SimulateArgs),
    /// Exact moment E[tau^{m N_x(t)}], optionally against Monte Carlo.
    Moment(MomentArgs),
    /// The tau-Laplace series 1 + sum_k H_k(zeta).
    Laplace(LaplaceArgs),
    /// Airy2->1 one-point CDF table.
    Airy21(Airy21Args),
    /// Tracy-Widom F1 / F2 table.
    Tw(TwArgs),
    /// Prelimit CDF against the Airy2->1 target on a t grid.
    Limit(LimitArgs),
    /// Built-in consistency checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.005)]
    pub tau: f64,
    /// Time (unscaled).
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Site reported in the summary.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub x: i64,
    #[arg(long, default_value_t = 1)]
    pub npaths: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentArgs {
    #[arg(long, default_value_t = 0.005)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub x: i64,
    #[arg(long)]
    pub m: u32,
    /// Trapezoid nodes per circle; a floor, raised for large x.
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    /// Monte Carlo paths for a comparison (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub npaths: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct LaplaceArgs {
    #[arg(long, default_value_t = 0.005)]
    pub tau: f64,
    /// Unscaled time, or the scaled t when --alpha / --rtilde are given.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub x: i64,
    /// Negative real zeta.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "exponent")]
    pub zeta: Option<f64>,
    /// e in zeta = -(1-tau)^{-1} tau^e.
    #[arg(long, allow_hyphen_values = true)]
    pub exponent: Option<f64>,
    /// Scaled mode: x = floor(t^{2/3} alpha), time t/gamma, scaled zeta.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["zeta", "exponent"])]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["zeta", "exponent"])]
    pub rtilde: Option<f64>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=4))]
    pub kmax: u64,
    /// Contour parametrization; default a, or b in scaled mode.
    #[arg(long, value_enum)]
    pub path: Option<PathArg>,
    /// Circle nodes (path A) or nodes per panel (path B).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Sampled tuples per term for k = 3, 4.
    #[arg(long, default_value_t = 200_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct Airy21Args {
    #[arg(long, allow_hyphen_values = true)]
    pub t1: f64,
    /// A single level; otherwise the grid --ymin..--ymax.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -4.0)]
    pub ymin: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    pub ymax: f64,
    #[arg(long, default_value_t = 25)]
    pub ny: usize,
    /// Number of determinant-series terms; all of them by default.
    #[arg(long)]
    pub terms: Option<usize>,
    /// Gauss-Legendre nodes per panel.
    #[arg(long, default_value_t = 10)]
    pub nodes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TwArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 2)]
    pub beta: u8,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -5.0)]
    pub smin: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
    pub smax: f64,
    #[arg(long, default_value_t = 33)]
    pub ns: usize,
    /// Gauss-Legendre nodes.
    #[arg(long, default_value_t = 40)]
    pub nodes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LimitArgs {
    #[arg(long, default_value_t = 0.005)]
    pub tau: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1,0,1")]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.5,0,0.5")]
    pub rtilde: Vec<f64>,
    #[arg(long = "tgrid", value_delimiter = ',', default_value = "10,20,40")]
    pub t_grid: Vec<f64>,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=4))]
    pub kmax: u64,
    #[arg(long, value_enum, default_value_t = PathArg::B)]
    pub path: PathArg,
    /// Monte Carlo paths per grid point (0 skips the simulation).
    #[arg(long, default_value_t = 0)]
    pub npaths: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Paths,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Serialize)]
struct Metadata<'a> {
    program: &'static str,
    version: &'static str,
    command: &'a Command,
}

fn metadata(cmd: &Command) -> Metadata<'_> {
    Metadata { program: "halfflat", version: env!("CARGO_PKG_VERSION"), command: cmd }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    metadata: Metadata<'a>,
    result: &'a T,
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.into())
}

fn write_json<W: Write, T: Serialize>(out: &mut W, cmd: &Command, result: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &Document { metadata: metadata(cmd), result }).map_err(json_err)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Metadata as `#` comment lines ahead of a CSV table.
fn write_csv_header<W: Write>(out: &mut W, cmd: &Command) -> Result<()> {
    writeln!(out, "# program: halfflat {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# config: {}", serde_json::to_string(cmd).map_err(json_err)?)?;
    Ok(())
}

fn csv_table<W: Write>(out: &mut W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(airy::csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(airy::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn grid(single: Option<f64>, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if let Some(v) = single {
        return Ok(vec![v]);
    }
    if n < 2 || !(lo < hi) {
        return Err(Error::Config(format!("grid needs lo < hi and at least 2 points, got [{lo}, {hi}] x {n}")));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn fmt_mc(m: &McEstimate) -> String {
    format!("{} +- {}", m.mean, m.stderr)
}

#[derive(Serialize)]
struct MomentResult {
    value: f64,
    mc: Option<McEstimate>,
    /// `(mc - exact) / stderr`.
    z_score: Option<f64>,
}

#[derive(Serialize)]
struct LaplaceResult {
    tau: f64,
    time: f64,
    x: i64,
    exponent: f64,
    path: Path,
    quadrature: SeriesQuad,
    series: SeriesResult,
}

#[derive(Serialize)]
struct TwRow {
    s: f64,
    cdf: f64,
}

#[derive(Serialize)]
struct ValidateResult {
    passed: bool,
    checks: Vec<suites::Check>,
}

/// The output sink and its format.
struct Sink {
    out: Box<dyn Write + Send>,
    format: Format,
}

impl Sink {
    fn open(path: &Option<PathBuf>, format: Option<Format>) -> Result<Sink> {
        match path {
            Some(p) => {
                let format = format.unwrap_or(Format::Json);
                if format == Format::Text {
                    return Err(Error::Config("text output is for stdout only; use csv or json with --out".into()));
                }
                Ok(Sink { out: Box::new(BufWriter::new(File::create(p)?)), format })
            }
            None => Ok(Sink { out: Box::new(io::stdout()), format: format.unwrap_or(Format::Text) }),
        }
    }
}

/// Parse `args` and run; returns the process exit code. Errors go to stderr
/// as one JSON object with the error category.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let msg = serde_json::json!({ "error": e.category(), "exit_code": e.exit_code(), "message": e.to_string() });
            eprintln!("{msg}");
            e.exit_code()
        }
    }
}

/// Dispatch one parsed command inside a pool capped at `--threads`.
pub fn run(cli: &Cli) -> Result<i32> {
    if cli.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let mut sink = Sink::open(&cli.out_path, cli.format)?;
    let code = par::with_threads(cli.threads, || dispatch(&cli.command, &mut sink))?;
    sink.out.flush()?;
    Ok(code)
}

fn dispatch(cmd: &Command, sink: &mut Sink) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => simulate(cmd, a, sink),
        Command::Moment(a) => moment(cmd, a, sink),
        Command::Laplace(a) => laplace(cmd, a, sink),
        Command::Airy21(a) => airy21(cmd, a, sink),
        Command::Tw(a) => tw(cmd, a, sink),
        Command::Limit(a) => limit(cmd, a, sink),
        Command::Validate(a) => validate(cmd, a, sink),
    }
}

fn simulate(cmd: &Command, a: &SimulateArgs, sink: &mut Sink) -> Result<i32> {
    if a.npaths < 1 || !(a.t >= 0.0) {
        return Err(Error::Config("simulate needs --npaths >= 1 and --t >= 0".into()));
    }
    let params = AsepParams::from_tau(a.tau)?;
    let window = SimWindow::default_for_time(a.t);
    if !window.contains(a.x) {
        return Err(Error::Domain(format!("x = {} lies outside the window [{}, {}]", a.x, window.left, window.right)));
    }
    let start = asep_sim::init_half_flat(window);
    let states: Vec<_> = par::chunked(a.npaths as usize, 16, |r| {
        r.map(|i| {
            let mut s = start.clone();
            s.advance(a.t, &params, &mut crate::rng::stream(a.seed, i as u64));
            s
        })
        .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let out = &mut sink.out;
    match sink.format {
        Format::Json => {
            // JSON lines: the metadata object, then one snapshot per path
            serde_json::to_writer(&mut *out, &serde_json::json!({ "metadata": metadata(cmd) })).map_err(json_err)?;
            out.write_all(b"\n")?;
            let snaps: Vec<_> = states.iter().map(|s| s.snapshot()).collect();
            asep_sim::write_snapshots(&mut *out, &snaps)?;
        }
        Format::Csv => {
            write_csv_header(out, cmd)?;
            let rows = states.iter().enumerate().map(|(i, s)| {
                let n = s.particle_count(a.x).expect("x inside window");
                vec![i.to_string(), a.x.to_string(), n.to_string(), s.height(a.x).expect("x inside window").to_string()]
            });
            csv_table(out, &["path", "x", "n_x", "height"], rows)?;
        }
        Format::Text => {
            for (i, s) in states.iter().enumerate() {
                writeln!(out, "path {i}: N_{} = {}, h = {}", a.x, s.particle_count(a.x)?, s.height(a.x)?)?;
            }
        }
    }
    Ok(0)
}

fn moment(cmd: &Command, a: &MomentArgs, sink: &mut Sink) -> Result<i32> {
    let params = AsepParams::from_tau(a.tau)?;
    let value = exact_series::moment(a.m, a.t, a.x, &params, &MomentQuad { n_nodes: a.nodes })?;
    let mc = if a.npaths > 0 {
        let m = a.m as f64;
        let lt = params.tau.ln();
        let window = SimWindow::default_for_time(a.t);
        Some(asep_sim::mc_expectation(
            |s| (m * s.particle_count(a.x).expect("x inside window") as f64 * lt).exp(),
            a.t,
            &params,
            window,
            a.npaths,
            a.seed,
        )?)
    } else {
        None
    };
    let res = MomentResult { value, mc, z_score: mc.map(|m| (m.mean - value) / m.stderr) };
    let out = &mut sink.out;
    match sink.format {
        Format::Json => write_json(out, cmd, &res)?,
        Format::Csv => {
            write_csv_header(out, cmd)?;
            let (mean, se) = mc.map_or((String::new(), String::new()), |m| (m.mean.to_string(), m.stderr.to_string()));
            csv_table(out, &["m", "t", "x", "tau", "exact", "mc_mean", "mc_stderr"], [vec![
                a.m.to_string(),
                a.t.to_string(),
                a.x.to_string(),
                a.tau.to_string(),
                format!("{value:?}"),
                mean,
                se,
            ]])?;
        }
        Format::Text => {
            writeln!(out, "{value:?}")?;
            if let Some(m) = mc {
                writeln!(out, "mc {} (z = {:.2})", fmt_mc(&m), res.z_score.unwrap_or(0.0))?;
            }
        }
    }
    Ok(0)
}

fn laplace(cmd: &Command, a: &LaplaceArgs, sink: &mut Sink) -> Result<i32> {
    let params = AsepParams::from_tau(a.tau)?;
    let scaled = a.alpha.is_some() || a.rtilde.is_some();
    let path: Path = a.path.map(Into::into).unwrap_or(if scaled { Path::B } else { Path::A });
    let mut quad = SeriesQuad { samples: a.samples, seed: a.seed, ..SeriesQuad::default() };
    if let Some(n) = a.nodes {
        match path {
            Path::A => quad.circle_nodes = n,
            Path::B => quad.nodes_per_panel = n,
        }
    }
    let (zeta, time, x) = if scaled {
        let sq = ScaledQuery::new(a.t, a.alpha.unwrap_or(0.0), a.rtilde.unwrap_or(0.0))?;
        (sq.log_zeta(&params), sq.time(&params), sq.x())
    } else if let Some(e) = a.exponent {
        (LogZeta::new(e, params.qreal()), a.t, a.x)
    } else {
        let z = a.zeta.unwrap_or(-0.5);
        if !(z < 0.0) {
            return Err(Error::Domain(format!("--zeta must be negative, got {z}")));
        }
        (LogZeta::from_zeta(Complex64::new(z, 0.0), params.qreal())?, a.t, a.x)
    };
    let series = exact_series::tau_laplace(&zeta, time, x, &params, a.kmax as usize, &quad, path)?;
    for w in &series.warnings {
        eprintln!("warning: {w}");
    }
    let res = LaplaceResult { tau: a.tau, time, x, exponent: zeta.exponent, path, quadrature: quad, series };
    let out = &mut sink.out;
    match sink.format {
        Format::Json => write_json(out, cmd, &res)?,
        Format::Csv => {
            write_csv_header(out, cmd)?;
            for w in &res.series.warnings {
                writeln!(out, "# warning: {w}")?;
            }
            let rows = res.series.terms.iter().zip(&res.series.partial_sums).map(|(t, s)| {
                vec![t.k.to_string(), t.re.to_string(), t.im.to_string(), t.abs.to_string(), t.quad_error.to_string(), s.to_string()]
            });
            csv_table(out, &["k", "re", "im", "abs", "quad_error", "partial_sum"], rows)?;
        }
        Format::Text => {
            for t in &res.series.terms {
                writeln!(out, "H_{} = {:.12e} (+- {:.1e})", t.k, t.re, t.quad_error)?;
            }
            writeln!(out, "total {:.12} converged {}", res.series.total, res.series.converged)?;
        }
    }
    Ok(0)
}

fn airy21(cmd: &Command, a: &Airy21Args, sink: &mut Sink) -> Result<i32> {
    use rayon::prelude::*;
    let ys = grid(a.y, a.ymin, a.ymax, a.ny)?;
    let quad = AiryQuad { nodes_per_panel: a.nodes, ..AiryQuad::default() };
    let k_max = a.terms.unwrap_or(usize::MAX);
    let rows = ys
        .par_iter()
        .map(|&y| airy::airy21_cdf(&Airy21Query::new(a.t1, y)?, k_max, &quad))
        .collect::<Result<Vec<Airy21Value>>>()?;
    let out = &mut sink.out;
    match sink.format {
        Format::Json => write_json(out, cmd, &rows)?,
        Format::Csv => {
            write_csv_header(out, cmd)?;
            airy::write_cdf_csv(&mut *out, &rows)?;
        }
        Format::Text => {
            for r in &rows {
                writeln!(out, "G({}, {}) = {:.10} (+- {:.1e})", r.t1, r.y1, r.cdf, r.est_error)?;
            }
        }
    }
    Ok(0)
}

fn tw(cmd: &Command, a: &TwArgs, sink: &mut Sink) -> Result<i32> {
    let quad = FredholmQuad { n_nodes: a.nodes, ..FredholmQuad::default() };
    let rows = grid(a.s, a.smin, a.smax, a.ns)?
        .into_iter()
        .map(|s| {
            let cdf = if a.beta == 1 { airy::tw1_cdf(s, &quad)? } else { airy::tw2_cdf(s, &quad)? };
            Ok(TwRow { s, cdf })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = &mut sink.out;
    match sink.format {
        Format::Json => write_json(out, cmd, &rows)?,
        Format::Csv => {
            write_csv_header(out, cmd)?;
            csv_table(out, &["s", "cdf"], rows.iter().map(|r| vec![r.s.to_string(), format!("{:.12e}", r.cdf)]))?;
        }
        Format::Text => {
            for r in &rows {
                writeln!(out, "F{}({}) = {:.12}", a.beta, r.s, r.cdf)?;
            }
        }
    }
    Ok(0)
}

fn limit(cmd: &Command, a: &LimitArgs, sink: &mut Sink) -> Result<i32> {
    let cfg = LimitConfig {
        tau: a.tau,
        t_grid: a.t_grid.clone(),
        k_max: a.kmax as usize,
        path: a.path.into(),
        mc_paths: a.npaths,
        mc_seed: a.seed,
        ..LimitConfig::default()
    };
    let study = harness::limit_study(&a.alpha, &a.rtilde, &cfg)?;
    let out = &mut sink.out;
    match sink.format {
        Format::Json => write_json(out, cmd, &study)?,
        Format::Csv => {
            write_csv_header(out, cmd)?;
            for n in &study.notes {
                writeln!(out, "# note: {n}")?;
            }
            study.write_csv(&mut *out)?;
        }
        Format::Text => {
            for rep in &study.reports {
                writeln!(out, "alpha {} r~ {}: target {:.6}", rep.alpha, rep.r_tilde, rep.target.cdf)?;
                for r in &rep.rows {
                    let mc = r.mc.map(|m| format!(", mc {}", fmt_mc(&m))).unwrap_or_default();
                    writeln!(out, "  t {}: prelimit {:.6} gap {:.6}{mc}", r.t, r.prelimit, r.gap)?;
                }
                writeln!(out, "  gap nonincreasing: {}", rep.nonincreasing)?;
            }
        }
    }
    Ok(0)
}

fn validate(cmd: &Command, a: &ValidateArgs, sink: &mut Sink) -> Result<i32> {
    let mut checks = Vec::new();
    if matches!(a.suite, Suite::Identities | Suite::All) {
        checks.extend(suites::identities(a.seed)?);
    }
    if matches!(a.suite, Suite::Paths | Suite::All) {
        checks.extend(suites::paths()?);
    }
    let res = ValidateResult { passed: checks.iter().all(|c| c.passed), checks };
    let out = &mut sink.out;
    match sink.format {
        Format::Json => write_json(out, cmd, &res)?,
        Format::Csv => {
            write_csv_header(out, cmd)?;
            let rows = res.checks.iter().map(|c| {
                vec![c.suite.clone(), c.name.clone(), c.max_error.to_string(), c.tolerance.to_string(), c.passed.to_string()]
            });
            csv_table(out, &["suite", "check", "max_error", "tolerance", "passed"], rows)?;
        }
        Format::Text => {
            for c in &res.checks {
                writeln!(out, "{} {}: {:.2e} (tol {:.0e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.max_error, c.tolerance)?;
            }
        }
    }
    Ok(if res.passed { 0 } else { 3 })
}
