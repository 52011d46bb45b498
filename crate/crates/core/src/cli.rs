//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error,
//! 3 verification failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::bcjr::build_policy;
use crate::bounds::{
    d2_threshold, epsilon_star, lower_bound, noncausal_capacity, upper_bound_analytic, BoundResult,
};
use crate::constraint::noiseless_capacity;
use crate::constraint::RllPresentation;
use crate::error::Error;
use crate::format::sig9;
use crate::numeric::numeric_upper_bound;
use crate::qgraph::{build_chain_qgraph, build_debruijn_qgraph};
use crate::sim::{empirical_stationary_residual, simulate, SimConfig, DEFAULT_BURN_IN};
use crate::sq_chain::{build_sq_chain, conditional_mutual_information};
use crate::verify::{run_suite, Fault, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rllfb",
    version,
    about = "Feedback-capacity bounds for the (d,inf)-RLL constrained BEC"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lower bound, analytic upper bound and non-causal capacity at one point.
    Bounds {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Sweep the bounds over an erasure-probability grid and write CSV.
    Curve(CurveArgs),
    /// Run the numerical verification suite.
    Verify {
        #[arg(long = "dmax", default_value_t = 4)]
        d_max: usize,
        #[arg(long, default_value_t = 20)]
        a_points: usize,
        #[arg(long)]
        inject_fault: Option<FaultArg>,
        /// Print the adjacency listing of both Q-graphs for every d.
        #[arg(long)]
        dump_graph: bool,
    },
    /// Threshold erasure probabilities.
    Threshold {
        #[arg(
            long,
            required_unless_present = "d2_equality",
            conflicts_with = "d2_equality"
        )]
        d: Option<usize>,
        /// Largest eps at which the d = 2 lower bound meets the non-causal capacity.
        #[arg(long)]
        d2_equality: bool,
    },
    /// Monte Carlo run of the BCJR-invariant policy on the de Bruijn Q-graph.
    Simulate {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: u64,
        /// Write per-(s,q) frequencies to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    Theta,
}

#[derive(Debug, Args, Default)]
struct CurveArgs {
    /// Comma-separated list of d values.
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long)]
    eps_start: Option<f64>,
    #[arg(long)]
    eps_stop: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Also evaluate the numerical upper bound on the de Bruijn Q-graph (slow).
    #[arg(long)]
    numeric_ub: bool,
    /// Output path; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Flat key=value file with the same fields (d, eps_start, eps_stop,
    /// points, numeric_ub, output). Command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Sweep description for `curve`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub d_list: Vec<usize>,
    pub eps_start: f64,
    pub eps_stop: f64,
    pub points: usize,
    pub numeric_ub: bool,
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d_list: vec![1, 2, 3, 4],
            eps_start: 0.0,
            eps_stop: 1.0,
            points: 101,
            numeric_ub: false,
            output: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.d_list.is_empty() {
            return Err("d list is empty".into());
        }
        if let Some(&bad) = self.d_list.iter().find(|&&d| d == 0) {
            return Err(format!("d must be positive, got {bad}"));
        }
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.eps_start) || !in_unit(self.eps_stop) || self.eps_start > self.eps_stop {
            return Err(format!(
                "eps grid [{}, {}] must lie in [0, 1] with start <= stop",
                self.eps_start, self.eps_stop
            ));
        }
        if self.points < 2 {
            return Err("points must be at least 2".into());
        }
        Ok(())
    }

    pub fn eps_grid(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.eps_stop
                } else {
                    self.eps_start + (self.eps_stop - self.eps_start) * i as f64 / n as f64
                }
            })
            .collect()
    }

    /// Parse a flat `key=value` file. Blank lines and `#` comments are ignored.
    pub fn parse_flat(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| format!("line {}: {key}: {e}", lineno + 1);
            match key {
                "d" | "d_list" => {
                    cfg.d_list = value
                        .split(',')
                        .map(|v| v.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| bad(&e))?
                }
                "eps_start" => cfg.eps_start = value.parse().map_err(|e| bad(&e))?,
                "eps_stop" => cfg.eps_stop = value.parse().map_err(|e| bad(&e))?,
                "points" => cfg.points = value.parse().map_err(|e| bad(&e))?,
                "numeric_ub" => cfg.numeric_ub = value.parse().map_err(|e| bad(&e))?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                _ => return Err(format!("line {}: unknown key {key}", lineno + 1)),
            }
        }
        Ok(cfg)
    }
}

/// One CSV row of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub d: usize,
    pub eps: f64,
    pub lower: f64,
    pub upper_analytic: f64,
    pub noncausal: f64,
    pub numeric_upper: Option<f64>,
}

/// Numeric upper bound on the de Bruijn Q-graph. Outside (0, 1) the program
/// degenerates: at eps = 1 every bound is 0, and at eps = 0 feedback does not
/// help, so the noiseless capacity is reported.
fn numeric_column(d: usize, eps: f64) -> Result<f64, Error> {
    if eps >= 1.0 {
        Ok(0.0)
    } else if eps <= 0.0 {
        noiseless_capacity(d)
    } else {
        Ok(numeric_upper_bound(&build_debruijn_qgraph(d)?, eps)?
            .result
            .value)
    }
}

pub fn compute_curve(cfg: &SweepConfig) -> Result<Vec<CurveRow>, Error> {
    let cells: Vec<(usize, f64)> = cfg
        .d_list
        .iter()
        .flat_map(|&d| cfg.eps_grid().into_iter().map(move |e| (d, e)))
        .collect();
    cells
        .par_iter()
        .map(|&(d, eps)| {
            Ok(CurveRow {
                d,
                eps,
                lower: lower_bound(d, eps)?.value,
                upper_analytic: upper_bound_analytic(d, eps)?.value,
                noncausal: noncausal_capacity(d, eps)?.value,
                numeric_upper: if cfg.numeric_ub {
                    Some(numeric_column(d, eps)?)
                } else {
                    None
                },
            })
        })
        .collect()
}

pub fn curve_csv(rows: &[CurveRow], numeric: bool) -> String {
    let mut out = String::from("d,epsilon,lower,upper_analytic,noncausal");
    if numeric {
        out.push_str(",numeric_upper");
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.d,
            sig9(r.eps),
            sig9(r.lower),
            sig9(r.upper_analytic),
            sig9(r.noncausal)
        ));
        if numeric {
            out.push(',');
            out.push_str(&r.numeric_upper.map(sig9).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}

fn usage(err: &mut dyn Write, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(err, "error: {msg}");
    EXIT_USAGE
}

/// Argument-derived library errors are usage errors; anything else is a
/// runtime failure.
fn library_failure(err: &mut dyn Write, e: Error) -> i32 {
    let code = match e {
        Error::InvalidOrder(_) | Error::OrderTooLarge { .. } | Error::OutOfRange { .. } => {
            EXIT_USAGE
        }
        _ => EXIT_RUNTIME,
    };
    let _ = writeln!(err, "error: {e}");
    code
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match path {
        Some(p) => match fs::write(p, text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: cannot write {}: {e}", p.display());
                EXIT_RUNTIME
            }
        },
        None => match out.write_all(text.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(_) => EXIT_RUNTIME,
        },
    }
}

fn bound_line(name: &str, b: &BoundResult) -> String {
    format!(
        "{name:<15} {:<12} argmax {:<12} domain [{}, {}]",
        sig9(b.value),
        sig9(b.argmax),
        sig9(b.domain.0),
        sig9(b.domain.1)
    )
}

fn cmd_bounds(d: usize, eps: f64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = (|| {
        Ok::<_, Error>((
            lower_bound(d, eps)?,
            upper_bound_analytic(d, eps)?,
            noncausal_capacity(d, eps)?,
        ))
    })();
    match res {
        Ok((lb, ub, nc)) => {
            let _ = writeln!(out, "d={d} eps={}", sig9(eps));
            let _ = writeln!(out, "{}", bound_line("LB", &lb));
            let _ = writeln!(out, "{}", bound_line("UB", &ub));
            let _ = writeln!(out, "{}", bound_line("NC", &nc));
            EXIT_OK
        }
        Err(e) => library_failure(err, e),
    }
}

fn cmd_curve(args: CurveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut cfg = match &args.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(text) => match SweepConfig::parse_flat(&text) {
                Ok(c) => c,
                Err(e) => return usage(err, format!("{}: {e}", path.display())),
            },
            Err(e) => return usage(err, format!("cannot read {}: {e}", path.display())),
        },
        None => SweepConfig::default(),
    };
    if let Some(d) = args.d {
        cfg.d_list = d;
    }
    if let Some(v) = args.eps_start {
        cfg.eps_start = v;
    }
    if let Some(v) = args.eps_stop {
        cfg.eps_stop = v;
    }
    if let Some(v) = args.points {
        cfg.points = v;
    }
    cfg.numeric_ub |= args.numeric_ub;
    if args.output.is_some() {
        cfg.output = args.output;
    }
    if let Err(e) = cfg.validate() {
        return usage(err, e);
    }
    match compute_curve(&cfg) {
        Ok(rows) => write_output(
            cfg.output.as_deref(),
            &curve_csv(&rows, cfg.numeric_ub),
            out,
            err,
        ),
        Err(e) => library_failure(err, e),
    }
}

fn cmd_verify(
    cfg: VerifyConfig,
    dump_graph: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if cfg.d_max == 0 {
        return usage(err, "dmax must be at least 1");
    }
    if cfg.a_points == 0 {
        return usage(err, "a-points must be at least 1");
    }
    if dump_graph {
        for d in 1..=cfg.d_max {
            for g in [build_debruijn_qgraph(d), build_chain_qgraph(d)] {
                match g {
                    Ok(g) => {
                        let _ = writeln!(out, "# {:?} Q-graph, d={d}", g.family());
                        let _ = write!(out, "{}", g.dump());
                    }
                    Err(e) => return library_failure(err, e),
                }
            }
        }
    }
    let results = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return library_failure(err, e),
    };
    for r in &results {
        let _ = writeln!(out, "{r}");
    }
    let failures: Vec<_> = results.iter().filter(|r| !r.passed()).collect();
    if failures.is_empty() {
        let _ = writeln!(out, "PASS ({} checks)", results.len());
        EXIT_OK
    } else {
        for f in &failures {
            let _ = writeln!(
                out,
                "failure\t{}\t{:e}\t{:e}\t{}",
                f.name, f.worst, f.tolerance, f.worst_at
            );
        }
        let _ = writeln!(out, "FAIL ({} of {} checks)", failures.len(), results.len());
        EXIT_VERIFY
    }
}

fn cmd_threshold(d: Option<usize>, d2: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if d2 {
        let _ = writeln!(out, "{}", sig9(d2_threshold()));
        return EXIT_OK;
    }
    let d = d.expect("clap enforces --d or --d2-equality");
    match epsilon_star(d) {
        Ok(e) => {
            let _ = writeln!(out, "{}", sig9(e));
            EXIT_OK
        }
        Err(Error::NoRoot(msg)) => {
            let _ = writeln!(out, "none ({msg})");
            EXIT_OK
        }
        Err(e) => library_failure(err, e),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    d: usize,
    eps: f64,
    a: f64,
    config: SimConfig,
    csv: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let run = || -> Result<_, Error> {
        let g = build_debruijn_qgraph(d)?;
        let policy = build_policy(d, a)?;
        let report = simulate(&g, eps, &policy, &config)?;
        let chain = build_sq_chain(&RllPresentation::new(d)?, &g, eps, &policy)?;
        let pi = chain.stationary()?;
        let analytic = conditional_mutual_information(&chain, &pi);
        let residual = empirical_stationary_residual(&report, &pi);
        Ok((report, analytic, residual))
    };
    match run() {
        Ok((report, analytic, residual)) => {
            let _ = writeln!(
                out,
                "n={} seed={} burn_in={}",
                report.n, report.seed, report.burn_in
            );
            let _ = writeln!(out, "empirical_I={}", sig9(report.empirical_i));
            let _ = writeln!(out, "analytic_I={}", sig9(analytic));
            let _ = writeln!(out, "stationary_residual={}", sig9(residual));
            match csv {
                Some(p) => write_output(Some(&p), &report.to_csv(), out, err),
                None => EXIT_OK,
            }
        }
        Err(e) => library_failure(err, e),
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match cli.command {
        Command::Bounds { d, eps } => cmd_bounds(d, eps, out, err),
        Command::Curve(args) => cmd_curve(args, out, err),
        Command::Verify {
            d_max,
            a_points,
            inject_fault,
            dump_graph,
        } => {
            let mut cfg = VerifyConfig::new(d_max);
            cfg.a_points = a_points;
            cfg.fault = inject_fault.map(|FaultArg::Theta| Fault::Theta);
            cmd_verify(cfg, dump_graph, out, err)
        }
        Command::Threshold { d, d2_equality } => cmd_threshold(d, d2_equality, out, err),
        Command::Simulate {
            d,
            eps,
            a,
            n,
            seed,
            burn_in,
            csv,
        } => cmd_simulate(d, eps, a, SimConfig { n, seed, burn_in }, csv, out, err),
    }
}
