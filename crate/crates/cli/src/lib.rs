//! Command-line front end: parses arguments, runs the pipeline, maps failures to exit codes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use momentcert::diagnosis::{self, DiagnosisOptions, HierarchyRow, RandomSpec};
use momentcert::io::{emit_report_json, parse_pop, print_pop, PopInstance, ReportDocument};
use momentcert::optimality::{self, Check, OptimalityReport, Tolerances};
use momentcert::relaxation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "momentcert",
    version,
    about = "Moment-SOS relaxations with optimality certificates"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one relaxation and print the lower bound f_k.
    Solve {
        input: PathBuf,
        /// Relaxation order (defaults to the smallest admissible one).
        #[arg(long)]
        order: Option<u32>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Check first- and second-order optimality conditions at a point.
    Certify {
        input: PathBuf,
        /// Comma-separated coordinates, e.g. `0,-1.5`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        point: Point,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Solve a range of relaxation orders and tabulate the bounds.
    Sweep {
        input: PathBuf,
        /// Inclusive order range `a..b`, or a single order.
        #[arg(long, value_parser = parse_orders)]
        orders: Option<(u32, u32)>,
        /// Also write the table as JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Sweep, extract and certify minimizers, and write a JSON report.
    Diagnose {
        input: PathBuf,
        /// Inclusive order range `a..b`, or a single order.
        #[arg(long, value_parser = parse_orders)]
        orders: Option<(u32, u32)>,
        /// Report path; `-` writes to stdout.
        #[arg(short, long, default_value = "report.json")]
        output: PathBuf,
        /// Stop the sweep at the first verified flat truncation.
        #[arg(long)]
        stop_on_flat: bool,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Sample a random instance and print it in `.pop` format.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        nvars: usize,
        /// Objective degree.
        #[arg(long, default_value_t = 3)]
        degree: u32,
        /// Degree of a random dense equality constraint (repeatable).
        #[arg(long = "equality-degree")]
        equality_degrees: Vec<u32>,
        /// Add the unit sphere as an equality constraint.
        #[arg(long)]
        sphere: bool,
        /// Number of random linear inequalities.
        #[arg(long, default_value_t = 0)]
        linear: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Solver, rank and optimality-check settings shared by the solving subcommands.
#[derive(Debug, Clone, Args)]
pub struct Tuning {
    /// Interior-point iteration limit.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Target relative duality gap.
    #[arg(long)]
    pub tol_gap: Option<f64>,
    /// Target relative primal and dual infeasibility.
    #[arg(long)]
    pub tol_feas: Option<f64>,
    /// 0 is quiet; 1 logs progress and solver iterations; 2 adds debug output.
    #[arg(long, default_value_t = 0)]
    pub verbosity: u8,
    /// Seed for the random combination used in minimizer extraction.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative singular-value threshold for moment-matrix ranks.
    #[arg(long)]
    pub rank_tau: Option<f64>,
    /// Radius within which extracted points are snapped onto KKT points.
    #[arg(long)]
    pub refine_radius: Option<f64>,
    /// Activity threshold for inequalities.
    #[arg(long)]
    pub tol_eps_act: Option<f64>,
    /// Admissible constraint violation.
    #[arg(long)]
    pub tol_eps_feas: Option<f64>,
    /// First-order residual threshold.
    #[arg(long)]
    pub tol_fooc: Option<f64>,
    /// Smallest multiplier counted as strictly positive.
    #[arg(long)]
    pub tol_mult: Option<f64>,
    /// Projected-Hessian eigenvalue threshold.
    #[arg(long)]
    pub tol_eig: Option<f64>,
    /// Bordered-determinant threshold.
    #[arg(long)]
    pub tol_det: Option<f64>,
    /// Rank threshold for the active Jacobian.
    #[arg(long)]
    pub tol_rank: Option<f64>,
    /// Length below which an active gradient counts as zero.
    #[arg(long)]
    pub tol_grad: Option<f64>,
}

impl Tuning {
    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        let overrides = [
            ("eps_act", self.tol_eps_act),
            ("eps_feas", self.tol_eps_feas),
            ("tol_fooc", self.tol_fooc),
            ("tol_mult", self.tol_mult),
            ("tol_eig", self.tol_eig),
            ("tol_det", self.tol_det),
            ("tol_rank", self.tol_rank),
            ("tol_grad", self.tol_grad),
        ];
        for (name, value) in overrides {
            if let Some(v) = value {
                t.set(name, v);
            }
        }
        t
    }

    pub fn diagnosis_options(&self, orders: Option<(u32, u32)>) -> DiagnosisOptions {
        let mut o = DiagnosisOptions {
            orders,
            tolerances: self.tolerances(),
            ..Default::default()
        };
        if let Some(v) = self.max_iter {
            o.sdp.max_iter = v;
        }
        if let Some(v) = self.tol_gap {
            o.sdp.tol_gap = v;
        }
        if let Some(v) = self.tol_feas {
            o.sdp.tol_feas = v;
        }
        o.sdp.verbosity = self.verbosity;
        if let Some(v) = self.seed {
            o.seed = v;
        }
        if let Some(v) = self.rank_tau {
            o.rank_tau = v;
        }
        if let Some(v) = self.refine_radius {
            o.refine_radius = v;
        }
        o
    }
}

/// Coordinates given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|c| {
            let c = c.trim();
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("invalid coordinate {c:?}"))
        })
        .collect::<Result<_, _>>()
        .map(Point)
}

fn parse_orders(s: &str) -> Result<(u32, u32), String> {
    let bad = || format!("expected an order `k` or a range `a..b`, got {s:?}");
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(format!("order range {a}..{b} is empty"));
    }
    Ok((a, b))
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

fn load(path: &Path) -> Result<PopInstance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_ERROR, format!("cannot read {}: {e}", path.display())))?;
    parse_pop(&text).map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    if path.as_os_str() == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::new(EXIT_ERROR, format!("cannot write to stdout: {e}")))
    } else {
        std::fs::write(path, text)
            .map_err(|e| CliError::new(EXIT_ERROR, format!("cannot write {}: {e}", path.display())))
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Parse `argv` (including the program name), run, and return the exit code.
/// Normal output goes to `out`; diagnostics go to stderr.
pub fn run<I, T>(argv: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match CliConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&config, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(config: &CliConfig, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let text = match &config.command {
        Command::Solve {
            input,
            order,
            tuning,
        } => {
            init_logging(tuning.verbosity);
            let instance = load(input)?;
            let k = order.unwrap_or_else(|| relaxation::min_order(&instance));
            relaxation::build(&instance, k)
                .map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))?;
            let opts = tuning.diagnosis_options(Some((k, k)));
            let row = diagnosis::sweep(&instance, (k, k), &opts).remove(0);
            if !row.status.is_usable() {
                return Err(CliError::new(
                    EXIT_SOLVER,
                    format!("order {k}: solver returned {:?}", row.status),
                ));
            }
            format_solve(&row)
        }
        Command::Certify {
            input,
            point,
            json,
            tuning,
        } => {
            init_logging(tuning.verbosity);
            let instance = load(input)?;
            let report = optimality::certify(&instance, &point.0, &tuning.tolerances())
                .map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))?;
            if *json {
                emit_report_json(&report)
            } else {
                format_certify(&instance, &report)
            }
        }
        Command::Sweep {
            input,
            orders,
            output,
            tuning,
        } => {
            init_logging(tuning.verbosity);
            let instance = load(input)?;
            let orders = orders.unwrap_or_else(|| diagnosis::default_orders(&instance));
            let opts = tuning.diagnosis_options(Some(orders));
            let rows = diagnosis::sweep(&instance, orders, &opts);
            if let Some(path) = output {
                write_output(path, &emit_report_json(&rows))?;
            }
            let table = format_sweep(&rows);
            out.write_all(table.as_bytes())
                .map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))?;
            if let Some(bad) = rows.iter().find(|r| !r.status.is_usable()) {
                return Err(CliError::new(
                    EXIT_SOLVER,
                    format!("order {}: solver returned {:?}", bad.order, bad.status),
                ));
            }
            return Ok(());
        }
        Command::Diagnose {
            input,
            orders,
            output,
            stop_on_flat,
            tuning,
        } => {
            init_logging(tuning.verbosity);
            let instance = load(input)?;
            let mut opts = tuning.diagnosis_options(*orders);
            opts.stop_on_flat = *stop_on_flat;
            let result = diagnosis::diagnose(&instance, &opts);
            let code = result.code;
            let any_usable = result.rows.iter().any(|r| r.status.is_usable());
            let doc = ReportDocument::new(&instance, &opts, result);
            write_output(output, &emit_report_json(&doc))?;
            if !any_usable {
                return Err(CliError::new(EXIT_SOLVER, "no relaxation order was solved"));
            }
            if output.as_os_str() == "-" {
                String::new()
            } else {
                format!("{code}\n")
            }
        }
        Command::Random {
            seed,
            nvars,
            degree,
            equality_degrees,
            sphere,
            linear,
            output,
        } => {
            if *nvars == 0 {
                return Err(CliError::new(EXIT_ERROR, "--nvars must be positive"));
            }
            let spec = RandomSpec {
                nvars: *nvars,
                objective_degree: *degree,
                equality_degrees: equality_degrees.clone(),
                sphere: *sphere,
                linear_inequalities: *linear,
            };
            let text = print_pop(&diagnosis::random_instance(*seed, &spec));
            match output {
                Some(path) => {
                    write_output(path, &text)?;
                    String::new()
                }
                None => text,
            }
        }
    };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))
}

fn format_solve(row: &HierarchyRow) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "order              {}", row.order);
    let _ = writeln!(s, "f_k                {:.10e}", row.sos_value);
    let _ = writeln!(s, "moment value       {:.10e}", row.moment_value);
    let _ = writeln!(s, "status             {:?}", row.status);
    let _ = writeln!(s, "relative gap       {:.3e}", row.rel_gap);
    let _ = writeln!(s, "identity residual  {:.3e}", row.identity_residual);
    s
}

fn format_check(s: &mut String, name: &str, c: &Check) {
    let vacuous = if c.vacuous { " (vacuous)" } else { "" };
    let evidence = c
        .evidence
        .map_or_else(|| "-".to_string(), |e| format!("{e:.4e}"));
    let _ = writeln!(
        s,
        "{name:<6} {:<10} evidence {evidence:>11}  threshold {:.1e}{vacuous}",
        verdict(c),
        c.threshold
    );
}

fn verdict(c: &Check) -> &'static str {
    match c.verdict {
        optimality::Verdict::Pass => "Pass",
        optimality::Verdict::Fail => "Fail",
        optimality::Verdict::Undecided => "Undecided",
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.6e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn format_certify(instance: &PopInstance, r: &OptimalityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "instance   {}", instance.name());
    let _ = writeln!(s, "point      [{}]", join(&r.kkt.point));
    let _ = writeln!(s, "objective  {:.10e}", r.objective);
    let _ = writeln!(s, "violation  {:.3e}", r.violation);
    let active: Vec<String> = r
        .kkt
        .active_set
        .iter()
        .map(|&j| format!("g{}", j + 1))
        .collect();
    let _ = writeln!(s, "active     [{}]", active.join(", "));
    let _ = writeln!(s, "lambda     [{}]", join(&r.kkt.lambda));
    let _ = writeln!(s, "mu         [{}]", join(&r.kkt.mu));
    format_check(&mut s, "FOOC", &r.fooc);
    format_check(&mut s, "CQC", &r.cqc);
    format_check(&mut s, "SCC", &r.scc);
    format_check(&mut s, "SONC", &r.sonc);
    format_check(&mut s, "SOSC", &r.sosc);
    format_check(&mut s, "det", &r.det_nonsingular);
    let _ = writeln!(s, "det H      {:.6e}", r.det_h);
    let _ = writeln!(
        s,
        "CQC+SCC+SOSC {}",
        if r.bhc_implied {
            "hold"
        } else {
            "do not all hold"
        }
    );
    s
}

fn format_sweep(rows: &[HierarchyRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5}  {:>17}  {:>17}  {:<16}  {:>9}  {:<5}  {:>4}  {:>4}",
        "order", "f_k", "moment value", "status", "rel gap", "flat", "rank", "pts"
    );
    for r in rows {
        let rank = r
            .ranks
            .first()
            .map(|t| t.1.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:>5}  {:>17.10e}  {:>17.10e}  {:<16}  {:>9.2e}  {:<5}  {:>4}  {:>4}",
            r.order,
            r.sos_value,
            r.moment_value,
            format!("{:?}", r.status),
            r.rel_gap,
            r.verified_flat,
            rank,
            r.num_minimizers
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_ranges() {
        assert_eq!(parse_orders("3..5"), Ok((3, 5)));
        assert_eq!(parse_orders("3..=5"), Ok((3, 5)));
        assert_eq!(parse_orders("4"), Ok((4, 4)));
        assert!(parse_orders("5..3").is_err());
        assert!(parse_orders("a..3").is_err());
    }

    #[test]
    fn points() {
        assert_eq!(
            parse_point("0,-1.5, 2e-3"),
            Ok(Point(vec![0.0, -1.5, 2e-3]))
        );
        assert!(parse_point("0,,1").is_err());
        assert!(parse_point("nan").is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let c = CliConfig::try_parse_from([
            "momentcert",
            "certify",
            "f.pop",
            "--point",
            "0",
            "--tol-eig",
            "1e-3",
            "--tol-eps-act=2e-4",
        ])
        .unwrap();
        let Command::Certify { tuning, .. } = c.command else {
            panic!()
        };
        let t = tuning.tolerances();
        assert_eq!(t.tol_eig, 1e-3);
        assert_eq!(t.eps_act, 2e-4);
        assert_eq!(t.tol_fooc, Tolerances::default().tol_fooc);
    }
}
