//! Command-line harness: order verification, stability scans, convergence
//! studies and single integrations.
//!
//! Exit codes: 0 on success, 1 when a verification or threshold fails (or a
//! run fails), 2 on usage errors such as unknown names or bad flags.

pub mod convergence;
pub mod report;
pub mod verify;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::ProblemSpec;
use crate::stability::{scan_constrained, scan_single, RegionScan};
use crate::stepper::{IntegrateOptions, StepStats};
use crate::tableau::{catalog, export_catalog_json, find_pair, MethodKind};

pub use convergence::{
    least_squares_slope, reference_solution, run_convergence, ConvergenceOptions,
    ConvergenceReport, Integrator, LevelResult, StartPolicy, CACHE_ENV,
};
pub use report::{emit_report, fmt_num, ReportFormat};
pub use verify::{verify_pair, VerifyRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "imex-dimsim",
    version,
    about = "IMEX general linear methods: verification, stability and convergence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check order, stage order, termination and B reconstruction residuals.
    Verify {
        /// Pair to check (repeatable); all cataloged pairs by default.
        #[arg(long = "method")]
        methods: Vec<String>,
    },
    /// Scan a stability region and write `re,im,rho,stable` as CSV.
    Scan(ScanArgs),
    /// Run a convergence study over step sizes h0 / 2^k.
    Converge(ConvergeArgs),
    /// Integrate once and print the final solution and work counters as JSON.
    Integrate(IntegrateArgs),
    /// Print (or write) the catalog as JSON.
    Catalog {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Member {
    Explicit,
    Implicit,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub method: String,
    /// Scan the constrained region of the pair instead of a single member.
    #[arg(long)]
    pub pair: bool,
    /// Member scanned without --pair.
    #[arg(long, value_enum, default_value = "explicit")]
    pub member: Member,
    /// Stiff sector half-angle in degrees.
    #[arg(long, default_value_t = 90.0)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Stop probing a point once it is unstable; `rho` of unstable points
    /// is then only a lower bound.
    #[arg(long)]
    pub early_exit: bool,
    #[arg(long, default_value_t = 401)]
    pub nx: usize,
    #[arg(long, default_value_t = 401)]
    pub ny: usize,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    pub re_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub re_max: f64,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    pub im_min: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    pub im_max: f64,
}

/// Problem selection and parameters; unset parameters keep their defaults.
#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// vdp, pr, linear or advdiff.
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi_hat: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
}

impl ProblemArgs {
    pub fn spec(&self) -> Result<ProblemSpec> {
        let mut spec = ProblemSpec::by_name(&self.problem)?;
        match &mut spec {
            ProblemSpec::Vdp { eps } => set(eps, self.eps),
            ProblemSpec::Pr { mu } => set(mu, self.mu),
            ProblemSpec::Linear { xi, xi_hat } => {
                set(xi, self.xi);
                set(xi_hat, self.xi_hat);
            }
            ProblemSpec::Advdiff { n, a, nu } => {
                set(n, self.n);
                set(a, self.a);
                set(nu, self.nu);
            }
        }
        Ok(spec)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub method: String,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub h0: f64,
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// analytic or imexrk.
    #[arg(long, default_value = "analytic")]
    pub start: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json; inferred from the output extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Fail (exit 1) when the least-squares order is below this.
    #[arg(long)]
    pub min_order: Option<f64>,
    /// Fail (exit 1) when the least-squares order is above this.
    #[arg(long)]
    pub max_order: Option<f64>,
    /// Reference cache directory (overrides the environment variable).
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub method: String,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub h: f64,
    /// Final time; the problem's default otherwise.
    #[arg(long)]
    pub tf: Option<f64>,
    #[arg(long, default_value = "analytic")]
    pub start: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct IntegrateOutput {
    method: String,
    problem: String,
    h: f64,
    t_final: f64,
    solution: Vec<f64>,
    stats: StepStats,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownMethod { .. }
        | Error::UnknownProblem { .. }
        | Error::InvalidParameter(_)
        | Error::StepMismatch { .. } => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one command, writing human-readable output to `out`.
pub fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Verify { methods } => cmd_verify(methods, out),
        Command::Scan(args) => cmd_scan(args, out),
        Command::Converge(args) => cmd_converge(args, out),
        Command::Integrate(args) => cmd_integrate(args, out),
        Command::Catalog { out: path } => {
            let text = export_catalog_json(&catalog())? + "\n";
            match path {
                Some(p) => report::write_text(p, &text)?,
                None => write_out(out, &text)?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_verify(methods: &[String], out: &mut dyn Write) -> Result<i32> {
    let pairs = if methods.is_empty() {
        catalog()
    } else {
        methods
            .iter()
            .map(|m| find_pair(m))
            .collect::<Result<Vec<_>>>()?
    };
    let mut text = format!(
        "{:<16} {:<9} {:>12} {:>12} {:>12} {:>12} {:>9}  result\n",
        "method", "member", "stage-order", "order", "termination", "B-rebuild", "tol"
    );
    let mut all_ok = true;
    for pair in &pairs {
        for row in verify_pair(pair)? {
            let ok = row.passed();
            all_ok &= ok;
            text += &format!(
                "{:<16} {:<9} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>9.0e}  {}\n",
                row.method,
                row.member.to_string(),
                row.stage_order,
                row.order,
                row.termination,
                row.b_rebuild,
                row.tolerance,
                if ok { "PASS" } else { "FAIL" }
            );
        }
    }
    write_out(out, &text)?;
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_scan(args: &ScanArgs, out: &mut dyn Write) -> Result<i32> {
    let pair = find_pair(&args.method)?;
    let mut scan = RegionScan::new(
        (args.re_min, args.re_max),
        (args.im_min, args.im_max),
        args.nx,
        args.ny,
        args.alpha,
    )?;
    scan.early_exit = args.early_exit;
    let (records, label) = if args.pair {
        (
            scan_constrained(&pair, &scan)?,
            format!("{} pair, alpha = {}", pair.full_name(), args.alpha),
        )
    } else {
        let kind = match args.member {
            Member::Explicit => MethodKind::ExplicitType1,
            Member::Implicit => MethodKind::ImplicitType2,
        };
        (
            scan_single(pair.member(kind), &scan)?,
            format!("{} {}", pair.full_name(), kind),
        )
    };
    report::write_text(&args.out, &report::scan_csv(&records))?;
    let stable = records.iter().filter(|r| r.stable).count();
    write_out(
        out,
        &format!(
            "{label}: {stable} of {} grid points stable; written to {}\n",
            records.len(),
            args.out.display()
        ),
    )?;
    Ok(EXIT_OK)
}

fn cmd_converge(args: &ConvergeArgs, out: &mut dyn Write) -> Result<i32> {
    let method = Integrator::by_name(&args.method)?;
    let spec = args.problem.spec()?;
    let start = StartPolicy::parse(&args.start)?;
    let format = match &args.format {
        Some(f) => Some(f.parse::<ReportFormat>()?),
        None => None,
    };
    let mut opts = ConvergenceOptions::default();
    if let Some(dir) = &args.cache_dir {
        opts.cache_dir = Some(dir.clone());
    }
    let report = run_convergence(&method, &spec, args.h0, args.levels, start, &opts)?;
    let mut text = format!(
        "{} on {}\n{:>24} {:>24} {:>10}\n",
        report.method, report.problem, "h", "error", "order"
    );
    for (k, level) in report.levels.iter().enumerate() {
        let order = if k == 0 {
            String::new()
        } else {
            format!("{:.3}", report.pairwise_orders[k - 1])
        };
        text += &format!(
            "{:>24} {:>24} {:>10}\n",
            fmt_num(level.h),
            fmt_num(level.error),
            order
        );
    }
    let ls = report.least_squares_order;
    text += &format!(
        "least-squares order: {}\n",
        ls.map_or_else(|| "n/a".to_string(), |o| format!("{o:.4}"))
    );
    write_out(out, &text)?;
    if let Some(path) = &args.out {
        emit_report(
            &report,
            format.unwrap_or_else(|| ReportFormat::for_path(path)),
            path,
        )?;
    }
    let within =
        |o: f64| args.min_order.is_none_or(|m| o >= m) && args.max_order.is_none_or(|m| o <= m);
    let thresholds = args.min_order.is_some() || args.max_order.is_some();
    let ok = !thresholds || ls.is_some_and(within);
    Ok(if ok && report.skipped.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn cmd_integrate(args: &IntegrateArgs, out: &mut dyn Write) -> Result<i32> {
    let method = Integrator::by_name(&args.method)?;
    let spec = args.problem.spec()?;
    let start = StartPolicy::parse(&args.start)?;
    let mut prob = spec.build()?;
    if let Some(tf) = args.tf {
        prob.tf = tf;
    }
    let (y, stats) = method.solve(&prob, args.h, start, &IntegrateOptions::default())?;
    let output = IntegrateOutput {
        method: method.name(),
        problem: spec.key(),
        h: args.h,
        t_final: prob.tf,
        solution: y.iter().copied().collect(),
        stats,
    };
    let text = serde_json::to_string_pretty(&output)? + "\n";
    match &args.out {
        Some(p) => report::write_text(p, &text)?,
        None => write_out(out, &text)?,
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> (i32, String) {
        let cli =
            match Cli::try_parse_from(std::iter::once("imex-dimsim").chain(args.iter().copied())) {
                Ok(c) => c,
                Err(_) => return (EXIT_USAGE, String::new()),
            };
        let mut buf = Vec::new();
        let code = match execute(&cli.command, &mut buf) {
            Ok(c) => c,
            Err(e) => exit_code(&e),
        };
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn verify_all_passes() {
        let (code, text) = exec(&["verify"]);
        assert_eq!(code, EXIT_OK, "{text}");
        assert_eq!(text.matches("PASS").count(), 8);
    }

    #[test]
    fn unknown_names_are_usage_errors() {
        assert_eq!(exec(&["verify", "--method", "nosuch"]).0, EXIT_USAGE);
        assert_eq!(
            exec(&[
                "integrate",
                "--method",
                "2B",
                "--problem",
                "heat",
                "--h",
                "0.1"
            ])
            .0,
            EXIT_USAGE
        );
        assert_eq!(exec(&["frobnicate"]).0, EXIT_USAGE);
    }

    #[test]
    fn problem_flags_override_defaults() {
        let args = ProblemArgs {
            problem: "advdiff".into(),
            eps: None,
            mu: None,
            xi: None,
            xi_hat: None,
            n: Some(32),
            a: None,
            nu: Some(0.5),
        };
        assert_eq!(
            args.spec().unwrap(),
            ProblemSpec::Advdiff {
                n: 32,
                a: 1.0,
                nu: 0.5
            }
        );
    }

    #[test]
    fn integrate_reports_json() {
        let (code, text) = exec(&[
            "integrate",
            "--method",
            "3B",
            "--problem",
            "pr",
            "--mu",
            "-100",
            "--h",
            "0.05",
        ]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let y = v["solution"][0].as_f64().unwrap();
        assert!((y - 1f64.sin()).abs() < 1e-4);
        assert!(v["stats"]["newton_iterations"].as_u64().unwrap() > 0);
    }

    #[test]
    fn off_grid_step_is_a_usage_error() {
        let (code, _) = exec(&[
            "integrate",
            "--method",
            "2B",
            "--problem",
            "linear",
            "--h",
            "0.3",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }
}
