//! Command-line frontend: generate synthetic instances, compute reference
//! oracles, run the solvers, re-verify the convergence theory, and drive
//! multi-run comparisons.
//!
//! Exit codes: 0 on success, 1 when an inequality audit or validation suite
//! reports a failure, 2 on usage errors.

// Validation guards are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbipg::harness::{
    audit_trace, gen, oracle_for_problem, run_experiment_file, AuditReport, OracleOptions,
    OracleReport, Regime,
};
use fbipg::problem::BilevelProblem;
use fbipg::solver::{run_fbipg, run_fista_fixed, FBiPGConfig, IterateTrace, LiftMode, TMode};
use fbipg::{io, Error, Result};

#[derive(Parser)]
#[command(
    name = "fbipg",
    version,
    about = "Bi-level proximal gradient solver and rate-verification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and a ready-to-solve problem file
    Gen(GenArgs),
    /// Compute reference optima and growth constants for a problem
    Oracle(OracleArgs),
    /// Run a solver on a problem and write the iterate trace
    Solve(SolveArgs),
    /// Re-verify the scalar-sequence facts and the rate inequalities
    Validate(ValidateArgs),
    /// Run a multi-run experiment from a JSON config file
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Dataset family
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Number of observations (matrix rows)
    #[arg(long)]
    rows: usize,
    /// Number of variables (matrix columns)
    #[arg(long)]
    cols: usize,
    /// Nonzeros in the planted least-squares solution
    #[arg(long, default_value_t = 0)]
    sparsity: usize,
    /// Make the linear system exactly solvable (no target noise)
    #[arg(long)]
    consistent: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    LeastSquares,
    Logistic,
}

#[derive(Args)]
struct OracleArgs {
    /// Problem description JSON
    #[arg(long)]
    problem: PathBuf,
    /// Output directory for oracle.json
    #[arg(long)]
    out: PathBuf,
    /// CSV vector to try certifying as the outer optimum when exhaustive
    /// enumeration is out of reach
    #[arg(long)]
    planted: Option<PathBuf>,
    /// Iterations of the reference run used when no closed form exists
    #[arg(long)]
    long_run_iters: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem description JSON
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Fbipg)]
    algo: Algo,
    /// Decay exponent of the regularization schedule (dynamic solver)
    #[arg(long)]
    gamma: Option<f64>,
    /// Schedule offset, an integer >= 2
    #[arg(long, default_value_t = 2)]
    a: u32,
    /// Fixed regularization weight (fista-fixed only)
    #[arg(long)]
    alpha: Option<f64>,
    /// Iteration count K
    #[arg(long)]
    iters: usize,
    /// Momentum sequence: the closed form or the classical recursion
    #[arg(long, default_value = "explicit")]
    t_mode: String,
    /// Variable doubling when g and psi have no joint prox: off, auto, force
    #[arg(long, default_value = "auto")]
    lift: String,
    /// Recheck the supporting inequalities at every recorded step
    #[arg(long)]
    audit: bool,
    /// Record every m-th iteration (0 and K are always recorded)
    #[arg(long, default_value_t = 1)]
    trace_every: usize,
    /// Start point: a CSV vector path, or "zeros"
    #[arg(long, default_value = "zeros")]
    x0: String,
    /// oracle.json from `fbipg oracle`; enables gap columns and the
    /// anchored audits
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Seed for audit probe points
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Algo {
    Fbipg,
    FistaFixed,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Seed for the generated instances
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Suite {
    /// Scalar-sequence facts on dense parameter grids
    Lemmas,
    /// Per-step and cumulative solver inequalities plus the rate bounds
    Inequalities,
    /// Growth-condition rate bounds on a full-column-rank instance
    Holder,
    /// Iterate-convergence tail diagnostics
    Pointwise,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports 2 for usage errors and 0 for --help/--version
            let code = e.exit_code().clamp(0, 255) as u8;
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Solve(args) => run_solve(args),
        Command::Validate(args) => validate::run_suite(args.suite, args.seed),
        Command::Compare(args) => run_compare(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn run_gen(args: GenArgs) -> Result<ExitCode> {
    let dataset = match args.kind {
        GenKind::LeastSquares => gen::gen_least_squares(
            args.rows,
            args.cols,
            args.seed,
            args.consistent,
            args.sparsity,
        )?,
        GenKind::Logistic => gen::gen_logistic(args.rows, args.cols, args.seed)?,
    };
    dataset.write(&args.out)?;
    // a default problem around the data: plain inner fit, minimal-L1 outer
    let problem = match args.kind {
        GenKind::LeastSquares => serde_json::json!({
            "dim": args.cols,
            "inner_smooth": {"kind": "least_squares", "A": "A.csv", "b": "b.csv"},
            "inner_prox": {"kind": "zero"},
            "outer_smooth": {"kind": "zero"},
            "outer_prox": {"kind": "l1", "weight": 1.0},
        }),
        GenKind::Logistic => serde_json::json!({
            "dim": args.cols,
            "inner_smooth": {"kind": "logistic", "A": "A.csv", "z": "z.csv"},
            "inner_prox": {"kind": "zero"},
            "outer_smooth": {"kind": "zero"},
            "outer_prox": {"kind": "l1", "weight": 1.0},
        }),
    };
    write_json(&args.out.join("problem.json"), &problem)?;
    println!(
        "wrote {} ({} x {}, seed {})",
        args.out.display(),
        args.rows,
        args.cols,
        args.seed
    );
    Ok(ExitCode::SUCCESS)
}

fn run_oracle(args: OracleArgs) -> Result<ExitCode> {
    let problem = BilevelProblem::from_spec_file(&args.problem)?;
    let planted = match &args.planted {
        Some(p) => Some(io::read_vector_csv(p)?),
        None => None,
    };
    let opts = match args.long_run_iters {
        Some(n) => OracleOptions { long_run_iters: n },
        None => OracleOptions::default(),
    };
    let report = oracle_for_problem(&problem, planted.as_deref(), &opts)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.display().to_string(),
        source: e,
    })?;
    let path = args.out.join("oracle.json");
    let value = serde_json::to_value(&report).map_err(|e| Error::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    write_json(&path, &value)?;
    for (field, how) in &report.methods {
        println!("{field}: {how}");
    }
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn load_oracle(path: &Path) -> Result<OracleReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn run_solve(args: SolveArgs) -> Result<ExitCode> {
    let problem = BilevelProblem::from_spec_file(&args.problem)?;
    let oracle = match &args.oracle {
        Some(p) => Some(load_oracle(p)?),
        None => None,
    };
    let x0 = match args.x0.as_str() {
        "zeros" => None,
        path => Some(io::read_vector_csv(Path::new(path))?),
    };
    if args.trace_every == 0 {
        return Err(usage("--trace-every must be at least 1"));
    }

    let (trace, offline) = match args.algo {
        Algo::Fbipg => solve_dynamic(&args, &problem, oracle.as_ref(), x0)?,
        Algo::FistaFixed => solve_fixed(&args, &problem, oracle.as_ref(), x0)?,
    };

    std::fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.display().to_string(),
        source: e,
    })?;
    trace.write_csv_file(&args.out.join("trace.csv"))?;

    let last = trace.last();
    let in_run = trace.audit.as_ref();
    let run_json = serde_json::json!({
        "algo": trace.meta.algo,
        "gamma": trace.meta.gamma,
        "a": trace.meta.a,
        "alpha": trace.meta.alpha,
        "K": trace.meta.iters,
        "beta": trace.meta.beta,
        "lifted": trace.meta.lifted,
        "final": {
            "k": last.k,
            "phi": last.phi,
            "phi_gap": last.phi_gap,
            "omega": last.omega,
        },
        "audit": {
            "in_run": in_run.map(|a| serde_json::json!({
                "passes": a.passes,
                "failures": a.failures,
            })),
            "offline": offline,
        },
    });
    write_json(&args.out.join("run.json"), &run_json)?;

    println!(
        "final k={} phi={} omega={}",
        last.k, last.phi, last.omega
    );
    let mut failures = 0;
    if let Some(a) = in_run {
        failures += a.failures.len();
        println!("in-run audit: {} passes, {} failures", a.passes, a.failures.len());
        for f in &a.failures {
            println!("  {f}");
        }
    }
    if let Some(a) = &offline {
        failures += a.failures.len();
        println!(
            "{} audit: {} passes, {} failures",
            a.regime,
            a.passes,
            a.failures.len()
        );
        for f in &a.failures {
            println!("  {f}");
        }
    }
    println!("wrote {}", args.out.display());
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Dynamic-schedule run; audits in-run when asked, and offline against the
/// regime matching the exponent whenever an oracle anchor is available.
fn solve_dynamic(
    args: &SolveArgs,
    problem: &BilevelProblem,
    oracle: Option<&OracleReport>,
    x0: Option<Vec<f64>>,
) -> Result<(IterateTrace, Option<AuditReport>)> {
    let gamma = args
        .gamma
        .ok_or_else(|| usage("--gamma is required for --algo fbipg"))?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(usage(format!("--gamma must be positive and finite, got {gamma}")));
    }
    if args.a < 2 {
        return Err(usage(format!("--a must be an integer >= 2, got {}", args.a)));
    }
    if args.alpha.is_some() {
        return Err(usage("--alpha applies to --algo fista-fixed only"));
    }
    let t_mode: TMode = args
        .t_mode
        .parse()
        .map_err(|_| usage(format!("--t-mode: expected explicit or fista, got {:?}", args.t_mode)))?;
    let lift: LiftMode = args
        .lift
        .parse()
        .map_err(|_| usage(format!("--lift: expected off, auto, or force, got {:?}", args.lift)))?;

    let mut config = FBiPGConfig::new(gamma, args.a, args.iters);
    config.t_mode = t_mode;
    config.lift_mode = lift;
    config.audit = args.audit;
    config.trace_stride = args.trace_every;
    config.seed = args.seed;
    config.x0 = x0;
    let trace = run_fbipg(problem, &config, oracle)?;

    // the offline audit needs anchors and the explicit t sequence
    let offline = match (args.audit, oracle, t_mode) {
        (true, Some(orc), TMode::Explicit) => {
            Some(audit_trace(&trace, problem, orc, Regime::auto(&trace.meta))?)
        }
        _ => None,
    };
    Ok((trace, offline))
}

fn solve_fixed(
    args: &SolveArgs,
    problem: &BilevelProblem,
    oracle: Option<&OracleReport>,
    x0: Option<Vec<f64>>,
) -> Result<(IterateTrace, Option<AuditReport>)> {
    let alpha = args
        .alpha
        .ok_or_else(|| usage("--alpha is required for --algo fista-fixed"))?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(usage(format!("--alpha must be positive and finite, got {alpha}")));
    }
    if args.gamma.is_some() {
        return Err(usage("--gamma applies to --algo fbipg only"));
    }
    let trace = run_fista_fixed(
        problem,
        alpha,
        args.iters,
        args.trace_every,
        x0.as_ref(),
        oracle,
    )?;
    let offline = match (args.audit, oracle) {
        (true, Some(orc)) => Some(audit_trace(&trace, problem, orc, Regime::Fixed)?),
        (true, None) => {
            return Err(usage("--audit with --algo fista-fixed needs --oracle for the anchors"))
        }
        _ => None,
    };
    Ok((trace, offline))
}

fn run_compare(args: CompareArgs) -> Result<ExitCode> {
    let report = run_experiment_file(&args.config)?;
    for run in &report.summary.runs {
        let schedule = match (run.gamma, run.alpha) {
            (Some(g), _) => format!("gamma={g} a={}", run.a.unwrap_or(0)),
            (None, Some(al)) => format!("alpha={al}"),
            (None, None) => String::new(),
        };
        let audit = match &run.audit {
            Some(a) => format!("{} passes, {} failures", a.passes, a.failures.len()),
            None => "not audited".into(),
        };
        println!(
            "{} {} K={}: final_phi_gap={:?} slope={:?} audit: {}",
            run.algo, schedule, run.iters, run.final_phi_gap, run.slope_phi_gap, audit
        );
    }
    for w in &report.summary.warnings {
        println!("warning: {w}");
    }
    println!("wrote {}", report.out_dir.display());
    let failures = report.audit_failure_count();
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failures} audit checks failed");
        ExitCode::from(1)
    })
}
