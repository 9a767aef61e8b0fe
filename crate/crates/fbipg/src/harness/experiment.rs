//! Experiment orchestration: load a problem, compute its oracles once, run a
//! list of solver configurations, and write one trace CSV per run plus a
//! `summary.json` with oracle values, final gaps, fitted slopes, audits, and
//! the digits-versus-omega series for plotting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::audit::{audit_trace, AuditReport, Regime};
use crate::harness::oracle::{oracle_for_problem, OracleOptions, OracleReport};
use crate::io;
use crate::problem::BilevelProblem;
use crate::rates;
use crate::solver::{
    maybe_lift, run_fbipg, run_fista_fixed, FBiPGConfig, IterateTrace, LiftMode,
};
use crate::{Error, Result};

fn default_stride() -> usize {
    1
}

/// One solver invocation inside an experiment. `algo` is `fbipg` (needs
/// `gamma`, optional `a`) or `fista-fixed` (needs `alpha`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub algo: String,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub a: Option<u32>,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub iters: usize,
    #[serde(default = "default_stride")]
    pub trace_stride: usize,
    /// Recheck the per-iteration estimates during the run.
    #[serde(default)]
    pub audit: bool,
    #[serde(default)]
    pub t_mode: Option<String>,
    #[serde(default)]
    pub lift: Option<String>,
}

/// A full experiment: one problem, one oracle pass, many runs. Relative
/// paths resolve against the directory of the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Path to the problem JSON file.
    pub problem: String,
    pub out_dir: String,
    /// Optional CSV with a known outer-optimal point for instances beyond
    /// enumeration size; used only if its optimality certificate validates.
    #[serde(default)]
    pub planted: Option<String>,
    /// Seed for audit probe points.
    #[serde(default)]
    pub seed: u64,
    /// Run the configured solvers in worker threads.
    #[serde(default)]
    pub parallel: bool,
    /// Override the long reference run length of the fallback inner oracle.
    #[serde(default)]
    pub long_run_iters: Option<usize>,
    pub runs: Vec<RunSpec>,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub algo: String,
    pub gamma: Option<f64>,
    pub a: Option<u32>,
    pub alpha: Option<f64>,
    #[serde(rename = "K")]
    pub iters: usize,
    pub final_phi_gap: Option<f64>,
    pub final_omega: f64,
    pub slope_phi_gap: Option<f64>,
    pub audit: Option<AuditReport>,
    /// Cummax-filtered `(-log10 inner gap, omega)` pairs; the first
    /// coordinate is strictly increasing.
    pub digits_vs_omega: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub phi_star: Option<f64>,
    pub omega_star_inf: Option<f64>,
    pub x_prime: Option<Vec<f64>>,
    pub omega_xprime: Option<f64>,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    pub beta: f64,
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    pub runs: Vec<RunSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub summary: Summary,
    pub trace_paths: Vec<PathBuf>,
}

impl ExperimentReport {
    /// Total failed checks across every run's audit.
    pub fn audit_failure_count(&self) -> usize {
        self.summary
            .runs
            .iter()
            .filter_map(|r| r.audit.as_ref())
            .map(|a| a.failures.len())
            .sum()
    }
}

struct RunOutcome {
    trace: IterateTrace,
    audit: Option<AuditReport>,
    warnings: Vec<String>,
}

fn execute_run(
    index: usize,
    problem: &BilevelProblem,
    oracle: &OracleReport,
    spec: &RunSpec,
    seed: u64,
) -> Result<RunOutcome> {
    let mut warnings = Vec::new();
    let lift_mode = match &spec.lift {
        Some(s) => s.parse::<LiftMode>()?,
        None => LiftMode::Auto,
    };

    let (trace, run_problem, run_oracle) = match spec.algo.as_str() {
        "fbipg" => {
            let gamma = spec.gamma.ok_or_else(|| {
                Error::Config(format!("run {index}: fbipg runs need gamma"))
            })?;
            let mut cfg = FBiPGConfig::new(gamma, spec.a.unwrap_or(2), spec.iters);
            cfg.trace_stride = spec.trace_stride;
            cfg.audit = spec.audit;
            cfg.seed = seed;
            cfg.lift_mode = lift_mode;
            if let Some(t) = &spec.t_mode {
                cfg.t_mode = t.parse()?;
            }
            let trace = run_fbipg(problem, &cfg, Some(oracle))?;
            // re-derive the problem/oracle the run actually used so the
            // offline audit measures against the same objects
            let (p, o, _) = maybe_lift(problem, Some(oracle), cfg.lift_mode)?;
            (trace, p, o)
        }
        "fista-fixed" => {
            let alpha = spec.alpha.ok_or_else(|| {
                Error::Config(format!("run {index}: fista-fixed runs need alpha"))
            })?;
            let (p, o, _) = maybe_lift(problem, Some(oracle), lift_mode)?;
            let trace =
                run_fista_fixed(&p, alpha, spec.iters, spec.trace_stride, None, o.as_ref())?;
            (trace, p, o)
        }
        other => {
            return Err(Error::Config(format!(
                "run {index}: unknown algorithm {other:?}; expected fbipg or fista-fixed"
            )))
        }
    };

    let run_oracle = run_oracle.expect("an oracle was passed in");
    let mut audit = match audit_trace(
        &trace,
        &run_problem,
        &run_oracle,
        Regime::auto(&trace.meta),
    ) {
        Ok(rep) => Some(rep),
        Err(e) => {
            warnings.push(format!(
                "run {index} ({}): rate audit skipped: {e}",
                spec.algo
            ));
            None
        }
    };
    // fold the in-run estimate checks into the same report
    if let Some(run_audit) = &trace.audit {
        match &mut audit {
            Some(rep) => {
                rep.passes += run_audit.passes;
                rep.failures.extend(run_audit.failures.iter().cloned());
            }
            None => {
                audit = Some(AuditReport {
                    regime: Regime::auto(&trace.meta).as_str().to_string(),
                    passes: run_audit.passes,
                    failures: run_audit.failures.clone(),
                    worst: Default::default(),
                });
            }
        }
    }

    Ok(RunOutcome {
        trace,
        audit,
        warnings,
    })
}

/// `(-log10 gap, omega)` pairs filtered so the digit count strictly
/// increases, which makes the series a well-formed plot curve.
fn digits_vs_omega(trace: &IterateTrace) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for r in trace.records.iter().filter(|r| r.k >= 1) {
        let Some(gap) = r.phi_gap else { continue };
        if !(gap > 0.0) {
            continue;
        }
        let digits = -gap.log10();
        if digits > best {
            best = digits;
            out.push([digits, r.omega]);
        }
    }
    out
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Run every configured solver against the problem, writing
/// `run{i}_{algo}.csv` per run and `summary.json` into the output directory.
/// Deterministic: identical config and inputs give byte-identical outputs,
/// with or without `parallel`.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    if config.runs.is_empty() {
        return Err(Error::Config("an experiment needs at least one run".into()));
    }
    let problem = BilevelProblem::from_spec_file(&resolve(base_dir, &config.problem))?;
    let planted = match &config.planted {
        Some(rel) => Some(io::read_vector_csv(&resolve(base_dir, rel))?),
        None => None,
    };
    let opts = match config.long_run_iters {
        Some(n) => OracleOptions { long_run_iters: n },
        None => OracleOptions::default(),
    };
    let oracle = oracle_for_problem(&problem, planted.as_deref(), &opts)?;

    let mut warnings = Vec::new();
    if oracle.phi_star.is_none() {
        warnings.push("inner optimal value unavailable: inner gap metrics omitted".to_string());
    }
    if oracle.x_prime.is_none() {
        warnings.push(
            "outer-optimal anchor unavailable: outer gap metrics and rate audits omitted"
                .to_string(),
        );
    }

    let out_dir = resolve(base_dir, &config.out_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let outcomes: Vec<Result<RunOutcome>> = if config.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = config
                .runs
                .iter()
                .enumerate()
                .map(|(i, spec)| {
                    let problem = &problem;
                    let oracle = &oracle;
                    s.spawn(move || execute_run(i, problem, oracle, spec, config.seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join().unwrap_or_else(|_| {
                        Err(Error::Numerical("experiment worker thread panicked".into()))
                    })
                })
                .collect()
        })
    } else {
        config
            .runs
            .iter()
            .enumerate()
            .map(|(i, spec)| execute_run(i, &problem, &oracle, spec, config.seed))
            .collect()
    };

    let mut run_summaries = Vec::with_capacity(config.runs.len());
    let mut trace_paths = Vec::with_capacity(config.runs.len());
    for (i, (spec, outcome)) in config.runs.iter().zip(outcomes).enumerate() {
        let outcome = outcome?;
        warnings.extend(outcome.warnings);

        let path = out_dir.join(format!("run{i}_{}.csv", spec.algo));
        outcome.trace.write_csv_file(&path)?;

        let iters = outcome.trace.final_k;
        let slope_phi_gap = match rates::fit_loglog_slope(
            &outcome.trace,
            "phi_gap",
            (iters / 100).max(10),
            iters,
        ) {
            Ok(s) => Some(s),
            Err(e) => {
                warnings.push(format!("run {i} ({}): slope unavailable: {e}", spec.algo));
                None
            }
        };
        let last = outcome.trace.last();
        run_summaries.push(RunSummary {
            algo: spec.algo.clone(),
            gamma: outcome.trace.meta.gamma,
            a: outcome.trace.meta.a,
            alpha: outcome.trace.meta.alpha,
            iters,
            final_phi_gap: last.phi_gap,
            final_omega: last.omega,
            slope_phi_gap,
            audit: outcome.audit,
            digits_vs_omega: digits_vs_omega(&outcome.trace),
        });
        trace_paths.push(path);
    }

    let summary = Summary {
        phi_star: oracle.phi_star,
        omega_star_inf: oracle.omega_star_inf,
        x_prime: oracle.x_prime.clone(),
        omega_xprime: oracle.omega_xprime,
        tau: oracle.tau,
        rho: oracle.rho,
        beta: problem.beta(),
        r2: oracle.r2,
        runs: run_summaries,
        warnings,
    };
    let path = out_dir.join("summary.json");
    let mut bytes = serde_json::to_vec_pretty(&summary)
        .map_err(|e| Error::Json {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;

    Ok(ExperimentReport {
        out_dir,
        summary,
        trace_paths,
    })
}

/// Load a config file and run it; relative paths inside the file resolve
/// against its parent directory.
pub fn run_experiment_file(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    run_experiment(&config, base)
}
