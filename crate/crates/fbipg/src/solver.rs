//! The accelerated bi-level solver and its fixed-weight baseline.
//!
//! Each iteration takes a momentum point, a gradient step on
//! `f + alpha_k * sigma`, and one combined prox of `g + alpha_k * psi`, all
//! with constant step `1/beta`. The dynamic solver decays
//! `alpha_k = (k + a)^(-gamma)`; the baseline keeps `alpha` fixed and uses the
//! classical momentum recursion.
//!
//! Traces record objective values, gaps against oracle quantities when
//! available, and the bookkeeping sums the rate bounds are stated in. With
//! `audit` enabled the run additionally rechecks the per-iteration and
//! cumulative inequalities that drive the convergence analysis at every
//! recorded step.

use std::io::Write;
use std::path::Path;

use crate::harness::OracleReport;
use crate::linalg::{self, KahanSum, Vector};
use crate::problem::{combined_prox, combined_prox_available, BilevelProblem};
use crate::rates;
use crate::rng;
use crate::{Error, Result};

/// How the momentum sequence `t_k` advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TMode {
    /// `t_k = (k + a)/a`. Default; the rate guarantees are stated for it.
    Explicit,
    /// `t_{k+1} = (1 + sqrt(1 + 4 t_k^2))/2`. Opt-in; inequality auditing is
    /// unavailable because the bookkeeping sequences assume the explicit form.
    FistaRecursion,
}

impl std::str::FromStr for TMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<TMode> {
        match s {
            "explicit" => Ok(TMode::Explicit),
            "fista" => Ok(TMode::FistaRecursion),
            other => Err(Error::InvalidArgument(format!(
                "unknown t mode {other:?}; expected explicit or fista"
            ))),
        }
    }
}

/// Whether to reformulate over stacked `(x, z)` when the combined prox has no
/// closed form for the given `(g, psi)` pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftMode {
    /// Never lift; unavailable pairings are a configuration error.
    Off,
    /// Lift exactly when the pairing has no closed form.
    Auto,
    /// Always lift.
    Force,
}

impl std::str::FromStr for LiftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<LiftMode> {
        match s {
            "off" => Ok(LiftMode::Off),
            "auto" => Ok(LiftMode::Auto),
            "force" => Ok(LiftMode::Force),
            other => Err(Error::InvalidArgument(format!(
                "unknown lift mode {other:?}; expected off, auto, or force"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FBiPGConfig {
    /// Decay exponent of `alpha_k = (k + a)^(-gamma)`; must be positive.
    pub gamma: f64,
    /// Offset `a >= 2` in the decay schedule and the explicit `t_k`.
    pub a: u32,
    pub t_mode: TMode,
    /// Number of iterations `K`.
    pub iters: usize,
    /// Record every this many iterations (0 and K are always recorded).
    pub trace_stride: usize,
    pub lift_mode: LiftMode,
    /// Recheck the supporting inequalities at every recorded step.
    pub audit: bool,
    /// Seed for audit probe points.
    pub seed: u64,
    /// Starting point; zeros when absent.
    pub x0: Option<Vector>,
    /// Keep a copy of the iterate in each record (O(n) per record).
    pub keep_iterates: bool,
}

impl FBiPGConfig {
    pub fn new(gamma: f64, a: u32, iters: usize) -> Self {
        Self {
            gamma,
            a,
            t_mode: TMode::Explicit,
            iters,
            trace_stride: 1,
            lift_mode: LiftMode::Auto,
            audit: false,
            seed: 0,
            x0: None,
            keep_iterates: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config("gamma must be positive and finite".into()));
        }
        if self.a < 2 {
            return Err(Error::Config("a must be an integer >= 2".into()));
        }
        if self.trace_stride == 0 {
            return Err(Error::Config("trace_stride must be at least 1".into()));
        }
        if self.audit && self.t_mode == TMode::FistaRecursion {
            return Err(Error::Config(
                "inequality auditing requires the explicit t sequence".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded iteration. Optional entries are written as empty CSV fields:
/// gap metrics need the corresponding oracle value, the ergodic metrics are
/// tracked only for `gamma = 1` runs, and `omega_best` starts at `k = 1`.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub k: usize,
    pub alpha_k: f64,
    pub t_k: f64,
    pub phi: f64,
    pub phi_gap: Option<f64>,
    pub omega: f64,
    /// `min_{1 <= s <= k} omega(x^s)`; the start point is deliberately excluded.
    pub omega_best: Option<f64>,
    pub omega_ergodic: Option<f64>,
    pub omega_tilde: Option<f64>,
    /// `F_{k-1}(x^k) - F_{k-1}(x')` against the oracle anchor.
    pub f_k_gap: Option<f64>,
    pub step_norm: f64,
    /// Running `sum_{s <= k} t_{s-1} * ||x^s - x^{s-1}||^2 / 2`.
    pub tdelta_sum: f64,
    /// `||x^k - x'||^2 / 2`.
    pub mu_k: Option<f64>,
    /// Inner value at the better of `x^k` and the ergodic average (in-memory
    /// only; not a CSV column).
    pub phi_tilde: Option<f64>,
    /// Iterate snapshot when `keep_iterates` is set (not a CSV column).
    pub x: Option<Vector>,
}

/// Echo of the run configuration, carried by the trace for reporting.
#[derive(Debug, Clone)]
pub struct TraceMeta {
    pub algo: String,
    pub gamma: Option<f64>,
    pub a: Option<u32>,
    pub alpha: Option<f64>,
    pub iters: usize,
    pub beta: f64,
    pub lifted: bool,
}

/// The audited check with the least slack, kept for reporting.
#[derive(Debug, Clone)]
pub struct WorstCheck {
    pub label: String,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of in-run inequality auditing.
#[derive(Debug, Clone, Default)]
pub struct RunAudit {
    pub passes: usize,
    pub failures: Vec<String>,
    pub worst: Option<WorstCheck>,
}

#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub records: Vec<TraceRecord>,
    pub final_x: Vector,
    pub final_k: usize,
    pub meta: TraceMeta,
    pub audit: Option<RunAudit>,
}

pub const TRACE_HEADER: &str =
    "k,alpha_k,t_k,phi,phi_gap,omega,omega_best,omega_ergodic,omega_tilde,F_k_gap,step_norm,tdelta_sum,mu_k";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

impl IterateTrace {
    /// Write the trace as CSV with the fixed header; floats use the shortest
    /// round-trip decimal form and absent metrics become empty fields.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.k,
                r.alpha_k,
                r.t_k,
                r.phi,
                fmt_opt(r.phi_gap),
                r.omega,
                fmt_opt(r.omega_best),
                fmt_opt(r.omega_ergodic),
                fmt_opt(r.omega_tilde),
                fmt_opt(r.f_k_gap),
                r.step_norm,
                r.tdelta_sum,
                fmt_opt(r.mu_k),
            )?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Recorded `(k, value)` pairs for one named metric, skipping records
    /// where it is absent. Metric names match the CSV columns plus
    /// `phi_tilde`.
    pub fn metric_points(&self, metric: &str) -> Result<Vec<(usize, f64)>> {
        let pick = |r: &TraceRecord| -> Option<f64> {
            match metric {
                "alpha_k" => Some(r.alpha_k),
                "t_k" => Some(r.t_k),
                "phi" => Some(r.phi),
                "phi_gap" => r.phi_gap,
                "omega" => Some(r.omega),
                "omega_best" => r.omega_best,
                "omega_ergodic" => r.omega_ergodic,
                "omega_tilde" => r.omega_tilde,
                "F_k_gap" => r.f_k_gap,
                "step_norm" => Some(r.step_norm),
                "tdelta_sum" => Some(r.tdelta_sum),
                "mu_k" => r.mu_k,
                "phi_tilde" => r.phi_tilde,
                _ => None,
            }
        };
        if !matches!(
            metric,
            "alpha_k"
                | "t_k"
                | "phi"
                | "phi_gap"
                | "omega"
                | "omega_best"
                | "omega_ergodic"
                | "omega_tilde"
                | "F_k_gap"
                | "step_norm"
                | "tdelta_sum"
                | "mu_k"
                | "phi_tilde"
        ) {
            return Err(Error::InvalidArgument(format!(
                "unknown trace metric {metric:?}"
            )));
        }
        Ok(self
            .records
            .iter()
            .filter_map(|r| pick(r).map(|v| (r.k, v)))
            .collect())
    }

    /// The last record (always present; `k = 0` is recorded even for `K = 0`).
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace always has the k=0 record")
    }
}

/// `y^k = x^k + ((t_{k-1} - 1)/t_k)(x^k - x^{k-1})`; reduces to `x_k` when
/// `t_prev = 1` or the iterates coincide.
pub fn momentum_point(x_k: &[f64], x_prev: &[f64], t_k: f64, t_prev: f64) -> Vector {
    assert!(t_k >= 1.0, "momentum denominator t_k must be >= 1");
    let lambda = (t_prev - 1.0) / t_k;
    x_k.iter()
        .zip(x_prev)
        .map(|(xk, xp)| xk + lambda * (xk - xp))
        .collect()
}

/// Apply `lift_mode`, returning the problem to run on, an oracle adapted to
/// it, and whether lifting happened.
pub fn maybe_lift(
    problem: &BilevelProblem,
    oracle: Option<&OracleReport>,
    mode: LiftMode,
) -> Result<(BilevelProblem, Option<OracleReport>, bool)> {
    let available = combined_prox_available(problem.g(), problem.psi());
    let lift_now = match mode {
        LiftMode::Off => {
            if !available {
                return Err(Error::Config(
                    "no closed-form combined prox for this (g, psi) pairing; \
                     set lift_mode to auto or force to solve the lifted reformulation"
                        .into(),
                ));
            }
            false
        }
        LiftMode::Auto => !available,
        LiftMode::Force => true,
    };
    if !lift_now {
        return Ok((problem.clone(), oracle.cloned(), false));
    }
    let lifted = problem.lift()?;
    let adapted = oracle.map(|o| o.for_lifted(problem.sigma().is_zero()));
    Ok((lifted, adapted, true))
}

enum Schedule {
    Dynamic { gamma: f64, a: u32, t_mode: TMode },
    Fixed { alpha: f64 },
}

impl Schedule {
    fn alpha(&self, k: usize) -> f64 {
        match self {
            Schedule::Dynamic { gamma, a, .. } => rates::alpha_k(k as i64, *a, *gamma),
            Schedule::Fixed { alpha } => *alpha,
        }
    }

    fn t_next(&self, k_next: usize, t_cur: f64) -> f64 {
        match self {
            Schedule::Dynamic {
                a,
                t_mode: TMode::Explicit,
                ..
            } => rates::t_explicit(k_next as i64, *a),
            _ => rates::t_fista_next(t_cur),
        }
    }

    fn tracks_ergodic(&self) -> bool {
        matches!(self, Schedule::Dynamic { gamma, .. } if (*gamma - 1.0).abs() < 1e-12)
    }

    fn explicit_dynamic(&self) -> Option<(f64, u32)> {
        match self {
            Schedule::Dynamic {
                gamma,
                a,
                t_mode: TMode::Explicit,
            } => Some((*gamma, *a)),
            _ => None,
        }
    }
}

struct LoopSpec<'a> {
    problem: &'a BilevelProblem,
    oracle: Option<&'a OracleReport>,
    x0: Vector,
    iters: usize,
    stride: usize,
    schedule: Schedule,
    audit: bool,
    seed: u64,
    keep_iterates: bool,
    meta: TraceMeta,
}

struct AuditCtx {
    passes: usize,
    failures: Vec<String>,
    worst: Option<WorstCheck>,
}

impl AuditCtx {
    fn check_ineq(&mut self, k: usize, label: &str, lhs: f64, rhs: f64) {
        if ineq_holds(lhs, rhs) {
            self.passes += 1;
        } else {
            self.failures
                .push(format!("{label} failed at k = {k}: lhs = {lhs}, rhs = {rhs}"));
        }
        if lhs.is_finite() && rhs.is_finite() {
            let slack = rhs - lhs;
            let replace = match &self.worst {
                Some(w) => slack < w.rhs - w.lhs,
                None => true,
            };
            if replace {
                self.worst = Some(WorstCheck {
                    label: label.to_string(),
                    k,
                    lhs,
                    rhs,
                });
            }
        }
    }

    fn check_custom(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        if ok {
            self.passes += 1;
        } else {
            self.failures.push(detail());
        }
    }
}

/// `lhs <= rhs` up to `1e-8 * (1 + |rhs|)`, treating an infinite rhs (or a
/// degenerate infinite lhs) as a vacuous pass and any NaN as a failure.
pub(crate) fn ineq_holds(lhs: f64, rhs: f64) -> bool {
    if lhs.is_nan() || rhs.is_nan() {
        return false;
    }
    if rhs == f64::INFINITY || lhs == f64::NEG_INFINITY {
        return true;
    }
    lhs <= rhs + 1e-8 * (1.0 + rhs.abs())
}

fn run_loop(spec: LoopSpec<'_>) -> Result<IterateTrace> {
    let p = spec.problem;
    let n = p.dim();
    let beta = p.beta();
    let step = 1.0 / beta;
    let iters = spec.iters;
    let stride = spec.stride;
    let recorded = |m: usize| m.is_multiple_of(stride) || m == iters;

    let x0 = spec.x0;
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    linalg::all_finite(&x0)
        .then_some(())
        .ok_or_else(|| Error::Numerical("starting point has non-finite entries".into()))?;

    let x_prime = spec.oracle.and_then(|o| o.x_prime.clone());
    if let Some(xp) = &x_prime {
        if xp.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: xp.len(),
            });
        }
    }
    let phi_star = spec.oracle.and_then(|o| o.phi_star);
    let omega_star = spec.oracle.and_then(|o| o.omega_star_inf);
    let omega_xprime = match &x_prime {
        Some(xp) => Some(p.outer_value(xp)?),
        None => None,
    };
    let r2 = x_prime
        .as_ref()
        .map(|xp| linalg::norm_sq(&linalg::sub(&x0, xp)));

    // Probe points standing in for the "for all x" in the per-step estimate.
    let probes: Vec<Vector> = if spec.audit {
        let mut r = rng::component_rng(spec.seed, "prop2-probes");
        let scale = r2.map(f64::sqrt).filter(|s| *s > 0.0).unwrap_or(1.0);
        (0..5)
            .map(|_| linalg::scale(&rng::normal_vec(&mut r, n), scale))
            .collect()
    } else {
        Vec::new()
    };
    let mut audit_ctx = spec.audit.then(|| AuditCtx {
        passes: 0,
        failures: Vec::new(),
        worst: None,
    });

    let mut x_prev = x0.clone();
    let mut x_k = x0.clone();
    // t_0 = 1 for both schedules; the k=0 momentum direction is zero, so the
    // t_prev seed value never matters.
    let mut t_prev = 1.0_f64;
    let mut t_k = 1.0_f64;

    let mut tdelta = KahanSum::new();
    let mut ergodic: Vector = vec![0.0; n];
    let mut omega_best: Option<f64> = None;
    let mut sum_eta_omega = KahanSum::new();
    let mut sum_eta = KahanSum::new();
    let mut sum_alpha_t = KahanSum::new();

    let track_ergodic = spec.schedule.tracks_ergodic();
    let mut records: Vec<TraceRecord> = Vec::new();

    let mut push_record = |m: usize,
                           t_m: f64,
                           alpha_prev: f64,
                           x_m: &Vector,
                           step_norm: f64,
                           tdelta_v: f64,
                           omega_m: f64,
                           omega_best: Option<f64>,
                           ergodic: &Vector,
                           audit_ctx: &mut Option<AuditCtx>|
     -> Result<()> {
        let phi = p.inner_value(x_m)?;
        let alpha_m = spec.schedule.alpha(m);
        let phi_gap = phi_star.map(|s| phi - s);
        let f_k_gap = match &x_prime {
            Some(xp) => Some(
                p.regularized_value(x_m, alpha_prev)? - p.regularized_value(xp, alpha_prev)?,
            ),
            None => None,
        };
        let mu_k = x_prime
            .as_ref()
            .map(|xp| 0.5 * linalg::norm_sq(&linalg::sub(x_m, xp)));
        let (mut omega_ergodic, mut omega_tilde, mut phi_tilde) = (None, None, None);
        if track_ergodic && m >= 1 {
            let avg = linalg::scale(ergodic, 1.0 / m as f64);
            let w_avg = p.outer_value(&avg)?;
            omega_ergodic = Some(w_avg);
            if w_avg < omega_m {
                omega_tilde = Some(w_avg);
                phi_tilde = Some(p.inner_value(&avg)?);
            } else {
                omega_tilde = Some(omega_m);
                phi_tilde = Some(phi);
            }
        }
        if let (Some(ctx), Some(star)) = (audit_ctx.as_mut(), phi_star) {
            ctx.check_custom(phi >= star - 1e-9 * (1.0 + star.abs()), || {
                format!("phi({m}) = {phi} fell below the oracle optimum {star}")
            });
        }
        records.push(TraceRecord {
            k: m,
            alpha_k: alpha_m,
            t_k: t_m,
            phi,
            phi_gap,
            omega: omega_m,
            omega_best,
            omega_ergodic,
            omega_tilde,
            f_k_gap,
            step_norm,
            tdelta_sum: tdelta_v,
            mu_k,
            phi_tilde,
            x: spec.keep_iterates.then(|| x_m.clone()),
        });
        Ok(())
    };

    let omega_0 = p.outer_value(&x_k)?;
    push_record(
        0,
        t_k,
        0.0, // alpha_{-1} = 0: the k=0 gap is measured on the plain inner objective
        &x_k,
        0.0,
        0.0,
        omega_0,
        None,
        &ergodic,
        &mut audit_ctx,
    )?;

    for k in 0..iters {
        let alpha_k = spec.schedule.alpha(k);
        let y = momentum_point(&x_k, &x_prev, t_k, t_prev);
        let mut grad = p.f().gradient(&y)?;
        if !p.sigma().is_zero() {
            let gs = p.sigma().gradient(&y)?;
            for (gi, si) in grad.iter_mut().zip(&gs) {
                *gi += alpha_k * si;
            }
        }
        let v = linalg::add_scaled(&y, -step, &grad);
        let x_next = combined_prox(p.g(), p.psi(), alpha_k, &v, step)?;
        if !linalg::all_finite(&x_next) {
            return Err(Error::Numerical(format!(
                "non-finite iterate at k = {}",
                k + 1
            )));
        }

        let t_next = spec.schedule.t_next(k + 1, t_k);
        // the analysis needs t_k^2 - t_k <= t_{k-1}^2 at every step
        let d = t_k * t_k - (t_next * t_next - t_next);
        assert!(
            d >= -1e-9 * (1.0 + t_next * t_next),
            "t sequence violated its defining inequality at k = {k}"
        );

        // Per-step estimate around the regularized objective F_k, tested at
        // the fixed probe points.
        if let Some(ctx) = audit_ctx.as_mut() {
            if recorded(k) {
                let f_k = |x: &[f64]| p.regularized_value(x, alpha_k);
                let fk_next = f_k(&x_next)?;
                let fk_cur = f_k(&x_k)?;
                let z_k: Vector = x_prev
                    .iter()
                    .zip(&x_k)
                    .map(|(xp, xc)| (1.0 - t_prev) * xp + t_prev * xc)
                    .collect();
                let z_next: Vector = x_k
                    .iter()
                    .zip(&x_next)
                    .map(|(xc, xn)| (1.0 - t_k) * xc + t_k * xn)
                    .collect();
                for probe in &probes {
                    let fp = f_k(probe)?;
                    if !fp.is_finite() {
                        ctx.passes += 1;
                        continue;
                    }
                    let lhs = t_k * t_k * (fk_next - fp)
                        + 0.5 * beta * linalg::norm_sq(&linalg::sub(&z_next, probe));
                    let rhs = (t_k * t_k - t_k) * (fk_cur - fp)
                        + 0.5 * beta * linalg::norm_sq(&linalg::sub(&z_k, probe));
                    ctx.check_ineq(k, "per-step estimate", lhs, rhs);
                }
            }
        }

        let delta_next = 0.5 * linalg::norm_sq(&linalg::sub(&x_next, &x_k));
        tdelta.add(t_k * delta_next);
        sum_alpha_t.add(alpha_k * t_k);

        let step_norm = (2.0 * delta_next).sqrt();
        x_prev = std::mem::replace(&mut x_k, x_next);
        t_prev = t_k;
        t_k = t_next;
        let m = k + 1;

        let omega_m = p.outer_value(&x_k)?;
        omega_best = Some(match omega_best {
            Some(b) => b.min(omega_m),
            None => omega_m,
        });
        if track_ergodic {
            for (e, xi) in ergodic.iter_mut().zip(&x_k) {
                *e += xi;
            }
        }

        // Cumulative estimates at the oracle anchor; the running sums hold
        // terms s <= m-1 at this point, exactly what both bounds reference.
        if let (Some(ctx), Some(xp), Some(w_xp), Some(r2v)) =
            (audit_ctx.as_mut(), &x_prime, omega_xprime, r2)
        {
            if recorded(m) {
                let lhs3 = t_prev * t_prev
                    * (p.regularized_value(&x_k, alpha_k)? - p.regularized_value(xp, alpha_k)?);
                let rhs3 =
                    0.5 * beta * r2v - (sum_eta_omega.value() - sum_eta.value() * w_xp);
                ctx.check_ineq(m, "cumulative regularized estimate", lhs3, rhs3);
                if let Some(w_star) = omega_star {
                    let lhs4 =
                        t_prev * t_prev * (p.inner_value(&x_k)? - p.inner_value(xp)?);
                    let rhs4 = 0.5 * beta * r2v + (w_xp - w_star) * sum_alpha_t.value();
                    ctx.check_ineq(m, "cumulative inner estimate", lhs4, rhs4);
                }
            }
        }
        if let Some((gamma, a)) = spec.schedule.explicit_dynamic() {
            let eta_m = rates::eta_k(m as i64, a, gamma);
            sum_eta.add(eta_m);
            sum_eta_omega.add(eta_m * omega_m);
        }

        if recorded(m) {
            push_record(
                m,
                t_k,
                alpha_k,
                &x_k,
                step_norm,
                tdelta.value(),
                omega_m,
                omega_best,
                &ergodic,
                &mut audit_ctx,
            )?;
        }
    }

    Ok(IterateTrace {
        final_x: x_k,
        final_k: iters,
        records,
        meta: spec.meta,
        audit: audit_ctx.map(|c| RunAudit {
            passes: c.passes,
            failures: c.failures,
            worst: c.worst,
        }),
    })
}

fn resolve_x0(x0: Option<&Vector>, dim: usize, lifted: bool) -> Result<Vector> {
    match x0 {
        None => Ok(vec![0.0; dim]),
        Some(v) if v.len() == dim => Ok(v.clone()),
        // a starting point given in original coordinates maps to the diagonal
        Some(v) if lifted && v.len() * 2 == dim => {
            let mut w = v.clone();
            w.extend_from_slice(v);
            Ok(w)
        }
        Some(v) => Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        }),
    }
}

/// Run the dynamic solver for `config.iters` iterations from `x0` (zeros by
/// default), lifting first according to `config.lift_mode`. The oracle, when
/// given, enables gap metrics and the cumulative inequality audits; it is
/// adapted automatically if the problem is lifted.
pub fn run_fbipg(
    problem: &BilevelProblem,
    config: &FBiPGConfig,
    oracle: Option<&OracleReport>,
) -> Result<IterateTrace> {
    config.validate()?;
    let (p, adapted, lifted) = maybe_lift(problem, oracle, config.lift_mode)?;
    let x0 = resolve_x0(config.x0.as_ref(), p.dim(), lifted)?;
    let meta = TraceMeta {
        algo: "fbipg".into(),
        gamma: Some(config.gamma),
        a: Some(config.a),
        alpha: None,
        iters: config.iters,
        beta: p.beta(),
        lifted,
    };
    run_loop(LoopSpec {
        problem: &p,
        oracle: adapted.as_ref(),
        x0,
        iters: config.iters,
        stride: config.trace_stride,
        schedule: Schedule::Dynamic {
            gamma: config.gamma,
            a: config.a,
            t_mode: config.t_mode,
        },
        audit: config.audit,
        seed: config.seed,
        keep_iterates: config.keep_iterates,
        meta,
    })
}

/// Classical accelerated proximal gradient on the fixed regularized objective
/// `phi + alpha * omega`, with the momentum recursion and step `1/beta`.
/// Shares the trace schema with the dynamic solver. The problem must already
/// be in a form whose combined prox exists (lift first otherwise).
pub fn run_fista_fixed(
    problem: &BilevelProblem,
    alpha: f64,
    iters: usize,
    trace_stride: usize,
    x0: Option<&Vector>,
    oracle: Option<&OracleReport>,
) -> Result<IterateTrace> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(
            "fixed regularization weight alpha must be positive and finite".into(),
        ));
    }
    if trace_stride == 0 {
        return Err(Error::Config("trace_stride must be at least 1".into()));
    }
    if !combined_prox_available(problem.g(), problem.psi()) {
        return Err(Error::Config(
            "no closed-form combined prox for this (g, psi) pairing; \
             lift the problem before running the fixed-weight baseline"
                .into(),
        ));
    }
    let x0 = resolve_x0(x0, problem.dim(), problem.is_lifted())?;
    let meta = TraceMeta {
        algo: "fista-fixed".into(),
        gamma: None,
        a: None,
        alpha: Some(alpha),
        iters,
        beta: problem.beta(),
        lifted: problem.is_lifted(),
    };
    run_loop(LoopSpec {
        problem,
        oracle,
        x0,
        iters,
        stride: trace_stride,
        schedule: Schedule::Fixed { alpha },
        audit: false,
        seed: 0,
        keep_iterates: false,
        meta,
    })
}
