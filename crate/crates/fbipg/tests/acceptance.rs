//! Acceptance gate: ten numbered criteria covering the rate guarantees, the
//! audit machinery, the fixed-weight baseline, pointwise convergence, the
//! schedule lemmas, and the lifting path. Each test prints exactly one
//! `PASS ACn` or `FAIL ACn` line (visible with `--nocapture`) and fails on
//! any violation.
//!
//! Bound comparisons use the shared tolerance `1e-8 * (1 + bound)`.

use std::time::Instant;

use fbipg::functions::{ProxFunction, SmoothFunction};
use fbipg::harness::{
    audit_trace, gen_least_squares, gen_logistic, oracle_for_problem, pointwise_diagnostics,
    OracleOptions, OracleReport, Regime,
};
use fbipg::linalg;
use fbipg::problem::BilevelProblem;
use fbipg::rates::{self, RateParams};
use fbipg::solver::{
    run_fbipg, run_fista_fixed, FBiPGConfig, IterateTrace, LiftMode, TraceRecord,
};
use fbipg::Vector;

fn tol(bound: f64) -> f64 {
    1e-8 * (1.0 + bound.abs())
}

/// Print the single verdict line for a criterion and hand back the outcome.
fn verdict(id: &str, ok: bool, detail: &str) -> bool {
    println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

/// Least-squares instance with a plain inner problem and an l1 outer target.
fn ls_instance(rows: usize, cols: usize, seed: u64, sparsity: usize) -> (BilevelProblem, Vector) {
    let d = gen_least_squares(rows, cols, seed, true, sparsity).unwrap();
    let f = SmoothFunction::least_squares(d.a.clone(), d.b.clone()).unwrap();
    let p = BilevelProblem::new(
        f,
        ProxFunction::Zero,
        SmoothFunction::zero(),
        ProxFunction::l1(1.0).unwrap(),
        cols,
    )
    .unwrap();
    (p, d.x_planted.unwrap())
}

fn rate_params(trace: &IterateTrace, oracle: &OracleReport, gamma: f64, a: u32) -> RateParams {
    let r2 = oracle
        .r2
        .or_else(|| oracle.x_prime.as_ref().map(|xp| linalg::norm_sq(xp)))
        .expect("anchor point available");
    RateParams {
        a,
        gamma,
        beta: trace.meta.beta,
        r2,
        delta_omega: oracle.delta_omega().expect("outer anchors available"),
        tau: oracle.tau,
        rho: oracle.rho,
    }
}

struct Sweep {
    checked: usize,
    violations: usize,
    /// Smallest `rhs + tol - lhs` seen; negative means a violation.
    worst_margin: f64,
    worst_k: usize,
}

/// Check `lhs <= rhs + tol(rhs)` at every record the extractor covers.
fn sweep<F>(records: &[TraceRecord], mut pair: F) -> Sweep
where
    F: FnMut(&TraceRecord) -> Option<(f64, f64)>,
{
    let mut s = Sweep {
        checked: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        worst_k: 0,
    };
    for r in records {
        if let Some((lhs, rhs)) = pair(r) {
            s.checked += 1;
            let margin = rhs + tol(rhs) - lhs;
            if margin < s.worst_margin {
                s.worst_margin = margin;
                s.worst_k = r.k;
            }
            if margin < 0.0 {
                s.violations += 1;
            }
        }
    }
    s
}

#[test]
fn ac01_inner_gap_obeys_the_fast_decay_envelope() {
    let start = Instant::now();
    let (problem, plant) = ls_instance(40, 60, 7, 5);
    let oracle = oracle_for_problem(&problem, Some(&plant), &OracleOptions::default()).unwrap();
    let trace = run_fbipg(&problem, &FBiPGConfig::new(3.0, 2, 10_000), Some(&oracle)).unwrap();

    let params = rate_params(&trace, &oracle, 3.0, 2);
    let sw = sweep(&trace.records, |r| {
        if r.k == 0 {
            return None;
        }
        let bound = rates::inner_bound_fast(r.k as i64, &params).unwrap();
        Some((r.phi_gap.unwrap(), bound))
    });
    let slope = rates::fit_loglog_slope(&trace, "phi_gap", 100, 10_000).unwrap_or(f64::NAN);
    let offline = audit_trace(&trace, &problem, &oracle, Regime::Fast).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let ok = sw.violations == 0
        && sw.checked == 10_000
        && slope <= -1.8
        && offline.failures.is_empty()
        && secs < 60.0;
    let ok = verdict(
        "AC1",
        ok,
        &format!(
            "inner gap within the fast-decay bound at all {} recorded steps \
             (worst margin {:.3e} at k = {}), log-log slope {:.3} <= -1.8, \
             audit failures {}, {:.1}s < 60s",
            sw.checked,
            sw.worst_margin,
            sw.worst_k,
            slope,
            offline.failures.len(),
            secs
        ),
    );
    assert!(ok);
}

#[test]
fn ac02_inner_gap_obeys_the_slow_decay_bound() {
    let (problem, plant) = ls_instance(40, 60, 7, 5);
    let oracle = oracle_for_problem(&problem, Some(&plant), &OracleOptions::default()).unwrap();

    let mut ok = true;
    let mut parts = Vec::new();
    for gamma in [1.3, 1.5] {
        let trace =
            run_fbipg(&problem, &FBiPGConfig::new(gamma, 2, 10_000), Some(&oracle)).unwrap();
        let params = rate_params(&trace, &oracle, gamma, 2);
        let sw = sweep(&trace.records, |r| {
            if r.k == 0 {
                return None;
            }
            Some((r.phi_gap.unwrap(), rates::inner_bound(r.k as i64, &params)))
        });
        let offline = audit_trace(&trace, &problem, &oracle, Regime::Sub2).unwrap();
        ok &= sw.violations == 0 && sw.checked == 10_000 && offline.failures.is_empty();
        parts.push(format!(
            "gamma = {gamma}: {} steps, worst margin {:.3e} at k = {}, audit failures {}",
            sw.checked,
            sw.worst_margin,
            sw.worst_k,
            offline.failures.len()
        ));
    }
    let ok = verdict(
        "AC2",
        ok,
        &format!("inner gap within the slow-decay bound; {}", parts.join("; ")),
    );
    assert!(ok);
}

#[test]
fn ac03_best_iterate_outer_gap_is_bounded() {
    let (problem, _) = ls_instance(8, 12, 7, 3);
    let oracle = oracle_for_problem(&problem, None, &OracleOptions::default()).unwrap();
    let omega_xprime = oracle.omega_xprime.unwrap();

    let trace = run_fbipg(&problem, &FBiPGConfig::new(1.5, 2, 10_000), Some(&oracle)).unwrap();
    let params = rate_params(&trace, &oracle, 1.5, 2);
    let sw = sweep(&trace.records, |r| {
        let best = r.omega_best?;
        let bound = rates::outer_bound(r.k as i64, &params).unwrap();
        Some((best - omega_xprime, bound))
    });
    let offline = audit_trace(&trace, &problem, &oracle, Regime::Sub2).unwrap();

    let ok = sw.violations == 0 && sw.checked >= 10_000 && offline.failures.is_empty();
    let ok = verdict(
        "AC3",
        ok,
        &format!(
            "best-iterate outer gap within its bound at {} recorded steps against the \
             enumerated anchor (worst margin {:.3e} at k = {}), audit failures {}",
            sw.checked,
            sw.worst_margin,
            sw.worst_k,
            offline.failures.len()
        ),
    );
    assert!(ok);
}

#[test]
fn ac04_simultaneous_bounds_hold_at_the_averaged_point() {
    let (problem, _) = ls_instance(8, 12, 7, 3);
    let oracle = oracle_for_problem(&problem, None, &OracleOptions::default()).unwrap();
    let phi_star = oracle.phi_star.unwrap();
    let omega_xprime = oracle.omega_xprime.unwrap();

    let trace = run_fbipg(&problem, &FBiPGConfig::new(1.0, 2, 10_000), Some(&oracle)).unwrap();
    let params = rate_params(&trace, &oracle, 1.0, 2);
    let inner = sweep(&trace.records, |r| {
        let pt = r.phi_tilde?;
        Some((pt - phi_star, rates::simul_bounds_gamma1(r.k as i64, &params).0))
    });
    let outer = sweep(&trace.records, |r| {
        let ot = r.omega_tilde?;
        Some((ot - omega_xprime, rates::simul_bounds_gamma1(r.k as i64, &params).1))
    });
    let offline = audit_trace(&trace, &problem, &oracle, Regime::Gamma1).unwrap();

    let ok = inner.violations == 0
        && outer.violations == 0
        && inner.checked >= 10_000
        && offline.failures.is_empty();
    let ok = verdict(
        "AC4",
        ok,
        &format!(
            "averaged-point inner and outer bounds hold at {} recorded steps \
             (worst inner margin {:.3e} at k = {}, worst outer margin {:.3e} at k = {}), \
             audit failures {}",
            inner.checked,
            inner.worst_margin,
            inner.worst_k,
            outer.worst_margin,
            outer.worst_k,
            offline.failures.len()
        ),
    );
    assert!(ok);
}

#[test]
fn ac05_growth_condition_bounds_hold_on_a_singleton_inner_set() {
    let (problem, _) = ls_instance(20, 10, 7, 3);
    let oracle = oracle_for_problem(&problem, None, &OracleOptions::default()).unwrap();
    let phi_star = oracle.phi_star.unwrap();
    let omega_xprime = oracle.omega_xprime.unwrap();

    let trace = run_fbipg(&problem, &FBiPGConfig::new(1.5, 2, 10_000), Some(&oracle)).unwrap();
    let params = rate_params(&trace, &oracle, 1.5, 2);
    let inner = sweep(&trace.records, |r| {
        if r.k == 0 {
            return None;
        }
        let (b, _, _) = rates::holder_bounds(r.k as i64, &params).unwrap();
        Some((r.phi - phi_star, b))
    });
    let below = sweep(&trace.records, |r| {
        if r.k == 0 {
            return None;
        }
        let (_, b, _) = rates::holder_bounds(r.k as i64, &params).unwrap();
        Some((omega_xprime - r.omega, b))
    });
    let above = sweep(&trace.records, |r| {
        if r.k == 0 {
            return None;
        }
        let (_, _, b) = rates::holder_bounds(r.k as i64, &params).unwrap();
        Some((r.omega - omega_xprime, b))
    });
    let offline = audit_trace(&trace, &problem, &oracle, Regime::Holder).unwrap();

    let ok = params.tau.is_some()
        && params.rho.is_some()
        && inner.violations == 0
        && below.violations == 0
        && above.violations == 0
        && inner.checked == 10_000
        && offline.failures.is_empty();
    let ok = verdict(
        "AC5",
        ok,
        &format!(
            "growth-condition inner bound and two-sided outer deviations hold at {} \
             recorded steps (worst margins: inner {:.3e}, below {:.3e}, above {:.3e}), \
             audit failures {}",
            inner.checked,
            inner.worst_margin,
            below.worst_margin,
            above.worst_margin,
            offline.failures.len()
        ),
    );
    assert!(ok);
}

#[test]
fn ac06_in_run_estimates_pass_across_seeds_and_schedules() {
    let mut runs = 0usize;
    let mut failures = 0usize;
    let mut passes = 0usize;
    for seed in [7u64, 11, 13] {
        let (problem, _) = ls_instance(8, 12, seed, 3);
        let oracle = oracle_for_problem(&problem, None, &OracleOptions::default()).unwrap();
        for gamma in [1.3, 1.5, 3.0] {
            for a in [2u32, 3] {
                let mut config = FBiPGConfig::new(gamma, a, 1000);
                config.audit = true;
                config.seed = seed;
                let trace = run_fbipg(&problem, &config, Some(&oracle)).unwrap();
                let audit = trace.audit.expect("audit was requested");
                runs += 1;
                failures += audit.failures.len();
                passes += audit.passes;
            }
        }
    }
    let ok = runs == 18 && failures == 0;
    let ok = verdict(
        "AC6",
        ok,
        &format!(
            "per-step and cumulative estimate audits clean over {runs} runs \
             (3 seeds x 3 decay exponents x 2 offsets): {passes} checks, {failures} failures"
        ),
    );
    assert!(ok);
}

#[test]
fn ac07_fixed_weight_runs_stall_and_obey_the_generic_bounds() {
    // A fixed small weight drives the inner problem far less accurately than
    // the decaying schedule over the same budget.
    let d = gen_logistic(200, 50, 11).unwrap();
    let f = SmoothFunction::logistic(d.a.clone(), d.b.clone()).unwrap();
    let problem = BilevelProblem::new(
        f,
        ProxFunction::Zero,
        SmoothFunction::zero(),
        ProxFunction::l1(1.0).unwrap(),
        50,
    )
    .unwrap();
    let opts = OracleOptions {
        long_run_iters: 300_000,
    };
    let oracle = oracle_for_problem(&problem, None, &opts).unwrap();
    let phi_star = oracle.phi_star.unwrap();

    let iters = 10_000usize;
    let dynamic = run_fbipg(&problem, &FBiPGConfig::new(3.0, 2, iters), Some(&oracle)).unwrap();
    let alpha = 1.0 / iters as f64;
    let fixed = run_fista_fixed(&problem, alpha, iters, 1, None, Some(&oracle)).unwrap();
    let gap_dynamic = dynamic.last().phi - phi_star;
    let gap_fixed = fixed.last().phi - phi_star;
    let stalled = gap_fixed >= 10.0 * gap_dynamic && gap_dynamic > 0.0;

    // Generic fixed-weight bound pair at the final step, on a small instance
    // with an exact anchor point.
    let (small, _) = ls_instance(8, 12, 7, 3);
    let small_oracle = oracle_for_problem(&small, None, &OracleOptions::default()).unwrap();
    let small_fixed = run_fista_fixed(&small, alpha, iters, 1, None, Some(&small_oracle)).unwrap();
    let r2 = small_oracle.r2.unwrap();
    let kp1 = (iters + 1) as f64;
    let r_k = 2.0 * small_fixed.meta.beta * r2 / (kp1 * kp1);
    let (inner_bound, outer_bound) =
        rates::generic_fixed_bounds(r_k, alpha, small_oracle.delta_omega().unwrap());
    let last = small_fixed.last();
    let inner_ok = last.phi - small_oracle.phi_star.unwrap() <= inner_bound + tol(inner_bound);
    let outer_ok = last.omega - small_oracle.omega_xprime.unwrap() <= outer_bound + tol(outer_bound);
    let offline = audit_trace(&small_fixed, &small, &small_oracle, Regime::Fixed).unwrap();

    let ok = stalled && inner_ok && outer_ok && offline.failures.is_empty();
    let ok = verdict(
        "AC7",
        ok,
        &format!(
            "fixed weight 1/K stalls at inner gap {gap_fixed:.3e} vs {gap_dynamic:.3e} \
             for the decaying schedule (ratio {:.1} >= 10); final-step generic bounds: \
             inner gap {:.3e} <= {:.3e}, outer gap {:.3e} <= {:.3e}, audit failures {}",
            gap_fixed / gap_dynamic,
            last.phi - small_oracle.phi_star.unwrap(),
            inner_bound,
            last.omega - small_oracle.omega_xprime.unwrap(),
            outer_bound,
            offline.failures.len()
        ),
    );
    assert!(ok);
}

#[test]
fn ac08_iterates_settle_pointwise_on_long_runs() {
    let start = Instant::now();

    // One-dimensional instance assembled by hand, then a small planted one.
    let one_d = BilevelProblem::new(
        SmoothFunction::least_squares(
            fbipg::DenseMatrix::new(1, 1, vec![1.0]).unwrap(),
            vec![1.0],
        )
        .unwrap(),
        ProxFunction::Zero,
        SmoothFunction::zero(),
        ProxFunction::l1(1.0).unwrap(),
        1,
    )
    .unwrap();
    let (plane, _) = ls_instance(8, 12, 7, 3);

    let mut ok = true;
    let mut parts = Vec::new();
    for (name, problem) in [("line", &one_d), ("plane", &plane)] {
        let oracle = oracle_for_problem(problem, None, &OracleOptions::default()).unwrap();
        let mut config = FBiPGConfig::new(1.5, 3, 100_000);
        config.keep_iterates = true;
        let trace = run_fbipg(problem, &config, Some(&oracle)).unwrap();
        let diag = pointwise_diagnostics(&trace).unwrap();

        let tail = diag.tail_dist.expect("iterates were kept");
        let osc = diag.mu_oscillation.expect("anchor oracle was given");
        let settled = tail <= 1e-3
            && osc <= 1e-6
            && diag.tdelta_growth <= 1e-6 * diag.tdelta_final;
        ok &= settled;
        parts.push(format!(
            "{name}: tail distance {tail:.3e} <= 1e-3, anchor-distance oscillation \
             {osc:.3e} <= 1e-6, step-sum growth {:.3e} <= {:.3e}",
            diag.tdelta_growth,
            1e-6 * diag.tdelta_final
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    let ok = verdict(
        "AC8",
        ok,
        &format!("{}; {:.1}s < 120s", parts.join("; "), secs),
    );
    assert!(ok);
}

#[test]
fn ac09_schedule_lemma_grids_have_zero_failures() {
    let offsets = [2u32, 3, 5];
    let exponents = [0.5, 1.0, 1.1, 1.3, 1.5, 2.0, 3.0];
    let mut checked = 0usize;
    let mut failures = 0usize;
    let mut check = |ok: bool| {
        checked += 1;
        if !ok {
            failures += 1;
        }
    };

    for &a in &offsets {
        for &gamma in &exponents {
            let mut acc = 0.0;
            for k in 1i64..=2000 {
                // weighted partial sum vs its closed-form envelope
                acc += rates::alpha_k(k - 1, a, gamma) * rates::t_explicit(k - 1, a);
                let bound = rates::sum_alpha_t_bound(k, a, gamma);
                check(acc <= bound + tol(bound));
                if gamma >= 1.0 {
                    let tight = rates::sum_alpha_t_bound_tight(k, a, gamma);
                    check(acc <= tight + tol(tight));
                }
                // positivity of the per-step slack sequences
                check(rates::eta_k(k, a, gamma) > 0.0);
                check(rates::d_k(k, a) >= 0.0);
                if gamma > 1.0 && gamma < 2.0 {
                    check(rates::boundeta_check(k, a, gamma));
                }
                if (gamma - 1.0).abs() < 1e-15 {
                    // closed form of the slack at the unit exponent; the
                    // direct evaluation cancels, hence the loose cap
                    let exact = f64::from(a - 1) / f64::from(a * a);
                    check((rates::eta_k(k, a, 1.0) - exact).abs() <= 1e-10);
                }
            }
            // empty momentum products and the vanishing first weight
            check(rates::lambda_k(1, a) == 0.0);
            for s in [1i64, 5, 10] {
                check(rates::pi(s, s - 1, a) == 1.0);
            }
        }
    }
    // momentum-weighted sums stay proportional to their starting weight
    for &a in &[3u32, 4, 5] {
        for &s in &[1i64, 2, 3, 5, 10, 50] {
            check(rates::sumtechnical_check(s, a, 100_000));
        }
    }

    let ok = failures == 0;
    let ok = verdict(
        "AC9",
        ok,
        &format!("schedule lemma grids: {checked} checks, {failures} failures"),
    );
    assert!(ok);
}

#[test]
fn ac10_forced_lifting_matches_the_combined_prox_route() {
    let d = gen_least_squares(8, 12, 7, true, 3).unwrap();
    let f = SmoothFunction::least_squares(d.a.clone(), d.b.clone()).unwrap();
    let problem = BilevelProblem::new(
        f,
        ProxFunction::l1(1.0).unwrap(),
        SmoothFunction::zero(),
        ProxFunction::l1(1.0).unwrap(),
        12,
    )
    .unwrap();

    // Reference inner optimum for the combined objective, from a long
    // unregularized run.
    let phi_star = fbipg::harness::oracle::long_run_inner(&problem, 2_000_000)
        .unwrap()
        .proxy;

    let mut lifted_cfg = FBiPGConfig::new(1.5, 2, 100_000);
    lifted_cfg.lift_mode = LiftMode::Force;
    let lifted = run_fbipg(&problem, &lifted_cfg, None).unwrap();
    let (x, z) = lifted.final_x.split_at(12);

    let combined = run_fbipg(&problem, &FBiPGConfig::new(1.5, 2, 100_000), None).unwrap();

    let phi_x = problem.inner_value(x).unwrap();
    let phi_combined = problem.inner_value(&combined.final_x).unwrap();
    let lifted_gap = (problem.lift().unwrap().inner_value(&lifted.final_x).unwrap() - phi_star)
        .max(0.0);
    let coupling_dist = linalg::norm(&linalg::sub(x, z));

    let gap_ok = phi_x - phi_star <= 1e-6;
    let coupling_ok = coupling_dist <= lifted_gap.sqrt() + 1e-8;
    let match_ok = (phi_x - phi_combined).abs() <= 1e-5;

    let ok = lifted.meta.lifted && gap_ok && coupling_ok && match_ok;
    let ok = verdict(
        "AC10",
        ok,
        &format!(
            "forced split: x-block inner gap {:.3e} <= 1e-6, block distance {:.3e} <= \
             sqrt(lifted gap) + 1e-8 = {:.3e}, inner value matches the combined-prox \
             route to {:.3e} (cap 1e-5)",
            phi_x - phi_star,
            coupling_dist,
            lifted_gap.sqrt() + 1e-8,
            (phi_x - phi_combined).abs()
        ),
    );
    assert!(ok);
}
