//! Scalar sequences and certified rate bounds.
//!
//! The solver's schedule is `alpha_k = (k + a)^(-gamma)` with the explicit
//! momentum sequence `t_k = (k + a) / a`; both are defined here together with
//! the derived sequences (`d_k`, `eta_k`, `lambda_k`, `pi_{s,k}`) and the
//! closed-form convergence bounds the audits check traces against. Index
//! arguments are `i64` because the sequences start at `k = -1`.

use crate::linalg::KahanSum;
use crate::solver::IterateTrace;
use crate::{Error, Result};

/// Regularization weight `alpha_k = (k + a)^(-gamma)`; zero at `k = -1`.
pub fn alpha_k(k: i64, a: u32, gamma: f64) -> f64 {
    assert!(k >= -1, "alpha_k index starts at -1");
    assert!(gamma > 0.0, "gamma must be positive");
    assert!(a >= 2, "a must be at least 2");
    if k == -1 {
        0.0
    } else {
        ((k + i64::from(a)) as f64).powf(-gamma)
    }
}

/// Explicit momentum sequence `t_k = (k + a) / a`, defined down to `k = -1`
/// so the derived sequences have closed forms from `k = 0` on. The solver
/// never consults `t_{-1}`: the first two iterates coincide, so the first
/// momentum step is zero whatever its value.
pub fn t_explicit(k: i64, a: u32) -> f64 {
    assert!(k >= -1, "t_explicit index starts at -1");
    assert!(a >= 2, "a must be at least 2");
    (k + i64::from(a)) as f64 / f64::from(a)
}

/// Classical accelerated recursion `t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`.
pub fn t_fista_next(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// `d_k = t_{k-1}^2 - (t_k^2 - t_k)` for the explicit sequence.
pub fn d_k(k: i64, a: u32) -> f64 {
    assert!(k >= 0);
    let tp = t_explicit(k - 1, a);
    let t = t_explicit(k, a);
    tp * tp - (t * t - t)
}

/// `eta_k = t_{k-1}^2 alpha_{k-1} - (t_k^2 - t_k) alpha_k`; zero at `k = 0`.
pub fn eta_k(k: i64, a: u32, gamma: f64) -> f64 {
    assert!(k >= 0);
    let tp = t_explicit(k - 1, a);
    let t = t_explicit(k, a);
    tp * tp * alpha_k(k - 1, a, gamma) - (t * t - t) * alpha_k(k, a, gamma)
}

/// Momentum weight `lambda_k = (t_{k-1} - 1) / t_k` for the explicit sequence.
pub fn lambda_k(k: i64, a: u32) -> f64 {
    assert!(k >= 0);
    (t_explicit(k - 1, a) - 1.0) / t_explicit(k, a)
}

/// `pi_{s,k} = prod_{j=s}^{k} lambda_j`, with the empty-product convention
/// `pi_{s,k} = 1` for `k < s`.
pub fn pi(s: i64, k: i64, a: u32) -> f64 {
    assert!(s >= 1);
    let mut p = 1.0;
    let mut j = s;
    while j <= k {
        p *= lambda_k(j, a);
        j += 1;
    }
    p
}

/// Exact partial sum `sum_{s=0}^{k-1} alpha_s t_s`, compensated.
pub fn sum_alpha_t(k: i64, a: u32, gamma: f64) -> f64 {
    assert!(k >= 0);
    let mut acc = KahanSum::new();
    for s in 0..k {
        acc.add(alpha_k(s, a, gamma) * t_explicit(s, a));
    }
    acc.value()
}

/// Closed-form upper bound on [`sum_alpha_t`], in its stated three-case form.
pub fn sum_alpha_t_bound(k: i64, a: u32, gamma: f64) -> f64 {
    assert!(k >= 1);
    assert!(gamma > 0.0);
    let m = (k + i64::from(a) - 1) as f64;
    if gamma < 2.0 {
        (m.powf(2.0 - gamma) - 1.0) / (2.0 - gamma)
    } else if gamma == 2.0 {
        m.ln()
    } else {
        (1.0 - m.powf(2.0 - gamma)) / (gamma - 2.0)
    }
}

/// Tighter variant of [`sum_alpha_t_bound`] carrying the extra `1/a` factor.
///
/// Only valid for `gamma >= 1`; for smaller `gamma` the exact sum can exceed
/// it, so it is exposed purely as a diagnostic.
pub fn sum_alpha_t_bound_tight(k: i64, a: u32, gamma: f64) -> f64 {
    sum_alpha_t_bound(k, a, gamma) / f64::from(a)
}

/// Integral-comparison bound `sum_{n=n1}^{n2} n^{-r} <= (n2^{1-r} - (n1-1)^{1-r}) / (1-r)`.
///
/// Requires `0 < r < 1`, or `r > 1` with `n1 >= 2` (where `n2` may be
/// `f64::INFINITY`); `r = 1` has no closed form of this shape.
pub fn techsum_bound(n1: u64, n2: f64, r: f64) -> Result<f64> {
    if r == 1.0 {
        return Err(Error::InvalidArgument(
            "techsum_bound: r = 1 is excluded".into(),
        ));
    }
    if r <= 0.0 {
        return Err(Error::InvalidArgument(
            "techsum_bound: r must be positive".into(),
        ));
    }
    if r > 1.0 && n1 < 2 {
        return Err(Error::InvalidArgument(
            "techsum_bound: r > 1 requires n1 >= 2".into(),
        ));
    }
    if n1 == 0 || (n2 as u64) < n1 && !n2.is_infinite() {
        return Err(Error::InvalidArgument(
            "techsum_bound: need 1 <= n1 <= n2".into(),
        ));
    }
    let hi = n2.powf(1.0 - r);
    let lo = ((n1 - 1) as f64).powf(1.0 - r);
    Ok((hi - lo) / (1.0 - r))
}

/// Inputs shared by the rate bounds.
///
/// `r2` is `||x0 - x'||^2`, `delta_omega = omega(x') - omega_star`. `tau` and
/// `rho` are the quadratic-growth modulus and `||xi||` for `xi` in the outer
/// subdifferential at `x'`; they are only needed by the Holder-regime bounds.
#[derive(Debug, Clone)]
pub struct RateParams {
    pub a: u32,
    pub gamma: f64,
    pub beta: f64,
    pub r2: f64,
    pub delta_omega: f64,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
}

impl RateParams {
    fn a2(&self) -> f64 {
        f64::from(self.a) * f64::from(self.a)
    }
}

/// Inner-gap bound for `gamma > 2`:
/// `a^2 / (2 (k+1)^2) * (beta R^2 + 2 delta_omega / (gamma - 2))`.
pub fn inner_bound_fast(k: i64, p: &RateParams) -> Result<f64> {
    if p.gamma <= 2.0 {
        return Err(Error::InvalidArgument(
            "inner_bound_fast requires gamma > 2".into(),
        ));
    }
    assert!(k >= 1);
    let kp1 = (k + 1) as f64;
    Ok(p.a2() / (2.0 * kp1 * kp1) * (p.beta * p.r2 + 2.0 * p.delta_omega / (p.gamma - 2.0)))
}

/// Inner-gap bound for `0 < gamma <= 2`:
/// `a^2 beta R^2 / (2 (k+1)^2) + a^2 c_k delta_omega / (k+1)^2`,
/// with `c_k = (k+1)^(2-gamma) / (2-gamma)` below `gamma = 2` and
/// `c_k = ln(k + a - 1)` at `gamma = 2`.
pub fn inner_bound(k: i64, p: &RateParams) -> f64 {
    debug_assert!(p.gamma > 0.0 && p.gamma <= 2.0);
    assert!(k >= 1);
    let kp1 = (k + 1) as f64;
    let c_k = if p.gamma < 2.0 {
        kp1.powf(2.0 - p.gamma) / (2.0 - p.gamma)
    } else {
        ((k + i64::from(p.a) - 1) as f64).ln()
    };
    p.a2() * p.beta * p.r2 / (2.0 * kp1 * kp1) + p.a2() * c_k * p.delta_omega / (kp1 * kp1)
}

/// Best-iterate outer bound for `0 < gamma < 2`:
/// `a^2 beta R^2 / (2 (k+1)^(2-gamma))`.
pub fn outer_bound(k: i64, p: &RateParams) -> Result<f64> {
    if p.gamma >= 2.0 {
        return Err(Error::InvalidArgument(
            "outer_bound requires gamma < 2".into(),
        ));
    }
    assert!(k >= 1);
    Ok(p.a2() * p.beta * p.r2 / (2.0 * ((k + 1) as f64).powf(2.0 - p.gamma)))
}

/// Simultaneous `(inner, outer)` bounds at `gamma = 1`, evaluated at the
/// better of the current iterate and the running average:
/// inner `pi^2 a^2 beta R^2 / (12 k) + a^2 ln(k+1) delta_omega / k`,
/// outer `a^2 beta R^2 / (2 (k+1))`.
pub fn simul_bounds_gamma1(k: i64, p: &RateParams) -> (f64, f64) {
    assert!(k >= 1);
    let kf = k as f64;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let inner =
        pi2 * p.a2() * p.beta * p.r2 / (12.0 * kf) + p.a2() * (kf + 1.0).ln() * p.delta_omega / kf;
    let outer = p.a2() * p.beta * p.r2 / (2.0 * (kf + 1.0));
    (inner, outer)
}

/// Constant for the growth-condition bounds, `1 < gamma < 2`:
/// `C = a^2 max(beta R^2 + delta_omega, a^3 rho^2 / (tau (gamma-1)^2))`.
pub fn holder_constant(p: &RateParams) -> Result<f64> {
    if !(p.gamma > 1.0 && p.gamma < 2.0) {
        return Err(Error::InvalidArgument(
            "holder_constant requires 1 < gamma < 2".into(),
        ));
    }
    let (tau, rho) = match (p.tau, p.rho) {
        (Some(t), Some(r)) if t > 0.0 => (t, r),
        _ => {
            return Err(Error::InvalidArgument(
                "holder_constant requires positive tau and rho".into(),
            ))
        }
    };
    let a = f64::from(p.a);
    let gm1 = p.gamma - 1.0;
    let second = a.powi(3) * rho * rho / (tau * gm1 * gm1);
    Ok(p.a2() * (p.beta * p.r2 + p.delta_omega).max(second))
}

/// Growth-condition bounds `(inner, outer_below, outer_above)` for
/// `1 < gamma < 2`:
/// inner `a C / (k+1)^2`, `omega(x') - omega(x_k) <= C / (a^2 (k+1))`,
/// `omega(x_k) - omega(x') <= C / (k+1)^(2-gamma)`.
pub fn holder_bounds(k: i64, p: &RateParams) -> Result<(f64, f64, f64)> {
    assert!(k >= 1);
    let c = holder_constant(p)?;
    let kp1 = (k + 1) as f64;
    Ok((
        f64::from(p.a) * c / (kp1 * kp1),
        c / (p.a2() * kp1),
        c / kp1.powf(2.0 - p.gamma),
    ))
}

/// Checks `eta_k < (k+1)^(1-gamma) / 2`, the schedule-decay bound used by the
/// pointwise convergence argument (`1 < gamma < 2`).
pub fn boundeta_check(k: i64, a: u32, gamma: f64) -> bool {
    debug_assert!(gamma > 1.0 && gamma < 2.0);
    eta_k(k, a, gamma) < 0.5 * ((k + 1) as f64).powf(1.0 - gamma)
}

/// Checks the truncated momentum-product sum
/// `sum_{k=0}^{k_max} pi_{s,k} <= (5a/2) t_{s-1}` (requires `a > 2`).
pub fn sumtechnical_check(s: i64, a: u32, k_max: i64) -> bool {
    assert!(s >= 1);
    assert!(a > 2, "momentum-product sum bound needs a > 2");
    let mut acc = KahanSum::new();
    // pi_{s,k} = 1 for k < s
    for _ in 0..s.min(k_max + 1) {
        acc.add(1.0);
    }
    let mut prod = 1.0;
    let mut k = s;
    while k <= k_max {
        prod *= lambda_k(k, a);
        acc.add(prod);
        k += 1;
    }
    acc.value() <= 2.5 * f64::from(a) * t_explicit(s - 1, a)
}

/// Fixed-regularization bounds `(inner, outer)` at the final iterate:
/// inner `R_K + alpha_K delta_omega`, outer `R_K / alpha_K`.
pub fn generic_fixed_bounds(r_k: f64, alpha_fixed: f64, delta_omega: f64) -> (f64, f64) {
    assert!(alpha_fixed > 0.0, "fixed alpha must be positive");
    (r_k + alpha_fixed * delta_omega, r_k / alpha_fixed)
}

/// Least-squares slope of `log(metric)` against `log(k)` over the recorded
/// iterations with `k_lo <= k <= k_hi`. Records with non-positive metric
/// values are skipped; at least 10 usable records are required.
pub fn fit_loglog_slope(
    trace: &IterateTrace,
    metric: &str,
    k_lo: usize,
    k_hi: usize,
) -> Result<f64> {
    let points = trace.metric_points(metric)?;
    fit_loglog_slope_points(&points, k_lo, k_hi)
}

pub(crate) fn fit_loglog_slope_points(
    points: &[(usize, f64)],
    k_lo: usize,
    k_hi: usize,
) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, v)| *k >= k_lo.max(1) && *k <= k_hi && *v > 0.0 && v.is_finite())
        .map(|(k, v)| ((*k as f64).ln(), v.ln()))
        .collect();
    if usable.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "loglog fit needs at least 10 positive records in [{k_lo}, {k_hi}], found {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = usable.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in &usable {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
    }
    if var == 0.0 {
        return Err(Error::InvalidArgument(
            "loglog fit needs records at distinct k".into(),
        ));
    }
    Ok(cov / var)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA_GRID: [f64; 6] = [0.5, 1.0, 1.3, 1.5, 2.0, 3.0];
    const A_GRID: [u32; 3] = [2, 3, 5];

    #[test]
    fn alpha_sequence_start() {
        assert_eq!(alpha_k(-1, 2, 1.0), 0.0);
        assert_eq!(alpha_k(0, 2, 1.0), 0.5);
        assert_eq!(alpha_k(1, 2, 1.0), 1.0 / 3.0);
        assert_eq!(alpha_k(2, 2, 1.0), 0.25);
        // gamma scaling
        assert_eq!(alpha_k(0, 2, 3.0), 0.125);
    }

    #[test]
    fn t_explicit_start() {
        assert_eq!(t_explicit(-1, 2), 0.5);
        assert_eq!(t_explicit(0, 2), 1.0);
        assert_eq!(t_explicit(1, 2), 1.5);
        assert_eq!(t_explicit(10, 5), 3.0);
    }

    #[test]
    fn t_fista_matches_recursion() {
        let mut t = 1.0;
        t = t_fista_next(t); // (1 + sqrt(5)) / 2
        assert!((t - (1.0 + 5.0f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn d_has_closed_form_on_grid() {
        // d_k = ((k + a)(a - 2) + 1) / a^2 for the explicit sequence
        for &a in &A_GRID {
            for k in 0..200i64 {
                let expect = ((k + i64::from(a)) as f64 * (f64::from(a) - 2.0) + 1.0)
                    / f64::from(a * a);
                assert!((d_k(k, a) - expect).abs() < 1e-9, "a={a} k={k}");
            }
        }
        assert_eq!(d_k(7, 2), 0.25);
    }

    #[test]
    fn eta_zero_at_start_positive_after() {
        for &a in &A_GRID {
            for &g in &GAMMA_GRID {
                assert_eq!(eta_k(0, a, g), 0.0, "a={a} gamma={g}");
                for k in 1..=10_000i64 {
                    assert!(eta_k(k, a, g) > 0.0, "a={a} gamma={g} k={k}");
                }
            }
        }
    }

    #[test]
    fn d_nonnegative_on_grid() {
        for &a in &A_GRID {
            for k in 0..=10_000i64 {
                assert!(d_k(k, a) >= 0.0, "a={a} k={k}");
            }
        }
    }

    #[test]
    fn eta_identity_via_abel_rearrangement() {
        // eta_k = (alpha_{k-1} t_{k-1}^2 - alpha_k t_k^2) + alpha_k t_k
        for &a in &A_GRID {
            for &g in &GAMMA_GRID {
                for k in [0i64, 1, 2, 5, 17, 100, 999] {
                    let tp = t_explicit(k - 1, a);
                    let t = t_explicit(k, a);
                    let rhs = alpha_k(k - 1, a, g) * tp * tp - alpha_k(k, a, g) * t * t
                        + alpha_k(k, a, g) * t;
                    assert!((eta_k(k, a, g) - rhs).abs() <= 1e-12, "a={a} g={g} k={k}");
                }
            }
        }
    }

    #[test]
    fn eta_constant_at_gamma_one() {
        for &a in &A_GRID {
            let expect = (f64::from(a) - 1.0) / f64::from(a * a);
            for k in 1..=10_000i64 {
                assert!(
                    (eta_k(k, a, 1.0) - expect).abs() <= 1e-12,
                    "a={a} k={k} eta={}",
                    eta_k(k, a, 1.0)
                );
            }
        }
    }

    #[test]
    fn eta_telescopes_against_sum_alpha_t() {
        // sum_{s=0}^{k-1} eta_s = -alpha_{k-1} t_{k-1}^2 + sum_{s=0}^{k-1} alpha_s t_s
        for &a in &A_GRID {
            for &g in &GAMMA_GRID {
                for k in [1i64, 2, 10, 250] {
                    let mut lhs = KahanSum::new();
                    for s in 0..k {
                        lhs.add(eta_k(s, a, g));
                    }
                    let tp = t_explicit(k - 1, a);
                    let rhs = -alpha_k(k - 1, a, g) * tp * tp + sum_alpha_t(k, a, g);
                    assert!(
                        (lhs.value() - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()),
                        "a={a} g={g} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn lambda_in_unit_interval_and_zero_first() {
        for &a in &A_GRID {
            assert_eq!(lambda_k(1, a), 0.0);
            for k in 1..=10_000i64 {
                let l = lambda_k(k, a);
                assert!((0.0..1.0).contains(&l), "a={a} k={k} lambda={l}");
            }
        }
    }

    #[test]
    fn pi_empty_product_convention() {
        assert_eq!(pi(3, 2, 2), 1.0);
        assert_eq!(pi(5, 1, 3), 1.0);
        // pi(2, 4, 2) = lambda_2 lambda_3 lambda_4 = (1/4)(2/5)(3/6)
        let expect = 0.25 * 0.4 * 0.5;
        assert!((pi(2, 4, 2) - expect).abs() < 1e-15);
        // any product crossing k = 1 vanishes
        assert_eq!(pi(1, 4, 2), 0.0);
    }

    #[test]
    fn sum_alpha_t_respects_stated_bound_on_grid() {
        for &a in &A_GRID {
            for &g in &GAMMA_GRID {
                for k in [1i64, 2, 3, 5, 10, 100, 1000, 10_000] {
                    let exact = sum_alpha_t(k, a, g);
                    let bound = sum_alpha_t_bound(k, a, g);
                    assert!(
                        exact <= bound * (1.0 + 1e-14) + 1e-14,
                        "a={a} gamma={g} k={k}: {exact} > {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn sum_alpha_t_bound_examples() {
        // gamma = 3, a = 2, k = 10: bound is (1 - 11^{-1}) / 1
        let b = sum_alpha_t_bound(10, 2, 3.0);
        assert!((b - (1.0 - 1.0 / 11.0)).abs() < 1e-15);
        assert!(sum_alpha_t(10, 2, 3.0) <= b);
        // gamma = 2, a = 2, k = 5: bound is ln 6
        let b2 = sum_alpha_t_bound(5, 2, 2.0);
        assert!((b2 - 6.0f64.ln()).abs() < 1e-15);
        assert!(sum_alpha_t(5, 2, 2.0) <= b2);
    }

    #[test]
    fn tight_bound_holds_for_gamma_at_least_one() {
        // The 1/a-scaled variant is only certified for gamma >= 1.
        for &a in &A_GRID {
            for &g in &[1.0, 1.3, 1.5, 2.0, 3.0] {
                for k in [1i64, 10, 100, 1000, 10_000] {
                    let exact = sum_alpha_t(k, a, g);
                    let bound = sum_alpha_t_bound_tight(k, a, g);
                    assert!(
                        exact <= bound * (1.0 + 1e-14) + 1e-14,
                        "a={a} gamma={g} k={k}: {exact} > {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn tight_bound_fails_below_gamma_one() {
        // documents why the tight variant is diagnostic-only
        let exact = sum_alpha_t(10, 2, 0.5);
        let tight = sum_alpha_t_bound_tight(10, 2, 0.5);
        assert!(exact > tight, "exact={exact} tight={tight}");
        // while the stated form still holds
        assert!(exact <= sum_alpha_t_bound(10, 2, 0.5));
    }

    #[test]
    fn techsum_bound_brute_force() {
        for &r in &[0.3, 0.5, 0.9] {
            for &(n1, n2) in &[(1u64, 100u64), (1, 10_000), (7, 100_000)] {
                let bound = techsum_bound(n1, n2 as f64, r).unwrap();
                let mut sum = KahanSum::new();
                for n in n1..=n2 {
                    sum.add((n as f64).powf(-r));
                }
                assert!(sum.value() <= bound, "r={r} n1={n1} n2={n2}");
            }
        }
        for &r in &[1.3, 2.0, 3.0] {
            for &(n1, n2) in &[(2u64, 100u64), (2, 100_000), (10, 100_000)] {
                let bound = techsum_bound(n1, n2 as f64, r).unwrap();
                let mut sum = KahanSum::new();
                for n in n1..=n2 {
                    sum.add((n as f64).powf(-r));
                }
                assert!(sum.value() <= bound, "r={r} n1={n1} n2={n2}");
            }
        }
    }

    #[test]
    fn techsum_bound_infinite_tail() {
        // sum_{n=2}^inf n^{-2} <= 1
        let b = techsum_bound(2, f64::INFINITY, 2.0).unwrap();
        assert!((b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn techsum_bound_rejects_bad_arguments() {
        assert!(techsum_bound(1, 10.0, 1.0).is_err());
        assert!(techsum_bound(1, 10.0, 2.0).is_err()); // r > 1 needs n1 >= 2
        assert!(techsum_bound(5, 2.0, 0.5).is_err());
        assert!(techsum_bound(1, 10.0, -0.5).is_err());
    }

    fn params(a: u32, gamma: f64) -> RateParams {
        RateParams {
            a,
            gamma,
            beta: 1.0,
            r2: 1.0,
            delta_omega: 1.0,
            tau: None,
            rho: None,
        }
    }

    #[test]
    fn inner_bound_fast_example() {
        let p = params(2, 3.0);
        let b = inner_bound_fast(10, &p).unwrap();
        assert!((b - 6.0 / 121.0).abs() < 1e-15);
        assert!(inner_bound_fast(10, &params(2, 1.5)).is_err());
    }

    #[test]
    fn inner_bound_cases() {
        // gamma = 1.5: c_k = (k+1)^{0.5} / 0.5
        let p = params(2, 1.5);
        let k = 3i64;
        let expect = 4.0 / 32.0 + 4.0 * (2.0 * 2.0) / 16.0;
        assert!((inner_bound(k, &p) - expect).abs() < 1e-14);
        // gamma = 2: c_k = ln(k + a - 1)
        let p2 = params(2, 2.0);
        let expect2 = 4.0 / 32.0 + 4.0 * 4.0f64.ln() / 16.0;
        assert!((inner_bound(k, &p2) - expect2).abs() < 1e-14);
    }

    #[test]
    fn outer_bound_example() {
        let p = params(2, 1.5);
        let b = outer_bound(99, &p).unwrap();
        assert!((b - 0.2).abs() < 1e-15);
        assert!(outer_bound(99, &params(2, 2.0)).is_err());
    }

    #[test]
    fn simul_bounds_example() {
        let mut p = params(2, 1.0);
        p.delta_omega = 0.0;
        let (inner, outer) = simul_bounds_gamma1(100, &p);
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        assert!((inner - pi2 * 4.0 / 1200.0).abs() < 1e-15);
        assert!((outer - 4.0 / 202.0).abs() < 1e-15);
    }

    #[test]
    fn holder_constant_example() {
        let mut p = params(2, 1.5);
        p.tau = Some(1.0);
        p.rho = Some(1.0);
        let c = holder_constant(&p).unwrap();
        assert!((c - 128.0).abs() < 1e-12);
        let (i, ii, iii) = holder_bounds(3, &p).unwrap();
        assert!((i - 2.0 * 128.0 / 16.0).abs() < 1e-12);
        assert!((ii - 128.0 / 16.0).abs() < 1e-12);
        assert!((iii - 128.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn holder_constant_requires_growth_data() {
        assert!(holder_constant(&params(2, 1.5)).is_err());
        let mut p = params(2, 3.0);
        p.tau = Some(1.0);
        p.rho = Some(1.0);
        assert!(holder_constant(&p).is_err());
    }

    #[test]
    fn boundeta_grid() {
        for &a in &A_GRID {
            for &g in &[1.3, 1.5, 1.9] {
                for k in 0..=10_000i64 {
                    assert!(boundeta_check(k, a, g), "a={a} gamma={g} k={k}");
                }
            }
        }
    }

    #[test]
    fn sumtechnical_truncated_grid() {
        for &a in &[3u32, 5] {
            for &s in &[1i64, 2, 5, 10, 100] {
                assert!(sumtechnical_check(s, a, 100_000), "a={a} s={s}");
            }
        }
    }

    #[test]
    #[should_panic]
    fn sumtechnical_needs_a_above_two() {
        sumtechnical_check(1, 2, 100);
    }

    #[test]
    fn generic_fixed_example() {
        let (inner, outer) = generic_fixed_bounds(0.01, 1e-5, 1.0);
        assert!((inner - 0.01001).abs() < 1e-15);
        assert!((outer - 1000.0).abs() < 1e-10);
    }

    #[test]
    fn t_condition_valid_both_modes() {
        // t_k^2 - t_k <= t_{k-1}^2 (+ float slack) for k <= 1e5
        for &a in &A_GRID {
            let mut tp = t_explicit(-1, a);
            for k in 0..=100_000i64 {
                let t = t_explicit(k, a);
                assert!(t * t - t <= tp * tp + 1e-9, "explicit a={a} k={k}");
                tp = t;
            }
        }
        let mut tp = 0.0f64;
        let mut t = 1.0f64;
        for k in 0..=100_000i64 {
            assert!(t * t - t <= tp * tp + 1e-9 * (1.0 + t * t), "fista k={k}");
            tp = t;
            t = t_fista_next(t);
        }
    }

    #[test]
    fn loglog_slope_recovers_power_law() {
        let pts: Vec<(usize, f64)> = (1..=1000).map(|k| (k, (k as f64).powi(-2))).collect();
        let s = fit_loglog_slope_points(&pts, 1, 1000).unwrap();
        assert!((s + 2.0).abs() < 1e-9, "slope {s}");
        let flat: Vec<(usize, f64)> = (1..=100).map(|k| (k, 3.5)).collect();
        let s0 = fit_loglog_slope_points(&flat, 1, 100).unwrap();
        assert!(s0.abs() < 1e-12);
    }

    #[test]
    fn loglog_slope_needs_ten_records() {
        let pts: Vec<(usize, f64)> = (1..=9).map(|k| (k, k as f64)).collect();
        assert!(fit_loglog_slope_points(&pts, 1, 9).is_err());
        // non-positive values are skipped, which can push below the minimum
        let mixed: Vec<(usize, f64)> = (1..=12)
            .map(|k| (k, if k % 2 == 0 { -1.0 } else { 1.0 }))
            .collect();
        assert!(fit_loglog_slope_points(&mixed, 1, 12).is_err());
    }
}
