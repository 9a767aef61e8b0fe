//! Test-only independent minimizer for the 1-D prox subproblems.
//!
//! A plain golden-section search on `q(u) = h(u) + (u - v)^2 / (2 step)`
//! stalls near `sqrt(eps)` because value differences under float rounding
//! stop being comparable. The oracle here instead minimizes the shifted
//! difference `q(u0 + t) - q(u0)` with the difference of `h` expanded in
//! closed form, which keeps comparisons meaningful down to ~1e-12, and
//! re-centers `u0` between passes so the remaining error is far below the
//! 1e-8 agreement the prox tests demand.

use crate::functions::ProxFunction;

/// `h(u0 + t) - h(u0)` without cancellation. Infinite when `u0 + t` is
/// infeasible for an indicator kind; `u0` itself must be feasible.
pub(crate) fn value_delta(h: &ProxFunction, u0: f64, t: f64) -> f64 {
    match h {
        ProxFunction::L1 { weight } => weight * abs_delta(u0, t),
        ProxFunction::Zero => 0.0,
        ProxFunction::IndicatorNonneg => {
            if u0 + t >= 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }
        ProxFunction::IndicatorBox { lo, hi } => {
            let u = u0 + t;
            if u >= lo[0] && u <= hi[0] {
                0.0
            } else {
                f64::INFINITY
            }
        }
        ProxFunction::SquaredL2 { weight, center } => {
            0.5 * weight * t * (2.0 * (u0 - center[0]) + t)
        }
        ProxFunction::SeparablePair { .. } => unreachable!("the oracle is one-dimensional"),
    }
}

/// `|u0 + t| - |u0|`, exact in every branch.
fn abs_delta(u0: f64, t: f64) -> f64 {
    if u0 >= 0.0 {
        if u0 + t >= 0.0 {
            t
        } else {
            -t - 2.0 * u0
        }
    } else if u0 + t <= 0.0 {
        -t
    } else {
        t + 2.0 * u0
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    for _ in 0..300 {
        if f(c) < f(d) {
            hi = d;
            d = c;
            c = hi - phi * (hi - lo);
        } else {
            lo = c;
            c = d;
            d = lo + phi * (hi - lo);
        }
        if (hi - lo).abs() < width {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Minimize `h(u) + (u - v)^2 / (2 step)` over `[lo, hi]`, where `delta`
/// returns `h(u0 + t) - h(u0)` in closed form.
pub(crate) fn prox_min_oracle(
    delta: impl Fn(f64, f64) -> f64,
    v: f64,
    step: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    assert!(lo <= hi, "search range is empty");
    let mut u0 = 0.5 * (lo + hi);
    // coarse pass over the whole range, then two re-centered refinements
    for radius in [0.5 * (hi - lo), 1e-3, 1e-6] {
        let tlo = (lo - u0).max(-radius);
        let thi = (hi - u0).min(radius);
        if !(tlo < thi) {
            continue;
        }
        let obj = |t: f64| delta(u0, t) + t * (2.0 * (u0 - v) + t) / (2.0 * step);
        let t = golden_min(obj, tlo, thi, radius * 1e-10);
        u0 = (u0 + t).clamp(lo, hi);
    }
    u0
}
