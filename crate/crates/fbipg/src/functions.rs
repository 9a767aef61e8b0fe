//! Smooth and proximable objective components.
//!
//! Smooth pieces carry a Lipschitz bound for their gradient, computed at
//! construction from the data (power iteration on the Gram matrix, safeguard
//! multiplier 1.0) or overridden explicitly. Proximable pieces implement exact
//! prox maps; ties in the soft threshold resolve to exactly zero.

use crate::linalg::{self, DenseMatrix, Vector};
use crate::{Error, Result};

pub use crate::linalg::estimate_spectral_norm;

/// Power-iteration budget for construction-time Lipschitz bounds.
const LIP_ITERS: usize = 800;
const LIP_SEED: u64 = 0x5eed;

fn check_dim(expected: Option<usize>, got: usize) -> Result<()> {
    match expected {
        Some(e) if e != got => Err(Error::DimensionMismatch { expected: e, got }),
        _ => Ok(()),
    }
}

/// Stable `ln(1 + e^t)`.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Stable `e^t / (1 + e^t)`.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
enum SmoothKind {
    /// `(1/2N) ||A x - b||^2`
    LeastSquares { a: DenseMatrix, b: Vector },
    /// Mean negative log-likelihood of labels under `w(t) = e^t / (1 + e^t)`
    Logistic { a: DenseMatrix, labels: Vector },
    /// `(weight/2) ||x - center||^2`
    SquaredL2 { weight: f64, center: Vector },
    Zero,
    /// Over `w = (x, z)`: `inner(x) + (1/2) ||x - z||^2`. Built by lifting.
    LiftedCoupling { inner: Box<SmoothFunction>, split: usize },
    /// Over `w = (x, z)`: `inner(x)`. Built by lifting.
    FirstBlock { inner: Box<SmoothFunction>, split: usize },
}

/// Convex function with Lipschitz-continuous gradient.
#[derive(Debug, Clone)]
pub struct SmoothFunction {
    kind: SmoothKind,
    lipschitz: f64,
}

impl SmoothFunction {
    pub fn least_squares(a: DenseMatrix, b: Vector) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: b.len(),
            });
        }
        if !linalg::all_finite(&b) {
            return Err(Error::InvalidArgument("least_squares: non-finite b".into()));
        }
        let n = a.rows() as f64;
        let lipschitz = estimate_spectral_norm(&a, LIP_ITERS, LIP_SEED) / n;
        Ok(Self {
            kind: SmoothKind::LeastSquares { a, b },
            lipschitz,
        })
    }

    pub fn logistic(a: DenseMatrix, labels: Vector) -> Result<Self> {
        if labels.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|z| *z != 0.0 && *z != 1.0) {
            return Err(Error::InvalidArgument(
                "logistic: labels must be exactly 0 or 1".into(),
            ));
        }
        let n = a.rows() as f64;
        let lipschitz = estimate_spectral_norm(&a, LIP_ITERS, LIP_SEED) / (4.0 * n);
        Ok(Self {
            kind: SmoothKind::Logistic { a, labels },
            lipschitz,
        })
    }

    pub fn squared_l2(weight: f64, center: Vector) -> Result<Self> {
        if weight < 0.0 || !weight.is_finite() {
            return Err(Error::InvalidArgument(
                "squared_l2: weight must be finite and nonnegative".into(),
            ));
        }
        if center.is_empty() || !linalg::all_finite(&center) {
            return Err(Error::InvalidArgument(
                "squared_l2: center must be nonempty and finite".into(),
            ));
        }
        Ok(Self {
            kind: SmoothKind::SquaredL2 { weight, center },
            lipschitz: weight,
        })
    }

    pub fn zero() -> Self {
        Self {
            kind: SmoothKind::Zero,
            lipschitz: 0.0,
        }
    }

    /// `inner(x) + (1/2)||x - z||^2` over stacked `(x, z)`. Lifting only.
    pub(crate) fn lifted_coupling(inner: SmoothFunction, split: usize) -> Self {
        let lipschitz = inner.lipschitz + 2.0;
        Self {
            kind: SmoothKind::LiftedCoupling {
                inner: Box::new(inner),
                split,
            },
            lipschitz,
        }
    }

    /// `inner(x)` over stacked `(x, z)`. Lifting only.
    pub(crate) fn first_block(inner: SmoothFunction, split: usize) -> Self {
        let lipschitz = inner.lipschitz;
        Self {
            kind: SmoothKind::FirstBlock {
                inner: Box::new(inner),
                split,
            },
            lipschitz,
        }
    }

    /// Replace the computed gradient-Lipschitz bound with a supplied one.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidArgument(
                "lipschitz override must be finite and nonnegative".into(),
            ));
        }
        self.lipschitz = lipschitz;
        Ok(self)
    }

    /// Upper bound on the gradient's Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Whether this is the identically-zero function.
    pub fn is_zero(&self) -> bool {
        matches!(self.kind, SmoothKind::Zero)
    }

    /// Ambient dimension, when the function pins one down.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            SmoothKind::LeastSquares { a, .. } | SmoothKind::Logistic { a, .. } => Some(a.cols()),
            SmoothKind::SquaredL2 { center, .. } => Some(center.len()),
            SmoothKind::Zero => None,
            SmoothKind::LiftedCoupling { split, .. } | SmoothKind::FirstBlock { split, .. } => {
                Some(2 * split)
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(match &self.kind {
            SmoothKind::LeastSquares { a, b } => {
                let r = linalg::sub(&a.matvec(x), b);
                linalg::norm_sq(&r) / (2.0 * a.rows() as f64)
            }
            SmoothKind::Logistic { a, labels } => {
                let t = a.matvec(x);
                let mut acc = 0.0;
                for (ti, zi) in t.iter().zip(labels) {
                    acc += softplus(*ti) - zi * ti;
                }
                acc / a.rows() as f64
            }
            SmoothKind::SquaredL2 { weight, center } => {
                0.5 * weight * linalg::norm_sq(&linalg::sub(x, center))
            }
            SmoothKind::Zero => 0.0,
            SmoothKind::LiftedCoupling { inner, split } => {
                let (xb, zb) = (&x[..*split], &x[*split..]);
                inner.value(xb)? + 0.5 * linalg::norm_sq(&linalg::sub(xb, zb))
            }
            SmoothKind::FirstBlock { inner, split } => inner.value(&x[..*split])?,
        })
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(match &self.kind {
            SmoothKind::LeastSquares { a, b } => {
                let r = linalg::sub(&a.matvec(x), b);
                linalg::scale(&a.matvec_t(&r), 1.0 / a.rows() as f64)
            }
            SmoothKind::Logistic { a, labels } => {
                let t = a.matvec(x);
                let resid: Vector = t
                    .iter()
                    .zip(labels)
                    .map(|(ti, zi)| sigmoid(*ti) - zi)
                    .collect();
                linalg::scale(&a.matvec_t(&resid), 1.0 / a.rows() as f64)
            }
            SmoothKind::SquaredL2 { weight, center } => {
                linalg::scale(&linalg::sub(x, center), *weight)
            }
            SmoothKind::Zero => vec![0.0; x.len()],
            SmoothKind::LiftedCoupling { inner, split } => {
                let (xb, zb) = (&x[..*split], &x[*split..]);
                let gx = inner.gradient(xb)?;
                let mut out = Vec::with_capacity(x.len());
                for i in 0..*split {
                    out.push(gx[i] + xb[i] - zb[i]);
                }
                for i in 0..*split {
                    out.push(zb[i] - xb[i]);
                }
                out
            }
            SmoothKind::FirstBlock { inner, split } => {
                let mut out = inner.gradient(&x[..*split])?;
                out.resize(x.len(), 0.0);
                out
            }
        })
    }

    /// `(A, b)` of a least-squares residual, for oracles with closed forms.
    pub fn least_squares_parts(&self) -> Option<(&DenseMatrix, &[f64])> {
        match &self.kind {
            SmoothKind::LeastSquares { a, b } => Some((a, b)),
            _ => None,
        }
    }
}

/// Proper lower-semicontinuous convex function with an exact prox map.
#[derive(Debug, Clone)]
pub enum ProxFunction {
    /// `weight * ||x||_1`
    L1 { weight: f64 },
    Zero,
    /// Indicator of the nonnegative orthant.
    IndicatorNonneg,
    /// Indicator of the box `[lo, hi]` (componentwise).
    IndicatorBox { lo: Vector, hi: Vector },
    /// `(weight/2) ||x - center||^2`
    SquaredL2 { weight: f64, center: Vector },
    /// `first` on `x[..split]` plus `second` on `x[split..]`.
    SeparablePair {
        first: Box<ProxFunction>,
        second: Box<ProxFunction>,
        split: usize,
    },
}

impl ProxFunction {
    pub fn l1(weight: f64) -> Result<Self> {
        if weight < 0.0 || !weight.is_finite() {
            return Err(Error::InvalidArgument(
                "l1: weight must be finite and nonnegative".into(),
            ));
        }
        Ok(ProxFunction::L1 { weight })
    }

    pub fn indicator_box(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidArgument("indicator_box: empty bounds".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h || l.is_nan() || h.is_nan()) {
            return Err(Error::InvalidArgument(
                "indicator_box: need lo <= hi componentwise".into(),
            ));
        }
        Ok(ProxFunction::IndicatorBox { lo, hi })
    }

    pub fn squared_l2(weight: f64, center: Vector) -> Result<Self> {
        if weight < 0.0 || !weight.is_finite() {
            return Err(Error::InvalidArgument(
                "squared_l2: weight must be finite and nonnegative".into(),
            ));
        }
        if center.is_empty() || !linalg::all_finite(&center) {
            return Err(Error::InvalidArgument(
                "squared_l2: center must be nonempty and finite".into(),
            ));
        }
        Ok(ProxFunction::SquaredL2 { weight, center })
    }

    pub fn separable_pair(first: ProxFunction, second: ProxFunction, split: usize) -> Result<Self> {
        if let Some(d) = first.dim() {
            if d != split {
                return Err(Error::DimensionMismatch {
                    expected: split,
                    got: d,
                });
            }
        }
        Ok(ProxFunction::SeparablePair {
            first: Box::new(first),
            second: Box::new(second),
            split,
        })
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            ProxFunction::L1 { .. } | ProxFunction::Zero | ProxFunction::IndicatorNonneg => None,
            ProxFunction::IndicatorBox { lo, .. } => Some(lo.len()),
            ProxFunction::SquaredL2 { center, .. } => Some(center.len()),
            ProxFunction::SeparablePair { second, split, .. } => {
                second.dim().map(|d| split + d)
            }
        }
    }

    /// Function value; `+inf` outside an indicator's set.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            ProxFunction::L1 { weight } => weight * linalg::norm1(x),
            ProxFunction::Zero => 0.0,
            ProxFunction::IndicatorNonneg => {
                if x.iter().all(|v| *v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFunction::IndicatorBox { lo, hi } => {
                if x.iter().zip(lo).zip(hi).all(|((v, l), h)| v >= l && v <= h) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFunction::SquaredL2 { weight, center } => {
                0.5 * weight * linalg::norm_sq(&linalg::sub(x, center))
            }
            ProxFunction::SeparablePair {
                first,
                second,
                split,
            } => {
                if x.len() < *split {
                    return Err(Error::DimensionMismatch {
                        expected: *split,
                        got: x.len(),
                    });
                }
                first.value(&x[..*split])? + second.value(&x[*split..])?
            }
        })
    }

    /// `argmin_u self(u) + ||u - v||^2 / (2 step)`.
    pub fn prox(&self, v: &[f64], step: f64) -> Result<Vector> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument("prox step must be positive".into()));
        }
        check_dim(self.dim(), v.len())?;
        Ok(match self {
            ProxFunction::L1 { weight } => soft_threshold(v, weight * step),
            ProxFunction::Zero => v.to_vec(),
            ProxFunction::IndicatorNonneg => v.iter().map(|x| x.max(0.0)).collect(),
            ProxFunction::IndicatorBox { lo, hi } => v
                .iter()
                .zip(lo)
                .zip(hi)
                .map(|((x, l), h)| x.clamp(*l, *h))
                .collect(),
            ProxFunction::SquaredL2 { weight, center } => {
                let sw = step * weight;
                v.iter()
                    .zip(center)
                    .map(|(x, c)| (x + sw * c) / (1.0 + sw))
                    .collect()
            }
            ProxFunction::SeparablePair {
                first,
                second,
                split,
            } => {
                if v.len() < *split {
                    return Err(Error::DimensionMismatch {
                        expected: *split,
                        got: v.len(),
                    });
                }
                let mut out = first.prox(&v[..*split], step)?;
                out.extend(second.prox(&v[*split..], step)?);
                out
            }
        })
    }
}

/// Componentwise soft threshold; at the tie `|v| = threshold` the result is
/// exactly zero.
pub fn soft_threshold(v: &[f64], threshold: f64) -> Vector {
    v.iter()
        .map(|x| {
            let m = x.abs() - threshold;
            if m <= 0.0 {
                0.0
            } else {
                m * x.signum()
            }
        })
        .collect()
}

/// The subgradient of `weight * ||.||_1` selected everywhere in this crate:
/// `weight * sign(x_i)`, and exactly zero on zero coordinates.
pub fn l1_sign_subgradient(x: &[f64], weight: f64) -> Vector {
    x.iter()
        .map(|v| {
            if *v == 0.0 {
                0.0
            } else {
                weight * v.signum()
            }
        })
        .collect()
}
