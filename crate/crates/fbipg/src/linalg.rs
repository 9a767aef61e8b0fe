//! Dense vectors and matrices, plus the small decompositions the crate needs.
//!
//! Everything here is plain `f64` and deliberately self-contained: power
//! iteration for spectral norms, cyclic Jacobi for symmetric eigenproblems,
//! Cholesky for SPD solves, and a minimum-norm least-squares solve built on
//! those. Instances in this crate are small (hundreds of rows), so O(n^3)
//! dense methods are the right tool.

use crate::rng;
use crate::{Error, Result};

/// Ordered list of real numbers. Operations validate finiteness where it matters.
pub type Vector = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// `a - b` elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s * b` elementwise.
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vector {
    a.iter().map(|x| s * x).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Compensated (Kahan) accumulator for long partial sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(
                "matrix must have at least one row and one column".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !all_finite(&data) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("matrix must have at least one row".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^T y`.
    pub fn matvec_t(&self, y: &[f64]) -> Vector {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
        out
    }

    /// `A^T A` (cols x cols).
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for p in 0..n {
                let rp = r[p];
                if rp == 0.0 {
                    continue;
                }
                for (q, &rq) in r.iter().enumerate().skip(p) {
                    g.data[p * n + q] += rp * rq;
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g.data[p * n + q] = g.data[q * n + p];
            }
        }
        g
    }

    /// `A A^T` (rows x rows).
    pub fn outer_gram(&self) -> DenseMatrix {
        let m = self.rows;
        let mut g = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = dot(self.row(i), self.row(j));
                g.data[i * m + j] = v;
                g.data[j * m + i] = v;
            }
        }
        g
    }
}

/// Power-iteration estimate of `lambda_max(A^T A)`, deterministic given `seed`.
///
/// The start vector is drawn from a seeded normal stream; each sweep applies
/// `A^T (A v)` and renormalizes. The returned value is the Rayleigh quotient of
/// the final vector, which converges to the top eigenvalue from below.
pub fn estimate_spectral_norm(a: &DenseMatrix, iters: usize, seed: u64) -> f64 {
    let mut rng = rng::component_rng(seed, "spectral-norm");
    let mut v = rng::normal_vec(&mut rng, a.cols());
    let n = norm(&v);
    if n == 0.0 {
        v[0] = 1.0;
    } else {
        v = scale(&v, 1.0 / n);
    }
    for _ in 0..iters {
        let w = a.matvec_t(&a.matvec(&v));
        let wn = norm(&w);
        if wn == 0.0 {
            return 0.0;
        }
        v = scale(&w, 1.0 / wn);
    }
    norm_sq(&a.matvec(&v))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, V)` with eigenvalues sorted descending and the
/// columns of `V` holding the matching orthonormal eigenvectors.
pub fn sym_eig_jacobi(s: &DenseMatrix) -> Result<(Vector, DenseMatrix)> {
    if s.rows() != s.cols() {
        return Err(Error::InvalidArgument("jacobi needs a square matrix".into()));
    }
    let n = s.rows();
    let mut a = s.clone();
    let mut v = DenseMatrix::identity(n);
    let scale_ref: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a.get(i, j).abs())
        .fold(0.0, f64::max)
        .max(1.0);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a.get(i, j).abs());
            }
        }
        if off <= 1e-15 * scale_ref {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-18 * scale_ref {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let eigs: Vector = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = DenseMatrix::zeros(n, n);
    for (newcol, &oldcol) in order.iter().enumerate() {
        for k in 0..n {
            vecs.set(k, newcol, v.get(k, oldcol));
        }
    }
    Ok((eigs, vecs))
}

/// Cholesky solve of `S x = rhs` for symmetric positive definite `S`.
/// Returns `None` when a pivot collapses (not SPD to working precision).
pub fn cholesky_solve(s: &DenseMatrix, rhs: &[f64]) -> Option<Vector> {
    let n = s.rows();
    if s.cols() != n || rhs.len() != n {
        return None;
    }
    let max_diag = (0..n).map(|i| s.get(i, i).abs()).fold(0.0f64, f64::max);
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = s.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 1e-13 * max_diag || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// Minimum-norm least-squares solution of `min ||A x - b||`.
///
/// Fast path: Cholesky on the smaller Gram matrix. Fallback for rank-deficient
/// instances: pseudoinverse through the Jacobi eigendecomposition, dropping
/// eigenvalues below `1e-12 * lambda_max`.
pub fn lstsq_min_norm(a: &DenseMatrix, b: &[f64]) -> Result<Vector> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    if a.rows() >= a.cols() {
        let g = a.gram();
        let atb = a.matvec_t(b);
        if let Some(x) = cholesky_solve(&g, &atb) {
            return Ok(x);
        }
        let (eigs, v) = sym_eig_jacobi(&g)?;
        Ok(apply_pinv(&eigs, &v, &atb))
    } else {
        let g = a.outer_gram();
        if let Some(y) = cholesky_solve(&g, b) {
            return Ok(a.matvec_t(&y));
        }
        let (eigs, v) = sym_eig_jacobi(&g)?;
        let y = apply_pinv(&eigs, &v, b);
        Ok(a.matvec_t(&y))
    }
}

/// `V diag(1/lambda_i on the numerical range) V^T r`.
fn apply_pinv(eigs: &[f64], v: &DenseMatrix, r: &[f64]) -> Vector {
    let n = r.len();
    let lmax = eigs.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    let cutoff = 1e-12 * lmax.max(1e-300);
    let mut out = vec![0.0; n];
    for (j, &e) in eigs.iter().enumerate() {
        if e.abs() <= cutoff {
            continue;
        }
        let col: Vec<f64> = (0..n).map(|k| v.get(k, j)).collect();
        let coef = dot(&col, r) / e;
        for (o, c) in out.iter_mut().zip(&col) {
            *o += coef * c;
        }
    }
    out
}
