//! Seeded synthetic datasets: dense least squares with a planted sparse
//! solution, and logistic data from a planted separator.

use std::path::Path;

use serde::Serialize;

use crate::functions::sigmoid;
use crate::io;
use crate::linalg::DenseMatrix;
use crate::rng;
use crate::{Error, Result};

/// Generator parameters, written alongside the data as `meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct GenMeta {
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_scale: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub a: DenseMatrix,
    /// Targets for least squares, 0/1 labels for logistic.
    pub b: Vec<f64>,
    pub x_planted: Option<Vec<f64>>,
    pub meta: GenMeta,
}

const NOISE_SCALE: f64 = 0.1;

/// Dense `rows x cols` matrix with i.i.d. standard normal entries, plus
/// `b = A x` for a planted `x` with `sparsity` nonzero entries of magnitude 1
/// on a random support. When `consistent` is false, `b` gets additive noise
/// so the residual system has no exact solution.
pub fn gen_least_squares(
    rows: usize,
    cols: usize,
    seed: u64,
    consistent: bool,
    sparsity: usize,
) -> Result<Dataset> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(
            "dataset dimensions must be positive".into(),
        ));
    }
    if sparsity > cols {
        return Err(Error::InvalidArgument(format!(
            "sparsity {sparsity} exceeds the number of columns {cols}"
        )));
    }
    let mut r_a = rng::component_rng(seed, "gen-A");
    let a = DenseMatrix::new(rows, cols, rng::normal_vec(&mut r_a, rows * cols))?;

    // planted support: partial Fisher-Yates over the column indices
    let mut r_s = rng::component_rng(seed, "gen-support");
    let mut idx: Vec<usize> = (0..cols).collect();
    for i in 0..sparsity {
        let j = i + (rng::uniform(&mut r_s) * (cols - i) as f64) as usize;
        let j = j.min(cols - 1);
        idx.swap(i, j);
    }
    let mut x_planted = vec![0.0; cols];
    for &i in &idx[..sparsity] {
        x_planted[i] = if rng::uniform(&mut r_s) < 0.5 { -1.0 } else { 1.0 };
    }

    let mut b = a.matvec(&x_planted);
    let noise_scale = if consistent {
        None
    } else {
        let mut r_n = rng::component_rng(seed, "gen-noise");
        for bi in b.iter_mut() {
            *bi += NOISE_SCALE * rng::normal(&mut r_n);
        }
        Some(NOISE_SCALE)
    };

    Ok(Dataset {
        a,
        b,
        x_planted: Some(x_planted),
        meta: GenMeta {
            kind: "least_squares".into(),
            rows,
            cols,
            seed,
            sparsity: Some(sparsity),
            consistent: Some(consistent),
            noise_scale,
        },
    })
}

/// Logistic data: normal features and 0/1 labels drawn with probability
/// `sigmoid(a_i . w)` for a planted separator `w` of norm about 2.
pub fn gen_logistic(rows: usize, cols: usize, seed: u64) -> Result<Dataset> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(
            "dataset dimensions must be positive".into(),
        ));
    }
    let mut r_a = rng::component_rng(seed, "gen-A");
    let a = DenseMatrix::new(rows, cols, rng::normal_vec(&mut r_a, rows * cols))?;

    let mut r_w = rng::component_rng(seed, "gen-w");
    let w: Vec<f64> = rng::normal_vec(&mut r_w, cols)
        .iter()
        .map(|v| 2.0 * v / (cols as f64).sqrt())
        .collect();

    let margins = a.matvec(&w);
    let mut r_l = rng::component_rng(seed, "gen-labels");
    let labels: Vec<f64> = margins
        .iter()
        .map(|m| {
            if rng::uniform(&mut r_l) < sigmoid(*m) {
                1.0
            } else {
                0.0
            }
        })
        .collect();

    Ok(Dataset {
        a,
        b: labels,
        x_planted: Some(w),
        meta: GenMeta {
            kind: "logistic".into(),
            rows,
            cols,
            seed,
            sparsity: None,
            consistent: None,
            noise_scale: None,
        },
    })
}

impl Dataset {
    /// Write `A.csv`, the target/label vector (`b.csv` or `z.csv`),
    /// `meta.json`, and the planted vector when present.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        io::write_matrix_csv(&dir.join("A.csv"), &self.a)?;
        let b_name = if self.meta.kind == "logistic" { "z.csv" } else { "b.csv" };
        io::write_vector_csv(&dir.join(b_name), &self.b)?;
        if let Some(xp) = &self.x_planted {
            io::write_vector_csv(&dir.join("x_planted.csv"), xp)?;
        }
        let meta_path = dir.join("meta.json");
        let text = serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Json {
            path: meta_path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(&meta_path, text + "\n").map_err(|e| Error::io(&meta_path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::SmoothFunction;
    use crate::linalg;

    #[test]
    fn least_squares_is_deterministic_and_consistent() {
        let d1 = gen_least_squares(6, 9, 42, true, 3).unwrap();
        let d2 = gen_least_squares(6, 9, 42, true, 3).unwrap();
        assert_eq!(d1.a.data(), d2.a.data());
        assert_eq!(d1.b, d2.b);
        let xp = d1.x_planted.as_ref().unwrap();
        assert_eq!(xp.iter().filter(|v| **v != 0.0).count(), 3);
        assert!(xp.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        // b in the range of A: residual at the planted point is zero
        let r = linalg::sub(&d1.a.matvec(xp), &d1.b);
        assert_eq!(linalg::norm(&r), 0.0);
        // a different seed changes the data
        let d3 = gen_least_squares(6, 9, 43, true, 3).unwrap();
        assert_ne!(d1.b, d3.b);
    }

    #[test]
    fn inconsistent_data_leaves_a_residual() {
        let d = gen_least_squares(8, 3, 1, false, 2).unwrap();
        let xp = d.x_planted.as_ref().unwrap();
        let r = linalg::sub(&d.a.matvec(xp), &d.b);
        assert!(linalg::norm(&r) > 1e-3);
        assert_eq!(d.meta.noise_scale, Some(0.1));
    }

    #[test]
    fn sparsity_bounds_are_enforced() {
        assert!(gen_least_squares(4, 3, 0, true, 4).is_err());
        assert!(gen_least_squares(0, 3, 0, true, 0).is_err());
    }

    #[test]
    fn logistic_labels_and_planted_separator() {
        let d1 = gen_logistic(60, 8, 7).unwrap();
        let d2 = gen_logistic(60, 8, 7).unwrap();
        assert_eq!(d1.b, d2.b);
        assert!(d1.b.iter().all(|z| *z == 0.0 || *z == 1.0));
        // planted direction beats the all-zeros model (whose loss is ln 2)
        let f = SmoothFunction::logistic(d1.a.clone(), d1.b.clone()).unwrap();
        let w = d1.x_planted.as_ref().unwrap();
        let loss_planted = f.value(w).unwrap();
        let loss_zero = f.value(&[0.0; 8]).unwrap();
        assert!((loss_zero - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(loss_planted < loss_zero);
    }

    #[test]
    fn dataset_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = gen_least_squares(4, 5, 3, true, 2).unwrap();
        d.write(dir.path()).unwrap();
        let a = crate::io::read_matrix_csv(&dir.path().join("A.csv")).unwrap();
        let b = crate::io::read_vector_csv(&dir.path().join("b.csv")).unwrap();
        assert_eq!(a.data(), d.a.data());
        assert_eq!(b, d.b);
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap())
                .unwrap();
        assert_eq!(meta["kind"], "least_squares");
        assert_eq!(meta["seed"], 3);
        assert_eq!(meta["sparsity"], 2);

        let dl = gen_logistic(4, 3, 9).unwrap();
        dl.write(dir.path()).unwrap();
        assert!(dir.path().join("z.csv").exists());
    }
}
